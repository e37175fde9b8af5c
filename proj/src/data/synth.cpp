// Copyright 2026 The SiamUDA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "siamuda/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "siamuda/core/rng.hpp"
#include "siamuda/data/raster.hpp"

namespace siamuda {

namespace fs = std::filesystem;

void PhotometricShift::validate() const {
  for (double g : gain) SIAMUDA_CHECK_VALUE(g > 0.0, "PhotometricShift: gain " << g << " <= 0");
  if (permutation) {
    std::array<bool, 3> seen{false, false, false};
    for (int p : *permutation) {
      SIAMUDA_CHECK_VALUE(p >= 0 && p < 3 && !seen[p],
                          "PhotometricShift: invalid channel permutation");
      seen[p] = true;
    }
  }
  SIAMUDA_CHECK_VALUE(per_image_jitter >= 0.0 && per_image_jitter < 1.0,
                      "PhotometricShift: per_image_jitter " << per_image_jitter);
}

bool PhotometricShift::is_identity() const {
  if (per_image_jitter != 0.0) return false;
  for (double g : gain)
    if (g != 1.0) return false;
  for (double b : bias)
    if (b != 0.0) return false;
  if (permutation && *permutation != std::array<int, 3>{0, 1, 2}) return false;
  return true;
}

void SynthConfig::validate() const {
  shape.validate();
  SIAMUDA_CHECK_VALUE(shape.channels == 3, "SynthConfig: wants 3 channels, got " << shape.channels);
  SIAMUDA_CHECK_VALUE(shape.num_classes == 4,
                      "SynthConfig: renders 4 classes, config says " << shape.num_classes);
  SIAMUDA_CHECK_VALUE(shape.height >= 32 && shape.width >= 32,
                      "SynthConfig: image size " << shape.height << "x" << shape.width
                                                 << " below the 32px minimum");
  SIAMUDA_CHECK_VALUE(num_images >= 1, "SynthConfig: num_images " << num_images);
  SIAMUDA_CHECK_VALUE(shape_density > 0.0 && shape_density <= 1.0,
                      "SynthConfig: shape_density " << shape_density << " outside (0,1]");
  SIAMUDA_CHECK_VALUE(pixel_noise >= 0.0, "SynthConfig: pixel_noise " << pixel_noise);
  shift.validate();
}

namespace {

constexpr int kPlacementAttempts = 200;

struct ShapeColor {
  double r, g, b;
};

// Each class owns a dominant channel so the domains stay separable.
ShapeColor draw_color(int kind, Rng& rng) {
  const double hi = uniform(rng, 0.65, 0.9);
  const double lo1 = uniform(rng, 0.05, 0.25);
  const double lo2 = uniform(rng, 0.05, 0.25);
  switch (kind) {
    case 1: return {hi, lo1, lo2};   // rectangle: red
    case 2: return {lo1, hi, lo2};   // ellipse: green
    default: return {lo1, lo2, hi};  // band: blue
  }
}

struct Placement {
  int y0, x0, h, w;  // bounding box
  int kind;
  // Ellipses test against their inscribed axes; other kinds fill the box.
  bool covers(int y, int x) const {
    if (kind != 2) return true;
    const double cy = y0 + (h - 1) / 2.0, cx = x0 + (w - 1) / 2.0;
    const double ay = h / 2.0, ax = w / 2.0;
    const double dy = (y - cy) / ay, dx = (x - cx) / ax;
    return dy * dy + dx * dx <= 1.0;
  }
};

Placement propose(int kind, int height, int width, Rng& rng) {
  const int s = std::min(height, width);
  Placement p;
  p.kind = kind;
  if (kind == 1) {
    p.h = uniform_int(rng, std::max(4, s / 13), std::max(8, s / 5));
    p.w = uniform_int(rng, std::max(4, s / 13), std::max(8, s / 5));
  } else if (kind == 2) {
    p.h = 2 * uniform_int(rng, std::max(3, s / 20), std::max(5, s / 9)) + 1;
    p.w = 2 * uniform_int(rng, std::max(3, s / 20), std::max(5, s / 9)) + 1;
  } else {
    const int thick = uniform_int(rng, 3, std::max(4, s / 16));
    const int length = uniform_int(rng, s / 4, s / 2);
    const bool horizontal = bernoulli(rng, 0.5);
    p.h = horizontal ? thick : length;
    p.w = horizontal ? length : thick;
  }
  p.y0 = uniform_int(rng, 0, height - p.h);
  p.x0 = uniform_int(rng, 0, width - p.w);
  return p;
}

}  // namespace

SynthItem synth_image(const SynthConfig& config, DomainTag domain, int index) {
  config.validate();
  SIAMUDA_CHECK_VALUE(index >= 0 && index < config.num_images,
                      "synth_image: index " << index << " out of range " << config.num_images);
  const int h = config.shape.height, w = config.shape.width;
  const std::string stream = domain == DomainTag::kSource ? "synth/source" : "synth/target";
  Rng rng = make_rng(config.seed, stream, uint64_t(index));

  SynthItem item;
  char idbuf[16];
  std::snprintf(idbuf, sizeof(idbuf), "img%03d", index);
  item.id = idbuf;
  item.image = Image(h, w, 3);
  item.label = LabelMap(h, w, 0);

  // Textured background: dark base color with low-frequency modulation.
  const double base[3] = {uniform(rng, 0.10, 0.20), uniform(rng, 0.16, 0.28),
                          uniform(rng, 0.10, 0.20)};
  const double fy = uniform(rng, 1.0, 3.0), fx = uniform(rng, 1.0, 3.0);
  const double py = uniform(rng, 0.0, 1.0), px = uniform(rng, 0.0, 1.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double m = 1.0 + 0.12 * std::sin(2.0 * M_PI * (fy * y / h + py)) *
                                 std::sin(2.0 * M_PI * (fx * x / w + px));
      for (int c = 0; c < 3; ++c) item.image.at(y, x, c) = base[c] * m;
    }

  // Non-overlapping placement until the coverage target is met; the label
  // region and the painted region are the same pixel set by construction.
  const int64_t target = int64_t(std::ceil(config.shape_density * h * w));
  int64_t covered = 0;
  int shape_counter = 0;
  while (covered < target) {
    const int kind = 1 + (index + shape_counter) % 3;
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      const Placement p = propose(kind, h, w, rng);
      bool free = true;
      for (int y = p.y0; y < p.y0 + p.h && free; ++y)
        for (int x = p.x0; x < p.x0 + p.w && free; ++x)
          if (p.covers(y, x) && item.label.at(y, x) != 0) free = false;
      if (!free) continue;

      const ShapeColor color = draw_color(kind, rng);
      for (int y = p.y0; y < p.y0 + p.h; ++y)
        for (int x = p.x0; x < p.x0 + p.w; ++x) {
          if (!p.covers(y, x)) continue;
          item.label.at(y, x) = kind;
          item.image.at(y, x, 0) = color.r;
          item.image.at(y, x, 1) = color.g;
          item.image.at(y, x, 2) = color.b;
          ++covered;
        }
      placed = true;
    }
    if (!placed) {
      SIAMUDA_THROW(ValueError, "synth_image: cannot place shape "
                                    << shape_counter << " after " << kPlacementAttempts
                                    << " attempts; covered " << covered << "/" << target
                                    << " pixels, shape_density " << config.shape_density
                                    << " is too high");
    }
    ++shape_counter;
  }

  // Target domain only: permutation, then affine gains and biases.
  if (domain == DomainTag::kTarget && !config.shift.is_identity()) {
    std::array<double, 3> gain = config.shift.gain;
    if (config.shift.per_image_jitter > 0.0) {
      for (double& g : gain)
        g *= uniform(rng, 1.0 - config.shift.per_image_jitter,
                     1.0 + config.shift.per_image_jitter);
    }
    const std::array<int, 3> perm =
        config.shift.permutation ? *config.shift.permutation : std::array<int, 3>{0, 1, 2};
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double in[3];
        for (int c = 0; c < 3; ++c) in[c] = item.image.at(y, x, c);
        for (int c = 0; c < 3; ++c) {
          item.image.at(y, x, c) =
              std::clamp(gain[c] * in[perm[c]] + config.shift.bias[c], 0.0, 1.0);
        }
      }
  }

  if (config.pixel_noise > 0.0) {
    for (double& v : item.image.data)
      v = std::clamp(v + uniform(rng, -config.pixel_noise, config.pixel_noise), 0.0, 1.0);
  }
  return item;
}

std::vector<SynthItem> synth_domain(const SynthConfig& config, DomainTag domain) {
  config.validate();
  std::vector<SynthItem> items;
  items.reserve(config.num_images);
  for (int i = 0; i < config.num_images; ++i) items.push_back(synth_image(config, domain, i));
  return items;
}

void write_synth_pair(const std::string& root, const SynthConfig& config) {
  config.validate();
  for (const char* domain : {"source", "target"}) {
    fs::create_directories(fs::path(root) / domain / "images");
    fs::create_directories(fs::path(root) / domain / "labels");
  }
  for (DomainTag domain : {DomainTag::kSource, DomainTag::kTarget}) {
    const std::string dir = std::string(root) + "/" + to_string(domain);
    for (const SynthItem& item : synth_domain(config, domain)) {
      write_image(dir + "/images/" + item.id + ".png", item.image);
      write_label(dir + "/labels/" + item.id + ".png", item.label);
    }
  }

  nlohmann::ordered_json registry;
  registry["classes"] = synth_class_names();
  registry["height"] = config.shape.height;
  registry["width"] = config.shape.width;
  registry["channels"] = config.shape.channels;
  registry["num_images"] = config.num_images;
  registry["seed"] = config.seed;
  registry["shape_density"] = config.shape_density;
  registry["pixel_noise"] = config.pixel_noise;
  registry["shift"]["gain"] = config.shift.gain;
  registry["shift"]["bias"] = config.shift.bias;
  if (config.shift.permutation) registry["shift"]["permutation"] = *config.shift.permutation;
  registry["shift"]["per_image_jitter"] = config.shift.per_image_jitter;
  registry["domains"] = {"source", "target"};

  std::ofstream out(root + "/dataset.json");
  if (!out.good()) SIAMUDA_THROW(IoError, "write_synth_pair: cannot write registry under " << root);
  out << registry.dump(2) << "\n";
}

std::pair<std::unique_ptr<MemoryStore>, std::unique_ptr<MemoryStore>> synth_pair_stores(
    const SynthConfig& config) {
  auto source = std::make_unique<MemoryStore>();
  auto target = std::make_unique<MemoryStore>();
  for (const SynthItem& item : synth_domain(config, DomainTag::kSource))
    source->add(item.id, item.image, item.label);
  for (const SynthItem& item : synth_domain(config, DomainTag::kTarget))
    target->add(item.id, item.image, item.label);
  return {std::move(source), std::move(target)};
}

}  // namespace siamuda
