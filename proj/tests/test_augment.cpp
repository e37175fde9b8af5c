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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "siamuda/augment/augment.hpp"
#include "siamuda/core/rng.hpp"

using namespace siamuda;

namespace {

Image random_image(int h, int w, uint64_t seed, double lo = 0.0, double hi = 1.0) {
  Image img(h, w, 3);
  Rng rng = make_rng(seed, "test/image");
  for (double& v : img.data) v = uniform(rng, lo, hi);
  return img;
}

bool images_equal(const Image& a, const Image& b) {
  return a.same_shape(b) && a.data == b.data;
}

double max_abs_diff(const Image& a, const Image& b) {
  REQUIRE(a.same_shape(b));
  double m = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

// Independent mirror fold for the blur oracle; no edge duplication.
int mirror(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n - 2;
  i = std::abs(i) % period;
  return i < n ? i : period - i;
}

// Direct dense 2-D Gaussian convolution; the implementation under test is
// separable, so any disagreement is a padding or normalization bug.
Image dense_blur(const Image& in, double sigma) {
  const int radius = int(std::ceil(3.0 * sigma));
  const int side = 2 * radius + 1;
  std::vector<double> kernel(size_t(side) * side);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i)
    for (int j = -radius; j <= radius; ++j) {
      const double k = std::exp(-0.5 * (i * i + j * j) / (sigma * sigma));
      kernel[size_t(i + radius) * side + (j + radius)] = k;
      sum += k;
    }
  for (double& k : kernel) k /= sum;

  Image out(in.height, in.width, in.channels);
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x)
      for (int c = 0; c < in.channels; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          for (int j = -radius; j <= radius; ++j)
            acc += kernel[size_t(i + radius) * side + (j + radius)] *
                   in.at(mirror(y + i, in.height), mirror(x + j, in.width), c);
        out.at(y, x, c) = acc;
      }
  return out;
}

}  // namespace

TEST_CASE("sim aug defaults match the recipe") {
  SimAugConfig cfg;
  CHECK(cfg.crop_size == std::pair<int, int>{512, 512});
  CHECK(cfg.scale_range == std::pair<double, double>{0.6, 1.0});
  CHECK(cfg.jitter.brightness == 0.25);
  CHECK(cfg.jitter.contrast == 0.25);
  CHECK(cfg.jitter.saturation == 0.25);
  CHECK(cfg.jitter.hue == 0.25);
  CHECK(cfg.jitter_prob == 0.6);
  CHECK(cfg.grayscale_prob == 0.2);
  CHECK(cfg.blur_prob == 0.5);
  CHECK(cfg.hflip_prob == 0.5);
  CHECK(cfg.vflip_prob == 0.5);
  CHECK(cfg.blur_sigma == std::pair<double, double>{0.15, 1.15});
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("sim aug config rejects bad fields") {
  SimAugConfig cfg;
  cfg.jitter_prob = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ValueError);
  cfg = {};
  cfg.scale_range = {0.8, 0.5};
  CHECK_THROWS_AS(cfg.validate(), ValueError);
  cfg = {};
  cfg.scale_range = {0.6, 1.2};
  CHECK_THROWS_AS(cfg.validate(), ValueError);
  cfg = {};
  cfg.blur_sigma = {0.0, 1.0};
  CHECK_THROWS_AS(cfg.validate(), ValueError);
  cfg = {};
  cfg.jitter.brightness = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ValueError);
  cfg = {};
  cfg.jitter.contrast = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ValueError);
  cfg = {};
  cfg.jitter.hue = 0.6;
  CHECK_THROWS_AS(cfg.validate(), ValueError);
}

TEST_CASE("flips are involutions and move pixels where expected") {
  const Image img = random_image(5, 8, 11);
  const Image h = hflip(img);
  const Image v = vflip(img);
  CHECK(images_equal(hflip(h), img));
  CHECK(images_equal(vflip(v), img));
  for (int c = 0; c < 3; ++c) {
    CHECK(h.at(2, 0, c) == img.at(2, 7, c));
    CHECK(v.at(0, 3, c) == img.at(4, 3, c));
  }
}

TEST_CASE("grayscale replicates the luma across channels") {
  const Image img = random_image(4, 6, 12);
  const Image g = to_grayscale(img);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x) {
      const double expect =
          0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
      CHECK(g.at(y, x, 0) == expect);
      CHECK(g.at(y, x, 1) == expect);
      CHECK(g.at(y, x, 2) == expect);
    }
}

TEST_CASE("bilinear resize is exact at the same size and on linear ramps") {
  const Image img = random_image(6, 7, 13);
  CHECK(images_equal(resize_bilinear(img, 6, 7), img));

  // A linear ramp is reproduced exactly wherever the source coordinate stays
  // interior; half-pixel centers put edge rows/columns outside.
  const int in_h = 5, in_w = 7, out_h = 10, out_w = 14;
  Image ramp(in_h, in_w, 3);
  for (int y = 0; y < in_h; ++y)
    for (int x = 0; x < in_w; ++x)
      for (int c = 0; c < 3; ++c) ramp.at(y, x, c) = 0.1 + 0.07 * y + 0.03 * x + 0.01 * c;
  const Image up = resize_bilinear(ramp, out_h, out_w);
  for (int y = 0; y < out_h; ++y) {
    const double sy = (y + 0.5) * in_h / out_h - 0.5;
    if (sy < 0.0 || sy > in_h - 1) continue;
    for (int x = 0; x < out_w; ++x) {
      const double sx = (x + 0.5) * in_w / out_w - 0.5;
      if (sx < 0.0 || sx > in_w - 1) continue;
      for (int c = 0; c < 3; ++c) {
        CHECK(up.at(y, x, c) == doctest::Approx(0.1 + 0.07 * sy + 0.03 * sx + 0.01 * c)
                                    .epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("gaussian blur leaves constants alone and is identity below threshold") {
  Image flat(6, 5, 3);
  for (double& v : flat.data) v = 0.37;
  const Image blurred = gaussian_blur(flat, 1.3);
  CHECK(max_abs_diff(blurred, flat) <= 1e-12);

  const Image img = random_image(7, 7, 14);
  CHECK(images_equal(gaussian_blur(img, 0.09), img));
  CHECK_THROWS_AS(gaussian_blur(img, -0.5), ValueError);
}

TEST_CASE("gaussian blur matches a dense 2-D convolution oracle") {
  // Single bright pixel, centered and near the border; the border case
  // exercises mirror padding.
  Image spike(9, 9, 3);
  spike.at(4, 4, 0) = 1.0;
  spike.at(1, 2, 1) = 0.8;
  CHECK(max_abs_diff(gaussian_blur(spike, 1.0), dense_blur(spike, 1.0)) <= 1e-5);

  const Image img = random_image(8, 7, 15);
  CHECK(max_abs_diff(gaussian_blur(img, 0.8), dense_blur(img, 0.8)) <= 1e-12);
  CHECK(max_abs_diff(gaussian_blur(img, 1.6), dense_blur(img, 1.6)) <= 1e-12);
}

TEST_CASE("jitter with zero strengths is the identity") {
  const Image img = random_image(5, 6, 16);
  Rng rng = make_rng(0, "test/jitter");
  const JitterParams p = draw_jitter_params({0.0, 0.0, 0.0, 0.0}, rng);
  CHECK(p.brightness == 1.0);
  CHECK(p.contrast == 1.0);
  CHECK(p.saturation == 1.0);
  CHECK(p.hue == 0.0);
  CHECK(images_equal(apply_jitter(img, p), img));
}

TEST_CASE("brightness factor scales and clamps") {
  Image img = random_image(6, 6, 17);
  img.at(0, 0, 0) = 0.9;  // force the clamp to engage somewhere
  JitterParams p;
  p.brightness = 1.25;
  const Image out = apply_jitter(img, p);
  for (size_t i = 0; i < img.data.size(); ++i) {
    CHECK(out.data[i] == std::clamp(1.25 * img.data[i], 0.0, 1.0));
  }

  // Same oracle with the factor drawn rather than forced.
  Rng rng = make_rng(3, "test/jitter");
  const JitterParams drawn = draw_jitter_params({0.25, 0.0, 0.0, 0.0}, rng);
  CHECK(drawn.brightness >= 0.75);
  CHECK(drawn.brightness <= 1.25);
  const Image out2 = apply_jitter(img, drawn);
  for (size_t i = 0; i < img.data.size(); ++i) {
    CHECK(out2.data[i] == std::clamp(drawn.brightness * img.data[i], 0.0, 1.0));
  }
}

TEST_CASE("contrast and saturation blend toward the luma") {
  const Image img = random_image(5, 4, 18);

  // Zero saturation equals the grayscale op.
  JitterParams sat;
  sat.saturation = 0.0;
  CHECK(images_equal(apply_jitter(img, sat), to_grayscale(img)));

  // Zero contrast collapses every pixel to the mean luma.
  JitterParams con;
  con.contrast = 0.0;
  const Image flat = apply_jitter(img, con);
  double mean = 0.0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      mean += 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
  mean /= double(img.height) * img.width;
  for (double v : flat.data) CHECK(v == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("hue offsets rotate primaries around the color wheel") {
  Image red(1, 1, 3);
  red.at(0, 0, 0) = 1.0;
  JitterParams p;
  p.hue = 1.0 / 3.0;
  const Image green = apply_jitter(red, p);
  CHECK(green.at(0, 0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(green.at(0, 0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(green.at(0, 0, 2) == doctest::Approx(0.0).epsilon(1e-12));

  p.hue = -1.0 / 3.0;
  const Image blue = apply_jitter(red, p);
  CHECK(blue.at(0, 0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(blue.at(0, 0, 1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(blue.at(0, 0, 2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("jitter stays in range and draws factors within the strengths") {
  for (uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng = make_rng(seed, "test/jitter");
    const JitterParams p = draw_jitter_params({0.25, 0.25, 0.25, 0.25}, rng);
    CHECK(p.brightness >= 0.75);
    CHECK(p.brightness <= 1.25);
    CHECK(p.contrast >= 0.75);
    CHECK(p.contrast <= 1.25);
    CHECK(p.saturation >= 0.75);
    CHECK(p.saturation <= 1.25);
    CHECK(std::abs(p.hue) <= 0.25);
    std::array<int, 4> sorted = p.order;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::array<int, 4>{0, 1, 2, 3});

    const Image out = apply_jitter(random_image(6, 5, seed), p);
    for (double v : out.data) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("jitter commutes with spatial flips") {
  const Image img = random_image(7, 6, 19);
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng = make_rng(seed, "test/jitter");
    const JitterParams p = draw_jitter_params({0.25, 0.25, 0.25, 0.25}, rng);
    // The contrast mean is summed in a different pixel order after the flip,
    // so equality holds to rounding, not bitwise.
    CHECK(max_abs_diff(apply_jitter(hflip(img), p), hflip(apply_jitter(img, p))) <= 1e-12);
    CHECK(max_abs_diff(apply_jitter(vflip(img), p), vflip(apply_jitter(img, p))) <= 1e-12);
  }
}

TEST_CASE("resized crop covers the whole window at full scale on square inputs") {
  for (uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng = make_rng(seed, "test/crop");
    const CropParams p = draw_resized_crop(24, 24, {24, 24}, {1.0, 1.0}, rng);
    CHECK(p.y0 == 0);
    CHECK(p.x0 == 0);
    CHECK(p.h == 24);
    CHECK(p.w == 24);
  }
}

TEST_CASE("resized crop windows stay inside the input") {
  for (uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng = make_rng(seed, "test/crop");
    const CropParams p = draw_resized_crop(64, 48, {16, 16}, {0.6, 1.0}, rng);
    CHECK(p.y0 >= 0);
    CHECK(p.x0 >= 0);
    CHECK(p.h >= 1);
    CHECK(p.w >= 1);
    CHECK(p.y0 + p.h <= 64);
    CHECK(p.x0 + p.w <= 48);
    CHECK(p.out_h == 16);
    CHECK(p.out_w == 16);
    // Area tracks the requested fraction up to integer rounding.
    CHECK(double(p.h) * p.w >= 0.5 * 64 * 48);
  }
}

TEST_CASE("resized crop gives up after ten attempts on hopeless aspect ratios") {
  Rng rng = make_rng(0, "test/crop");
  CHECK_THROWS_WITH_AS(draw_resized_crop(8, 4096, {16, 16}, {0.6, 1.0}, rng),
                       doctest::Contains("attempts"), ValueError);
}

TEST_CASE("crop windows outside the input are rejected") {
  const Image img = random_image(10, 10, 20);
  CropParams p;
  p.y0 = 5;
  p.x0 = 5;
  p.h = 6;
  p.w = 6;
  p.out_h = 4;
  p.out_w = 4;
  CHECK_THROWS_AS(apply_crop_resize(img, p), ShapeError);
}

TEST_CASE("identity pipeline returns the input unchanged") {
  const Image img = random_image(24, 24, 21);
  SimAugConfig cfg;
  cfg.crop_size = {24, 24};
  cfg.scale_range = {1.0, 1.0};
  cfg.jitter_prob = 0.0;
  cfg.grayscale_prob = 0.0;
  cfg.blur_prob = 0.0;
  cfg.hflip_prob = 0.0;
  cfg.vflip_prob = 0.0;
  const ViewPair pair = make_views(img, cfg, 99);
  CHECK(images_equal(pair.view1, img));
  CHECK(images_equal(pair.view2, img));
}

TEST_CASE("view pairs are deterministic under the seed") {
  const Image img = random_image(20, 18, 22);
  SimAugConfig cfg;
  cfg.crop_size = {12, 12};
  const ViewPair a = make_views(img, cfg, 5);
  const ViewPair b = make_views(img, cfg, 5);
  CHECK(images_equal(a.view1, b.view1));
  CHECK(images_equal(a.view2, b.view2));
  CHECK(provenance_json(a.prov1) == provenance_json(b.prov1));
  CHECK(provenance_json(a.prov2) == provenance_json(b.prov2));
}

TEST_CASE("forced jitter and blur separate both views from the input and each other") {
  const Image img = random_image(16, 16, 23, 0.3, 0.7);
  SimAugConfig cfg;
  cfg.crop_size = {16, 16};
  cfg.scale_range = {1.0, 1.0};
  cfg.jitter_prob = 1.0;
  cfg.blur_prob = 1.0;
  cfg.grayscale_prob = 0.0;
  cfg.hflip_prob = 0.0;
  cfg.vflip_prob = 0.0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const ViewPair pair = make_views(img, cfg, seed);
    CHECK(max_abs_diff(pair.view1, img) > 0.0);
    CHECK(max_abs_diff(pair.view2, img) > 0.0);
    CHECK(max_abs_diff(pair.view1, pair.view2) > 0.0);
  }
}

TEST_CASE("views keep the crop shape and the value range for all seeds") {
  const Image img = random_image(20, 24, 24);
  SimAugConfig cfg;
  cfg.crop_size = {12, 10};
  for (uint64_t seed = 0; seed < 50; ++seed) {
    const ViewPair pair = make_views(img, cfg, seed);
    for (const Image* view : {&pair.view1, &pair.view2}) {
      CHECK(view->height == 12);
      CHECK(view->width == 10);
      CHECK(view->channels == 3);
      for (double v : view->data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
}

TEST_CASE("provenance replays each view exactly") {
  const Image img = random_image(18, 15, 25);
  SimAugConfig cfg;
  cfg.crop_size = {10, 10};
  bool saw_jitter = false, saw_blur = false;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const ViewPair pair = make_views(img, cfg, seed);
    CHECK(images_equal(apply_view(img, pair.prov1), pair.view1));
    CHECK(images_equal(apply_view(img, pair.prov2), pair.view2));
    saw_jitter = saw_jitter || pair.prov1.jitter;
    saw_blur = saw_blur || pair.prov1.blur;

    const auto j = nlohmann::json::parse(provenance_json(pair.prov1));
    CHECK(j.at("crop").at("h").get<int>() == pair.prov1.crop.h);
    CHECK(j.at("hflip").get<bool>() == pair.prov1.hflip);
    CHECK(j.contains("jitter_params") == pair.prov1.jitter);
    CHECK(j.contains("sigma") == pair.prov1.blur);
  }
  // At default probabilities 20 draws hit both stochastic branches.
  CHECK(saw_jitter);
  CHECK(saw_blur);
}

TEST_CASE("make views rejects infeasible inputs and non-color images") {
  SimAugConfig cfg;
  cfg.crop_size = {16, 16};
  CHECK_THROWS_WITH_AS(make_views(random_image(8, 4096, 26), cfg, 0),
                       doctest::Contains("attempts"), ValueError);
  Image two_channel(16, 16, 2);
  CHECK_THROWS_AS(make_views(two_channel, cfg, 0), ValueError);
}

TEST_CASE("single-class source mixes everything in") {
  DomainSample source;
  source.image = random_image(6, 6, 27);
  source.label = LabelMap(6, 6, 2);
  const Image target = random_image(6, 6, 28);
  const LabelMap pseudo(6, 6, 0);
  const MixResult mix = class_mix(source, target, pseudo, 0);
  CHECK(images_equal(mix.image, source.image));
  CHECK(mix.label.data == source.label->data);
  for (int v : mix.mask.data) CHECK(v == 1);
}

TEST_CASE("source without valid classes leaves the target untouched") {
  DomainSample source;
  source.image = random_image(5, 5, 29);
  source.label = LabelMap(5, 5, kIgnoreLabel);
  const Image target = random_image(5, 5, 30);
  LabelMap pseudo(5, 5, 0);
  pseudo.at(2, 2) = 3;
  const MixResult mix = class_mix(source, target, pseudo, 0);
  CHECK(images_equal(mix.image, target));
  CHECK(mix.label.data == pseudo.data);
  for (int v : mix.mask.data) CHECK(v == 0);
}

TEST_CASE("class mix picks half the classes and mixes per pixel") {
  // Quadrant label with classes {0,1,2,3}; ceil(4/2) = 2 get selected.
  DomainSample source;
  source.image = random_image(8, 8, 31);
  LabelMap label(8, 8, 0);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) label.at(y, x) = (y < 4 ? 0 : 2) + (x < 4 ? 0 : 1);
  source.label = label;
  const Image target = random_image(8, 8, 32);
  LabelMap pseudo(8, 8, 1);
  pseudo.at(0, 0) = 3;

  const MixResult mix = class_mix(source, target, pseudo, 7);

  std::set<int> selected;
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      if (mix.mask.at(y, x) == 1) selected.insert(label.at(y, x));
  CHECK(selected.size() == 2);

  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      const bool from_source = selected.count(label.at(y, x)) > 0;
      CHECK(mix.mask.at(y, x) == (from_source ? 1 : 0));
      CHECK(mix.label.at(y, x) == (from_source ? label.at(y, x) : pseudo.at(y, x)));
      for (int c = 0; c < 3; ++c) {
        CHECK(mix.image.at(y, x, c) ==
              (from_source ? source.image.at(y, x, c) : target.at(y, x, c)));
      }
    }

  // Same seed reproduces the mask; across seeds the selection varies.
  const MixResult again = class_mix(source, target, pseudo, 7);
  CHECK(again.mask.data == mix.mask.data);
  std::set<std::vector<int>> masks;
  for (uint64_t seed = 0; seed < 10; ++seed)
    masks.insert(class_mix(source, target, pseudo, seed).mask.data);
  CHECK(masks.size() > 1);
}

TEST_CASE("class mix label consistency holds for random labels") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    DomainSample source;
    source.image = random_image(7, 9, seed + 100);
    LabelMap label(7, 9, 0);
    Rng rng = make_rng(seed, "test/mix");
    for (int& v : label.data) {
      const int draw = uniform_int(rng, 0, 6);
      v = draw == 6 ? kIgnoreLabel : draw;
    }
    source.label = label;
    const Image target = random_image(7, 9, seed + 200);
    const LabelMap pseudo(7, 9, 1);

    const MixResult mix = class_mix(source, target, pseudo, seed);

    std::set<int> present, selected;
    for (int v : label.data)
      if (v != kIgnoreLabel) present.insert(v);
    for (size_t i = 0; i < label.data.size(); ++i)
      if (mix.mask.data[i] == 1) selected.insert(label.data[i]);

    CHECK(selected.size() == (present.size() + 1) / 2);
    CHECK(selected.count(kIgnoreLabel) == 0);
    for (size_t i = 0; i < label.data.size(); ++i) {
      const bool should = selected.count(label.data[i]) > 0;
      CHECK(mix.mask.data[i] == (should ? 1 : 0));
    }
  }
}

TEST_CASE("class mix validates its inputs") {
  DomainSample source;
  source.image = random_image(4, 4, 33);
  const Image target = random_image(4, 4, 34);
  const LabelMap pseudo(4, 4, 0);
  CHECK_THROWS_WITH_AS(class_mix(source, target, pseudo, 0), doctest::Contains("label"),
                       ValueError);
  source.label = LabelMap(4, 4, 0);
  CHECK_THROWS_AS(class_mix(source, random_image(5, 4, 35), pseudo, 0), ShapeError);
  CHECK_THROWS_AS(class_mix(source, target, LabelMap(4, 5, 0), 0), ShapeError);
}
