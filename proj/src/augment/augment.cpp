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

#include "siamuda/augment/augment.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "siamuda/nn/layers.hpp"

namespace siamuda {

namespace {

constexpr double kLumaR = 0.299, kLumaG = 0.587, kLumaB = 0.114;

double luma(const Image& img, int y, int x) {
  return kLumaR * img.at(y, x, 0) + kLumaG * img.at(y, x, 1) + kLumaB * img.at(y, x, 2);
}

void clamp01(Image& img) {
  for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
}

// Mirror reflection without edge duplication; folds until in range.
int reflect_index(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

void check_prob(double p, const char* what) {
  SIAMUDA_CHECK_VALUE(p >= 0.0 && p <= 1.0, "SimAugConfig: " << what << " " << p
                                                             << " outside [0,1]");
}

}  // namespace

void JitterStrengths::validate() const {
  for (double s : {brightness, contrast, saturation, hue}) {
    SIAMUDA_CHECK_VALUE(s >= 0.0, "JitterStrengths: strength " << s << " negative");
  }
  // Factors draw from [1-s, 1+s]; s > 1 would allow negative factors, and
  // hue offsets wrap past half a turn.
  SIAMUDA_CHECK_VALUE(brightness <= 1.0 && contrast <= 1.0 && saturation <= 1.0,
                      "JitterStrengths: factor strengths above 1");
  SIAMUDA_CHECK_VALUE(hue <= 0.5, "JitterStrengths: hue strength " << hue << " above 0.5");
}

void SimAugConfig::validate() const {
  SIAMUDA_CHECK_VALUE(crop_size.first >= 1 && crop_size.second >= 1,
                      "SimAugConfig: crop size " << crop_size.first << "x" << crop_size.second);
  SIAMUDA_CHECK_VALUE(scale_range.first > 0.0 && scale_range.first <= scale_range.second &&
                          scale_range.second <= 1.0,
                      "SimAugConfig: scale range (" << scale_range.first << ","
                                                    << scale_range.second << ") outside (0,1]");
  jitter.validate();
  check_prob(jitter_prob, "jitter_prob");
  check_prob(grayscale_prob, "grayscale_prob");
  check_prob(blur_prob, "blur_prob");
  check_prob(hflip_prob, "hflip_prob");
  check_prob(vflip_prob, "vflip_prob");
  SIAMUDA_CHECK_VALUE(blur_sigma.first > 0.0 && blur_sigma.first <= blur_sigma.second,
                      "SimAugConfig: blur sigma range (" << blur_sigma.first << ","
                                                         << blur_sigma.second << ")");
}

Image hflip(const Image& image) {
  Image out(image.height, image.width, image.channels);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < image.channels; ++c)
        out.at(y, x, c) = image.at(y, image.width - 1 - x, c);
  return out;
}

Image vflip(const Image& image) {
  Image out(image.height, image.width, image.channels);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < image.channels; ++c)
        out.at(y, x, c) = image.at(image.height - 1 - y, x, c);
  return out;
}

Image resize_bilinear(const Image& image, int out_h, int out_w) {
  SIAMUDA_CHECK_VALUE(out_h >= 1 && out_w >= 1, "resize_bilinear: target " << out_h << "x"
                                                                           << out_w);
  const auto ty = nn::make_linear_taps(image.height, out_h);
  const auto tx = nn::make_linear_taps(image.width, out_w);
  Image out(out_h, out_w, image.channels);
  for (int y = 0; y < out_h; ++y) {
    const auto& [y0, y1, wy] = ty[y];
    for (int x = 0; x < out_w; ++x) {
      const auto& [x0, x1, wx] = tx[x];
      for (int c = 0; c < image.channels; ++c) {
        const double top = (1.0 - wx) * image.at(y0, x0, c) + wx * image.at(y0, x1, c);
        const double bot = (1.0 - wx) * image.at(y1, x0, c) + wx * image.at(y1, x1, c);
        out.at(y, x, c) = (1.0 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

Image to_grayscale(const Image& image) {
  SIAMUDA_CHECK_VALUE(image.channels == 3, "to_grayscale: wants 3 channels");
  Image out(image.height, image.width, 3);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const double g = luma(image, y, x);
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = g;
    }
  return out;
}

Image gaussian_blur(const Image& image, double sigma) {
  SIAMUDA_CHECK_VALUE(sigma >= 0.0, "gaussian_blur: sigma " << sigma);
  if (sigma < 0.1) return image;

  const int radius = int(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (double& k : kernel) k /= sum;

  const int h = image.height, w = image.width, ch = image.channels;
  Image horiz(h, w, ch), out(h, w, ch);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[i + radius] * image.at(y, reflect_index(x + i, w), c);
        horiz.at(y, x, c) = acc;
      }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[i + radius] * horiz.at(reflect_index(y + i, h), x, c);
        out.at(y, x, c) = acc;
      }
  return out;
}

JitterParams draw_jitter_params(const JitterStrengths& strengths, Rng& rng) {
  strengths.validate();
  JitterParams p;
  p.brightness = uniform(rng, 1.0 - strengths.brightness, 1.0 + strengths.brightness);
  p.contrast = uniform(rng, 1.0 - strengths.contrast, 1.0 + strengths.contrast);
  p.saturation = uniform(rng, 1.0 - strengths.saturation, 1.0 + strengths.saturation);
  p.hue = uniform(rng, -strengths.hue, strengths.hue);
  std::vector<int> order{0, 1, 2, 3};
  shuffle_pinned(order, rng);
  std::copy(order.begin(), order.end(), p.order.begin());
  return p;
}

namespace {

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx > 0.0 ? d / mx : 0.0;
  if (d <= 0.0) {
    h = 0.0;
  } else if (mx == r) {
    h = std::fmod((g - b) / d / 6.0 + 1.0, 1.0);
  } else if (mx == g) {
    h = ((b - r) / d + 2.0) / 6.0;
  } else {
    h = ((r - g) / d + 4.0) / 6.0;
  }
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  const double hh = std::fmod(std::fmod(h, 1.0) + 1.0, 1.0) * 6.0;
  const int sector = std::min(5, int(hh));
  const double f = hh - sector;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

void jitter_brightness(Image& img, double f) {
  for (double& v : img.data) v = f * v;
  clamp01(img);
}

void jitter_contrast(Image& img, double f) {
  double mean = 0.0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) mean += luma(img, y, x);
  mean /= double(size_t(img.height) * img.width);
  for (double& v : img.data) v = f * v + (1.0 - f) * mean;
  clamp01(img);
}

void jitter_saturation(Image& img, double f) {
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double g = luma(img, y, x);
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = f * img.at(y, x, c) + (1.0 - f) * g;
    }
  clamp01(img);
}

void jitter_hue(Image& img, double offset) {
  // The HSV round trip is lossy in the last bits; a zero offset must be a
  // true identity.
  if (offset == 0.0) return;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double h, s, v;
      rgb_to_hsv(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2), h, s, v);
      hsv_to_rgb(h + offset, s, v, img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
    }
  clamp01(img);
}

}  // namespace

Image apply_jitter(const Image& image, const JitterParams& params) {
  SIAMUDA_CHECK_VALUE(image.channels == 3, "apply_jitter: wants 3 channels");
  Image out = image;
  for (int op : params.order) {
    switch (op) {
      case 0: jitter_brightness(out, params.brightness); break;
      case 1: jitter_contrast(out, params.contrast); break;
      case 2: jitter_saturation(out, params.saturation); break;
      case 3: jitter_hue(out, params.hue); break;
      default: SIAMUDA_THROW(ValueError, "apply_jitter: bad op index " << op);
    }
  }
  return out;
}

CropParams draw_resized_crop(int in_h, int in_w, std::pair<int, int> crop_size,
                             std::pair<double, double> scale_range, Rng& rng) {
  SIAMUDA_CHECK_VALUE(in_h >= 1 && in_w >= 1, "draw_resized_crop: input " << in_h << "x" << in_w);
  const double area = double(in_h) * in_w;
  constexpr double kAspectLo = 3.0 / 4.0, kAspectHi = 4.0 / 3.0;
  constexpr int kAttempts = 10;

  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    // Raise the scale floor on every retry so repeated failures move the
    // draw toward the top of the range.
    const double lo =
        scale_range.first + (scale_range.second - scale_range.first) * attempt / kAttempts;
    const double target_area = area * uniform(rng, lo, scale_range.second);

    // Aspect bounds that keep the window inside the input at this area.
    const double feas_lo = std::max(kAspectLo, target_area / (double(in_h) * in_h));
    const double feas_hi = std::min(kAspectHi, (double(in_w) * in_w) / target_area);
    if (feas_lo > feas_hi) continue;

    const double aspect = std::exp(uniform(rng, std::log(feas_lo), std::log(feas_hi)));
    int w = int(std::lround(std::sqrt(target_area * aspect)));
    int h = int(std::lround(std::sqrt(target_area / aspect)));
    w = std::clamp(w, 1, in_w);
    h = std::clamp(h, 1, in_h);

    CropParams p;
    p.h = h;
    p.w = w;
    p.y0 = uniform_int(rng, 0, in_h - h);
    p.x0 = uniform_int(rng, 0, in_w - w);
    p.out_h = crop_size.first;
    p.out_w = crop_size.second;
    return p;
  }
  SIAMUDA_THROW(ValueError, "draw_resized_crop: no feasible window for input "
                                << in_h << "x" << in_w << " after " << kAttempts << " attempts");
}

Image apply_crop_resize(const Image& image, const CropParams& params) {
  SIAMUDA_CHECK_SHAPE(params.y0 >= 0 && params.x0 >= 0 && params.h >= 1 && params.w >= 1 &&
                          params.y0 + params.h <= image.height &&
                          params.x0 + params.w <= image.width,
                      "apply_crop_resize: window (" << params.y0 << "," << params.x0 << ","
                                                    << params.h << "," << params.w
                                                    << ") outside input " << image.height << "x"
                                                    << image.width);
  Image window(params.h, params.w, image.channels);
  for (int y = 0; y < params.h; ++y)
    for (int x = 0; x < params.w; ++x)
      for (int c = 0; c < image.channels; ++c)
        window.at(y, x, c) = image.at(params.y0 + y, params.x0 + x, c);
  if (params.h == params.out_h && params.w == params.out_w) return window;
  return resize_bilinear(window, params.out_h, params.out_w);
}

namespace {

ViewProvenance draw_view(const Image& image, const SimAugConfig& config, Rng& rng) {
  ViewProvenance prov;
  prov.crop =
      draw_resized_crop(image.height, image.width, config.crop_size, config.scale_range, rng);
  prov.hflip = bernoulli(rng, config.hflip_prob);
  prov.vflip = bernoulli(rng, config.vflip_prob);
  prov.jitter = bernoulli(rng, config.jitter_prob);
  if (prov.jitter) prov.jitter_params = draw_jitter_params(config.jitter, rng);
  prov.grayscale = bernoulli(rng, config.grayscale_prob);
  prov.blur = bernoulli(rng, config.blur_prob);
  if (prov.blur) prov.sigma = uniform(rng, config.blur_sigma.first, config.blur_sigma.second);
  return prov;
}

}  // namespace

Image apply_view(const Image& image, const ViewProvenance& prov) {
  Image out = apply_crop_resize(image, prov.crop);
  if (prov.hflip) out = hflip(out);
  if (prov.vflip) out = vflip(out);
  if (prov.jitter) out = apply_jitter(out, prov.jitter_params);
  if (prov.grayscale) out = to_grayscale(out);
  if (prov.blur) out = gaussian_blur(out, prov.sigma);
  return out;
}

ViewPair make_views(const Image& image, const SimAugConfig& config, uint64_t seed) {
  config.validate();
  SIAMUDA_CHECK_VALUE(image.channels == 3, "make_views: wants 3 channels");
  Rng rng = make_rng(seed, "views");
  ViewPair pair;
  pair.prov1 = draw_view(image, config, rng);
  pair.prov2 = draw_view(image, config, rng);
  pair.view1 = apply_view(image, pair.prov1);
  pair.view2 = apply_view(image, pair.prov2);
  return pair;
}

std::string provenance_json(const ViewProvenance& prov) {
  nlohmann::ordered_json j;
  j["crop"] = {{"y0", prov.crop.y0},     {"x0", prov.crop.x0},       {"h", prov.crop.h},
               {"w", prov.crop.w},       {"out_h", prov.crop.out_h}, {"out_w", prov.crop.out_w}};
  j["hflip"] = prov.hflip;
  j["vflip"] = prov.vflip;
  j["jitter"] = prov.jitter;
  if (prov.jitter) {
    j["jitter_params"] = {{"brightness", prov.jitter_params.brightness},
                          {"contrast", prov.jitter_params.contrast},
                          {"saturation", prov.jitter_params.saturation},
                          {"hue", prov.jitter_params.hue},
                          {"order", prov.jitter_params.order}};
  }
  j["grayscale"] = prov.grayscale;
  j["blur"] = prov.blur;
  if (prov.blur) j["sigma"] = prov.sigma;
  return j.dump();
}

MixResult class_mix(const DomainSample& source, const Image& target_image,
                    const LabelMap& target_pseudo, uint64_t seed) {
  SIAMUDA_CHECK_VALUE(source.label.has_value(), "class_mix: source sample has no label");
  const Image& src = source.image;
  const LabelMap& src_label = *source.label;
  SIAMUDA_CHECK_SHAPE(src.same_shape(target_image),
                      "class_mix: source and target image sizes differ");
  SIAMUDA_CHECK_SHAPE(src_label.height == src.height && src_label.width == src.width,
                      "class_mix: source label size mismatch");
  SIAMUDA_CHECK_SHAPE(target_pseudo.height == src.height && target_pseudo.width == src.width,
                      "class_mix: pseudo label size mismatch");

  std::set<int> present;
  for (int v : src_label.data)
    if (v != kIgnoreLabel) present.insert(v);

  std::set<int> selected;
  if (!present.empty()) {
    std::vector<int> classes(present.begin(), present.end());
    Rng rng = make_rng(seed, "classmix");
    shuffle_pinned(classes, rng);
    const size_t take = (classes.size() + 1) / 2;
    selected.insert(classes.begin(), classes.begin() + take);
  }

  MixResult out;
  out.image = target_image;
  out.label = target_pseudo;
  out.mask = LabelMap(src.height, src.width, 0);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x) {
      if (!selected.count(src_label.at(y, x))) continue;
      out.mask.at(y, x) = 1;
      out.label.at(y, x) = src_label.at(y, x);
      for (int c = 0; c < src.channels; ++c) out.image.at(y, x, c) = src.at(y, x, c);
    }
  return out;
}

}  // namespace siamuda
