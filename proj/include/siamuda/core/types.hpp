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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "siamuda/core/check.hpp"

namespace siamuda {

// Sentinel for pixels excluded from every loss and metric (boundary/void).
inline constexpr int kIgnoreLabel = 255;

struct ShapeSpec {
  int height = 0;
  int width = 0;
  int channels = 3;
  int num_classes = 2;

  void validate() const {
    SIAMUDA_CHECK_VALUE(height >= 1 && width >= 1, "ShapeSpec: height/width must be >= 1");
    SIAMUDA_CHECK_VALUE(channels >= 1, "ShapeSpec: channels must be >= 1");
    SIAMUDA_CHECK_VALUE(num_classes >= 2, "ShapeSpec: num_classes must be >= 2");
  }
  bool operator==(const ShapeSpec&) const = default;
};

// Dense pixel grid in HWC order, values expected in [0, 1].
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c) : height(h), width(w), channels(c), data(size_t(h) * w * c, 0.0) {}

  double& at(int y, int x, int c) { return data[(size_t(y) * width + x) * channels + c]; }
  double at(int y, int x, int c) const { return data[(size_t(y) * width + x) * channels + c]; }
  size_t numel() const { return data.size(); }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

// Integer class-id map; entries in {0..C-1} or kIgnoreLabel.
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<int> data;

  LabelMap() = default;
  LabelMap(int h, int w, int fill = 0) : height(h), width(w), data(size_t(h) * w, fill) {}

  int& at(int y, int x) { return data[size_t(y) * width + x]; }
  int at(int y, int x) const { return data[size_t(y) * width + x]; }
  size_t numel() const { return data.size(); }
  bool same_shape(const LabelMap& o) const { return height == o.height && width == o.width; }
};

enum class DomainTag { kSource, kTarget };

inline const char* to_string(DomainTag tag) {
  return tag == DomainTag::kSource ? "source" : "target";
}

// One image flowing through a domain. Source samples carry a label; target
// samples do not on the training path (they may during evaluation).
struct DomainSample {
  Image image;
  std::optional<LabelMap> label;
  DomainTag domain = DomainTag::kSource;
  std::string id;

  void validate() const {
    if (label.has_value()) {
      SIAMUDA_CHECK_SHAPE(label->height == image.height && label->width == image.width,
                          "DomainSample '" << id << "': label " << label->height << "x"
                                           << label->width << " does not match image "
                                           << image.height << "x" << image.width);
    }
  }
};

// Per-pixel class distribution, HWC order with C = num_classes.
struct ProbabilityField {
  int height = 0;
  int width = 0;
  int num_classes = 0;
  std::vector<double> values;

  ProbabilityField() = default;
  ProbabilityField(int h, int w, int c)
      : height(h), width(w), num_classes(c), values(size_t(h) * w * c, 0.0) {}

  double& at(int y, int x, int c) { return values[(size_t(y) * width + x) * num_classes + c]; }
  double at(int y, int x, int c) const {
    return values[(size_t(y) * width + x) * num_classes + c];
  }

  // Entries in [0,1], per-pixel channel sums equal to 1 within tol.
  void validate(double tol = 1e-5) const;
};

}  // namespace siamuda
