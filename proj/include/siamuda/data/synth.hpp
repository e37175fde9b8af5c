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

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "siamuda/core/types.hpp"
#include "siamuda/data/store.hpp"

namespace siamuda {

// Channel permutation, then per-channel affine, then clamp to [0,1].
// per_image_jitter additionally scales each gain by a factor drawn per
// image from [1-j, 1+j], so the target domain is a family of shifts
// rather than one fixed map.
struct PhotometricShift {
  std::array<double, 3> gain{1.0, 1.0, 1.0};
  std::array<double, 3> bias{0.0, 0.0, 0.0};
  std::optional<std::array<int, 3>> permutation;
  double per_image_jitter = 0.0;

  void validate() const;
  bool is_identity() const;
};

// Scenes of non-overlapping axis-aligned shapes over a textured background:
// class 0 background, 1 rectangles, 2 ellipses, 3 bands. The label map and
// the rendered shape masks agree exactly, pixel for pixel.
struct SynthConfig {
  uint64_t seed = 0;
  int num_images = 8;  // per domain
  ShapeSpec shape{128, 128, 3, 4};
  PhotometricShift shift;
  double shape_density = 0.25;  // fraction of pixels covered by shapes
  double pixel_noise = 0.02;    // additive noise amplitude, both domains

  void validate() const;
};

inline const std::vector<std::string>& synth_class_names() {
  static const std::vector<std::string> names{"background", "rectangle", "ellipse", "band"};
  return names;
}

struct SynthItem {
  std::string id;
  Image image;
  LabelMap label;
};

// Fresh layout per (seed, domain, index); the photometric shift applies to
// target images only. Labels exist for both domains so evaluation and the
// oracle checks can run on the target too.
SynthItem synth_image(const SynthConfig& config, DomainTag domain, int index);

std::vector<SynthItem> synth_domain(const SynthConfig& config, DomainTag domain);

// Materializes <root>/{source,target}/{images,labels}/*.png plus a
// dataset.json registry describing shape, classes, and generation settings.
void write_synth_pair(const std::string& root, const SynthConfig& config);

// In-memory equivalent used by tests and desk-scale runs.
std::pair<std::unique_ptr<MemoryStore>, std::unique_ptr<MemoryStore>> synth_pair_stores(
    const SynthConfig& config);

}  // namespace siamuda
