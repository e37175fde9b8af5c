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
#include <string>
#include <utility>

#include "siamuda/core/rng.hpp"
#include "siamuda/core/types.hpp"

namespace siamuda {

// Per-op jitter strengths; factors draw from [1-s, 1+s], the hue offset
// from [-s, s] in normalized hue turns.
struct JitterStrengths {
  double brightness = 0.25;
  double contrast = 0.25;
  double saturation = 0.25;
  double hue = 0.25;
  void validate() const;
};

struct SimAugConfig {
  std::pair<int, int> crop_size{512, 512};
  std::pair<double, double> scale_range{0.6, 1.0};  // fraction of input area
  JitterStrengths jitter;
  double jitter_prob = 0.6;
  double grayscale_prob = 0.2;
  double blur_prob = 0.5;
  double hflip_prob = 0.5;
  double vflip_prob = 0.5;
  std::pair<double, double> blur_sigma{0.15, 1.15};
  void validate() const;
};

// --- primitive ops, all pure --------------------------------------------

Image hflip(const Image& image);
Image vflip(const Image& image);
Image resize_bilinear(const Image& image, int out_h, int out_w);
Image to_grayscale(const Image& image);

// Identity below sigma 0.1; otherwise separable convolution with mirror
// padding, kernel radius ceil(3*sigma).
Image gaussian_blur(const Image& image, double sigma);

struct JitterParams {
  double brightness = 1.0;
  double contrast = 1.0;
  double saturation = 1.0;
  double hue = 0.0;                    // turns
  std::array<int, 4> order{0, 1, 2, 3};  // application order over the ops above
};
JitterParams draw_jitter_params(const JitterStrengths& strengths, Rng& rng);
// Output clamped to [0,1] after every sub-op.
Image apply_jitter(const Image& image, const JitterParams& params);

struct CropParams {
  int y0 = 0, x0 = 0;      // window origin in the input
  int h = 0, w = 0;        // window size
  int out_h = 0, out_w = 0;  // resize target
};
// Area fraction from scale_range; aspect log-uniform on (3/4, 4/3)
// intersected with what fits the input at that area, so a feasible draw
// never needs spatial rejection. Infeasible intersections retry with the
// scale floor raised toward the top of the range; error after 10 attempts.
CropParams draw_resized_crop(int in_h, int in_w, std::pair<int, int> crop_size,
                             std::pair<double, double> scale_range, Rng& rng);
Image apply_crop_resize(const Image& image, const CropParams& params);

// --- contrastive view pipeline -------------------------------------------

// Sampled parameters for one view; replays the view exactly.
struct ViewProvenance {
  CropParams crop;
  bool hflip = false;
  bool vflip = false;
  bool jitter = false;
  JitterParams jitter_params;
  bool grayscale = false;
  bool blur = false;
  double sigma = 0.0;
};

struct ViewPair {
  Image view1, view2;
  ViewProvenance prov1, prov2;
};

// Pipeline order: resized crop, flips, color jitter, grayscale, blur.
// Two independent draws over the same input; deterministic under seed.
ViewPair make_views(const Image& image, const SimAugConfig& config, uint64_t seed);
Image apply_view(const Image& image, const ViewProvenance& prov);
std::string provenance_json(const ViewProvenance& prov);

// --- source/target mixing -------------------------------------------------

struct MixResult {
  Image image;
  LabelMap label;
  LabelMap mask;  // 1 = pixel taken from source
};

// Picks ceil(k/2) of the k distinct non-ignore classes in the source label
// uniformly at random; mask marks source pixels of the selected classes.
// A source label with no valid classes yields the target unchanged under
// an all-zero mask.
MixResult class_mix(const DomainSample& source, const Image& target_image,
                    const LabelMap& target_pseudo, uint64_t seed);

}  // namespace siamuda
