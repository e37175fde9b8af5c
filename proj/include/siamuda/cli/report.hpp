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
#include <cstdint>
#include <string>
#include <vector>

#include "siamuda/core/types.hpp"

namespace siamuda::cli {

// Display colors indexed by class id; ignore pixels render mid gray.
struct Palette {
  std::vector<std::array<uint8_t, 3>> colors;  // RGB
  void validate(int num_classes) const;
};

// The first six entries follow the ISPRS display convention (impervious
// surface white, building blue, low vegetation cyan, tree green, car
// yellow, clutter red); synthetic classes and anything beyond six get
// evenly spaced hues.
Palette default_palette(int num_classes);

// {"colors": [[r, g, b], ...]} with channel values in 0..255.
Palette load_palette(const std::string& path);

// Exact per-pixel class-to-color mapping; prediction overlays are written
// with this, so a perfect prediction's overlay equals the mapped label.
Image palette_map(const LabelMap& label, const Palette& palette);

}  // namespace siamuda::cli
