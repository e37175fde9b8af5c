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

namespace siamuda::cli {

// Plot the four loss series (l_s, l_t, l_clr, l_total) against the step
// column of the metrics ledger. Rows follow the CSV layout:
// step, l_s, l_t, l_clr, l_total, q_mean, lr. Returns false when the image
// could not be written.
bool render_loss_curves(const std::vector<std::array<double, 7>>& rows, const std::string& path);

// Horizontal per-class IoU bars on a fixed [0, 1] axis; classes without
// support render as "n/a" instead of a bar.
bool render_iou_bars(const std::vector<std::string>& names, const std::vector<double>& iou,
                     const std::vector<uint8_t>& has_support, const std::string& path);

}  // namespace siamuda::cli
