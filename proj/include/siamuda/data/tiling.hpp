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

#include <vector>

#include "siamuda/core/check.hpp"

namespace siamuda {

struct TilingSpec {
  int crop = 512;
  int stride = 512;

  void validate() const {
    SIAMUDA_CHECK_VALUE(crop >= 1, "TilingSpec: crop " << crop << " must be >= 1");
    SIAMUDA_CHECK_VALUE(stride >= 1, "TilingSpec: stride " << stride << " must be >= 1");
  }
  // Legal but skips pixels between windows; callers surface a warning.
  bool leaves_gaps() const { return stride > crop; }
};

struct TileOrigin {
  int row = 0;
  int col = 0;
  bool operator==(const TileOrigin& o) const { return row == o.row && col == o.col; }
};

// Window origins (r*stride, c*stride) whose crop fits entirely inside the
// image; incomplete boundary windows are dropped, never snapped inward.
std::vector<TileOrigin> tile_origins(int image_height, int image_width, const TilingSpec& spec);

}  // namespace siamuda
