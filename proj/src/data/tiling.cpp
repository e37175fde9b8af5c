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

#include "siamuda/data/tiling.hpp"

namespace siamuda {

std::vector<TileOrigin> tile_origins(int image_height, int image_width, const TilingSpec& spec) {
  spec.validate();
  SIAMUDA_CHECK_VALUE(image_height >= spec.crop, "tile_origins: image height "
                                                     << image_height << " smaller than crop "
                                                     << spec.crop);
  SIAMUDA_CHECK_VALUE(image_width >= spec.crop, "tile_origins: image width "
                                                    << image_width << " smaller than crop "
                                                    << spec.crop);
  const int rows = (image_height - spec.crop) / spec.stride + 1;
  const int cols = (image_width - spec.crop) / spec.stride + 1;
  std::vector<TileOrigin> origins;
  origins.reserve(size_t(rows) * cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) origins.push_back({r * spec.stride, c * spec.stride});
  return origins;
}

}  // namespace siamuda
