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

#include <string>

#include "siamuda/core/types.hpp"

namespace siamuda {

// 8-bit 3-channel rasters on disk; doubles in [0,1], RGB order, in memory.
// Missing file -> IoError; undecodable content -> ValueError.
Image read_image(const std::string& path);
void write_image(const std::string& path, const Image& image);

// Labels carry the class index in the first (red) channel; writes replicate
// it across channels. The ignore sentinel 255 passes through.
LabelMap read_label(const std::string& path);
void write_label(const std::string& path, const LabelMap& label);

// (height, width) from the PNG header alone, without decoding pixel data.
std::pair<int, int> read_image_size(const std::string& path);

}  // namespace siamuda
