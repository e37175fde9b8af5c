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

#include <map>
#include <string>

#include "siamuda/nn/tensor.hpp"

namespace siamuda::nn {

// Named-tensor archive, little-endian binary:
//   magic "SUTA0001", u64 entry count, then per entry:
//   u32 name length, name bytes, u32 ndim, i64 dims, f64 payload.
// Entries are written in lexicographic name order so identical contents
// produce identical bytes.
void save_archive(const std::string& path, const std::map<std::string, Tensor>& tensors);
std::map<std::string, Tensor> load_archive(const std::string& path);

}  // namespace siamuda::nn
