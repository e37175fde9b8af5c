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
#include <string>
#include <vector>

#include "siamuda/core/check.hpp"

namespace siamuda::nn {

// Dense double tensor, flat row-major storage. Layout conventions used
// throughout the layer stack:
//   conv activations: (C, N, H, W)  — channel-major so per-channel batch-norm
//                     rows and 1x1-conv GEMM views are contiguous
//   dense features:   (D, N)        — one column per sample
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), 0.0);
  }

  static size_t numel_of(const std::vector<int>& s) {
    size_t n = 1;
    for (int d : s) {
      SIAMUDA_CHECK_VALUE(d >= 0, "Tensor: negative dimension " << d);
      n *= size_t(d);
    }
    return n;
  }

  size_t numel() const { return data.size(); }
  int dim(size_t i) const { return shape[i]; }
  int ndim() const { return int(shape.size()); }
  double* ptr() { return data.data(); }
  const double* ptr() const { return data.data(); }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  std::string shape_str() const {
    std::string s = "(";
    for (size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape[i]);
    }
    return s + ")";
  }
};

inline void axpy(Tensor& y, double a, const Tensor& x) {
  SIAMUDA_CHECK_SHAPE(y.same_shape(x), "axpy: " << y.shape_str() << " vs " << x.shape_str());
  for (size_t i = 0; i < y.data.size(); ++i) y.data[i] += a * x.data[i];
}

}  // namespace siamuda::nn
