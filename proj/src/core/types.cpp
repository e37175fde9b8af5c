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

#include "siamuda/core/types.hpp"

#include <cmath>

namespace siamuda {

void ProbabilityField::validate(double tol) const {
  SIAMUDA_CHECK_VALUE(height >= 1 && width >= 1 && num_classes >= 2,
                      "ProbabilityField: degenerate shape");
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double sum = 0.0;
      for (int c = 0; c < num_classes; ++c) {
        const double v = at(y, x, c);
        SIAMUDA_CHECK_VALUE(v >= -1e-12 && v <= 1.0 + 1e-12,
                            "ProbabilityField: entry " << v << " outside [0,1] at (" << y << ","
                                                       << x << "," << c << ")");
        sum += v;
      }
      SIAMUDA_CHECK_VALUE(std::abs(sum - 1.0) <= tol,
                          "ProbabilityField: channel sum " << sum << " at (" << y << "," << x
                                                           << ") deviates from 1");
    }
  }
}

}  // namespace siamuda
