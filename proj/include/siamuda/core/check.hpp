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

#include <sstream>
#include <stdexcept>
#include <string>

namespace siamuda {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Mismatched tensor/map geometry.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(what) {}
};

// Out-of-range or otherwise invalid values.
class ValueError : public Error {
 public:
  explicit ValueError(const std::string& what) : Error(what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace siamuda

#define SIAMUDA_THROW(ErrorType, msg)     \
  do {                                    \
    std::ostringstream oss_throw_;        \
    oss_throw_ << msg;                    \
    throw ErrorType(oss_throw_.str());    \
  } while (0)

#define SIAMUDA_CHECK(cond, msg)                     \
  do {                                               \
    if (!(cond)) SIAMUDA_THROW(::siamuda::Error, msg); \
  } while (0)

#define SIAMUDA_CHECK_SHAPE(cond, msg)                    \
  do {                                                    \
    if (!(cond)) SIAMUDA_THROW(::siamuda::ShapeError, msg); \
  } while (0)

#define SIAMUDA_CHECK_VALUE(cond, msg)                    \
  do {                                                    \
    if (!(cond)) SIAMUDA_THROW(::siamuda::ValueError, msg); \
  } while (0)
