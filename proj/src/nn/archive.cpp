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

#include "siamuda/nn/archive.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace siamuda::nn {

namespace {

constexpr char kMagic[8] = {'S', 'U', 'T', 'A', '0', '0', '0', '1'};

template <typename T>
void write_pod(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void save_archive(const std::string& path, const std::map<std::string, Tensor>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out.good()) SIAMUDA_THROW(IoError, "archive: cannot open for write: " << path);
  out.write(kMagic, sizeof(kMagic));
  write_pod<uint64_t>(out, tensors.size());
  for (const auto& [name, t] : tensors) {  // std::map iterates in name order
    write_pod<uint32_t>(out, uint32_t(name.size()));
    out.write(name.data(), std::streamsize(name.size()));
    write_pod<uint32_t>(out, uint32_t(t.shape.size()));
    for (int d : t.shape) write_pod<int64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              std::streamsize(t.data.size() * sizeof(double)));
  }
  out.flush();
  if (!out.good()) SIAMUDA_THROW(IoError, "archive: write failed: " << path);
}

std::map<std::string, Tensor> load_archive(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) SIAMUDA_THROW(IoError, "archive: cannot open: " << path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in.good() || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    SIAMUDA_THROW(IoError, "archive: bad magic in " << path);

  std::map<std::string, Tensor> tensors;
  const uint64_t count = read_pod<uint64_t>(in);
  for (uint64_t i = 0; i < count; ++i) {
    const uint32_t name_len = read_pod<uint32_t>(in);
    SIAMUDA_CHECK_VALUE(name_len <= 4096, "archive: unreasonable name length " << name_len);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const uint32_t ndim = read_pod<uint32_t>(in);
    SIAMUDA_CHECK_VALUE(ndim <= 8, "archive: unreasonable rank " << ndim << " for " << name);
    std::vector<int> shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) shape[d] = int(read_pod<int64_t>(in));
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data.data()),
            std::streamsize(t.data.size() * sizeof(double)));
    if (!in.good()) SIAMUDA_THROW(IoError, "archive: truncated while reading " << name);
    tensors.emplace(std::move(name), std::move(t));
  }
  return tensors;
}

}  // namespace siamuda::nn
