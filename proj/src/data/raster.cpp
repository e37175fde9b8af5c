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

#include "siamuda/data/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include <opencv2/imgcodecs.hpp>

namespace siamuda {

namespace {

cv::Mat decode_8u3(const std::string& path) {
  if (!std::filesystem::exists(path)) SIAMUDA_THROW(IoError, "raster: missing file: " << path);
  cv::Mat m = cv::imread(path, cv::IMREAD_COLOR);  // BGR, 8-bit, 3 channels
  if (m.empty()) SIAMUDA_THROW(ValueError, "raster: cannot decode: " << path);
  return m;
}

}  // namespace

Image read_image(const std::string& path) {
  cv::Mat m = decode_8u3(path);
  Image img(m.rows, m.cols, 3);
  for (int y = 0; y < m.rows; ++y) {
    const uint8_t* row = m.ptr<uint8_t>(y);
    for (int x = 0; x < m.cols; ++x) {
      // BGR on disk, RGB in memory.
      img.at(y, x, 0) = row[3 * x + 2] / 255.0;
      img.at(y, x, 1) = row[3 * x + 1] / 255.0;
      img.at(y, x, 2) = row[3 * x + 0] / 255.0;
    }
  }
  return img;
}

void write_image(const std::string& path, const Image& image) {
  SIAMUDA_CHECK_VALUE(image.channels == 3,
                      "write_image: " << image.channels << " channels, wants 3");
  cv::Mat m(image.height, image.width, CV_8UC3);
  for (int y = 0; y < image.height; ++y) {
    uint8_t* row = m.ptr<uint8_t>(y);
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(image.at(y, x, c), 0.0, 1.0);
        row[3 * x + (2 - c)] = uint8_t(std::lround(v * 255.0));
      }
    }
  }
  if (!cv::imwrite(path, m)) SIAMUDA_THROW(IoError, "raster: cannot write: " << path);
}

LabelMap read_label(const std::string& path) {
  cv::Mat m = decode_8u3(path);
  LabelMap lab(m.rows, m.cols);
  for (int y = 0; y < m.rows; ++y) {
    const uint8_t* row = m.ptr<uint8_t>(y);
    // Class index lives in the first (red) channel.
    for (int x = 0; x < m.cols; ++x) lab.at(y, x) = row[3 * x + 2];
  }
  return lab;
}

void write_label(const std::string& path, const LabelMap& label) {
  cv::Mat m(label.height, label.width, CV_8UC3);
  for (int y = 0; y < label.height; ++y) {
    uint8_t* row = m.ptr<uint8_t>(y);
    for (int x = 0; x < label.width; ++x) {
      const int v = label.at(y, x);
      SIAMUDA_CHECK_VALUE(v >= 0 && v <= 255, "write_label: class id " << v << " out of byte range");
      row[3 * x + 0] = row[3 * x + 1] = row[3 * x + 2] = uint8_t(v);
    }
  }
  if (!cv::imwrite(path, m)) SIAMUDA_THROW(IoError, "raster: cannot write: " << path);
}

std::pair<int, int> read_image_size(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) SIAMUDA_THROW(IoError, "raster: missing file: " << path);
  // PNG: 8-byte signature, 4-byte length, "IHDR", width u32be, height u32be.
  uint8_t head[24];
  in.read(reinterpret_cast<char*>(head), sizeof(head));
  static const uint8_t kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (in.gcount() != sizeof(head) || !std::equal(kSig, kSig + 8, head) ||
      !std::equal(head + 12, head + 16, "IHDR")) {
    SIAMUDA_THROW(ValueError, "raster: not a PNG header: " << path);
  }
  auto be32 = [&](int off) {
    return (uint32_t(head[off]) << 24) | (uint32_t(head[off + 1]) << 16) |
           (uint32_t(head[off + 2]) << 8) | uint32_t(head[off + 3]);
  };
  return {int(be32(20)), int(be32(16))};  // (height, width)
}

}  // namespace siamuda
