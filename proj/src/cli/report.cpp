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

#include "siamuda/cli/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "json.hpp"

#include "render.hpp"
#include "siamuda/core/check.hpp"

namespace siamuda::cli {

namespace {

std::array<uint8_t, 3> hsv_to_rgb(double h, double s, double v) {
  h = std::fmod(std::fmod(h, 360.0) + 360.0, 360.0) / 60.0;
  const int sector = int(h) % 6;
  const double f = h - std::floor(h);
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  double r = 0, g = 0, b = 0;
  switch (sector) {
    case 0: r = v, g = t, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = t; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = t, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
  auto byte = [](double x) { return uint8_t(std::lround(x * 255.0)); };
  return {byte(r), byte(g), byte(b)};
}

}  // namespace

void Palette::validate(int num_classes) const {
  SIAMUDA_CHECK_VALUE(int(colors.size()) >= num_classes,
                      "palette: " << colors.size() << " colors for " << num_classes << " classes");
}

Palette default_palette(int num_classes) {
  SIAMUDA_CHECK_VALUE(num_classes >= 1, "palette: need at least one class");
  // Class order clutter, car, tree, low vegetation, building, impervious
  // surface; colors follow the usual remote-sensing display convention.
  static const std::vector<std::array<uint8_t, 3>> isprs{
      {255, 0, 0}, {255, 255, 0}, {0, 255, 0}, {0, 255, 255}, {0, 0, 255}, {255, 255, 255}};
  Palette p;
  if (num_classes >= int(isprs.size())) {
    p.colors = isprs;
    const int extra = num_classes - int(isprs.size());
    for (int k = 0; k < extra; ++k)
      p.colors.push_back(hsv_to_rgb(30.0 + 360.0 * k / extra, 0.85, 0.95));
  } else {
    for (int k = 0; k < num_classes; ++k)
      p.colors.push_back(hsv_to_rgb(360.0 * k / num_classes, 0.85, 0.95));
  }
  return p;
}

Palette load_palette(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) SIAMUDA_THROW(IoError, "palette: cannot read '" << path << "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    SIAMUDA_THROW(ValueError, "palette: '" << path << "' is not valid JSON: " << e.what());
  }
  SIAMUDA_CHECK_VALUE(j.is_object() && j.contains("colors") && j["colors"].is_array(),
                      "palette: '" << path << "' must carry a colors array");
  Palette p;
  for (const auto& c : j["colors"]) {
    SIAMUDA_CHECK_VALUE(c.is_array() && c.size() == 3, "palette: each color must be [r, g, b]");
    std::array<uint8_t, 3> rgb{};
    for (int k = 0; k < 3; ++k) {
      SIAMUDA_CHECK_VALUE(c[size_t(k)].is_number_integer(), "palette: channels must be integers");
      const int64_t v = c[size_t(k)].get<int64_t>();
      SIAMUDA_CHECK_VALUE(v >= 0 && v <= 255, "palette: channel value " << v << " outside 0..255");
      rgb[size_t(k)] = uint8_t(v);
    }
    p.colors.push_back(rgb);
  }
  SIAMUDA_CHECK_VALUE(!p.colors.empty(), "palette: '" << path << "' lists no colors");
  return p;
}

Image palette_map(const LabelMap& label, const Palette& palette) {
  Image out(label.height, label.width, 3);
  for (int y = 0; y < label.height; ++y) {
    for (int x = 0; x < label.width; ++x) {
      const int c = label.at(y, x);
      std::array<uint8_t, 3> rgb{128, 128, 128};
      if (c != kIgnoreLabel) {
        SIAMUDA_CHECK_VALUE(c >= 0 && c < int(palette.colors.size()),
                            "palette_map: class id " << c << " has no palette entry");
        rgb = palette.colors[size_t(c)];
      }
      for (int k = 0; k < 3; ++k) out.at(y, x, k) = rgb[size_t(k)] / 255.0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chart rendering. Everything is drawn into a CV_8UC3 canvas (BGR) and
// written with imwrite; both renderers are deterministic.

namespace {

const cv::Scalar kAxis(60, 60, 60);
const cv::Scalar kGrid(225, 225, 225);
const cv::Scalar kText(40, 40, 40);

std::string fixed_label(double v) {
  char buf[32];
  const double mag = std::fabs(v);
  if (mag != 0.0 && (mag >= 10000.0 || mag < 0.01)) {
    std::snprintf(buf, sizeof(buf), "%.2g", v);
  } else if (std::fabs(v - std::round(v)) < 1e-9) {
    std::snprintf(buf, sizeof(buf), "%.0f", v);
  } else {
    std::snprintf(buf, sizeof(buf), "%.3f", v);
  }
  return buf;
}

void put_label(cv::Mat& canvas, const std::string& text, cv::Point at, double scale = 0.4) {
  cv::putText(canvas, text, at, cv::FONT_HERSHEY_SIMPLEX, scale, kText, 1, cv::LINE_AA);
}

}  // namespace

bool render_loss_curves(const std::vector<std::array<double, 7>>& rows, const std::string& path) {
  if (rows.empty()) return false;
  const int width = 960, height = 560;
  const int left = 80, right = width - 170, top = 40, bottom = height - 60;
  cv::Mat canvas(height, width, CV_8UC3, cv::Scalar(255, 255, 255));

  struct Series {
    const char* name;
    int column;
    cv::Scalar color;  // BGR
  };
  const Series series[] = {{"l_s", 1, {180, 90, 20}},
                           {"l_t", 2, {40, 40, 200}},
                           {"l_clr", 3, {60, 160, 40}},
                           {"l_total", 4, {20, 20, 20}}};

  double x_lo = rows.front()[0], x_hi = rows.back()[0];
  double y_lo = rows[0][1], y_hi = rows[0][1];
  for (const auto& row : rows) {
    x_lo = std::min(x_lo, row[0]);
    x_hi = std::max(x_hi, row[0]);
    for (const Series& s : series) {
      y_lo = std::min(y_lo, row[size_t(s.column)]);
      y_hi = std::max(y_hi, row[size_t(s.column)]);
    }
  }
  if (x_hi <= x_lo) x_hi = x_lo + 1.0;
  if (y_hi <= y_lo) y_hi = y_lo + 1.0;
  const double y_pad = 0.05 * (y_hi - y_lo);
  y_lo -= y_pad;
  y_hi += y_pad;

  auto px = [&](double x) { return int(std::lround(left + (x - x_lo) / (x_hi - x_lo) * (right - left))); };
  auto py = [&](double y) { return int(std::lround(bottom - (y - y_lo) / (y_hi - y_lo) * (bottom - top))); };

  for (int k = 0; k <= 5; ++k) {
    const double xv = x_lo + k * (x_hi - x_lo) / 5.0;
    const double yv = y_lo + k * (y_hi - y_lo) / 5.0;
    cv::line(canvas, {px(xv), top}, {px(xv), bottom}, kGrid, 1);
    cv::line(canvas, {left, py(yv)}, {right, py(yv)}, kGrid, 1);
    put_label(canvas, fixed_label(xv), {px(xv) - 14, bottom + 18});
    put_label(canvas, fixed_label(yv), {8, py(yv) + 4});
  }
  cv::line(canvas, {left, top}, {left, bottom}, kAxis, 1);
  cv::line(canvas, {left, bottom}, {right, bottom}, kAxis, 1);
  put_label(canvas, "step", {(left + right) / 2 - 16, height - 16}, 0.45);
  put_label(canvas, "loss", {8, top - 14}, 0.45);

  for (const Series& s : series) {
    for (size_t i = 0; i + 1 < rows.size(); ++i) {
      cv::line(canvas,
               {px(rows[i][0]), py(rows[i][size_t(s.column)])},
               {px(rows[i + 1][0]), py(rows[i + 1][size_t(s.column)])}, s.color, 2, cv::LINE_AA);
    }
    if (rows.size() == 1)
      cv::circle(canvas, {px(rows[0][0]), py(rows[0][size_t(s.column)])}, 3, s.color, cv::FILLED);
  }

  int ly = top + 10;
  for (const Series& s : series) {
    cv::line(canvas, {right + 16, ly}, {right + 44, ly}, s.color, 2);
    put_label(canvas, s.name, {right + 52, ly + 4}, 0.45);
    ly += 24;
  }
  return cv::imwrite(path, canvas);
}

bool render_iou_bars(const std::vector<std::string>& names, const std::vector<double>& iou,
                     const std::vector<uint8_t>& has_support, const std::string& path) {
  SIAMUDA_CHECK_VALUE(names.size() == iou.size() && names.size() == has_support.size(),
                      "iou bars: names, values, and support flags must align");
  if (names.empty()) return false;
  const int n = int(names.size());
  const int row_h = 52, left = 200, bar_w = 440;
  const int width = left + bar_w + 90, height = 70 + n * row_h + 40;
  cv::Mat canvas(height, width, CV_8UC3, cv::Scalar(255, 255, 255));

  put_label(canvas, "per-class IoU", {left, 28}, 0.55);
  const int top = 50, bottom = top + n * row_h;
  for (int k = 0; k <= 4; ++k) {
    const int x = left + k * bar_w / 4;
    cv::line(canvas, {x, top}, {x, bottom}, kGrid, 1);
    char tick[8];
    std::snprintf(tick, sizeof(tick), "%.2f", k / 4.0);
    put_label(canvas, tick, {x - 12, bottom + 20});
  }
  cv::line(canvas, {left, top}, {left, bottom}, kAxis, 1);

  const cv::Scalar bar(160, 110, 40);  // steel blue in BGR
  for (int i = 0; i < n; ++i) {
    const int y0 = top + i * row_h + 10, y1 = top + (i + 1) * row_h - 10;
    put_label(canvas, names[size_t(i)], {12, (y0 + y1) / 2 + 4}, 0.45);
    if (!has_support[size_t(i)]) {
      put_label(canvas, "n/a (no support)", {left + 8, (y0 + y1) / 2 + 4}, 0.45);
      continue;
    }
    const double v = std::clamp(iou[size_t(i)], 0.0, 1.0);
    const int x1 = left + int(std::lround(v * bar_w));
    cv::rectangle(canvas, {left, y0}, {x1, y1}, bar, cv::FILLED);
    char value[16];
    std::snprintf(value, sizeof(value), "%.4f", iou[size_t(i)]);
    put_label(canvas, value, {x1 + 8, (y0 + y1) / 2 + 4}, 0.45);
  }
  return cv::imwrite(path, canvas);
}

}  // namespace siamuda::cli
