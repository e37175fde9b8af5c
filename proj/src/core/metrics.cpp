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

#include "siamuda/core/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "json.hpp"

namespace siamuda {

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : num_classes_(num_classes), counts_(size_t(num_classes) * num_classes, 0) {
  SIAMUDA_CHECK_VALUE(num_classes >= 2, "ConfusionMatrix: num_classes must be >= 2");
}

void ConfusionMatrix::update(const LabelMap& predicted, const LabelMap& reference) {
  SIAMUDA_CHECK_SHAPE(predicted.same_shape(reference),
                      "confusion update: predicted " << predicted.height << "x" << predicted.width
                                                     << " vs reference " << reference.height << "x"
                                                     << reference.width);
  for (size_t i = 0; i < reference.data.size(); ++i) {
    const int ref = reference.data[i];
    if (ref == kIgnoreLabel) continue;
    const int pred = predicted.data[i];
    SIAMUDA_CHECK_VALUE(ref >= 0 && ref < num_classes_,
                        "confusion update: reference class " << ref << " out of range [0,"
                                                             << num_classes_ << ")");
    SIAMUDA_CHECK_VALUE(pred >= 0 && pred < num_classes_,
                        "confusion update: predicted class " << pred << " out of range [0,"
                                                             << num_classes_ << ")");
    counts_[size_t(ref) * num_classes_ + pred] += 1;
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  SIAMUDA_CHECK_SHAPE(num_classes_ == other.num_classes_,
                      "confusion merge: class counts differ (" << num_classes_ << " vs "
                                                               << other.num_classes_ << ")");
  for (size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

int64_t ConfusionMatrix::at(int reference_class, int predicted_class) const {
  return counts_[size_t(reference_class) * num_classes_ + predicted_class];
}

int64_t ConfusionMatrix::row_sum(int reference_class) const {
  int64_t s = 0;
  for (int c = 0; c < num_classes_; ++c) s += at(reference_class, c);
  return s;
}

int64_t ConfusionMatrix::col_sum(int predicted_class) const {
  int64_t s = 0;
  for (int r = 0; r < num_classes_; ++r) s += at(r, predicted_class);
  return s;
}

int64_t ConfusionMatrix::total() const {
  int64_t s = 0;
  for (int64_t v : counts_) s += v;
  return s;
}

double iou_from_counts(int64_t tp, int64_t fp, int64_t fn) {
  SIAMUDA_CHECK_VALUE(tp >= 0 && fp >= 0 && fn >= 0, "iou_from_counts: negative count");
  const int64_t denom = tp + fp + fn;
  if (denom == 0) return 0.0;  // zero support; callers exclude via has_support
  return double(tp) / double(denom);
}

double f1_from_counts(int64_t tp, int64_t fp, int64_t fn) {
  SIAMUDA_CHECK_VALUE(tp >= 0 && fp >= 0 && fn >= 0, "f1_from_counts: negative count");
  const int64_t denom = 2 * tp + fp + fn;
  if (denom == 0) return 0.0;
  return 2.0 * double(tp) / double(denom);
}

MetricReport summarize(const ConfusionMatrix& cm) {
  const int C = cm.num_classes();
  MetricReport report;
  report.per_class_iou.resize(C, 0.0);
  report.per_class_f1.resize(C, 0.0);
  report.has_support.resize(C, false);
  report.pixel_count = cm.total();

  double iou_sum = 0.0, f1_sum = 0.0;
  int supported = 0;
  for (int c = 0; c < C; ++c) {
    const int64_t tp = cm.at(c, c);
    const int64_t fp = cm.col_sum(c) - tp;
    const int64_t fn = cm.row_sum(c) - tp;
    const bool support = (tp + fp + fn) > 0;
    report.has_support[c] = support;
    report.per_class_iou[c] = iou_from_counts(tp, fp, fn);
    report.per_class_f1[c] = f1_from_counts(tp, fp, fn);
    if (support) {
      iou_sum += report.per_class_iou[c];
      f1_sum += report.per_class_f1[c];
      ++supported;
    }
  }
  report.mean_iou = supported > 0 ? iou_sum / supported : 0.0;
  report.mean_f1 = supported > 0 ? f1_sum / supported : 0.0;
  return report;
}

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

std::string metric_report_to_json(const MetricReport& report,
                                  const std::vector<std::string>& class_names) {
  const size_t C = report.per_class_iou.size();
  SIAMUDA_CHECK_VALUE(class_names.size() == C,
                      "metric report: " << class_names.size() << " class names for " << C
                                        << " classes");
  nlohmann::ordered_json j;
  for (size_t c = 0; c < C; ++c) {
    j["iou." + class_names[c]] = report.has_support[c] ? fixed4(report.per_class_iou[c]) : "nan";
  }
  for (size_t c = 0; c < C; ++c) {
    j["f1." + class_names[c]] = report.has_support[c] ? fixed4(report.per_class_f1[c]) : "nan";
  }
  j["miou"] = fixed4(report.mean_iou);
  j["mf1"] = fixed4(report.mean_f1);
  j["pixels"] = std::to_string(report.pixel_count);
  return j.dump(2);
}

const std::vector<std::string>& isprs_class_names() {
  static const std::vector<std::string> names = {
      "clutter", "car", "tree", "low_vegetation", "building", "impervious_surface"};
  return names;
}

}  // namespace siamuda
