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

#include "siamuda/core/types.hpp"

namespace siamuda {

// C x C confusion counts; rows index the reference class, columns the
// predicted class. The matrix is the sole source of IoU/F1 numbers.
// Evaluation may shard across workers: each shard owns a private matrix and
// the shards are merged (element-wise sum) sequentially at the end.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  // Tallies every pixel where reference != kIgnoreLabel.
  void update(const LabelMap& predicted, const LabelMap& reference);

  void merge(const ConfusionMatrix& other);

  int64_t at(int reference_class, int predicted_class) const;
  int64_t row_sum(int reference_class) const;
  int64_t col_sum(int predicted_class) const;
  int64_t total() const;
  int num_classes() const { return num_classes_; }

 private:
  int num_classes_;
  std::vector<int64_t> counts_;
};

struct MetricReport {
  std::vector<double> per_class_iou;
  std::vector<double> per_class_f1;
  // Classes with TP+FP+FN == 0 carry no signal; they are excluded from the
  // means and flagged here instead of being scored 0 or 1.
  std::vector<bool> has_support;
  double mean_iou = 0.0;
  double mean_f1 = 0.0;
  int64_t pixel_count = 0;
};

double iou_from_counts(int64_t tp, int64_t fp, int64_t fn);
double f1_from_counts(int64_t tp, int64_t fp, int64_t fn);

MetricReport summarize(const ConfusionMatrix& cm);

// Flat key/value serialization: `iou.<class>`, `f1.<class>`, `miou`, `mf1`,
// `pixels`, all values as decimal strings with 4 fractional digits
// ("nan" for classes without support). JSON object, keys in that order.
std::string metric_report_to_json(const MetricReport& report,
                                  const std::vector<std::string>& class_names);

// Default class order for ISPRS-style six-class data.
const std::vector<std::string>& isprs_class_names();

}  // namespace siamuda
