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
#include <vector>

#include "siamuda/nn/layers.hpp"

namespace siamuda::nn {

struct ParamGroup {
  std::vector<Parameter*> params;
  double lr = 1e-3;
};

// Decoupled-weight-decay Adam. A parameter untouched by every backward of
// the step is skipped outright: no moment update, no decay, no step-count
// advance. That keeps branches with zero loss weight from dragging their
// heads through weight decay.
class AdamW {
 public:
  AdamW(std::vector<ParamGroup> groups, double beta1 = 0.9, double beta2 = 0.999,
        double weight_decay = 0.01, double eps = 1e-8);

  void zero_grad();
  // lr for each param = group lr * lr_factor.
  void step(double lr_factor);

  // Flat state export/import keyed by parameter name (m.<name>, v.<name>,
  // t.<name>); names must match the constructed groups exactly.
  std::map<std::string, Tensor> export_state() const;
  void import_state(const std::map<std::string, Tensor>& state);

  size_t num_params() const { return slots_.size(); }
  const std::vector<std::string>& param_names() const { return names_; }
  double group_lr(size_t slot_index) const { return slots_[slot_index].lr; }

 private:
  struct Slot {
    Parameter* p;
    double lr;
    Tensor m, v;
    int64_t t = 0;
  };
  std::vector<Slot> slots_;
  std::vector<std::string> names_;
  double beta1_, beta2_, weight_decay_, eps_;
};

}  // namespace siamuda::nn
