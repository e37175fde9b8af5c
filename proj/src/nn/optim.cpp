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

#include "siamuda/nn/optim.hpp"

#include <cmath>
#include <set>

namespace siamuda::nn {

AdamW::AdamW(std::vector<ParamGroup> groups, double beta1, double beta2, double weight_decay,
             double eps)
    : beta1_(beta1), beta2_(beta2), weight_decay_(weight_decay), eps_(eps) {
  std::set<std::string> seen;
  for (const ParamGroup& g : groups) {
    SIAMUDA_CHECK_VALUE(g.lr > 0.0, "AdamW: non-positive group lr " << g.lr);
    for (Parameter* p : g.params) {
      SIAMUDA_CHECK_VALUE(seen.insert(p->name).second,
                          "AdamW: parameter registered twice: " << p->name);
      Slot s;
      s.p = p;
      s.lr = g.lr;
      s.m = Tensor(p->value.shape);
      s.v = Tensor(p->value.shape);
      slots_.push_back(std::move(s));
      names_.push_back(p->name);
    }
  }
}

void AdamW::zero_grad() {
  for (Slot& s : slots_) s.p->zero_grad();
}

void AdamW::step(double lr_factor) {
  SIAMUDA_CHECK_VALUE(lr_factor > 0.0, "AdamW: non-positive lr factor");
  for (Slot& s : slots_) {
    if (!s.p->touched) continue;
    s.t += 1;
    const double lr = s.lr * lr_factor;
    const double bc1 = 1.0 - std::pow(beta1_, double(s.t));
    const double bc2 = 1.0 - std::pow(beta2_, double(s.t));
    double* theta = s.p->value.ptr();
    const double* g = s.p->grad.ptr();
    double* m = s.m.ptr();
    double* v = s.v.ptr();
    const size_t n = s.p->value.numel();
    for (size_t i = 0; i < n; ++i) {
      theta[i] -= lr * weight_decay_ * theta[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      theta[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

std::map<std::string, Tensor> AdamW::export_state() const {
  std::map<std::string, Tensor> out;
  for (const Slot& s : slots_) {
    out["m." + s.p->name] = s.m;
    out["v." + s.p->name] = s.v;
    Tensor t({1});
    t.data[0] = double(s.t);
    out["t." + s.p->name] = std::move(t);
  }
  return out;
}

void AdamW::import_state(const std::map<std::string, Tensor>& state) {
  for (Slot& s : slots_) {
    auto need = [&](const std::string& key) -> const Tensor& {
      auto it = state.find(key);
      SIAMUDA_CHECK_VALUE(it != state.end(), "AdamW: state missing " << key);
      return it->second;
    };
    const Tensor& m = need("m." + s.p->name);
    const Tensor& v = need("v." + s.p->name);
    const Tensor& t = need("t." + s.p->name);
    SIAMUDA_CHECK_SHAPE(m.same_shape(s.m) && v.same_shape(s.v),
                        "AdamW: state shape mismatch for " << s.p->name);
    s.m = m;
    s.v = v;
    s.t = int64_t(t.data[0]);
  }
}

}  // namespace siamuda::nn
