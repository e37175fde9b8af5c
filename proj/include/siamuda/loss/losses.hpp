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

#include <vector>

#include "siamuda/core/types.hpp"
#include "siamuda/model/network.hpp"
#include "siamuda/nn/tensor.hpp"

namespace siamuda {

// All cross-entropy losses normalize by the count of contributing pixels
// (not their weight sum), so magnitudes are crop-size-independent.
// Probabilities are floored at 1e-12 before every logarithm.
inline constexpr double kProbFloor = 1e-12;

struct CeResult {
  double value = 0.0;
  // False when no pixel contributed (all ignored); value is 0 then.
  bool has_support = true;
};

// Mean over non-ignored pixels of -log p[true class].
CeResult source_ce(const ProbabilityField& probs, const LabelMap& y);

// Teacher argmax as a one-hot grid; ties break toward the lowest class
// index. Pure data, no gradient relationship to the producing network.
ProbabilityField pseudo_labels(const ProbabilityField& teacher_probs);
LabelMap argmax_labels(const ProbabilityField& probs);

// Fraction of pixels whose max class probability strictly exceeds tau.
double quality(const ProbabilityField& teacher_probs, double tau);

struct PseudoLabelBundle {
  ProbabilityField p_t;  // one-hot
  double q = 0.0;
  double tau = 0.0;

  LabelMap labels() const { return argmax_labels(p_t); }
  void validate() const;
};

PseudoLabelBundle make_pseudo_bundle(const ProbabilityField& teacher_probs, double tau);

// q-weighted cross-entropy of the student against the one-hot pseudo-label,
// same normalization as source_ce.
double target_loss(const ProbabilityField& student_probs, const PseudoLabelBundle& bundle);

// -(p/|p|) . (z/|z|); norms below 1e-12 are rejected (undefined direction).
double neg_cosine(const std::vector<double>& p, const std::vector<double>& z);
std::vector<double> neg_cosine_grad_p(const std::vector<double>& p, const std::vector<double>& z);

// 0.5*D(p1, sg(z2)) + 0.5*D(p2, sg(z1)). Value only; the stop-gradient
// contract lives in the batched backward below.
double contrastive_loss(const ViewEmbeddings& emb);

struct LossWeights {
  double beta = 1.0;   // default unverified against any published value
  double gamma = 1.0;  // default unverified against any published value
  void validate() const;
};

struct LossBreakdown {
  double l_s = 0.0;
  double l_t = 0.0;
  double l_clr = 0.0;
  double l_total = 0.0;
};

// l_total = l_s + beta*l_t + gamma*l_clr; non-finite input raises naming
// the offending term.
LossBreakdown total_loss(double l_s, double l_t, double l_clr, const LossWeights& weights);

// --- batched, differentiable forms used by the trainer ---------------------

struct CeBatchResult {
  double value = 0.0;
  int64_t counted = 0;  // contributing pixels
  nn::Tensor dlogits;   // d value / d logits, zero where ignored
};

// logits (C,N,H,W); labels: one LabelMap per sample; pixel_weights: optional
// (N,H,W) tensor, weight 1 everywhere when null.
CeBatchResult softmax_ce_weighted(const nn::Tensor& logits,
                                  const std::vector<const LabelMap*>& labels,
                                  const nn::Tensor* pixel_weights);

struct ContrastiveBatchResult {
  double value = 0.0;
  nn::Tensor dp1, dp2;  // gradients w.r.t. the prediction outputs only;
                        // z1/z2 receive none (stop-gradient)
};

// p1,z1,p2,z2 all (D,N); value averages the pair loss over the batch.
ContrastiveBatchResult contrastive_batch(const nn::Tensor& p1, const nn::Tensor& z1,
                                         const nn::Tensor& p2, const nn::Tensor& z2);

}  // namespace siamuda
