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

#include "siamuda/loss/losses.hpp"

#include <cmath>

namespace siamuda {

using nn::Tensor;

CeResult source_ce(const ProbabilityField& probs, const LabelMap& y) {
  SIAMUDA_CHECK_SHAPE(probs.height == y.height && probs.width == y.width,
                      "source_ce: probs " << probs.height << "x" << probs.width << " vs labels "
                                          << y.height << "x" << y.width);
  double sum = 0.0;
  int64_t count = 0;
  for (int yy = 0; yy < y.height; ++yy) {
    for (int xx = 0; xx < y.width; ++xx) {
      const int cls = y.at(yy, xx);
      if (cls == kIgnoreLabel) continue;
      SIAMUDA_CHECK_VALUE(cls >= 0 && cls < probs.num_classes,
                          "source_ce: class " << cls << " out of range");
      sum -= std::log(std::max(probs.at(yy, xx, cls), kProbFloor));
      ++count;
    }
  }
  if (count == 0) return {0.0, false};
  return {sum / double(count), true};
}

LabelMap argmax_labels(const ProbabilityField& probs) {
  LabelMap out(probs.height, probs.width);
  for (int y = 0; y < probs.height; ++y) {
    for (int x = 0; x < probs.width; ++x) {
      int best = 0;
      double best_v = probs.at(y, x, 0);
      for (int c = 1; c < probs.num_classes; ++c) {
        const double v = probs.at(y, x, c);
        if (v > best_v) {  // strict: ties keep the lowest index
          best_v = v;
          best = c;
        }
      }
      out.at(y, x) = best;
    }
  }
  return out;
}

ProbabilityField pseudo_labels(const ProbabilityField& teacher_probs) {
  LabelMap arg = argmax_labels(teacher_probs);
  ProbabilityField onehot(teacher_probs.height, teacher_probs.width, teacher_probs.num_classes);
  for (int y = 0; y < arg.height; ++y)
    for (int x = 0; x < arg.width; ++x) onehot.at(y, x, arg.at(y, x)) = 1.0;
  return onehot;
}

double quality(const ProbabilityField& teacher_probs, double tau) {
  SIAMUDA_CHECK_VALUE(tau > 0.0 && tau < 1.0, "quality: tau " << tau << " outside (0,1)");
  int64_t above = 0;
  for (int y = 0; y < teacher_probs.height; ++y) {
    for (int x = 0; x < teacher_probs.width; ++x) {
      double mx = teacher_probs.at(y, x, 0);
      for (int c = 1; c < teacher_probs.num_classes; ++c)
        mx = std::max(mx, teacher_probs.at(y, x, c));
      if (mx > tau) ++above;
    }
  }
  return double(above) / (double(teacher_probs.height) * teacher_probs.width);
}

void PseudoLabelBundle::validate() const {
  SIAMUDA_CHECK_VALUE(q >= 0.0 && q <= 1.0, "PseudoLabelBundle: q " << q);
  SIAMUDA_CHECK_VALUE(tau > 0.0 && tau < 1.0, "PseudoLabelBundle: tau " << tau);
  for (int y = 0; y < p_t.height; ++y) {
    for (int x = 0; x < p_t.width; ++x) {
      int ones = 0;
      for (int c = 0; c < p_t.num_classes; ++c) {
        const double v = p_t.at(y, x, c);
        SIAMUDA_CHECK_VALUE(v == 0.0 || v == 1.0, "PseudoLabelBundle: non-binary entry " << v);
        ones += v == 1.0;
      }
      SIAMUDA_CHECK_VALUE(ones == 1, "PseudoLabelBundle: " << ones << " ones at (" << y << ","
                                                           << x << ")");
    }
  }
}

PseudoLabelBundle make_pseudo_bundle(const ProbabilityField& teacher_probs, double tau) {
  PseudoLabelBundle b;
  b.p_t = pseudo_labels(teacher_probs);
  b.q = quality(teacher_probs, tau);
  b.tau = tau;
  return b;
}

double target_loss(const ProbabilityField& student_probs, const PseudoLabelBundle& bundle) {
  SIAMUDA_CHECK_SHAPE(student_probs.height == bundle.p_t.height &&
                          student_probs.width == bundle.p_t.width &&
                          student_probs.num_classes == bundle.p_t.num_classes,
                      "target_loss: shape mismatch");
  if (bundle.q == 0.0) return 0.0;
  double sum = 0.0;
  int64_t count = 0;
  for (int y = 0; y < student_probs.height; ++y) {
    for (int x = 0; x < student_probs.width; ++x) {
      for (int c = 0; c < student_probs.num_classes; ++c) {
        if (bundle.p_t.at(y, x, c) == 1.0) {
          sum -= std::log(std::max(student_probs.at(y, x, c), kProbFloor));
          break;
        }
      }
      ++count;
    }
  }
  return bundle.q * sum / double(count);
}

namespace {

double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

double neg_cosine(const std::vector<double>& p, const std::vector<double>& z) {
  SIAMUDA_CHECK_SHAPE(p.size() == z.size() && !p.empty(),
                      "neg_cosine: sizes " << p.size() << " vs " << z.size());
  const double np = l2_norm(p), nz = l2_norm(z);
  SIAMUDA_CHECK_VALUE(np >= 1e-12 && nz >= 1e-12,
                      "neg_cosine: zero-norm vector (|p|=" << np << ", |z|=" << nz << ")");
  double dot = 0.0;
  for (size_t i = 0; i < p.size(); ++i) dot += p[i] * z[i];
  return -dot / (np * nz);
}

std::vector<double> neg_cosine_grad_p(const std::vector<double>& p, const std::vector<double>& z) {
  const double np = l2_norm(p), nz = l2_norm(z);
  SIAMUDA_CHECK_VALUE(np >= 1e-12 && nz >= 1e-12, "neg_cosine_grad_p: zero-norm vector");
  // d/dp of -(p.z)/(|p||z|) = (-zhat + (phat.zhat) phat) / |p|
  double dot = 0.0;
  for (size_t i = 0; i < p.size(); ++i) dot += p[i] * z[i];
  const double cos = dot / (np * nz);
  std::vector<double> g(p.size());
  for (size_t i = 0; i < p.size(); ++i) g[i] = (-z[i] / nz + cos * p[i] / np) / np;
  return g;
}

double contrastive_loss(const ViewEmbeddings& emb) {
  return 0.5 * neg_cosine(emb.p1, emb.z2) + 0.5 * neg_cosine(emb.p2, emb.z1);
}

void LossWeights::validate() const {
  SIAMUDA_CHECK_VALUE(std::isfinite(beta) && beta >= 0.0, "LossWeights: beta " << beta);
  SIAMUDA_CHECK_VALUE(std::isfinite(gamma) && gamma >= 0.0, "LossWeights: gamma " << gamma);
}

LossBreakdown total_loss(double l_s, double l_t, double l_clr, const LossWeights& weights) {
  weights.validate();
  if (!std::isfinite(l_s)) SIAMUDA_THROW(ValueError, "total_loss: L_S is non-finite: " << l_s);
  if (!std::isfinite(l_t)) SIAMUDA_THROW(ValueError, "total_loss: L_T is non-finite: " << l_t);
  if (!std::isfinite(l_clr))
    SIAMUDA_THROW(ValueError, "total_loss: L_CLR is non-finite: " << l_clr);
  LossBreakdown b;
  b.l_s = l_s;
  b.l_t = l_t;
  b.l_clr = l_clr;
  b.l_total = l_s + weights.beta * l_t + weights.gamma * l_clr;
  return b;
}

CeBatchResult softmax_ce_weighted(const Tensor& logits, const std::vector<const LabelMap*>& labels,
                                  const Tensor* pixel_weights) {
  SIAMUDA_CHECK_SHAPE(logits.ndim() == 4, "softmax_ce_weighted: logits " << logits.shape_str());
  const int c = logits.dim(0), n = logits.dim(1), h = logits.dim(2), w = logits.dim(3);
  SIAMUDA_CHECK_SHAPE(int(labels.size()) == n,
                      "softmax_ce_weighted: " << labels.size() << " label maps for batch " << n);
  if (pixel_weights) {
    SIAMUDA_CHECK_SHAPE(pixel_weights->ndim() == 3 && pixel_weights->dim(0) == n &&
                            pixel_weights->dim(1) == h && pixel_weights->dim(2) == w,
                        "softmax_ce_weighted: weights " << pixel_weights->shape_str());
  }

  CeBatchResult out;
  out.dlogits = Tensor(logits.shape);
  const size_t spatial = size_t(n) * h * w;

  // First pass: count contributing pixels (the normalizer).
  int64_t count = 0;
  for (int b = 0; b < n; ++b) {
    SIAMUDA_CHECK_SHAPE(labels[b]->height == h && labels[b]->width == w,
                        "softmax_ce_weighted: label map " << b << " is " << labels[b]->height
                                                          << "x" << labels[b]->width);
    for (int v : labels[b]->data) {
      if (v != kIgnoreLabel) {
        SIAMUDA_CHECK_VALUE(v >= 0 && v < c, "softmax_ce_weighted: class " << v);
        ++count;
      }
    }
  }
  out.counted = count;
  if (count == 0) return out;

  std::vector<double> col(c);
  double value = 0.0;
  for (int b = 0; b < n; ++b) {
    const LabelMap& lm = *labels[b];
    for (int yy = 0; yy < h; ++yy) {
      for (int xx = 0; xx < w; ++xx) {
        const int cls = lm.at(yy, xx);
        if (cls == kIgnoreLabel) continue;
        const size_t pix = (size_t(b) * h + yy) * w + xx;
        double mx = logits.data[pix];
        for (int ci = 0; ci < c; ++ci) {
          col[ci] = logits.data[size_t(ci) * spatial + pix];
          mx = std::max(mx, col[ci]);
        }
        double sum = 0.0;
        for (int ci = 0; ci < c; ++ci) {
          col[ci] = std::exp(col[ci] - mx);
          sum += col[ci];
        }
        const double wgt =
            pixel_weights ? pixel_weights->data[pix] : 1.0;
        const double scale = wgt / double(count);
        const double p_true = col[cls] / sum;
        value -= wgt * std::log(std::max(p_true, kProbFloor));
        for (int ci = 0; ci < c; ++ci) {
          const double p = col[ci] / sum;
          out.dlogits.data[size_t(ci) * spatial + pix] =
              scale * (p - (ci == cls ? 1.0 : 0.0));
        }
      }
    }
  }
  out.value = value / double(count);
  return out;
}

ContrastiveBatchResult contrastive_batch(const Tensor& p1, const Tensor& z1, const Tensor& p2,
                                         const Tensor& z2) {
  SIAMUDA_CHECK_SHAPE(p1.ndim() == 2 && p1.same_shape(z1) && p1.same_shape(p2) &&
                          p1.same_shape(z2),
                      "contrastive_batch: embedding shapes differ");
  const int d = p1.dim(0), n = p1.dim(1);
  SIAMUDA_CHECK_VALUE(n >= 1, "contrastive_batch: empty batch");

  ContrastiveBatchResult out;
  out.dp1 = Tensor(p1.shape);
  out.dp2 = Tensor(p2.shape);

  auto column = [d, n](const Tensor& t, int col) {
    std::vector<double> v(d);
    for (int i = 0; i < d; ++i) v[i] = t.data[size_t(i) * n + col];
    return v;
  };

  double total = 0.0;
  for (int b = 0; b < n; ++b) {
    const auto p1v = column(p1, b), z2v = column(z2, b);
    const auto p2v = column(p2, b), z1v = column(z1, b);
    total += 0.5 * neg_cosine(p1v, z2v) + 0.5 * neg_cosine(p2v, z1v);
    const auto g1 = neg_cosine_grad_p(p1v, z2v);
    const auto g2 = neg_cosine_grad_p(p2v, z1v);
    const double scale = 0.5 / double(n);
    for (int i = 0; i < d; ++i) {
      out.dp1.data[size_t(i) * n + b] = scale * g1[i];
      out.dp2.data[size_t(i) * n + b] = scale * g2[i];
    }
  }
  out.value = total / double(n);
  return out;
}

}  // namespace siamuda
