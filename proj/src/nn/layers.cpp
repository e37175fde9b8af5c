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

#include "siamuda/nn/layers.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace siamuda::nn {

using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

namespace {

void kaiming_init(Tensor& w, int fan_in, Rng& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  for (double& v : w.data) v = dist(rng);
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(std::string name, int cin, int cout, int kernel, int stride, int pad,
               bool with_bias)
    : cin_(cin),
      cout_(cout),
      kernel_(kernel),
      stride_(stride),
      pad_(pad),
      with_bias_(with_bias),
      pointwise_(kernel == 1 && stride == 1 && pad == 0) {
  SIAMUDA_CHECK_VALUE(cin >= 1 && cout >= 1 && kernel >= 1 && stride >= 1 && pad >= 0,
                      "Conv2d " << name << ": bad geometry");
  weight.name = name + ".weight";
  weight.value = Tensor({cout, cin * kernel * kernel});
  weight.grad = Tensor(weight.value.shape);
  if (with_bias_) {
    bias.name = name + ".bias";
    bias.value = Tensor({cout});
    bias.grad = Tensor({cout});
  }
}

void Conv2d::init(Rng& rng) {
  kaiming_init(weight.value, cin_ * kernel_ * kernel_, rng);
  if (with_bias_) bias.value.fill(0.0);
}

Tensor Conv2d::forward(const Tensor& x, Mode mode) {
  SIAMUDA_CHECK_SHAPE(x.ndim() == 4 && x.dim(0) == cin_,
                      "Conv2d " << weight.name << ": input " << x.shape_str() << " wants "
                                << cin_ << " channels");
  const int n = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int ho = (h + 2 * pad_ - kernel_) / stride_ + 1;
  const int wo = (w + 2 * pad_ - kernel_) / stride_ + 1;
  SIAMUDA_CHECK_SHAPE(ho >= 1 && wo >= 1,
                      "Conv2d " << weight.name << ": input " << x.shape_str()
                                << " smaller than kernel");

  const int rows = cin_ * kernel_ * kernel_;
  const size_t cols_n = size_t(n) * ho * wo;

  Tensor cols;
  const double* cols_ptr;
  if (pointwise_) {
    cols_ptr = x.ptr();  // (Cin, N*H*W) view, no copy for the GEMM
  } else {
    cols = Tensor({rows, int(cols_n)});
    double* cp = cols.ptr();
    for (int ci = 0; ci < cin_; ++ci) {
      const double* xc = x.ptr() + size_t(ci) * n * h * w;
      for (int u = 0; u < kernel_; ++u) {
        for (int v = 0; v < kernel_; ++v) {
          double* row = cp + (size_t(ci) * kernel_ * kernel_ + size_t(u) * kernel_ + v) * cols_n;
          for (int b = 0; b < n; ++b) {
            const double* xb = xc + size_t(b) * h * w;
            for (int oy = 0; oy < ho; ++oy) {
              const int iy = oy * stride_ + u - pad_;
              double* out = row + (size_t(b) * ho + oy) * wo;
              if (iy < 0 || iy >= h) {
                std::fill(out, out + wo, 0.0);
                continue;
              }
              const double* xr = xb + size_t(iy) * w;
              for (int ox = 0; ox < wo; ++ox) {
                const int ix = ox * stride_ + v - pad_;
                out[ox] = (ix >= 0 && ix < w) ? xr[ix] : 0.0;
              }
            }
          }
        }
      }
    }
    cols_ptr = cols.ptr();
  }

  Tensor y({cout_, n, ho, wo});
  MatMap ym(y.ptr(), cout_, cols_n);
  ConstMatMap wm(weight.value.ptr(), cout_, rows);
  ConstMatMap km(cols_ptr, rows, cols_n);
  ym.noalias() = wm * km;
  if (with_bias_) {
    for (int co = 0; co < cout_; ++co) ym.row(co).array() += bias.value.data[co];
  }

  if (mode == Mode::kTrain) {
    Ctx ctx;
    ctx.cols = pointwise_ ? x : std::move(cols);
    ctx.n = n;
    ctx.h = h;
    ctx.w = w;
    ctx.ho = ho;
    ctx.wo = wo;
    stack_.push_back(std::move(ctx));
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& gy) {
  SIAMUDA_CHECK(!stack_.empty(), "Conv2d " << weight.name << ": backward without forward");
  Ctx ctx = std::move(stack_.back());
  stack_.pop_back();

  const int rows = cin_ * kernel_ * kernel_;
  const size_t cols_n = size_t(ctx.n) * ctx.ho * ctx.wo;
  SIAMUDA_CHECK_SHAPE(gy.numel() == size_t(cout_) * cols_n,
                      "Conv2d " << weight.name << ": grad shape " << gy.shape_str());

  ConstMatMap gym(gy.ptr(), cout_, cols_n);
  ConstMatMap km(ctx.cols.ptr(), rows, cols_n);
  MatMap dwm(weight.grad.ptr(), cout_, rows);
  dwm.noalias() += gym * km.transpose();
  weight.touched = true;
  if (with_bias_) {
    // Scalar accumulation: Eigen's vectorized redux orders terms by the
    // heap address's alignment, which would break bitwise reproducibility.
    for (int co = 0; co < cout_; ++co) {
      const double* g = gy.ptr() + size_t(co) * cols_n;
      double s = 0.0;
      for (size_t i = 0; i < cols_n; ++i) s += g[i];
      bias.grad.data[co] += s;
    }
    bias.touched = true;
  }

  Tensor dx({cin_, ctx.n, ctx.h, ctx.w});
  if (pointwise_) {
    MatMap dxm(dx.ptr(), cin_, cols_n);
    ConstMatMap wm(weight.value.ptr(), cout_, rows);
    dxm.noalias() = wm.transpose() * gym;
    return dx;
  }

  Tensor dcols({rows, int(cols_n)});
  MatMap dkm(dcols.ptr(), rows, cols_n);
  ConstMatMap wm(weight.value.ptr(), cout_, rows);
  dkm.noalias() = wm.transpose() * gym;

  // col2im scatter-add, mirroring the gather above.
  const double* cp = dcols.ptr();
  for (int ci = 0; ci < cin_; ++ci) {
    double* xc = dx.ptr() + size_t(ci) * ctx.n * ctx.h * ctx.w;
    for (int u = 0; u < kernel_; ++u) {
      for (int v = 0; v < kernel_; ++v) {
        const double* row =
            cp + (size_t(ci) * kernel_ * kernel_ + size_t(u) * kernel_ + v) * cols_n;
        for (int b = 0; b < ctx.n; ++b) {
          double* xb = xc + size_t(b) * ctx.h * ctx.w;
          for (int oy = 0; oy < ctx.ho; ++oy) {
            const int iy = oy * stride_ + u - pad_;
            if (iy < 0 || iy >= ctx.h) continue;
            const double* grow = row + (size_t(b) * ctx.ho + oy) * ctx.wo;
            double* xr = xb + size_t(iy) * ctx.w;
            for (int ox = 0; ox < ctx.wo; ++ox) {
              const int ix = ox * stride_ + v - pad_;
              if (ix >= 0 && ix < ctx.w) xr[ix] += grow[ox];
            }
          }
        }
      }
    }
  }
  return dx;
}

std::vector<Parameter*> Conv2d::params() {
  std::vector<Parameter*> ps{&weight};
  if (with_bias_) ps.push_back(&bias);
  return ps;
}

// ---------------------------------------------------------------------------
// GroupNorm

GroupNorm::GroupNorm(std::string name, int features, int groups, double eps)
    : features_(features), groups_(groups), eps_(eps) {
  SIAMUDA_CHECK_VALUE(groups >= 1 && features % groups == 0,
                      "GroupNorm " << name << ": " << features << " channels not divisible into "
                                   << groups << " groups");
  gamma.name = name + ".gamma";
  gamma.value = Tensor({features});
  gamma.value.fill(1.0);
  gamma.grad = Tensor({features});
  beta.name = name + ".beta";
  beta.value = Tensor({features});
  beta.grad = Tensor({features});
}

Tensor GroupNorm::forward(const Tensor& x, Mode) {
  SIAMUDA_CHECK_SHAPE(x.ndim() >= 2 && x.dim(0) == features_,
                      "GroupNorm " << gamma.name << ": input " << x.shape_str() << " wants "
                                   << features_ << " channel rows");
  const int batch = x.dim(1);
  const size_t spatial = x.numel() / (size_t(features_) * batch);
  const int per_group = features_ / groups_;
  const size_t m = size_t(per_group) * spatial;

  Ctx ctx;
  ctx.xhat = Tensor(x.shape);
  ctx.inv_sigma.resize(size_t(batch) * groups_);
  Tensor y(x.shape);
  for (int n = 0; n < batch; ++n) {
    for (int g = 0; g < groups_; ++g) {
      double mean = 0.0;
      for (int c = g * per_group; c < (g + 1) * per_group; ++c) {
        const double* xr = x.ptr() + (size_t(c) * batch + n) * spatial;
        for (size_t i = 0; i < spatial; ++i) mean += xr[i];
      }
      mean /= double(m);
      double var = 0.0;
      for (int c = g * per_group; c < (g + 1) * per_group; ++c) {
        const double* xr = x.ptr() + (size_t(c) * batch + n) * spatial;
        for (size_t i = 0; i < spatial; ++i) {
          const double d = xr[i] - mean;
          var += d * d;
        }
      }
      var /= double(m);  // biased, matches the backward below
      const double inv_sigma = 1.0 / std::sqrt(var + eps_);
      ctx.inv_sigma[size_t(n) * groups_ + g] = inv_sigma;
      for (int c = g * per_group; c < (g + 1) * per_group; ++c) {
        const size_t off = (size_t(c) * batch + n) * spatial;
        const double* xr = x.ptr() + off;
        double* xh = ctx.xhat.ptr() + off;
        double* yr = y.ptr() + off;
        const double gm = gamma.value.data[c], bt = beta.value.data[c];
        for (size_t i = 0; i < spatial; ++i) {
          xh[i] = (xr[i] - mean) * inv_sigma;
          yr[i] = gm * xh[i] + bt;
        }
      }
    }
  }
  stack_.push_back(std::move(ctx));
  return y;
}

Tensor GroupNorm::backward(const Tensor& gy) {
  SIAMUDA_CHECK(!stack_.empty(), "GroupNorm " << gamma.name << ": backward without forward");
  Ctx ctx = std::move(stack_.back());
  stack_.pop_back();
  SIAMUDA_CHECK_SHAPE(gy.same_shape(ctx.xhat),
                      "GroupNorm " << gamma.name << ": grad shape " << gy.shape_str());

  const int batch = ctx.xhat.dim(1);
  const size_t spatial = ctx.xhat.numel() / (size_t(features_) * batch);
  const int per_group = features_ / groups_;
  const size_t m = size_t(per_group) * spatial;

  Tensor dx(gy.shape);
  for (int n = 0; n < batch; ++n) {
    for (int g = 0; g < groups_; ++g) {
      // dxhat = gy * gamma_c varies per channel inside the group, so the two
      // group means are taken over dxhat, not gy.
      double sum_d = 0.0, sum_dx = 0.0;
      for (int c = g * per_group; c < (g + 1) * per_group; ++c) {
        const size_t off = (size_t(c) * batch + n) * spatial;
        const double* gr = gy.ptr() + off;
        const double* xh = ctx.xhat.ptr() + off;
        const double gm = gamma.value.data[c];
        for (size_t i = 0; i < spatial; ++i) {
          sum_d += gm * gr[i];
          sum_dx += gm * gr[i] * xh[i];
        }
      }
      const double mean_d = sum_d / double(m);
      const double mean_dx = sum_dx / double(m);
      const double inv_sigma = ctx.inv_sigma[size_t(n) * groups_ + g];
      for (int c = g * per_group; c < (g + 1) * per_group; ++c) {
        const size_t off = (size_t(c) * batch + n) * spatial;
        const double* gr = gy.ptr() + off;
        const double* xh = ctx.xhat.ptr() + off;
        double* d = dx.ptr() + off;
        const double gm = gamma.value.data[c];
        double sum_g = 0.0, sum_gx = 0.0;
        for (size_t i = 0; i < spatial; ++i) {
          d[i] = inv_sigma * (gm * gr[i] - mean_d - xh[i] * mean_dx);
          sum_g += gr[i];
          sum_gx += gr[i] * xh[i];
        }
        gamma.grad.data[c] += sum_gx;
        beta.grad.data[c] += sum_g;
      }
    }
  }
  gamma.touched = true;
  beta.touched = true;
  return dx;
}

std::vector<Parameter*> GroupNorm::params() { return {&gamma, &beta}; }

// ---------------------------------------------------------------------------
// BatchNorm

BatchNorm::BatchNorm(std::string name, int features, double momentum, double eps)
    : features_(features), momentum_(momentum), eps_(eps) {
  gamma.name = name + ".gamma";
  gamma.value = Tensor({features});
  gamma.value.fill(1.0);
  gamma.grad = Tensor({features});
  beta.name = name + ".beta";
  beta.value = Tensor({features});
  beta.grad = Tensor({features});
  running_mean.name = name + ".running_mean";
  running_mean.value = Tensor({features});
  running_var.name = name + ".running_var";
  running_var.value = Tensor({features});
  running_var.value.fill(1.0);
}

Tensor BatchNorm::forward(const Tensor& x, Mode mode) {
  SIAMUDA_CHECK_SHAPE(x.ndim() >= 2 && x.dim(0) == features_,
                      "BatchNorm " << gamma.name << ": input " << x.shape_str() << " wants "
                                   << features_ << " feature rows");
  const size_t m = x.numel() / features_;
  Tensor y(x.shape);

  if (mode == Mode::kEval) {
    for (int f = 0; f < features_; ++f) {
      const double scale = gamma.value.data[f] / std::sqrt(running_var.value.data[f] + eps_);
      const double shift = beta.value.data[f] - scale * running_mean.value.data[f];
      const double* xr = x.ptr() + size_t(f) * m;
      double* yr = y.ptr() + size_t(f) * m;
      for (size_t i = 0; i < m; ++i) yr[i] = scale * xr[i] + shift;
    }
    return y;
  }

  SIAMUDA_CHECK_VALUE(m >= 2, "BatchNorm " << gamma.name << ": needs >= 2 samples per feature");
  Ctx ctx;
  ctx.xhat = Tensor(x.shape);
  ctx.inv_sigma.resize(features_);
  for (int f = 0; f < features_; ++f) {
    const double* xr = x.ptr() + size_t(f) * m;
    double mean = 0.0;
    for (size_t i = 0; i < m; ++i) mean += xr[i];
    mean /= double(m);
    double var = 0.0;
    for (size_t i = 0; i < m; ++i) {
      const double d = xr[i] - mean;
      var += d * d;
    }
    var /= double(m);  // biased, matches the backward below
    const double inv_sigma = 1.0 / std::sqrt(var + eps_);
    ctx.inv_sigma[f] = inv_sigma;

    double* xh = ctx.xhat.ptr() + size_t(f) * m;
    double* yr = y.ptr() + size_t(f) * m;
    const double g = gamma.value.data[f], b = beta.value.data[f];
    for (size_t i = 0; i < m; ++i) {
      xh[i] = (xr[i] - mean) * inv_sigma;
      yr[i] = g * xh[i] + b;
    }

    // Running stats track the unbiased batch variance.
    const double unbiased = var * double(m) / double(m - 1);
    running_mean.value.data[f] = (1.0 - momentum_) * running_mean.value.data[f] + momentum_ * mean;
    running_var.value.data[f] =
        (1.0 - momentum_) * running_var.value.data[f] + momentum_ * unbiased;
  }
  stack_.push_back(std::move(ctx));
  return y;
}

Tensor BatchNorm::backward(const Tensor& gy) {
  SIAMUDA_CHECK(!stack_.empty(), "BatchNorm " << gamma.name << ": backward without forward");
  Ctx ctx = std::move(stack_.back());
  stack_.pop_back();
  SIAMUDA_CHECK_SHAPE(gy.same_shape(ctx.xhat),
                      "BatchNorm " << gamma.name << ": grad shape " << gy.shape_str());

  const size_t m = gy.numel() / features_;
  Tensor dx(gy.shape);
  for (int f = 0; f < features_; ++f) {
    const double* g = gy.ptr() + size_t(f) * m;
    const double* xh = ctx.xhat.ptr() + size_t(f) * m;
    double sum_g = 0.0, sum_gx = 0.0;
    for (size_t i = 0; i < m; ++i) {
      sum_g += g[i];
      sum_gx += g[i] * xh[i];
    }
    gamma.grad.data[f] += sum_gx;
    beta.grad.data[f] += sum_g;

    const double k = gamma.value.data[f] * ctx.inv_sigma[f];
    const double mean_g = sum_g / double(m);
    const double mean_gx = sum_gx / double(m);
    double* d = dx.ptr() + size_t(f) * m;
    for (size_t i = 0; i < m; ++i) d[i] = k * (g[i] - mean_g - xh[i] * mean_gx);
  }
  gamma.touched = true;
  beta.touched = true;
  return dx;
}

std::vector<Parameter*> BatchNorm::params() { return {&gamma, &beta}; }
std::vector<Buffer*> BatchNorm::buffers() { return {&running_mean, &running_var}; }

// ---------------------------------------------------------------------------
// ReLU

Tensor ReLU::forward(const Tensor& x, Mode mode) {
  Tensor y(x.shape);
  std::vector<uint8_t> mask;
  if (mode == Mode::kTrain) mask.resize(x.numel());
  for (size_t i = 0; i < x.numel(); ++i) {
    const bool pos = x.data[i] > 0.0;
    y.data[i] = pos ? x.data[i] : 0.0;
    if (mode == Mode::kTrain) mask[i] = pos;
  }
  if (mode == Mode::kTrain) stack_.push_back(std::move(mask));
  return y;
}

Tensor ReLU::backward(const Tensor& gy) {
  SIAMUDA_CHECK(!stack_.empty(), "ReLU: backward without forward");
  std::vector<uint8_t> mask = std::move(stack_.back());
  stack_.pop_back();
  SIAMUDA_CHECK_SHAPE(gy.numel() == mask.size(), "ReLU: grad size mismatch");
  Tensor dx(gy.shape);
  for (size_t i = 0; i < mask.size(); ++i) dx.data[i] = mask[i] ? gy.data[i] : 0.0;
  return dx;
}

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(std::string name, int din, int dout, bool with_bias)
    : din_(din), dout_(dout), with_bias_(with_bias) {
  SIAMUDA_CHECK_VALUE(din >= 1 && dout >= 1, "Linear " << name << ": bad dims");
  weight.name = name + ".weight";
  weight.value = Tensor({dout, din});
  weight.grad = Tensor({dout, din});
  if (with_bias_) {
    bias.name = name + ".bias";
    bias.value = Tensor({dout});
    bias.grad = Tensor({dout});
  }
}

void Linear::init(Rng& rng) {
  kaiming_init(weight.value, din_, rng);
  if (with_bias_) bias.value.fill(0.0);
}

Tensor Linear::forward(const Tensor& x, Mode mode) {
  SIAMUDA_CHECK_SHAPE(x.ndim() == 2 && x.dim(0) == din_,
                      "Linear " << weight.name << ": input " << x.shape_str() << " wants ("
                                << din_ << ",N)");
  const int n = x.dim(1);
  Tensor y({dout_, n});
  MatMap ym(y.ptr(), dout_, n);
  ConstMatMap wm(weight.value.ptr(), dout_, din_);
  ConstMatMap xm(x.ptr(), din_, n);
  ym.noalias() = wm * xm;
  if (with_bias_) {
    for (int r = 0; r < dout_; ++r) ym.row(r).array() += bias.value.data[r];
  }
  if (mode == Mode::kTrain) stack_.push_back(x);
  return y;
}

Tensor Linear::backward(const Tensor& gy) {
  SIAMUDA_CHECK(!stack_.empty(), "Linear " << weight.name << ": backward without forward");
  Tensor x = std::move(stack_.back());
  stack_.pop_back();
  const int n = x.dim(1);
  SIAMUDA_CHECK_SHAPE(gy.ndim() == 2 && gy.dim(0) == dout_ && gy.dim(1) == n,
                      "Linear " << weight.name << ": grad shape " << gy.shape_str());

  ConstMatMap gym(gy.ptr(), dout_, n);
  ConstMatMap xm(x.ptr(), din_, n);
  MatMap dwm(weight.grad.ptr(), dout_, din_);
  dwm.noalias() += gym * xm.transpose();
  weight.touched = true;
  if (with_bias_) {
    // Scalar accumulation; see the Conv2d bias gradient for why.
    for (int r = 0; r < dout_; ++r) {
      const double* g = gy.ptr() + size_t(r) * size_t(n);
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += g[i];
      bias.grad.data[r] += s;
    }
    bias.touched = true;
  }

  Tensor dx({din_, n});
  MatMap dxm(dx.ptr(), din_, n);
  ConstMatMap wm(weight.value.ptr(), dout_, din_);
  dxm.noalias() = wm.transpose() * gym;
  return dx;
}

std::vector<Parameter*> Linear::params() {
  std::vector<Parameter*> ps{&weight};
  if (with_bias_) ps.push_back(&bias);
  return ps;
}

// ---------------------------------------------------------------------------
// GlobalAvgPool

Tensor GlobalAvgPool::forward(const Tensor& x, Mode mode) {
  SIAMUDA_CHECK_SHAPE(x.ndim() == 4, "GlobalAvgPool: input " << x.shape_str());
  const int c = x.dim(0), n = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor y({c, n});
  const size_t hw = size_t(h) * w;
  for (int ci = 0; ci < c; ++ci) {
    for (int b = 0; b < n; ++b) {
      const double* p = x.ptr() + (size_t(ci) * n + b) * hw;
      double s = 0.0;
      for (size_t i = 0; i < hw; ++i) s += p[i];
      y.data[size_t(ci) * n + b] = s / double(hw);
    }
  }
  if (mode == Mode::kTrain) stack_.push_back({h, w});
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& gy) {
  SIAMUDA_CHECK(!stack_.empty(), "GlobalAvgPool: backward without forward");
  Ctx ctx = stack_.back();
  stack_.pop_back();
  const int c = gy.dim(0), n = gy.dim(1);
  Tensor dx({c, n, ctx.h, ctx.w});
  const size_t hw = size_t(ctx.h) * ctx.w;
  for (int ci = 0; ci < c; ++ci) {
    for (int b = 0; b < n; ++b) {
      const double g = gy.data[size_t(ci) * n + b] / double(hw);
      double* p = dx.ptr() + (size_t(ci) * n + b) * hw;
      for (size_t i = 0; i < hw; ++i) p[i] = g;
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// BilinearResize

std::vector<LinearTap> make_linear_taps(int in_size, int out_size) {
  std::vector<LinearTap> taps(out_size);
  for (int o = 0; o < out_size; ++o) {
    const double src = (o + 0.5) * double(in_size) / double(out_size) - 0.5;
    const int i0f = int(std::floor(src));
    double w1 = src - i0f;
    int i0 = i0f, i1 = i0f + 1;
    if (i0 < 0) {
      i0 = 0;
      i1 = 0;
      w1 = 0.0;
    }
    if (i1 > in_size - 1) {
      i1 = in_size - 1;
      if (i0 > in_size - 1) i0 = in_size - 1;
      if (i0 == i1) w1 = 0.0;
    }
    taps[o] = {i0, i1, w1};
  }
  return taps;
}

Tensor BilinearResize::forward(const Tensor& x, int out_h, int out_w, Mode mode) {
  SIAMUDA_CHECK_SHAPE(x.ndim() == 4, "BilinearResize: input " << x.shape_str());
  SIAMUDA_CHECK_VALUE(out_h >= 1 && out_w >= 1, "BilinearResize: bad target size");
  const int c = x.dim(0), n = x.dim(1), h = x.dim(2), w = x.dim(3);
  const auto ty = make_linear_taps(h, out_h);
  const auto tx = make_linear_taps(w, out_w);

  Tensor y({c, n, out_h, out_w});
  const size_t planes = size_t(c) * n;
  for (size_t pl = 0; pl < planes; ++pl) {
    const double* xp = x.ptr() + pl * h * w;
    double* yp = y.ptr() + pl * size_t(out_h) * out_w;
    for (int oy = 0; oy < out_h; ++oy) {
      const LinearTap& a = ty[oy];
      const double* r0 = xp + size_t(a.i0) * w;
      const double* r1 = xp + size_t(a.i1) * w;
      double* out = yp + size_t(oy) * out_w;
      for (int ox = 0; ox < out_w; ++ox) {
        const LinearTap& b = tx[ox];
        const double top = r0[b.i0] * (1.0 - b.w1) + r0[b.i1] * b.w1;
        const double bot = r1[b.i0] * (1.0 - b.w1) + r1[b.i1] * b.w1;
        out[ox] = top * (1.0 - a.w1) + bot * a.w1;
      }
    }
  }
  if (mode == Mode::kTrain) stack_.push_back({h, w, out_h, out_w});
  return y;
}

Tensor BilinearResize::backward(const Tensor& gy) {
  SIAMUDA_CHECK(!stack_.empty(), "BilinearResize: backward without forward");
  Ctx ctx = stack_.back();
  stack_.pop_back();
  const int c = gy.dim(0), n = gy.dim(1);
  SIAMUDA_CHECK_SHAPE(gy.dim(2) == ctx.oh && gy.dim(3) == ctx.ow,
                      "BilinearResize: grad shape " << gy.shape_str());
  const auto ty = make_linear_taps(ctx.h, ctx.oh);
  const auto tx = make_linear_taps(ctx.w, ctx.ow);

  Tensor dx({c, n, ctx.h, ctx.w});
  const size_t planes = size_t(c) * n;
  for (size_t pl = 0; pl < planes; ++pl) {
    const double* gp = gy.ptr() + pl * size_t(ctx.oh) * ctx.ow;
    double* xp = dx.ptr() + pl * size_t(ctx.h) * ctx.w;
    for (int oy = 0; oy < ctx.oh; ++oy) {
      const LinearTap& a = ty[oy];
      for (int ox = 0; ox < ctx.ow; ++ox) {
        const LinearTap& b = tx[ox];
        const double g = gp[size_t(oy) * ctx.ow + ox];
        xp[size_t(a.i0) * ctx.w + b.i0] += g * (1.0 - a.w1) * (1.0 - b.w1);
        xp[size_t(a.i0) * ctx.w + b.i1] += g * (1.0 - a.w1) * b.w1;
        xp[size_t(a.i1) * ctx.w + b.i0] += g * a.w1 * (1.0 - b.w1);
        xp[size_t(a.i1) * ctx.w + b.i1] += g * a.w1 * b.w1;
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// ChannelConcat

Tensor ChannelConcat::forward(const std::vector<const Tensor*>& xs, Mode mode) {
  SIAMUDA_CHECK_VALUE(!xs.empty(), "ChannelConcat: no inputs");
  const int n = xs[0]->dim(1), h = xs[0]->dim(2), w = xs[0]->dim(3);
  int total_c = 0;
  Ctx ctx;
  ctx.n = n;
  ctx.h = h;
  ctx.w = w;
  for (const Tensor* x : xs) {
    SIAMUDA_CHECK_SHAPE(x->ndim() == 4 && x->dim(1) == n && x->dim(2) == h && x->dim(3) == w,
                        "ChannelConcat: inconsistent input " << x->shape_str());
    ctx.channels.push_back(x->dim(0));
    total_c += x->dim(0);
  }
  Tensor y({total_c, n, h, w});
  double* out = y.ptr();
  for (const Tensor* x : xs) {
    std::copy(x->data.begin(), x->data.end(), out);
    out += x->numel();
  }
  if (mode == Mode::kTrain) stack_.push_back(std::move(ctx));
  return y;
}

std::vector<Tensor> ChannelConcat::backward(const Tensor& gy) {
  SIAMUDA_CHECK(!stack_.empty(), "ChannelConcat: backward without forward");
  Ctx ctx = std::move(stack_.back());
  stack_.pop_back();
  std::vector<Tensor> grads;
  const double* in = gy.ptr();
  for (int c : ctx.channels) {
    Tensor g({c, ctx.n, ctx.h, ctx.w});
    std::copy(in, in + g.numel(), g.ptr());
    in += g.numel();
    grads.push_back(std::move(g));
  }
  return grads;
}

// ---------------------------------------------------------------------------
// softmax

Tensor softmax_channels(const Tensor& logits) {
  SIAMUDA_CHECK_SHAPE(logits.ndim() == 4, "softmax_channels: input " << logits.shape_str());
  const int c = logits.dim(0), n = logits.dim(1), h = logits.dim(2), w = logits.dim(3);
  const size_t spatial = size_t(n) * h * w;
  Tensor probs(logits.shape);
  std::vector<double> col(c);
  for (size_t i = 0; i < spatial; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int ci = 0; ci < c; ++ci) {
      col[ci] = logits.data[size_t(ci) * spatial + i];
      mx = std::max(mx, col[ci]);
    }
    double sum = 0.0;
    for (int ci = 0; ci < c; ++ci) {
      col[ci] = std::exp(col[ci] - mx);
      sum += col[ci];
    }
    for (int ci = 0; ci < c; ++ci) probs.data[size_t(ci) * spatial + i] = col[ci] / sum;
  }
  return probs;
}

}  // namespace siamuda::nn
