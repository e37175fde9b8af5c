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

#include "siamuda/core/rng.hpp"
#include "siamuda/nn/tensor.hpp"

namespace siamuda::nn {

// Explicit forward/backward layers. Every layer keeps a LIFO stack of saved
// forward contexts so several branches may pass through shared layers before
// any backward runs; backwards must then be issued in reverse forward order.
// Gradients accumulate (+=) into Parameter::grad until zero_grad.

enum class Mode { kTrain, kEval };

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  // Set by any backward that accumulated into grad this step; the optimizer
  // skips untouched parameters entirely (no decay, no state advance).
  bool touched = false;

  void zero_grad() {
    grad.fill(0.0);
    touched = false;
  }
};

struct Buffer {
  std::string name;
  Tensor value;
};

class Conv2d {
 public:
  // x (Cin,N,H,W) -> y (Cout,N,Ho,Wo); square kernel, zero padding.
  Conv2d(std::string name, int cin, int cout, int kernel, int stride, int pad,
         bool with_bias = true);

  void init(Rng& rng);  // kaiming-normal weight, zero bias
  Tensor forward(const Tensor& x, Mode mode);
  Tensor backward(const Tensor& gy);
  std::vector<Parameter*> params();

  Parameter weight;  // (Cout, Cin*k*k)
  Parameter bias;    // (Cout)

 private:
  struct Ctx {
    Tensor cols;  // im2col matrix, or the raw input for the 1x1 fast path
    int n, h, w, ho, wo;
  };
  int cin_, cout_, kernel_, stride_, pad_;
  bool with_bias_;
  bool pointwise_;  // k=1, s=1, p=0: skip im2col
  std::vector<Ctx> stack_;
};

// Normalizes each (sample, channel group) slab independently, so statistics
// never couple samples. Mode-independent: train and eval compute identically
// and there are no running buffers. Input is (C,N,...) in the CNHW layout.
class GroupNorm {
 public:
  GroupNorm(std::string name, int features, int groups, double eps = 1e-5);

  Tensor forward(const Tensor& x, Mode mode);
  Tensor backward(const Tensor& gy);
  std::vector<Parameter*> params();

  Parameter gamma, beta;  // per channel

 private:
  struct Ctx {
    Tensor xhat;
    std::vector<double> inv_sigma;  // one per (sample, group)
  };
  int features_, groups_;
  double eps_;
  std::vector<Ctx> stack_;
};

// Normalizes each of F feature rows over its M remaining elements. Covers
// both the 2-d case (F=C, M=N*H*W, contiguous in the CNHW layout) and the
// 1-d case (F=D, M=N).
class BatchNorm {
 public:
  BatchNorm(std::string name, int features, double momentum = 0.1, double eps = 1e-5);

  Tensor forward(const Tensor& x, Mode mode);
  Tensor backward(const Tensor& gy);
  std::vector<Parameter*> params();
  std::vector<Buffer*> buffers();

  Parameter gamma, beta;
  Buffer running_mean, running_var;

 private:
  struct Ctx {
    Tensor xhat;
    std::vector<double> inv_sigma;
  };
  int features_;
  double momentum_, eps_;
  std::vector<Ctx> stack_;
};

class ReLU {
 public:
  Tensor forward(const Tensor& x, Mode mode);
  Tensor backward(const Tensor& gy);

 private:
  std::vector<std::vector<uint8_t>> stack_;
};

class Linear {
 public:
  // x (Din,N) -> y (Dout,N)
  Linear(std::string name, int din, int dout, bool with_bias = true);

  void init(Rng& rng);
  Tensor forward(const Tensor& x, Mode mode);
  Tensor backward(const Tensor& gy);
  std::vector<Parameter*> params();

  Parameter weight;  // (Dout, Din)
  Parameter bias;    // (Dout)

 private:
  int din_, dout_;
  bool with_bias_;
  std::vector<Tensor> stack_;  // saved inputs
};

// (C,N,H,W) -> (C,N) spatial mean.
class GlobalAvgPool {
 public:
  Tensor forward(const Tensor& x, Mode mode);
  Tensor backward(const Tensor& gy);

 private:
  struct Ctx {
    int h, w;
  };
  std::vector<Ctx> stack_;
};

// Bilinear interpolation to a caller-chosen size (half-pixel centers, edge
// replication at the border). The linear map is fixed by (in, out) sizes, so
// backward is its exact transpose.
class BilinearResize {
 public:
  Tensor forward(const Tensor& x, int out_h, int out_w, Mode mode);
  Tensor backward(const Tensor& gy);

 private:
  struct Ctx {
    int h, w, oh, ow;
  };
  std::vector<Ctx> stack_;
};

// Channel concatenation of same-(N,H,W) tensors; contiguous block copy in
// the CNHW layout.
class ChannelConcat {
 public:
  Tensor forward(const std::vector<const Tensor*>& xs, Mode mode);
  std::vector<Tensor> backward(const Tensor& gy);

 private:
  struct Ctx {
    std::vector<int> channels;
    int n, h, w;
  };
  std::vector<Ctx> stack_;
};

// Per-position softmax over the channel axis of (C,N,H,W); pure function,
// no saved context (losses differentiate through logits directly).
Tensor softmax_channels(const Tensor& logits);

// Resize helper used by interpolation: source coordinate tables.
struct LinearTap {
  int i0, i1;
  double w1;  // weight of i1; i0 gets 1-w1
};
std::vector<LinearTap> make_linear_taps(int in_size, int out_size);

}  // namespace siamuda::nn
