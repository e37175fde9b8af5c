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
#include <memory>
#include <string>
#include <vector>

#include "siamuda/core/types.hpp"
#include "siamuda/nn/layers.hpp"

namespace siamuda {

// Student/teacher segmentation network contract. The backbone is the swap
// point: alternative architectures register under new names in
// build_segmentation_network and implement this interface; the trainer and
// the contrastive heads only ever talk to it.
class SegmentationNetwork {
 public:
  virtual ~SegmentationNetwork() = default;

  // image batch (channels,N,H,W) -> logits (C,N,H,W), same spatial size.
  virtual nn::Tensor forward(const nn::Tensor& x, nn::Mode mode) = 0;
  virtual nn::Tensor backward(const nn::Tensor& dlogits) = 0;

  // Contrastive encoder path: pooled last-stage backbone features (D,N).
  virtual nn::Tensor forward_pooled_features(const nn::Tensor& x, nn::Mode mode) = 0;
  virtual void backward_pooled_features(const nn::Tensor& g) = 0;

  virtual int in_channels() const = 0;
  virtual int num_classes() const = 0;
  virtual int feature_dim() const = 0;
  virtual std::string arch_name() const = 0;

  virtual std::vector<nn::Parameter*> backbone_params() = 0;
  virtual std::vector<nn::Parameter*> head_params() = 0;
  virtual std::vector<nn::Buffer*> buffers() = 0;

  std::vector<nn::Parameter*> params();
  std::map<std::string, nn::Tensor> state();  // parameter + buffer values
  void load_state(const std::map<std::string, nn::Tensor>& state);
};

// `tiny` is the only built-in; `mit-b0`..`mit-b5` are reserved plug-in slots
// and raise until an implementation registers them.
std::unique_ptr<SegmentationNetwork> build_segmentation_network(const std::string& arch,
                                                                int in_channels, int num_classes,
                                                                uint64_t init_seed);

struct EmaConfig {
  double alpha = 0.99;
  void validate() const {
    SIAMUDA_CHECK_VALUE(alpha >= 0.0 && alpha <= 1.0, "EmaConfig: alpha " << alpha);
  }
};

// teacher' = alpha * teacher + (1 - alpha) * student for every parameter;
// normalization running stats are copied from the student outright.
// Parameter name sets must match exactly; the error lists the difference.
void ema_update(SegmentationNetwork& teacher, SegmentationNetwork& student,
                const EmaConfig& config);

std::unique_ptr<SegmentationNetwork> init_teacher_from_student(SegmentationNetwork& student);

// Projection + prediction MLPs over the student's pooled backbone features.
// The backbone is the student's own storage, never a copy.
class ContrastiveHeads {
 public:
  struct Dims {
    int proj_hidden = 256;
    int proj_dim = 128;
    int pred_hidden = 64;
  };
  struct ZP {
    nn::Tensor z;  // (proj_dim, N)
    nn::Tensor p;  // (proj_dim, N)
  };

  ContrastiveHeads(SegmentationNetwork* shared_student, Dims dims, uint64_t init_seed);

  // views (channels,N,H,W) -> projection z and prediction p.
  ZP forward(const nn::Tensor& views, nn::Mode mode);
  // dz carries gradient flowing into z directly (zero under stop-gradient);
  // dp flows through the prediction head into z as usual.
  void backward(const nn::Tensor& dp, const nn::Tensor& dz);

  std::vector<nn::Parameter*> params();  // heads only
  std::vector<nn::Buffer*> buffers();
  int proj_dim() const { return dims_.proj_dim; }

  // Exposed so tests can construct special weight patterns.
  nn::Linear& proj_layer(int i);
  nn::Linear& pred_layer(int i);

 private:
  SegmentationNetwork* student_;
  Dims dims_;
  std::vector<nn::Linear> proj_linears_;
  std::vector<nn::BatchNorm> proj_norms_;
  std::vector<nn::ReLU> proj_relus_;
  std::vector<nn::Linear> pred_linears_;
  std::vector<nn::BatchNorm> pred_norms_;
  std::vector<nn::ReLU> pred_relus_;
};

// Embedding vectors for one view pair (single sample).
struct ViewEmbeddings {
  std::vector<double> p1, p2, z1, z2;
};

// Single-image convenience wrappers over the batch paths.
ProbabilityField forward_segmentation(SegmentationNetwork& net, const Image& image);
nn::Tensor image_to_tensor(const Image& image);
nn::Tensor images_to_tensor(const std::vector<const Image*>& images);

}  // namespace siamuda
