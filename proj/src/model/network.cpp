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

#include "siamuda/model/network.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace siamuda {

using nn::Buffer;
using nn::Mode;
using nn::Parameter;
using nn::Tensor;

namespace {

// conv (no bias) + group norm + relu, the only block the tiny net uses.
// Per-sample normalization keeps every image's forward independent of the
// rest of its batch, so mixed-domain batches cannot skew the statistics a
// single-domain image is normalized under.
struct ConvNormRelu {
  nn::Conv2d conv;
  nn::GroupNorm norm;
  nn::ReLU relu;

  ConvNormRelu(const std::string& name, int cin, int cout, int kernel, int stride, int pad,
               int groups)
      : conv(name + ".conv", cin, cout, kernel, stride, pad, /*with_bias=*/false),
        norm(name + ".norm", cout, groups) {}

  void init(Rng& rng) { conv.init(rng); }
  Tensor forward(const Tensor& x, Mode mode) {
    return relu.forward(norm.forward(conv.forward(x, mode), mode), mode);
  }
  Tensor backward(const Tensor& g) { return conv.backward(norm.backward(relu.backward(g))); }
  void collect(std::vector<Parameter*>& ps) {
    for (Parameter* p : conv.params()) ps.push_back(p);
    for (Parameter* p : norm.params()) ps.push_back(p);
  }
};

constexpr int kStageChannels[5] = {12, 16, 24, 32, 48};  // b1..b5 outputs
constexpr int kEmbedDim = 16;
constexpr int kNormGroups = 4;  // divides every width above

}  // namespace

// ---------------------------------------------------------------------------
// SegmentationNetwork shared plumbing

std::vector<Parameter*> SegmentationNetwork::params() {
  std::vector<Parameter*> ps = backbone_params();
  for (Parameter* p : head_params()) ps.push_back(p);
  return ps;
}

std::map<std::string, Tensor> SegmentationNetwork::state() {
  std::map<std::string, Tensor> out;
  for (Parameter* p : params()) out[p->name] = p->value;
  for (Buffer* b : buffers()) out[b->name] = b->value;
  return out;
}

void SegmentationNetwork::load_state(const std::map<std::string, Tensor>& state) {
  auto apply = [&](const std::string& name, Tensor& dst) {
    auto it = state.find(name);
    SIAMUDA_CHECK_VALUE(it != state.end(), "load_state: missing tensor " << name);
    SIAMUDA_CHECK_SHAPE(it->second.same_shape(dst), "load_state: shape mismatch for "
                                                        << name << ": " << it->second.shape_str()
                                                        << " vs " << dst.shape_str());
    dst = it->second;
  };
  size_t used = 0;
  for (Parameter* p : params()) {
    apply(p->name, p->value);
    ++used;
  }
  for (Buffer* b : buffers()) {
    apply(b->name, b->value);
    ++used;
  }
  SIAMUDA_CHECK_VALUE(used == state.size(),
                      "load_state: archive has " << state.size() << " tensors, network uses "
                                                 << used);
}

// ---------------------------------------------------------------------------
// Tiny network: 5 strided conv blocks (strides 2,4,8,16,32) feeding a
// multi-scale fusion head that embeds each stage to a common width, resizes
// to 1/4 scale, concatenates, fuses, classifies, and upsamples to input size.

class TinyNetwork final : public SegmentationNetwork {
 public:
  TinyNetwork(int in_channels, int num_classes, uint64_t init_seed)
      : in_channels_(in_channels),
        num_classes_(num_classes),
        b1_("backbone.b1", in_channels, kStageChannels[0], 3, 2, 1, kNormGroups),
        b2_("backbone.b2", kStageChannels[0], kStageChannels[1], 3, 2, 1, kNormGroups),
        b3_("backbone.b3", kStageChannels[1], kStageChannels[2], 3, 2, 1, kNormGroups),
        b4_("backbone.b4", kStageChannels[2], kStageChannels[3], 3, 2, 1, kNormGroups),
        b5_("backbone.b5", kStageChannels[3], kStageChannels[4], 3, 2, 1, kNormGroups),
        embed1_("head.embed1", kStageChannels[1], kEmbedDim, 1, 1, 0),
        embed2_("head.embed2", kStageChannels[2], kEmbedDim, 1, 1, 0),
        embed3_("head.embed3", kStageChannels[3], kEmbedDim, 1, 1, 0),
        embed4_("head.embed4", kStageChannels[4], kEmbedDim, 1, 1, 0),
        fuse_("head.fuse", 4 * kEmbedDim, kEmbedDim, 1, 1, 0, kNormGroups),
        classifier_("head.classifier", kEmbedDim, num_classes, 1, 1, 0) {
    SIAMUDA_CHECK_VALUE(num_classes >= 2, "TinyNetwork: num_classes " << num_classes);
    Rng rng = make_rng(init_seed, "init");
    b1_.init(rng);
    b2_.init(rng);
    b3_.init(rng);
    b4_.init(rng);
    b5_.init(rng);
    embed1_.init(rng);
    embed2_.init(rng);
    embed3_.init(rng);
    embed4_.init(rng);
    fuse_.init(rng);
    classifier_.init(rng);
  }

  Tensor forward(const Tensor& x, Mode mode) override {
    check_input(x);
    const int in_h = x.dim(2), in_w = x.dim(3);
    Tensor f1, f2, f3, f4;
    backbone_forward(x, mode, f1, f2, f3, f4);

    const int h4 = f1.dim(2), w4 = f1.dim(3);
    Tensor e1 = embed1_.forward(f1, mode);
    Tensor e2 = up2_.forward(embed2_.forward(f2, mode), h4, w4, mode);
    Tensor e3 = up3_.forward(embed3_.forward(f3, mode), h4, w4, mode);
    Tensor e4 = up4_.forward(embed4_.forward(f4, mode), h4, w4, mode);
    Tensor cat = concat_.forward({&e1, &e2, &e3, &e4}, mode);
    Tensor fused = fuse_.forward(cat, mode);
    Tensor logits4 = classifier_.forward(fused, mode);
    return up_out_.forward(logits4, in_h, in_w, mode);
  }

  Tensor backward(const Tensor& dlogits) override {
    Tensor g4 = up_out_.backward(dlogits);
    Tensor gfused = classifier_.backward(g4);
    Tensor gcat = fuse_.backward(gfused);
    std::vector<Tensor> ge = concat_.backward(gcat);
    Tensor gf1 = embed1_.backward(ge[0]);
    Tensor gf2 = embed2_.backward(up2_.backward(ge[1]));
    Tensor gf3 = embed3_.backward(up3_.backward(ge[2]));
    Tensor gf4 = embed4_.backward(up4_.backward(ge[3]));
    return backbone_backward(&gf1, &gf2, &gf3, &gf4);
  }

  Tensor forward_pooled_features(const Tensor& x, Mode mode) override {
    check_input(x);
    Tensor f1, f2, f3, f4;
    backbone_forward(x, mode, f1, f2, f3, f4);
    return pool_.forward(f4, mode);
  }

  void backward_pooled_features(const Tensor& g) override {
    Tensor gf4 = pool_.backward(g);
    backbone_backward(nullptr, nullptr, nullptr, &gf4);
  }

  int in_channels() const override { return in_channels_; }
  int num_classes() const override { return num_classes_; }
  int feature_dim() const override { return kStageChannels[4]; }
  std::string arch_name() const override { return "tiny"; }

  std::vector<Parameter*> backbone_params() override {
    std::vector<Parameter*> ps;
    for (ConvNormRelu* b : blocks()) b->collect(ps);
    return ps;
  }

  std::vector<Parameter*> head_params() override {
    std::vector<Parameter*> ps;
    for (nn::Conv2d* c : {&embed1_, &embed2_, &embed3_, &embed4_})
      for (Parameter* p : c->params()) ps.push_back(p);
    fuse_.collect(ps);
    for (Parameter* p : classifier_.params()) ps.push_back(p);
    return ps;
  }

  // Group norm keeps no running statistics.
  std::vector<Buffer*> buffers() override { return {}; }

  nn::Conv2d& classifier() { return classifier_; }

 private:
  void check_input(const Tensor& x) const {
    SIAMUDA_CHECK_SHAPE(x.ndim() == 4 && x.dim(0) == in_channels_,
                        "TinyNetwork: input " << x.shape_str() << " wants " << in_channels_
                                              << " channels");
  }

  std::vector<ConvNormRelu*> blocks() { return {&b1_, &b2_, &b3_, &b4_, &b5_}; }

  void backbone_forward(const Tensor& x, Mode mode, Tensor& f1, Tensor& f2, Tensor& f3,
                        Tensor& f4) {
    Tensor s1 = b1_.forward(x, mode);
    f1 = b2_.forward(s1, mode);  // stride 4
    f2 = b3_.forward(f1, mode);  // stride 8
    f3 = b4_.forward(f2, mode);  // stride 16
    f4 = b5_.forward(f3, mode);  // stride 32
  }

  // Stage outputs f1..f3 feed both the next stage and the decode head, so
  // their gradients sum. Null pointers mean "no head gradient for this tap".
  Tensor backbone_backward(const Tensor* gf1, const Tensor* gf2, const Tensor* gf3,
                           const Tensor* gf4) {
    Tensor g = b5_.backward(*gf4);
    if (gf3) nn::axpy(g, 1.0, *gf3);
    g = b4_.backward(g);
    if (gf2) nn::axpy(g, 1.0, *gf2);
    g = b3_.backward(g);
    if (gf1) nn::axpy(g, 1.0, *gf1);
    g = b2_.backward(g);
    return b1_.backward(g);
  }

  int in_channels_, num_classes_;
  ConvNormRelu b1_, b2_, b3_, b4_, b5_;
  nn::Conv2d embed1_, embed2_, embed3_, embed4_;
  ConvNormRelu fuse_;
  nn::Conv2d classifier_;
  nn::BilinearResize up2_, up3_, up4_, up_out_;
  nn::ChannelConcat concat_;
  nn::GlobalAvgPool pool_;
};

std::unique_ptr<SegmentationNetwork> build_segmentation_network(const std::string& arch,
                                                                int in_channels, int num_classes,
                                                                uint64_t init_seed) {
  if (arch == "tiny") {
    return std::make_unique<TinyNetwork>(in_channels, num_classes, init_seed);
  }
  if (arch.rfind("mit-b", 0) == 0) {
    SIAMUDA_THROW(ValueError, "backbone '" << arch
                                           << "' is a reserved plug-in slot; only 'tiny' ships "
                                              "built in (see build_segmentation_network)");
  }
  SIAMUDA_THROW(ValueError, "unknown backbone architecture '" << arch << "'");
}

// ---------------------------------------------------------------------------
// EMA teacher

namespace {

std::map<std::string, Parameter*> by_name(const std::vector<Parameter*>& ps) {
  std::map<std::string, Parameter*> m;
  for (Parameter* p : ps) m[p->name] = p;
  return m;
}

}  // namespace

void ema_update(SegmentationNetwork& teacher, SegmentationNetwork& student,
                const EmaConfig& config) {
  config.validate();
  auto t = by_name(teacher.params());
  auto s = by_name(student.params());

  std::vector<std::string> only_t, only_s;
  for (const auto& [name, p] : t)
    if (!s.count(name)) only_t.push_back(name);
  for (const auto& [name, p] : s)
    if (!t.count(name)) only_s.push_back(name);
  if (!only_t.empty() || !only_s.empty()) {
    std::ostringstream oss;
    oss << "ema_update: parameter name sets differ;";
    if (!only_t.empty()) {
      oss << " teacher-only: ";
      for (const auto& n : only_t) oss << n << " ";
    }
    if (!only_s.empty()) {
      oss << " student-only: ";
      for (const auto& n : only_s) oss << n << " ";
    }
    SIAMUDA_THROW(ValueError, oss.str());
  }

  const double a = config.alpha;
  for (auto& [name, tp] : t) {
    Parameter* sp = s.at(name);
    SIAMUDA_CHECK_SHAPE(tp->value.same_shape(sp->value),
                        "ema_update: shape mismatch for " << name);
    double* tv = tp->value.ptr();
    const double* sv = sp->value.ptr();
    for (size_t i = 0; i < tp->value.numel(); ++i) tv[i] = a * tv[i] + (1.0 - a) * sv[i];
  }

  // Running stats: copied, not averaged.
  std::map<std::string, Buffer*> tb;
  for (Buffer* b : teacher.buffers()) tb[b->name] = b;
  for (Buffer* b : student.buffers()) {
    auto it = tb.find(b->name);
    SIAMUDA_CHECK_VALUE(it != tb.end(), "ema_update: teacher missing buffer " << b->name);
    it->second->value = b->value;
  }
}

std::unique_ptr<SegmentationNetwork> init_teacher_from_student(SegmentationNetwork& student) {
  auto teacher = build_segmentation_network(student.arch_name(), student.in_channels(),
                                            student.num_classes(), /*init_seed=*/0);
  teacher->load_state(student.state());
  return teacher;
}

// ---------------------------------------------------------------------------
// Contrastive heads

ContrastiveHeads::ContrastiveHeads(SegmentationNetwork* shared_student, Dims dims,
                                   uint64_t init_seed)
    : student_(shared_student), dims_(dims) {
  SIAMUDA_CHECK_VALUE(student_ != nullptr, "ContrastiveHeads: null student");
  const int d_in = student_->feature_dim();
  SIAMUDA_CHECK_VALUE(dims.proj_hidden >= 1 && dims.proj_dim >= 1 && dims.pred_hidden >= 1,
                      "ContrastiveHeads: bad dims");

  const std::vector<int> proj_dims = {d_in, dims.proj_hidden, dims.proj_hidden, dims.proj_dim};
  for (size_t i = 0; i + 1 < proj_dims.size(); ++i) {
    proj_linears_.emplace_back("proj.l" + std::to_string(i), proj_dims[i], proj_dims[i + 1]);
    if (i + 2 < proj_dims.size()) {
      proj_norms_.emplace_back("proj.bn" + std::to_string(i), proj_dims[i + 1]);
      proj_relus_.emplace_back();
    }
  }
  const std::vector<int> pred_dims = {dims.proj_dim, dims.pred_hidden, dims.proj_dim};
  for (size_t i = 0; i + 1 < pred_dims.size(); ++i) {
    pred_linears_.emplace_back("pred.l" + std::to_string(i), pred_dims[i], pred_dims[i + 1]);
    if (i + 2 < pred_dims.size()) {
      pred_norms_.emplace_back("pred.bn" + std::to_string(i), pred_dims[i + 1]);
      pred_relus_.emplace_back();
    }
  }

  Rng rng = make_rng(init_seed, "heads-init");
  for (auto& l : proj_linears_) l.init(rng);
  for (auto& l : pred_linears_) l.init(rng);
}

ContrastiveHeads::ZP ContrastiveHeads::forward(const Tensor& views, Mode mode) {
  Tensor h = student_->forward_pooled_features(views, mode);
  for (size_t i = 0; i < proj_linears_.size(); ++i) {
    h = proj_linears_[i].forward(h, mode);
    if (i < proj_norms_.size()) {
      h = proj_norms_[i].forward(h, mode);
      h = proj_relus_[i].forward(h, mode);
    }
  }
  ZP out;
  out.z = h;
  for (size_t i = 0; i < pred_linears_.size(); ++i) {
    h = pred_linears_[i].forward(h, mode);
    if (i < pred_norms_.size()) {
      h = pred_norms_[i].forward(h, mode);
      h = pred_relus_[i].forward(h, mode);
    }
  }
  out.p = h;
  return out;
}

void ContrastiveHeads::backward(const Tensor& dp, const Tensor& dz) {
  Tensor g = dp;
  for (size_t i = pred_linears_.size(); i-- > 0;) {
    if (i < pred_norms_.size()) {
      g = pred_relus_[i].backward(g);
      g = pred_norms_[i].backward(g);
    }
    g = pred_linears_[i].backward(g);
  }
  nn::axpy(g, 1.0, dz);  // direct-z gradient joins below the prediction head
  for (size_t i = proj_linears_.size(); i-- > 0;) {
    if (i < proj_norms_.size()) {
      g = proj_relus_[i].backward(g);
      g = proj_norms_[i].backward(g);
    }
    g = proj_linears_[i].backward(g);
  }
  student_->backward_pooled_features(g);
}

std::vector<Parameter*> ContrastiveHeads::params() {
  std::vector<Parameter*> ps;
  for (auto& l : proj_linears_)
    for (Parameter* p : l.params()) ps.push_back(p);
  for (auto& n : proj_norms_)
    for (Parameter* p : n.params()) ps.push_back(p);
  for (auto& l : pred_linears_)
    for (Parameter* p : l.params()) ps.push_back(p);
  for (auto& n : pred_norms_)
    for (Parameter* p : n.params()) ps.push_back(p);
  return ps;
}

std::vector<Buffer*> ContrastiveHeads::buffers() {
  std::vector<Buffer*> bs;
  for (auto& n : proj_norms_)
    for (Buffer* b : n.buffers()) bs.push_back(b);
  for (auto& n : pred_norms_)
    for (Buffer* b : n.buffers()) bs.push_back(b);
  return bs;
}

nn::Linear& ContrastiveHeads::proj_layer(int i) { return proj_linears_.at(i); }
nn::Linear& ContrastiveHeads::pred_layer(int i) { return pred_linears_.at(i); }

// ---------------------------------------------------------------------------
// Image adapters

Tensor image_to_tensor(const Image& image) {
  return images_to_tensor({&image});
}

Tensor images_to_tensor(const std::vector<const Image*>& images) {
  SIAMUDA_CHECK_VALUE(!images.empty(), "images_to_tensor: empty batch");
  const Image& first = *images[0];
  const int n = int(images.size());
  Tensor x({first.channels, n, first.height, first.width});
  for (int b = 0; b < n; ++b) {
    const Image& img = *images[b];
    SIAMUDA_CHECK_SHAPE(img.same_shape(first), "images_to_tensor: mixed shapes in batch");
    for (int c = 0; c < img.channels; ++c) {
      double* dst = x.ptr() + (size_t(c) * n + b) * img.height * img.width;
      for (int y = 0; y < img.height; ++y)
        for (int xx = 0; xx < img.width; ++xx) dst[size_t(y) * img.width + xx] = img.at(y, xx, c);
    }
  }
  return x;
}

ProbabilityField forward_segmentation(SegmentationNetwork& net, const Image& image) {
  SIAMUDA_CHECK_SHAPE(image.channels == net.in_channels(),
                      "forward_segmentation: image has " << image.channels << " channels, network "
                                                         << net.in_channels());
  Tensor logits = net.forward(image_to_tensor(image), Mode::kEval);
  Tensor probs = nn::softmax_channels(logits);
  const int c = probs.dim(0), h = probs.dim(2), w = probs.dim(3);
  ProbabilityField field(h, w, c);
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) field.at(y, x, ci) = probs.data[(size_t(ci) * h + y) * w + x];
  return field;
}

}  // namespace siamuda
