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

#include "siamuda/train/trainer.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "siamuda/nn/archive.hpp"

namespace siamuda {

namespace fs = std::filesystem;

void ScheduleConfig::validate() const {
  SIAMUDA_CHECK_VALUE(total_iters >= 0, "ScheduleConfig: total_iters " << total_iters);
  SIAMUDA_CHECK_VALUE(warmup_iters >= 1, "ScheduleConfig: warmup_iters " << warmup_iters);
  SIAMUDA_CHECK_VALUE(decay_floor > 0.0 && decay_floor <= 1.0,
                      "ScheduleConfig: decay_floor " << decay_floor);
  SIAMUDA_CHECK_VALUE(total_iters == 0 || warmup_iters < total_iters,
                      "ScheduleConfig: warmup_iters " << warmup_iters
                                                      << " must end before total_iters "
                                                      << total_iters);
}

void OptimConfig::validate() const {
  SIAMUDA_CHECK_VALUE(lr_backbone > 0.0 && lr_heads > 0.0,
                      "OptimConfig: learning rates must be positive");
  SIAMUDA_CHECK_VALUE(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
                      "OptimConfig: betas (" << beta1 << "," << beta2 << ") outside [0,1)");
  SIAMUDA_CHECK_VALUE(weight_decay >= 0.0, "OptimConfig: weight_decay " << weight_decay);
}

void MixAugConfig::validate() const {
  jitter.validate();
  SIAMUDA_CHECK_VALUE(jitter_prob >= 0.0 && jitter_prob <= 1.0,
                      "MixAugConfig: jitter_prob " << jitter_prob);
  SIAMUDA_CHECK_VALUE(blur_prob >= 0.0 && blur_prob <= 1.0,
                      "MixAugConfig: blur_prob " << blur_prob);
  SIAMUDA_CHECK_VALUE(blur_sigma.first > 0.0 && blur_sigma.first <= blur_sigma.second,
                      "MixAugConfig: blur sigma range (" << blur_sigma.first << ","
                                                         << blur_sigma.second << ")");
}

void TrainConfig::validate() const {
  SIAMUDA_CHECK_VALUE(!arch.empty(), "TrainConfig: empty arch name");
  shape.validate();
  SIAMUDA_CHECK_VALUE(batch_source >= 1 && batch_target >= 1,
                      "TrainConfig: batch sizes " << batch_source << "/" << batch_target);
  optim.validate();
  schedule.validate();
  weights.validate();
  SIAMUDA_CHECK_VALUE(tau > 0.0 && tau < 1.0, "TrainConfig: tau " << tau << " outside (0,1)");
  ema.validate();
  sim_aug.validate();
  mix_aug.validate();
  SIAMUDA_CHECK_VALUE(eval_every >= 1, "TrainConfig: eval_every " << eval_every);
  SIAMUDA_CHECK_VALUE(checkpoint_every >= 1, "TrainConfig: checkpoint_every " << checkpoint_every);
}

double lr_factor(int64_t step, const ScheduleConfig& schedule) {
  SIAMUDA_CHECK_VALUE(step >= 0 && step <= schedule.total_iters,
                      "lr_factor: step " << step << " outside [0," << schedule.total_iters << "]");
  if (step < schedule.warmup_iters) return double(step + 1) / double(schedule.warmup_iters);
  const double t = double(step - schedule.warmup_iters) /
                   double(schedule.total_iters - schedule.warmup_iters);
  return 1.0 + (schedule.decay_floor - 1.0) * t;
}

namespace {

void put(std::ostringstream& os, double v) { os << v << '|'; }

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= uint64_t(static_cast<unsigned char>(c));
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

std::string config_fingerprint(const TrainConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << c.arch << '|' << c.shape.height << '|' << c.shape.width << '|' << c.shape.channels << '|'
     << c.shape.num_classes << '|' << c.batch_source << '|' << c.batch_target << '|';
  put(os, c.optim.lr_backbone);
  put(os, c.optim.lr_heads);
  put(os, c.optim.beta1);
  put(os, c.optim.beta2);
  put(os, c.optim.weight_decay);
  os << c.schedule.total_iters << '|' << c.schedule.warmup_iters << '|';
  put(os, c.schedule.decay_floor);
  put(os, c.weights.beta);
  put(os, c.weights.gamma);
  put(os, c.tau);
  put(os, c.ema.alpha);
  os << c.sim_aug.crop_size.first << '|' << c.sim_aug.crop_size.second << '|';
  put(os, c.sim_aug.scale_range.first);
  put(os, c.sim_aug.scale_range.second);
  put(os, c.sim_aug.jitter.brightness);
  put(os, c.sim_aug.jitter.contrast);
  put(os, c.sim_aug.jitter.saturation);
  put(os, c.sim_aug.jitter.hue);
  put(os, c.sim_aug.jitter_prob);
  put(os, c.sim_aug.grayscale_prob);
  put(os, c.sim_aug.blur_prob);
  put(os, c.sim_aug.hflip_prob);
  put(os, c.sim_aug.vflip_prob);
  put(os, c.sim_aug.blur_sigma.first);
  put(os, c.sim_aug.blur_sigma.second);
  put(os, c.mix_aug.jitter.brightness);
  put(os, c.mix_aug.jitter.contrast);
  put(os, c.mix_aug.jitter.saturation);
  put(os, c.mix_aug.jitter.hue);
  put(os, c.mix_aug.jitter_prob);
  put(os, c.mix_aug.blur_prob);
  put(os, c.mix_aug.blur_sigma.first);
  put(os, c.mix_aug.blur_sigma.second);
  os << c.seed << '|' << c.eval_every << '|' << c.checkpoint_every;

  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(fnv1a(os.str())));
  return hex;
}

std::string metrics_csv_row(const StepMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%lld,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g",
                static_cast<long long>(m.step), m.loss.l_s, m.loss.l_t, m.loss.l_clr,
                m.loss.l_total, m.q_mean, m.lr);
  return buf;
}

namespace {

// Infinite shuffled cycling: pass p visits a permutation keyed by (seed,
// tag, p), so any position's sample is a pure function of the position.
class ShuffledCycler {
 public:
  ShuffledCycler(std::vector<size_t> indices, uint64_t seed, std::string tag)
      : base_(std::move(indices)), seed_(seed), tag_(std::move(tag)) {}

  size_t size() const { return base_.size(); }

  size_t at(uint64_t position) {
    const uint64_t pass = position / base_.size();
    if (pass != cached_pass_) {
      order_ = base_;
      Rng rng = make_rng(seed_, tag_, pass);
      shuffle_pinned(order_, rng);
      cached_pass_ = pass;
    }
    return order_[position % base_.size()];
  }

 private:
  std::vector<size_t> base_;
  uint64_t seed_;
  std::string tag_;
  uint64_t cached_pass_ = ~uint64_t(0);
  std::vector<size_t> order_;
};

ProbabilityField slice_field(const nn::Tensor& probs, int n) {
  const int C = probs.dim(0), N = probs.dim(1), H = probs.dim(2), W = probs.dim(3);
  ProbabilityField f(H, W, C);
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        f.at(y, x, c) = probs.data[((size_t(c) * N + n) * H + y) * W + x];
  return f;
}

nn::Tensor scaled(const nn::Tensor& t, double a) {
  nn::Tensor r = t;
  for (double& v : r.data) v *= a;
  return r;
}

std::map<std::string, nn::Tensor> collect_named(const std::vector<nn::Parameter*>& params,
                                                const std::vector<nn::Buffer*>& buffers) {
  std::map<std::string, nn::Tensor> state;
  for (const nn::Parameter* p : params) state[p->name] = p->value;
  for (const nn::Buffer* b : buffers) state[b->name] = b->value;
  return state;
}

void load_named(const std::vector<nn::Parameter*>& params, const std::vector<nn::Buffer*>& buffers,
                const std::map<std::string, nn::Tensor>& state, const char* what) {
  size_t used = 0;
  auto assign = [&](const std::string& name, nn::Tensor& dst) {
    auto it = state.find(name);
    SIAMUDA_CHECK_VALUE(it != state.end(), what << ": missing tensor '" << name << "'");
    SIAMUDA_CHECK_SHAPE(it->second.same_shape(dst), what << ": tensor '" << name << "' has shape "
                                                         << it->second.shape_str() << ", expected "
                                                         << dst.shape_str());
    dst = it->second;
    ++used;
  };
  for (nn::Parameter* p : params) assign(p->name, p->value);
  for (nn::Buffer* b : buffers) assign(b->name, b->value);
  SIAMUDA_CHECK_VALUE(used == state.size(),
                      what << ": archive has " << state.size() << " tensors, model uses " << used);
}

void check_tile(const DomainSample& s, const ShapeSpec& shape, const char* which) {
  SIAMUDA_CHECK_SHAPE(s.image.height == shape.height && s.image.width == shape.width &&
                          s.image.channels == shape.channels,
                      which << " sample '" << s.id << "' is " << s.image.height << "x"
                            << s.image.width << "x" << s.image.channels << ", config wants "
                            << shape.height << "x" << shape.width << "x" << shape.channels);
}

void check_manifest(const DatasetManifest& m, const ShapeSpec& shape, const char* which) {
  SIAMUDA_CHECK_VALUE(m.shape == shape, "trainer: " << which << " manifest shape does not match "
                                                    << "the train config shape");
}

}  // namespace

MetricReport evaluate_tiles(SegmentationNetwork& net, const DatasetManifest& manifest,
                            DatasetStore& store, SplitTag split) {
  const std::vector<size_t> indices = manifest.split_indices(split);
  SIAMUDA_CHECK_VALUE(!indices.empty(),
                      "evaluate_tiles: no tiles in split '" << to_string(split) << "'");
  ConfusionMatrix cm(manifest.shape.num_classes);
  for (size_t idx : indices) {
    const DomainSample sample = load_sample(manifest, store, idx, /*eval_mode=*/true);
    SIAMUDA_CHECK_VALUE(sample.label.has_value(),
                        "evaluate_tiles: tile '" << sample.id << "' has no ground-truth label");
    const LabelMap pred = argmax_labels(forward_segmentation(net, sample.image));
    cm.update(pred, *sample.label);
  }
  return summarize(cm);
}

Trainer::Trainer(TrainConfig config, TrainData data, std::string run_dir)
    : config_(std::move(config)), data_(data), run_dir_(std::move(run_dir)) {
  config_.validate();
  SIAMUDA_CHECK_VALUE(!run_dir_.empty(), "trainer: empty run directory");
  SIAMUDA_CHECK_VALUE(data_.source_manifest && data_.source_store && data_.target_manifest &&
                          data_.target_store,
                      "trainer: all dataset references must be set");
  check_manifest(*data_.source_manifest, config_.shape, "source");
  check_manifest(*data_.target_manifest, config_.shape, "target");

  student_ = build_segmentation_network(config_.arch, config_.shape.channels,
                                        config_.shape.num_classes,
                                        derive_seed(config_.seed, "init/student"));
  teacher_ = init_teacher_from_student(*student_);
  heads_ = std::make_unique<ContrastiveHeads>(student_.get(), ContrastiveHeads::Dims{},
                                              derive_seed(config_.seed, "init/heads"));

  std::vector<nn::Parameter*> head_group = student_->head_params();
  for (nn::Parameter* p : heads_->params()) head_group.push_back(p);
  std::vector<nn::ParamGroup> groups;
  groups.push_back({student_->backbone_params(), config_.optim.lr_backbone});
  groups.push_back({std::move(head_group), config_.optim.lr_heads});
  optimizer_ = std::make_unique<nn::AdamW>(std::move(groups), config_.optim.beta1,
                                           config_.optim.beta2, config_.optim.weight_decay);

  // The teacher trains only through the EMA; it must never share storage
  // with anything the optimizer steps.
  std::set<const nn::Parameter*> stepped;
  for (const nn::Parameter* p : student_->params()) stepped.insert(p);
  for (const nn::Parameter* p : heads_->params()) stepped.insert(p);
  for (const nn::Parameter* p : teacher_->params()) {
    SIAMUDA_CHECK_VALUE(stepped.count(p) == 0,
                        "trainer: teacher parameter '" << p->name << "' aliases optimizer storage");
  }
}

StepMetrics Trainer::train_step(const std::vector<DomainSample>& source_batch,
                                const std::vector<DomainSample>& target_batch) {
  SIAMUDA_CHECK_VALUE(int(source_batch.size()) == config_.batch_source,
                      "train_step: source batch " << source_batch.size() << ", config wants "
                                                  << config_.batch_source);
  SIAMUDA_CHECK_VALUE(int(target_batch.size()) == config_.batch_target,
                      "train_step: target batch " << target_batch.size() << ", config wants "
                                                  << config_.batch_target);
  for (const DomainSample& s : source_batch) {
    check_tile(s, config_.shape, "source");
    SIAMUDA_CHECK_VALUE(s.label.has_value(), "train_step: source '" << s.id << "' has no label");
  }
  for (const DomainSample& s : target_batch) check_tile(s, config_.shape, "target");

  const bool self_training = config_.weights.beta > 0.0;
  const bool contrastive = config_.weights.gamma > 0.0;
  const int n_target = config_.batch_target;

  // (a) Teacher pseudo-labels and quality on the clean target batch; pure
  // data from an evaluation-mode forward.
  std::vector<PseudoLabelBundle> bundles;
  double q_mean = 0.0;
  if (self_training) {
    std::vector<const Image*> clean;
    for (const DomainSample& s : target_batch) clean.push_back(&s.image);
    const nn::Tensor probs =
        nn::softmax_channels(teacher_->forward(images_to_tensor(clean), nn::Mode::kEval));
    for (int i = 0; i < n_target; ++i) {
      bundles.push_back(make_pseudo_bundle(slice_field(probs, i), config_.tau));
      q_mean += bundles.back().q;
    }
    q_mean /= n_target;
  }

  // (b) ClassMix composition plus photometric jitter/blur on the mixed
  // image; labels and pixel weights follow the mask, not the photometrics.
  std::vector<Image> mixed_images;
  std::vector<LabelMap> mixed_labels;
  nn::Tensor mixed_weights({n_target, config_.shape.height, config_.shape.width});
  if (self_training) {
    for (int i = 0; i < n_target; ++i) {
      const DomainSample& src = source_batch[i % source_batch.size()];
      const LabelMap pseudo = bundles[i].labels();
      MixResult mix = class_mix(src, target_batch[i].image, pseudo,
                                derive_seed(config_.seed, "step/mix", uint64_t(step_), i));
      Rng rng = make_rng(config_.seed, "step/mixaug", uint64_t(step_), i);
      if (bernoulli(rng, config_.mix_aug.jitter_prob)) {
        mix.image = apply_jitter(mix.image, draw_jitter_params(config_.mix_aug.jitter, rng));
      }
      if (bernoulli(rng, config_.mix_aug.blur_prob)) {
        mix.image = gaussian_blur(
            mix.image, uniform(rng, config_.mix_aug.blur_sigma.first,
                               config_.mix_aug.blur_sigma.second));
      }
      for (int y = 0; y < config_.shape.height; ++y)
        for (int x = 0; x < config_.shape.width; ++x) {
          mixed_weights.data[(size_t(i) * config_.shape.height + y) * config_.shape.width + x] =
              mix.mask.at(y, x) == 1 ? 1.0 : bundles[i].q;
        }
      mixed_images.push_back(std::move(mix.image));
      mixed_labels.push_back(std::move(mix.label));
    }
  }

  // (e-pre) Contrastive view pairs from the clean target images.
  std::vector<Image> views1, views2;
  if (contrastive) {
    for (int i = 0; i < n_target; ++i) {
      ViewPair pair = make_views(target_batch[i].image, config_.sim_aug,
                                 derive_seed(config_.seed, "step/views", uint64_t(step_), i));
      views1.push_back(std::move(pair.view1));
      views2.push_back(std::move(pair.view2));
    }
  }

  // Forward passes; backward order mirrors them exactly (layer contexts are
  // stacks).
  std::vector<const Image*> source_ptrs;
  std::vector<const LabelMap*> source_labels;
  for (const DomainSample& s : source_batch) {
    source_ptrs.push_back(&s.image);
    source_labels.push_back(&*s.label);
  }
  const nn::Tensor logits_source =
      student_->forward(images_to_tensor(source_ptrs), nn::Mode::kTrain);
  const CeBatchResult ce_source = softmax_ce_weighted(logits_source, source_labels, nullptr);

  CeBatchResult ce_mixed;
  if (self_training) {
    std::vector<const Image*> mixed_ptrs;
    std::vector<const LabelMap*> mixed_label_ptrs;
    for (int i = 0; i < n_target; ++i) {
      mixed_ptrs.push_back(&mixed_images[i]);
      mixed_label_ptrs.push_back(&mixed_labels[i]);
    }
    const nn::Tensor logits_mixed =
        student_->forward(images_to_tensor(mixed_ptrs), nn::Mode::kTrain);
    ce_mixed = softmax_ce_weighted(logits_mixed, mixed_label_ptrs, &mixed_weights);
  }

  ContrastiveBatchResult clr;
  ContrastiveHeads::ZP zp1, zp2;
  if (contrastive) {
    std::vector<const Image*> v1, v2;
    for (int i = 0; i < n_target; ++i) {
      v1.push_back(&views1[i]);
      v2.push_back(&views2[i]);
    }
    zp1 = heads_->forward(images_to_tensor(v1), nn::Mode::kTrain);
    zp2 = heads_->forward(images_to_tensor(v2), nn::Mode::kTrain);
    clr = contrastive_batch(zp1.p, zp1.z, zp2.p, zp2.z);
  }

  StepMetrics metrics;
  metrics.step = step_;
  metrics.q_mean = q_mean;
  try {
    metrics.loss = total_loss(ce_source.value, self_training ? ce_mixed.value : 0.0,
                              contrastive ? clr.value : 0.0, config_.weights);
  } catch (const ValueError&) {
    save_checkpoint("diagnostics");
    throw;
  }

  optimizer_->zero_grad();
  if (contrastive) {
    nn::Tensor dz(zp1.z.shape);  // stop-gradient: nothing flows into z
    heads_->backward(scaled(clr.dp2, config_.weights.gamma), dz);
    heads_->backward(scaled(clr.dp1, config_.weights.gamma), dz);
  }
  if (self_training) student_->backward(scaled(ce_mixed.dlogits, config_.weights.beta));
  student_->backward(ce_source.dlogits);

  const double factor = lr_factor(step_, config_.schedule);
  optimizer_->step(factor);
  if (self_training) ema_update(*teacher_, *student_, config_.ema);

  metrics.lr = config_.optim.lr_backbone * factor;
  ++step_;
  return metrics;
}

std::pair<std::vector<DomainSample>, std::vector<DomainSample>> Trainer::next_batches() {
  const std::vector<size_t> source_train = data_.source_manifest->split_indices(SplitTag::kTrain);
  const std::vector<size_t> target_train = data_.target_manifest->split_indices(SplitTag::kTrain);
  SIAMUDA_CHECK_VALUE(!source_train.empty(), "trainer: source manifest has no train tiles");
  SIAMUDA_CHECK_VALUE(!target_train.empty(), "trainer: target manifest has no train tiles");
  // Cyclers are cheap to rebuild; keeping them local makes batch assembly a
  // pure function of (config, step), which is what resume relies on.
  ShuffledCycler source_cycler(source_train, config_.seed, "cycle/source");
  ShuffledCycler target_cycler(target_train, config_.seed, "cycle/target");

  std::vector<DomainSample> source_batch, target_batch;
  for (int j = 0; j < config_.batch_source; ++j) {
    const uint64_t pos = uint64_t(step_) * config_.batch_source + j;
    source_batch.push_back(
        load_sample(*data_.source_manifest, *data_.source_store, source_cycler.at(pos)));
  }
  for (int j = 0; j < config_.batch_target; ++j) {
    const uint64_t pos = uint64_t(step_) * config_.batch_target + j;
    target_batch.push_back(
        load_sample(*data_.target_manifest, *data_.target_store, target_cycler.at(pos)));
  }
  return {std::move(source_batch), std::move(target_batch)};
}

MetricReport Trainer::evaluate(SplitTag split) {
  return evaluate_tiles(*student_, *data_.target_manifest, *data_.target_store, split);
}

void Trainer::append_metrics(const StepMetrics& m) {
  std::ofstream out(fs::path(run_dir_) / "metrics.csv", std::ios::app);
  if (!out.good()) SIAMUDA_THROW(IoError, "trainer: cannot append to metrics.csv in " << run_dir_);
  out << metrics_csv_row(m) << "\n";
}

void Trainer::log_eval(int64_t at_step) {
  const MetricReport report = evaluate(SplitTag::kTest);
  const fs::path eval_dir = fs::path(run_dir_) / "eval";
  fs::create_directories(eval_dir);
  {
    std::ofstream out(eval_dir / ("step_" + std::to_string(at_step) + ".json"));
    if (!out.good()) SIAMUDA_THROW(IoError, "trainer: cannot write eval report at step " << at_step);
    out << metric_report_to_json(report, data_.target_manifest->class_names) << "\n";
  }
  {
    std::ofstream out(fs::path(run_dir_) / "events.log", std::ios::app);
    char line[96];
    std::snprintf(line, sizeof(line), "step=%lld miou=%.4f mf1=%.4f",
                  static_cast<long long>(at_step), report.mean_iou, report.mean_f1);
    out << line << "\n";
  }
  if (report.mean_iou > best_miou_) {
    best_miou_ = report.mean_iou;
    best_step_ = at_step;
    save_checkpoint("best");
  }
}

FitResult Trainer::fit(std::optional<int64_t> stop_at_step) {
  fs::create_directories(fs::path(run_dir_) / "checkpoints");
  const fs::path metrics_path = fs::path(run_dir_) / "metrics.csv";

  // Keep only rows before the resume point so the log reads as one
  // uninterrupted run.
  {
    std::vector<std::string> keep;
    if (fs::exists(metrics_path)) {
      std::ifstream in(metrics_path);
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (std::stoll(line.substr(0, line.find(','))) < step_) keep.push_back(line);
      }
    }
    std::ofstream out(metrics_path, std::ios::trunc);
    if (!out.good()) SIAMUDA_THROW(IoError, "trainer: cannot write metrics.csv in " << run_dir_);
    for (const std::string& line : keep) out << line << "\n";
  }

  const int64_t total = config_.schedule.total_iters;
  const int64_t halt = stop_at_step.value_or(total);
  bool evaluated_at_end = false;
  while (step_ < total && step_ < halt) {
    auto [source_batch, target_batch] = next_batches();
    const StepMetrics m = train_step(source_batch, target_batch);
    append_metrics(m);
    const int64_t done = step_;  // train_step advanced the counter
    if (done % config_.eval_every == 0) {
      log_eval(done);
      evaluated_at_end = done == total;
    }
    if (done % config_.checkpoint_every == 0) save_checkpoint("step_" + std::to_string(done));
  }

  FitResult result;
  result.metrics_path = metrics_path.string();
  result.best_miou = best_miou_;
  result.best_step = best_step_;
  if (best_step_ >= 0) result.best_checkpoint = (fs::path(run_dir_) / "checkpoints/best").string();
  if (step_ >= total) {
    if (total > 0 && !evaluated_at_end) log_eval(total);
    result.best_miou = best_miou_;
    result.best_step = best_step_;
    if (best_step_ >= 0)
      result.best_checkpoint = (fs::path(run_dir_) / "checkpoints/best").string();
    result.final_checkpoint = save_checkpoint("final");
  }
  return result;
}

std::string Trainer::save_checkpoint(const std::string& name) {
  const fs::path dir = fs::path(run_dir_) / "checkpoints";
  fs::create_directories(dir);
  const fs::path tmp = dir / (".tmp_" + name);
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  nn::save_archive((tmp / "student.bin").string(), student_->state());
  nn::save_archive((tmp / "teacher.bin").string(), teacher_->state());
  nn::save_archive((tmp / "heads.bin").string(),
                   collect_named(heads_->params(), heads_->buffers()));
  nn::save_archive((tmp / "optim.bin").string(), optimizer_->export_state());

  nlohmann::ordered_json j;
  j["arch"] = config_.arch;
  j["shape"] = {{"height", config_.shape.height},
                {"width", config_.shape.width},
                {"channels", config_.shape.channels},
                {"num_classes", config_.shape.num_classes}};
  j["step"] = step_;
  j["config_hash"] = config_fingerprint(config_);
  j["best_miou"] = best_miou_;
  j["best_step"] = best_step_;
  {
    std::ofstream out(tmp / "manifest.json");
    if (!out.good()) SIAMUDA_THROW(IoError, "trainer: cannot write checkpoint manifest in " << tmp.string());
    out << j.dump(2) << "\n";
  }

  const fs::path target = dir / name;
  fs::remove_all(target);
  fs::rename(tmp, target);
  return target.string();
}

void Trainer::resume(const std::string& checkpoint_dir) {
  const fs::path dir(checkpoint_dir);
  if (!fs::exists(dir / "manifest.json"))
    SIAMUDA_THROW(IoError, "resume: no checkpoint manifest in " << checkpoint_dir);
  std::ifstream in(dir / "manifest.json");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    SIAMUDA_THROW(ValueError, "resume: bad checkpoint manifest: " << e.what());
  }

  SIAMUDA_CHECK_VALUE(j.at("arch").get<std::string>() == config_.arch,
                      "resume: checkpoint arch '" << j.at("arch").get<std::string>()
                                                  << "' does not match config arch '"
                                                  << config_.arch << "'");
  const auto& s = j.at("shape");
  const ShapeSpec ckpt_shape{s.at("height").get<int>(), s.at("width").get<int>(),
                             s.at("channels").get<int>(), s.at("num_classes").get<int>()};
  SIAMUDA_CHECK_VALUE(ckpt_shape == config_.shape,
                      "resume: checkpoint shape does not match config shape");
  SIAMUDA_CHECK_VALUE(j.at("config_hash").get<std::string>() == config_fingerprint(config_),
                      "resume: checkpoint config hash "
                          << j.at("config_hash").get<std::string>()
                          << " does not match this config " << config_fingerprint(config_)
                          << "; resuming under a different config is not reproducible");

  student_->load_state(nn::load_archive((dir / "student.bin").string()));
  teacher_->load_state(nn::load_archive((dir / "teacher.bin").string()));
  load_named(heads_->params(), heads_->buffers(), nn::load_archive((dir / "heads.bin").string()),
             "resume heads");
  optimizer_->import_state(nn::load_archive((dir / "optim.bin").string()));
  step_ = j.at("step").get<int64_t>();
  best_miou_ = j.at("best_miou").get<double>();
  best_step_ = j.at("best_step").get<int64_t>();
}

}  // namespace siamuda
