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
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "siamuda/augment/augment.hpp"
#include "siamuda/core/metrics.hpp"
#include "siamuda/data/store.hpp"
#include "siamuda/loss/losses.hpp"
#include "siamuda/model/network.hpp"
#include "siamuda/nn/optim.hpp"

namespace siamuda {

struct ScheduleConfig {
  int64_t total_iters = 40000;
  int64_t warmup_iters = 1500;
  double decay_floor = 0.01;
  // total_iters 0 is the degenerate smoke case (emit checkpoint, no steps);
  // otherwise warmup must end before the run does.
  void validate() const;
};

struct OptimConfig {
  double lr_backbone = 6e-4;
  double lr_heads = 6e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.01;
  void validate() const;
};

// Photometric pipeline applied to ClassMix-composed images on the
// self-training branch; spatial layout is already fixed by the mix.
struct MixAugConfig {
  JitterStrengths jitter;
  double jitter_prob = 0.6;
  double blur_prob = 0.5;
  std::pair<double, double> blur_sigma{0.15, 1.15};
  void validate() const;
};

struct TrainConfig {
  std::string arch = "tiny";
  ShapeSpec shape;  // tile shape; must match both dataset manifests
  int batch_source = 6;
  int batch_target = 6;
  OptimConfig optim;
  ScheduleConfig schedule;
  LossWeights weights;
  double tau = 0.999;
  EmaConfig ema;
  SimAugConfig sim_aug;   // contrastive view pipeline
  MixAugConfig mix_aug;   // self-training mixed-batch pipeline
  uint64_t seed = 0;
  int64_t eval_every = 1000;
  int64_t checkpoint_every = 1000;
  void validate() const;
};

// Warmup ramps (step+1)/warmup_iters, then a straight line from 1.0 down to
// decay_floor at total_iters. Multiplies every parameter group's lr.
double lr_factor(int64_t step, const ScheduleConfig& schedule);

// Canonical fingerprint of every field; checkpoints store it so a resumed
// run provably continues the same experiment.
std::string config_fingerprint(const TrainConfig& config);

struct StepMetrics {
  int64_t step = 0;
  LossBreakdown loss;
  double q_mean = 0.0;
  double lr = 0.0;  // effective backbone lr this step
};

// CSV row "step,L_S,L_T,L_CLR,L_total,q_mean,lr" without trailing newline.
std::string metrics_csv_row(const StepMetrics& m);

// Non-owning references to resolved datasets; the caller keeps them alive
// for the trainer's lifetime.
struct TrainData {
  const DatasetManifest* source_manifest = nullptr;
  DatasetStore* source_store = nullptr;
  const DatasetManifest* target_manifest = nullptr;
  DatasetStore* target_store = nullptr;
};

struct FitResult {
  std::string metrics_path;
  std::string final_checkpoint;  // empty when fit was halted early
  std::string best_checkpoint;   // empty when no evaluation ran
  double best_miou = -1.0;
  int64_t best_step = -1;
};

// Whole-tile evaluation over one split: forward in evaluation mode, argmax,
// confusion accumulation. Every tile must carry ground truth.
MetricReport evaluate_tiles(SegmentationNetwork& net, const DatasetManifest& manifest,
                            DatasetStore& store, SplitTag split);

// One training process: student + EMA teacher + contrastive heads, an AdamW
// over backbone/heads parameter groups, and the run directory holding the
// metrics log, event log, eval reports, and checkpoints.
class Trainer {
 public:
  Trainer(TrainConfig config, TrainData data, std::string run_dir);

  // One optimization step over externally assembled batches; advances the
  // step counter. Weight beta 0 skips the whole self-training branch
  // (teacher, mixing, EMA); gamma 0 skips the contrastive branch, so either
  // degenerates bitwise to the remaining objectives.
  StepMetrics train_step(const std::vector<DomainSample>& source_batch,
                         const std::vector<DomainSample>& target_batch);

  // Batches the driver would feed to train_step at the current step; a pure
  // function of (config seed, step), which is what makes resume exact.
  std::pair<std::vector<DomainSample>, std::vector<DomainSample>> next_batches();

  // Runs from the current step to total_iters: sampling, logging, periodic
  // evaluation and checkpoints, a final evaluation and "final" checkpoint.
  // stop_at_step halts early without final artifacts (simulates an
  // interruption; resume from the last periodic checkpoint).
  FitResult fit(std::optional<int64_t> stop_at_step = std::nullopt);

  // Student metrics on a target-domain split.
  MetricReport evaluate(SplitTag split);

  // Atomic write (temp directory, then rename) of student/teacher/heads
  // parameters, optimizer state, and a manifest with arch, shape, step, and
  // the config fingerprint, under <run_dir>/checkpoints/<name>.
  std::string save_checkpoint(const std::string& name);
  // Restores all of the above; arch, shape, and fingerprint must match.
  void resume(const std::string& checkpoint_dir);

  SegmentationNetwork& student() { return *student_; }
  SegmentationNetwork& teacher() { return *teacher_; }
  ContrastiveHeads& heads() { return *heads_; }
  nn::AdamW& optimizer() { return *optimizer_; }
  int64_t step() const { return step_; }
  const TrainConfig& config() const { return config_; }

 private:
  void log_eval(int64_t at_step);
  void append_metrics(const StepMetrics& m);

  TrainConfig config_;
  TrainData data_;
  std::string run_dir_;
  std::unique_ptr<SegmentationNetwork> student_;
  std::unique_ptr<SegmentationNetwork> teacher_;
  std::unique_ptr<ContrastiveHeads> heads_;
  std::unique_ptr<nn::AdamW> optimizer_;
  int64_t step_ = 0;
  double best_miou_ = -1.0;
  int64_t best_step_ = -1;
};

}  // namespace siamuda
