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

#include "siamuda/cli/commands.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "render.hpp"
#include "siamuda/cli/report.hpp"
#include "siamuda/core/metrics.hpp"
#include "siamuda/data/raster.hpp"
#include "siamuda/data/synth.hpp"
#include "siamuda/loss/losses.hpp"
#include "siamuda/model/network.hpp"
#include "siamuda/nn/archive.hpp"

namespace siamuda::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// --force discipline: an existing non-empty output is never overwritten
// silently; with --force it is removed first so reruns are idempotent.
void claim_output_dir(const fs::path& path, bool force, const char* what) {
  if (!fs::exists(path)) return;
  if (fs::is_directory(path) && fs::is_empty(path)) return;
  SIAMUDA_CHECK_VALUE(force,
                      what << " '" << path.string() << "' already exists; pass --force");
  fs::remove_all(path);
}

void claim_output_file(const fs::path& path, bool force) {
  if (!fs::exists(path)) return;
  SIAMUDA_CHECK_VALUE(force,
                      "output file '" << path.string() << "' already exists; pass --force");
  fs::remove_all(path);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) SIAMUDA_THROW(IoError, "cannot read '" << path << "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out.good()) SIAMUDA_THROW(IoError, "cannot write '" << path.string() << "'");
  out << text;
  out.flush();
  if (!out.good()) SIAMUDA_THROW(IoError, "write failed for '" << path.string() << "'");
}

// ---------------------------------------------------------------------------
// Run-config parsing. Sections and keys are dispatched in document order so
// the first offending key is the one named in the error.

using Handler = std::function<bool(const std::string&, const ordered_json&)>;

void walk(const ordered_json& obj, const std::string& prefix, const Handler& handle) {
  SIAMUDA_CHECK_VALUE(obj.is_object(), "config: " << (prefix.empty() ? "top level" : prefix)
                                                  << " must be an object");
  for (const auto& item : obj.items()) {
    SIAMUDA_CHECK_VALUE(handle(item.key(), item.value()),
                        "config: unknown key " << prefix << item.key());
  }
}

double as_number(const ordered_json& v, const char* where) {
  SIAMUDA_CHECK_VALUE(v.is_number(), "config: " << where << " must be a number");
  return v.get<double>();
}

int64_t as_integer(const ordered_json& v, const char* where) {
  SIAMUDA_CHECK_VALUE(v.is_number_integer(), "config: " << where << " must be an integer");
  return v.get<int64_t>();
}

uint64_t as_seed(const ordered_json& v, const char* where) {
  SIAMUDA_CHECK_VALUE(v.is_number_integer() && (v.is_number_unsigned() || v.get<int64_t>() >= 0),
                      "config: " << where << " must be a non-negative integer");
  return v.get<uint64_t>();
}

std::string as_string(const ordered_json& v, const char* where) {
  SIAMUDA_CHECK_VALUE(v.is_string(), "config: " << where << " must be a string");
  return v.get<std::string>();
}

std::pair<double, double> as_range(const ordered_json& v, const char* where) {
  SIAMUDA_CHECK_VALUE(v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number(),
                      "config: " << where << " must be [low, high]");
  return {v[0].get<double>(), v[1].get<double>()};
}

std::pair<int, int> as_size(const ordered_json& v, const char* where) {
  SIAMUDA_CHECK_VALUE(
      v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer(),
      "config: " << where << " must be [height, width]");
  return {v[0].get<int>(), v[1].get<int>()};
}

void parse_jitter(const ordered_json& obj, const std::string& prefix, JitterStrengths& j) {
  walk(obj, prefix, [&](const std::string& k, const ordered_json& v) {
    const std::string where = prefix + k;
    if (k == "brightness") j.brightness = as_number(v, where.c_str());
    else if (k == "contrast") j.contrast = as_number(v, where.c_str());
    else if (k == "saturation") j.saturation = as_number(v, where.c_str());
    else if (k == "hue") j.hue = as_number(v, where.c_str());
    else return false;
    return true;
  });
}

void parse_sim_aug(const ordered_json& obj, SimAugConfig& sim) {
  walk(obj, "augment.sim.", [&](const std::string& k, const ordered_json& v) {
    if (k == "crop") sim.crop_size = as_size(v, "augment.sim.crop");
    else if (k == "scale") sim.scale_range = as_range(v, "augment.sim.scale");
    else if (k == "jitter") parse_jitter(v, "augment.sim.jitter.", sim.jitter);
    else if (k == "jitter_prob") sim.jitter_prob = as_number(v, "augment.sim.jitter_prob");
    else if (k == "grayscale_prob") sim.grayscale_prob = as_number(v, "augment.sim.grayscale_prob");
    else if (k == "blur_prob") sim.blur_prob = as_number(v, "augment.sim.blur_prob");
    else if (k == "hflip_prob") sim.hflip_prob = as_number(v, "augment.sim.hflip_prob");
    else if (k == "vflip_prob") sim.vflip_prob = as_number(v, "augment.sim.vflip_prob");
    else if (k == "blur_sigma") sim.blur_sigma = as_range(v, "augment.sim.blur_sigma");
    else return false;
    return true;
  });
}

void parse_mix_aug(const ordered_json& obj, MixAugConfig& mix) {
  walk(obj, "augment.mix.", [&](const std::string& k, const ordered_json& v) {
    if (k == "jitter") parse_jitter(v, "augment.mix.jitter.", mix.jitter);
    else if (k == "jitter_prob") mix.jitter_prob = as_number(v, "augment.mix.jitter_prob");
    else if (k == "blur_prob") mix.blur_prob = as_number(v, "augment.mix.blur_prob");
    else if (k == "blur_sigma") mix.blur_sigma = as_range(v, "augment.mix.blur_sigma");
    else return false;
    return true;
  });
}

}  // namespace

std::string tile_summary(const DatasetManifest& manifest) {
  std::set<std::string> parents;
  size_t train = 0;
  for (const ManifestEntry& e : manifest.entries) {
    parents.insert(e.parent);
    if (e.split == SplitTag::kTrain) ++train;
  }
  char line[128];
  std::snprintf(line, sizeof(line), "parents=%zu tiles=%zu train=%zu test=%zu", parents.size(),
                manifest.entries.size(), train, manifest.entries.size() - train);
  return line;
}

RunSpec parse_run_config(const std::string& json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const std::exception& e) {
    SIAMUDA_THROW(ValueError, "config: not valid JSON: " << e.what());
  }
  RunSpec spec;
  TrainConfig& t = spec.train;
  walk(doc, "", [&](const std::string& key, const ordered_json& v) {
    if (key == "data") {
      walk(v, "data.", [&](const std::string& k, const ordered_json& x) {
        if (k == "source") spec.source_dir = as_string(x, "data.source");
        else if (k == "target") spec.target_dir = as_string(x, "data.target");
        else return false;
        return true;
      });
    } else if (key == "model") {
      walk(v, "model.", [&](const std::string& k, const ordered_json& x) {
        if (k == "arch") t.arch = as_string(x, "model.arch");
        else return false;
        return true;
      });
    } else if (key == "augment") {
      walk(v, "augment.", [&](const std::string& k, const ordered_json& x) {
        if (k == "sim") parse_sim_aug(x, t.sim_aug);
        else if (k == "mix") parse_mix_aug(x, t.mix_aug);
        else return false;
        return true;
      });
    } else if (key == "loss") {
      walk(v, "loss.", [&](const std::string& k, const ordered_json& x) {
        if (k == "beta") t.weights.beta = as_number(x, "loss.beta");
        else if (k == "gamma") t.weights.gamma = as_number(x, "loss.gamma");
        else if (k == "tau") t.tau = as_number(x, "loss.tau");
        else if (k == "ema_alpha") t.ema.alpha = as_number(x, "loss.ema_alpha");
        else return false;
        return true;
      });
    } else if (key == "optim") {
      walk(v, "optim.", [&](const std::string& k, const ordered_json& x) {
        if (k == "lr_backbone") t.optim.lr_backbone = as_number(x, "optim.lr_backbone");
        else if (k == "lr_heads") t.optim.lr_heads = as_number(x, "optim.lr_heads");
        else if (k == "beta1") t.optim.beta1 = as_number(x, "optim.beta1");
        else if (k == "beta2") t.optim.beta2 = as_number(x, "optim.beta2");
        else if (k == "weight_decay") t.optim.weight_decay = as_number(x, "optim.weight_decay");
        else return false;
        return true;
      });
    } else if (key == "schedule") {
      walk(v, "schedule.", [&](const std::string& k, const ordered_json& x) {
        if (k == "total_iters") t.schedule.total_iters = as_integer(x, "schedule.total_iters");
        else if (k == "warmup_iters")
          t.schedule.warmup_iters = as_integer(x, "schedule.warmup_iters");
        else if (k == "decay_floor") t.schedule.decay_floor = as_number(x, "schedule.decay_floor");
        else return false;
        return true;
      });
    } else if (key == "run") {
      walk(v, "run.", [&](const std::string& k, const ordered_json& x) {
        if (k == "out") spec.out_dir = as_string(x, "run.out");
        else if (k == "seed") t.seed = as_seed(x, "run.seed");
        else if (k == "batch_source") t.batch_source = int(as_integer(x, "run.batch_source"));
        else if (k == "batch_target") t.batch_target = int(as_integer(x, "run.batch_target"));
        else if (k == "eval_every") t.eval_every = as_integer(x, "run.eval_every");
        else if (k == "checkpoint_every")
          t.checkpoint_every = as_integer(x, "run.checkpoint_every");
        else return false;
        return true;
      });
    } else {
      return false;
    }
    return true;
  });
  SIAMUDA_CHECK_VALUE(!spec.source_dir.empty(), "config: data.source is required");
  SIAMUDA_CHECK_VALUE(!spec.target_dir.empty(), "config: data.target is required");
  return spec;
}

LoadedDataset open_dataset(const std::string& dir, DomainTag domain) {
  const fs::path root(dir);
  const fs::path meta = root / "dataset.json";
  if (!fs::exists(meta)) SIAMUDA_THROW(IoError, "dataset: missing " << meta.string());
  ordered_json j;
  try {
    j = ordered_json::parse(read_text_file(meta.string()));
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    SIAMUDA_THROW(ValueError, "dataset: " << meta.string() << " is not valid JSON: " << e.what());
  }
  SIAMUDA_CHECK_VALUE(j.is_object() && j.contains("classes") && j["classes"].is_array(),
                      "dataset: " << meta.string() << " must list classes");
  LoadedDataset d;
  for (const auto& name : j["classes"]) {
    SIAMUDA_CHECK_VALUE(name.is_string(), "dataset: class names must be strings");
    d.manifest.class_names.push_back(name.get<std::string>());
  }
  auto field = [&](const char* key) {
    SIAMUDA_CHECK_VALUE(j.contains(key) && j[key].is_number_integer(),
                        "dataset: " << meta.string() << " needs integer '" << key << "'");
    return j[key].get<int>();
  };
  d.manifest.shape = {field("height"), field("width"), field("channels"),
                      int(d.manifest.class_names.size())};
  d.manifest.shape.validate();
  d.manifest.domain = domain;
  const fs::path tsv = root / "manifest.tsv";
  if (!fs::exists(tsv)) SIAMUDA_THROW(IoError, "dataset: missing " << tsv.string());
  d.manifest.entries = load_manifest_entries(tsv.string());
  const std::string images_root =
      j.contains("images_root") ? as_string(j["images_root"], "images_root") : dir;
  d.store = std::make_unique<DirectoryStore>(images_root);
  return d;
}

std::string scratch_root() {
  if (const char* env = std::getenv("SIAMUDA_CACHE"); env != nullptr && *env != '\0') return env;
  return fs::temp_directory_path().string();
}

namespace {

void write_dataset_meta(const fs::path& dir, const std::vector<std::string>& classes, int height,
                        int width, int channels, const std::string& images_root = "") {
  ordered_json j;
  j["classes"] = classes;
  j["height"] = height;
  j["width"] = width;
  j["channels"] = channels;
  if (!images_root.empty()) j["images_root"] = images_root;
  write_text_file(dir / "dataset.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// prepare-data

struct PrepareArgs {
  std::string root, out, train_csv, test_csv, classes_csv;
  std::string domain = "source";
  int crop = 512, stride = 512, channels = 3;
  bool all_train = false, force = false;
};

CommandResult cmd_prepare(const PrepareArgs& a) {
  CommandResult r;
  SIAMUDA_CHECK_VALUE(fs::is_directory(a.root),
                      "prepare-data: dataset root '" << a.root << "' is not a directory");
  const fs::path out = a.out.empty() ? fs::path(a.root) : fs::path(a.out);
  fs::create_directories(out);

  std::vector<ParentImage> parents;
  if (fs::is_directory(fs::path(a.root) / "images")) parents = discover_parents(a.root);

  SIAMUDA_CHECK_VALUE(a.domain == "source" || a.domain == "target",
                      "prepare-data: domain must be source or target, got '" << a.domain << "'");
  const DomainTag domain = a.domain == "target" ? DomainTag::kTarget : DomainTag::kSource;
  const std::vector<std::string> classes =
      a.classes_csv.empty() ? isprs_class_names() : split_csv(a.classes_csv);

  SplitRule rule;
  if (a.all_train || (a.train_csv.empty() && a.test_csv.empty())) {
    for (const ParentImage& p : parents) rule.train_ids.push_back(p.id);
  } else {
    // Explicit split lists select a subset; rasters left off both lists
    // stay out of the manifest. Unknown ids still fail downstream.
    rule.train_ids = split_csv(a.train_csv);
    rule.test_ids = split_csv(a.test_csv);
    std::set<std::string> keep(rule.train_ids.begin(), rule.train_ids.end());
    keep.insert(rule.test_ids.begin(), rule.test_ids.end());
    std::erase_if(parents, [&](const ParentImage& p) { return keep.count(p.id) == 0; });
  }

  // The grid would silently keep a single window when the stride overruns
  // the raster; treat it as a misconfiguration instead.
  for (const ParentImage& p : parents) {
    SIAMUDA_CHECK_VALUE(a.stride <= std::min(p.height, p.width),
                        "prepare-data: stride " << a.stride << " exceeds image '" << p.id << "' ("
                                                << p.height << "x" << p.width << ")");
  }

  TilingSpec spec;
  spec.crop = a.crop;
  spec.stride = a.stride;
  const ShapeSpec shape{a.crop, a.crop, a.channels, int(classes.size())};
  const DatasetManifest manifest = build_manifest(parents, spec, rule, shape, classes, domain);

  const fs::path tsv = out / "manifest.tsv";
  claim_output_file(tsv, a.force);
  save_manifest_entries(tsv.string(), manifest.entries);
  const std::string images_root =
      fs::equivalent(out, fs::path(a.root)) ? std::string() : fs::absolute(a.root).string();
  claim_output_file(out / "dataset.json", a.force);
  write_dataset_meta(out, classes, a.crop, a.crop, a.channels, images_root);

  r.artifacts = {tsv.string(), (out / "dataset.json").string()};
  r.summary = tile_summary(manifest);
  if (parents.empty())
    r.summary += "\nwarning: no parent images under '" + a.root + "'; manifest is empty";
  if (spec.leaves_gaps())
    r.summary += "\nwarning: stride > crop skips pixels between windows";
  return r;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string out;
  uint64_t seed = 0;
  int num_images = 8, size = 128;
  double density = 0.25, noise = 0.02, shift_jitter = 0.0, train_frac = 0.75;
  std::vector<double> gain{1.0, 1.0, 1.0}, bias{0.0, 0.0, 0.0};
  std::vector<int> permute;
  bool force = false;
};

CommandResult cmd_synth(const SynthArgs& a) {
  CommandResult r;
  SIAMUDA_CHECK_VALUE(a.train_frac >= 0.0 && a.train_frac <= 1.0,
                      "synth: train fraction " << a.train_frac << " outside [0, 1]");
  SynthConfig config;
  config.seed = a.seed;
  config.num_images = a.num_images;
  config.shape = {a.size, a.size, 3, 4};
  config.shape_density = a.density;
  config.pixel_noise = a.noise;
  for (int c = 0; c < 3; ++c) {
    config.shift.gain[c] = a.gain[size_t(c)];
    config.shift.bias[c] = a.bias[size_t(c)];
  }
  if (!a.permute.empty()) {
    SIAMUDA_CHECK_VALUE(a.permute.size() == 3, "synth: channel permutation needs 3 entries");
    config.shift.permutation = {a.permute[0], a.permute[1], a.permute[2]};
  }
  config.shift.per_image_jitter = a.shift_jitter;
  config.validate();

  claim_output_dir(a.out, a.force, "output directory");
  // Stage in the scratch location, then move into place so a failed run
  // never leaves a half-written dataset behind.
  const fs::path stage = fs::path(scratch_root()) /
                         ("siamuda_synth_stage_" + std::to_string(::getpid()));
  fs::remove_all(stage);
  fs::create_directories(stage);
  write_synth_pair(stage.string(), config);

  const int n_train = int(std::llround(std::ceil(a.train_frac * config.num_images)));
  for (const char* domain : {"source", "target"}) {
    std::vector<ParentImage> parents;
    SplitRule rule;
    for (int i = 0; i < config.num_images; ++i) {
      char id[16];
      std::snprintf(id, sizeof(id), "img%03d", i);
      parents.push_back({id, a.size, a.size});
      (i < n_train ? rule.train_ids : rule.test_ids).push_back(id);
    }
    TilingSpec spec;
    spec.crop = a.size;
    spec.stride = a.size;
    const DatasetManifest manifest = build_manifest(
        parents, spec, rule, config.shape, synth_class_names(),
        std::string(domain) == "source" ? DomainTag::kSource : DomainTag::kTarget);
    save_manifest_entries((stage / domain / "manifest.tsv").string(), manifest.entries);
    write_dataset_meta(stage / domain, synth_class_names(), a.size, a.size, 3);
  }

  fs::create_directories(fs::path(a.out).parent_path().empty() ? "." : fs::path(a.out).parent_path());
  std::error_code ec;
  fs::rename(stage, a.out, ec);
  if (ec) {  // staging lives on another filesystem; fall back to a copy
    fs::copy(stage, a.out, fs::copy_options::recursive);
    fs::remove_all(stage);
  }

  char line[160];
  std::snprintf(line, sizeof(line),
                "synthesized %d images per domain (%dx%d, 4 classes): train=%d test=%d",
                config.num_images, a.size, a.size, n_train, config.num_images - n_train);
  r.summary = line;
  r.artifacts = {(fs::path(a.out) / "dataset.json").string(),
                 (fs::path(a.out) / "source/manifest.tsv").string(),
                 (fs::path(a.out) / "target/manifest.tsv").string()};
  return r;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string config_path, resume, out;
  uint64_t seed = 0;
  bool has_seed = false;
  int64_t iters = -1;
  bool force = false;
};

CommandResult cmd_train(const TrainArgs& a) {
  CommandResult r;
  RunSpec spec = parse_run_config(read_text_file(a.config_path));
  // Flags outrank the config file.
  if (a.has_seed) spec.train.seed = a.seed;
  if (a.iters >= 0) spec.train.schedule.total_iters = a.iters;
  if (!a.out.empty()) spec.out_dir = a.out;
  SIAMUDA_CHECK_VALUE(!spec.out_dir.empty(), "config: run.out is required (or pass --out)");

  LoadedDataset source = open_dataset(spec.source_dir, DomainTag::kSource);
  LoadedDataset target = open_dataset(spec.target_dir, DomainTag::kTarget);
  spec.train.shape = source.manifest.shape;

  if (a.resume.empty()) claim_output_dir(spec.out_dir, a.force, "run directory");
  fs::create_directories(spec.out_dir);

  Trainer trainer(spec.train,
                  {&source.manifest, source.store.get(), &target.manifest, target.store.get()},
                  spec.out_dir);
  if (!a.resume.empty()) trainer.resume(a.resume);
  const FitResult fit = trainer.fit();

  r.artifacts.push_back(fit.metrics_path);
  if (!fit.final_checkpoint.empty()) r.artifacts.push_back(fit.final_checkpoint);
  if (!fit.best_checkpoint.empty()) r.artifacts.push_back(fit.best_checkpoint);
  std::ostringstream s;
  s << "trained to step " << trainer.step();
  if (fit.best_step >= 0) {
    char miou[32];
    std::snprintf(miou, sizeof(miou), "%.4f", fit.best_miou);
    s << "; best target mIoU " << miou << " at step " << fit.best_step;
  }
  s << "; run directory " << spec.out_dir;
  r.summary = s.str();
  return r;
}

// ---------------------------------------------------------------------------
// eval

struct NetFromCheckpoint {
  std::unique_ptr<SegmentationNetwork> net;
  ShapeSpec shape;
  int64_t step = 0;
};

NetFromCheckpoint load_student(const std::string& checkpoint) {
  const fs::path meta = fs::path(checkpoint) / "manifest.json";
  if (!fs::exists(meta)) SIAMUDA_THROW(IoError, "checkpoint: missing " << meta.string());
  ordered_json j;
  try {
    j = ordered_json::parse(read_text_file(meta.string()));
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    SIAMUDA_THROW(ValueError, "checkpoint: bad manifest.json: " << e.what());
  }
  NetFromCheckpoint out;
  out.shape = {j.at("shape").at("height").get<int>(), j.at("shape").at("width").get<int>(),
               j.at("shape").at("channels").get<int>(), j.at("shape").at("num_classes").get<int>()};
  out.step = j.at("step").get<int64_t>();
  out.net = build_segmentation_network(j.at("arch").get<std::string>(), out.shape.channels,
                                       out.shape.num_classes, 0);
  out.net->load_state(nn::load_archive((fs::path(checkpoint) / "student.bin").string()));
  return out;
}

std::string metric_table(const MetricReport& report, const std::vector<std::string>& names) {
  std::ostringstream t;
  char line[128];
  std::snprintf(line, sizeof(line), "%-20s %8s %8s\n", "class", "iou", "f1");
  t << line;
  for (size_t c = 0; c < names.size(); ++c) {
    if (report.has_support[c]) {
      std::snprintf(line, sizeof(line), "%-20s %8.4f %8.4f\n", names[c].c_str(),
                    report.per_class_iou[c], report.per_class_f1[c]);
    } else {
      std::snprintf(line, sizeof(line), "%-20s %8s %8s\n", names[c].c_str(), "nan", "nan");
    }
    t << line;
  }
  std::snprintf(line, sizeof(line), "%-20s %8.4f %8.4f  (%zu pixels)", "mean",
                report.mean_iou, report.mean_f1, size_t(report.pixel_count));
  t << line;
  return t.str();
}

struct EvalArgs {
  std::string checkpoint, data, split = "test", out = "eval_report.json";
  bool force = false;
};

CommandResult cmd_eval(const EvalArgs& a) {
  CommandResult r;
  NetFromCheckpoint student = load_student(a.checkpoint);
  LoadedDataset ds = open_dataset(a.data, DomainTag::kTarget);
  SIAMUDA_CHECK_SHAPE(ds.manifest.shape == student.shape,
                      "eval: checkpoint tile shape does not match dataset '" << a.data << "'");
  const MetricReport report =
      evaluate_tiles(*student.net, ds.manifest, *ds.store, split_tag_from_string(a.split));
  claim_output_file(a.out, a.force);
  write_text_file(a.out, metric_report_to_json(report, ds.manifest.class_names) + "\n");
  r.artifacts = {a.out};
  r.summary = metric_table(report, ds.manifest.class_names);
  return r;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::string run, out, checkpoint, data, palette_path;
  int overlays = 4;
  bool force = false;
};

std::string safe_name(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    if (c == '@' || c == ',' || c == '/') c = '_';
  }
  return out;
}

std::string html_section(const std::string& title, const std::string& body) {
  return "<section>\n<h2>" + title + "</h2>\n" + body + "\n</section>\n";
}

CommandResult cmd_report(const ReportArgs& a) {
  CommandResult r;
  SIAMUDA_CHECK_VALUE(fs::is_directory(a.run),
                      "report: run directory '" << a.run << "' does not exist");
  claim_output_dir(a.out, a.force, "report directory");
  const fs::path out(a.out);
  fs::create_directories(out);

  // Loss curves from the metrics ledger.
  std::vector<std::array<double, 7>> rows;
  const fs::path csv = fs::path(a.run) / "metrics.csv";
  if (fs::exists(csv)) {
    std::ifstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::array<double, 7> row{};
      std::istringstream ls(line);
      std::string cell;
      for (int c = 0; c < 7; ++c) {
        SIAMUDA_CHECK_VALUE(std::getline(ls, cell, ','),
                            "report: malformed metrics row '" << line << "'");
        row[size_t(c)] = std::stod(cell);
      }
      rows.push_back(row);
    }
  }
  std::string curves_html = "<p class=\"placeholder\">no data</p>";
  if (!rows.empty() && render_loss_curves(rows, (out / "loss_curves.png").string())) {
    curves_html = "<img src=\"loss_curves.png\" alt=\"loss curves\">";
    r.artifacts.push_back((out / "loss_curves.png").string());
  }

  // Per-class IoU bars from the newest evaluation report.
  std::string bars_html = "<p class=\"placeholder\">no data</p>";
  {
    const fs::path eval_dir = fs::path(a.run) / "eval";
    fs::path newest;
    int64_t newest_step = -1;
    if (fs::is_directory(eval_dir)) {
      for (const auto& entry : fs::directory_iterator(eval_dir)) {
        const std::string stem = entry.path().stem().string();
        if (stem.rfind("step_", 0) != 0 || entry.path().extension() != ".json") continue;
        const int64_t step = std::atoll(stem.c_str() + 5);
        if (step > newest_step) {
          newest_step = step;
          newest = entry.path();
        }
      }
    }
    if (newest_step >= 0) {
      const ordered_json j = ordered_json::parse(read_text_file(newest.string()));
      std::vector<std::string> names;
      std::vector<double> iou;
      std::vector<uint8_t> support;
      for (const auto& item : j.items()) {
        if (item.key().rfind("iou.", 0) != 0) continue;
        names.push_back(item.key().substr(4));
        const std::string v = item.value().get<std::string>();
        support.push_back(v != "nan");
        iou.push_back(v == "nan" ? 0.0 : std::stod(v));
      }
      if (!names.empty() && render_iou_bars(names, iou, support, (out / "iou_bars.png").string())) {
        std::ostringstream b;
        b << "<img src=\"iou_bars.png\" alt=\"per-class IoU at step " << newest_step << "\">";
        bars_html = b.str();
        r.artifacts.push_back((out / "iou_bars.png").string());
      }
    }
  }

  // Prediction overlays: palette-mapped argmax over the first test tiles.
  std::string overlays_html = "<p class=\"placeholder\">no data</p>";
  if (!a.checkpoint.empty() && !a.data.empty()) {
    NetFromCheckpoint student = load_student(a.checkpoint);
    LoadedDataset ds = open_dataset(a.data, DomainTag::kTarget);
    SIAMUDA_CHECK_SHAPE(ds.manifest.shape == student.shape,
                        "report: checkpoint tile shape does not match dataset '" << a.data << "'");
    const Palette palette = a.palette_path.empty()
                                ? default_palette(ds.manifest.shape.num_classes)
                                : load_palette(a.palette_path);
    palette.validate(ds.manifest.shape.num_classes);
    std::vector<size_t> indices = ds.manifest.split_indices(SplitTag::kTest);
    if (indices.size() > size_t(std::max(a.overlays, 0)))
      indices.resize(size_t(std::max(a.overlays, 0)));
    std::ostringstream cells;
    for (size_t idx : indices) {
      const DomainSample sample = load_sample(ds.manifest, *ds.store, idx, true);
      const LabelMap pred = argmax_labels(forward_segmentation(*student.net, sample.image));
      const std::string base = safe_name(sample.id);
      write_image((out / ("tile_" + base + ".png")).string(), sample.image);
      write_image((out / ("overlay_" + base + ".png")).string(), palette_map(pred, palette));
      r.artifacts.push_back((out / ("overlay_" + base + ".png")).string());
      cells << "<figure><figcaption>" << sample.id << "</figcaption>"
            << "<img src=\"tile_" << base << ".png\" alt=\"input\"> "
            << "<img src=\"overlay_" << base << ".png\" alt=\"prediction\">";
      if (sample.label.has_value()) {
        write_image((out / ("truth_" + base + ".png")).string(),
                    palette_map(*sample.label, palette));
        cells << " <img src=\"truth_" << base << ".png\" alt=\"ground truth\">";
      }
      cells << "</figure>\n";
    }
    if (!indices.empty()) overlays_html = cells.str();
  }

  std::ostringstream html;
  html << "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
       << "<title>training report</title>\n<style>\n"
       << "body { font-family: sans-serif; margin: 2rem; }\n"
       << "img { max-width: 100%; image-rendering: pixelated; }\n"
       << "figure { display: inline-block; margin: 0.5rem; }\n"
       << ".placeholder { color: #888; font-style: italic; }\n"
       << "</style>\n</head>\n<body>\n<h1>training report</h1>\n"
       << html_section("Losses", curves_html) << html_section("Per-class IoU", bars_html)
       << html_section("Predictions", overlays_html) << "</body>\n</html>\n";
  write_text_file(out / "index.html", html.str());
  r.artifacts.push_back((out / "index.html").string());
  r.summary = "report written to " + (out / "index.html").string();
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------

CommandResult run_command(const std::vector<std::string>& args) {
  CLI::App app{"unsupervised domain adaptation for semantic segmentation"};
  app.name("siamuda");
  app.require_subcommand(1);

  PrepareArgs prep;
  CLI::App* prep_cmd =
      app.add_subcommand("prepare-data", "tile a raster dataset into a training manifest");
  prep_cmd->add_option("--root", prep.root, "dataset root with images/ (and labels/)")
      ->required();
  prep_cmd->add_option("--out", prep.out, "output directory (default: the root itself)");
  prep_cmd->add_option("--crop", prep.crop, "tile side in pixels");
  prep_cmd->add_option("--stride", prep.stride, "tiling stride in pixels");
  prep_cmd->add_option("--train", prep.train_csv, "comma-separated training parent ids");
  prep_cmd->add_option("--test", prep.test_csv, "comma-separated test parent ids");
  prep_cmd->add_flag("--all-train", prep.all_train, "put every parent in the training split");
  prep_cmd->add_option("--classes", prep.classes_csv,
                       "comma-separated class names (default: ISPRS six)");
  prep_cmd->add_option("--channels", prep.channels, "image channel count");
  prep_cmd->add_option("--domain", prep.domain, "source or target");
  prep_cmd->add_flag("--force", prep.force, "overwrite existing outputs");
  uint64_t prep_seed = 0;
  prep_cmd->add_option("--seed", prep_seed, "accepted for uniformity; tiling is deterministic");

  SynthArgs synth;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "generate the paired-domain synthetic dataset");
  synth_cmd->add_option("--out", synth.out, "output directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "generator seed");
  synth_cmd->add_option("--num-images", synth.num_images, "images per domain");
  synth_cmd->add_option("--size", synth.size, "square image side in pixels");
  synth_cmd->add_option("--density", synth.density, "fraction of pixels covered by shapes");
  synth_cmd->add_option("--noise", synth.noise, "additive pixel noise amplitude");
  synth_cmd->add_option("--shift-gain", synth.gain, "per-channel gain of the domain shift")
      ->delimiter(',')
      ->expected(3);
  synth_cmd->add_option("--shift-bias", synth.bias, "per-channel bias of the domain shift")
      ->delimiter(',')
      ->expected(3);
  synth_cmd->add_option("--shift-permute", synth.permute, "channel permutation, e.g. 2,0,1")
      ->delimiter(',')
      ->expected(3);
  synth_cmd->add_option("--shift-jitter", synth.shift_jitter, "per-image shift jitter");
  synth_cmd->add_option("--train-frac", synth.train_frac, "fraction of parents in train");
  synth_cmd->add_flag("--force", synth.force, "overwrite existing outputs");

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "run the adaptation training loop");
  train_cmd->add_option("--config", train.config_path, "JSON run configuration")->required();
  train_cmd->add_option("--resume", train.resume, "checkpoint directory to resume from");
  train_cmd->add_option("--out", train.out, "run directory (overrides run.out)");
  CLI::Option* seed_opt =
      train_cmd->add_option("--seed", train.seed, "seed (overrides run.seed)");
  train_cmd->add_option("--iters", train.iters, "total iterations (overrides schedule)");
  train_cmd->add_flag("--force", train.force, "overwrite an existing run directory");

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a labeled split");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "checkpoint directory")->required();
  eval_cmd->add_option("--data", eval.data, "dataset directory")->required();
  eval_cmd->add_option("--split", eval.split, "train or test");
  eval_cmd->add_option("--out", eval.out, "metric report path");
  eval_cmd->add_flag("--force", eval.force, "overwrite an existing report");
  uint64_t eval_seed = 0;
  eval_cmd->add_option("--seed", eval_seed, "accepted for uniformity; evaluation is deterministic");

  ReportArgs report;
  CLI::App* report_cmd =
      app.add_subcommand("report", "render loss curves, IoU bars, and prediction overlays");
  report_cmd->add_option("--run", report.run, "run directory with metrics.csv and eval/")
      ->required();
  report_cmd->add_option("--out", report.out, "report directory")->required();
  report_cmd->add_option("--checkpoint", report.checkpoint, "checkpoint for overlays");
  report_cmd->add_option("--data", report.data, "dataset directory for overlays");
  report_cmd->add_option("--overlays", report.overlays, "number of test tiles to render");
  report_cmd->add_option("--palette", report.palette_path, "palette JSON ({\"colors\": ...})");
  report_cmd->add_flag("--force", report.force, "overwrite an existing report directory");
  uint64_t report_seed = 0;
  report_cmd->add_option("--seed", report_seed,
                         "accepted for uniformity; rendering is deterministic");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    CommandResult r;
    r.summary = app.help();
    return r;
  } catch (const CLI::ParseError& e) {
    CommandResult r;
    r.exit_code = 2;
    r.summary = std::string("error: ") + e.what();
    return r;
  }

  try {
    train.has_seed = seed_opt->count() > 0;
    if (prep_cmd->parsed()) return cmd_prepare(prep);
    if (synth_cmd->parsed()) return cmd_synth(synth);
    if (train_cmd->parsed()) return cmd_train(train);
    if (eval_cmd->parsed()) return cmd_eval(eval);
    if (report_cmd->parsed()) return cmd_report(report);
  } catch (const Error& e) {
    CommandResult r;
    r.exit_code = 1;
    r.summary = std::string("error: ") + e.what();
    return r;
  } catch (const std::exception& e) {
    CommandResult r;
    r.exit_code = 1;
    r.summary = std::string("error: ") + e.what();
    return r;
  }
  CommandResult r;
  r.exit_code = 2;
  r.summary = "error: no command given";
  return r;
}

}  // namespace siamuda::cli
