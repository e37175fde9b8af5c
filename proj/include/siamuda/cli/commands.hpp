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

#include <memory>
#include <string>
#include <vector>

#include "siamuda/data/manifest.hpp"
#include "siamuda/data/store.hpp"
#include "siamuda/train/trainer.hpp"

namespace siamuda::cli {

struct CommandResult {
  int exit_code = 0;                   // 0 iff the command succeeded
  std::vector<std::string> artifacts;  // files/directories the command emitted
  std::string summary;                 // human-readable outcome (may be multi-line)
};

// One-line tile accounting: "parents=N tiles=N train=N test=N".
std::string tile_summary(const DatasetManifest& manifest);

// Parsed run configuration. Dataset geometry (tile shape, class list) is
// read from the dataset directories at open time, never from the config.
struct RunSpec {
  std::string source_dir;
  std::string target_dir;
  std::string out_dir;
  TrainConfig train;
};

// One JSON document with sections data/model/augment/loss/optim/schedule/
// run; every section and key optional except data.source, data.target and
// run.out. The first unknown or ill-typed key in document order raises
// ValueError naming it.
RunSpec parse_run_config(const std::string& json_text);

// Self-describing dataset directory: dataset.json ({"classes": [...],
// "height": H, "width": W, "channels": C, optional "images_root": dir}),
// manifest.tsv, and images/ + labels/ under images_root.
struct LoadedDataset {
  DatasetManifest manifest;
  std::unique_ptr<DatasetStore> store;
};
LoadedDataset open_dataset(const std::string& dir, DomainTag domain);

// Scratch location for staging outputs before the atomic rename; honours
// the SIAMUDA_CACHE environment variable, else the system temp directory.
std::string scratch_root();

// Entry point shared by main() and the tests; args exclude the program
// name. Never throws: failures come back as exit_code != 0 with the
// message in summary.
CommandResult run_command(const std::vector<std::string>& args);

}  // namespace siamuda::cli
