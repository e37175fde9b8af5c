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

#include <list>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "siamuda/core/types.hpp"
#include "siamuda/data/manifest.hpp"

namespace siamuda {

// Pixel source behind a manifest. Implementations are read-only after
// construction, so concurrent load_sample calls need no locking beyond
// the cache's own.
class DatasetStore {
 public:
  virtual ~DatasetStore() = default;
  virtual Image parent_image(const std::string& id) = 0;
  virtual std::optional<LabelMap> parent_label(const std::string& id) = 0;
  virtual std::vector<std::string> parent_ids() = 0;
};

// Directory layout: <root>/images/<id>.png, <root>/labels/<id>.png (labels
// optional per id). Keeps the most recently decoded parents in memory.
class DirectoryStore : public DatasetStore {
 public:
  explicit DirectoryStore(std::string root, size_t cache_capacity = 4);
  Image parent_image(const std::string& id) override;
  std::optional<LabelMap> parent_label(const std::string& id) override;
  std::vector<std::string> parent_ids() override;

 private:
  std::string root_;
  size_t capacity_;
  // LRU over decoded parents; front = most recent.
  std::list<std::pair<std::string, Image>> cache_;
};

// In-memory store used by the synthetic generator and tests.
class MemoryStore : public DatasetStore {
 public:
  void add(const std::string& id, Image image, std::optional<LabelMap> label);
  Image parent_image(const std::string& id) override;
  std::optional<LabelMap> parent_label(const std::string& id) override;
  std::vector<std::string> parent_ids() override;

 private:
  std::map<std::string, Image> images_;
  std::map<std::string, LabelMap> labels_;
};

// Parent descriptors for every images/<id>.png under root, sorted by id.
std::vector<ParentImage> discover_parents(const std::string& root);

// Crop at the recorded origin. Source samples always carry their label
// (missing label -> error); target samples carry one only in evaluation
// mode and only when ground truth exists.
DomainSample load_sample(const DatasetManifest& manifest, DatasetStore& store, size_t index,
                         bool eval_mode = false);

}  // namespace siamuda
