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

#include <string>
#include <vector>

#include "siamuda/core/types.hpp"
#include "siamuda/data/tiling.hpp"

namespace siamuda {

enum class SplitTag { kTrain, kTest };

std::string to_string(SplitTag tag);
SplitTag split_tag_from_string(const std::string& s);

struct ManifestEntry {
  std::string parent;
  int row = 0;
  int col = 0;
  SplitTag split = SplitTag::kTrain;
};

// Parent raster described by id and size only; pixel data stays on disk
// until a sample is loaded.
struct ParentImage {
  std::string id;
  int height = 0;
  int width = 0;
};

// Tiles of one parent never straddle splits: membership is decided per
// parent id. Every parent must appear in exactly one list.
struct SplitRule {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  ShapeSpec shape;
  std::vector<std::string> class_names;
  DomainTag domain = DomainTag::kSource;

  size_t size() const { return entries.size(); }
  std::vector<size_t> split_indices(SplitTag tag) const;
};

// Entries ordered by (parent id, row, col); ids sort lexicographically.
DatasetManifest build_manifest(const std::vector<ParentImage>& parents, const TilingSpec& spec,
                               const SplitRule& rule, const ShapeSpec& shape,
                               std::vector<std::string> class_names, DomainTag domain);

// Line format: <parent_id>\t<row>\t<col>\t<split>.
void save_manifest_entries(const std::string& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> load_manifest_entries(const std::string& path);

// "<parent>@<row>,<col>"; the id alone re-locates a tile.
std::string tile_id(const std::string& parent, int row, int col);

}  // namespace siamuda
