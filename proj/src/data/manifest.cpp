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

#include "siamuda/data/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace siamuda {

std::string to_string(SplitTag tag) { return tag == SplitTag::kTrain ? "train" : "test"; }

SplitTag split_tag_from_string(const std::string& s) {
  if (s == "train") return SplitTag::kTrain;
  if (s == "test") return SplitTag::kTest;
  SIAMUDA_THROW(ValueError, "split tag must be 'train' or 'test', got '" << s << "'");
}

std::vector<size_t> DatasetManifest::split_indices(SplitTag tag) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < entries.size(); ++i)
    if (entries[i].split == tag) out.push_back(i);
  return out;
}

DatasetManifest build_manifest(const std::vector<ParentImage>& parents, const TilingSpec& spec,
                               const SplitRule& rule, const ShapeSpec& shape,
                               std::vector<std::string> class_names, DomainTag domain) {
  shape.validate();
  SIAMUDA_CHECK_VALUE(int(class_names.size()) == shape.num_classes,
                      "build_manifest: " << class_names.size() << " class names for "
                                         << shape.num_classes << " classes");

  std::set<std::string> known;
  for (const auto& p : parents) {
    SIAMUDA_CHECK_VALUE(known.insert(p.id).second,
                        "build_manifest: duplicate parent id '" << p.id << "'");
  }
  std::map<std::string, SplitTag> assignment;
  for (const auto& id : rule.train_ids) {
    SIAMUDA_CHECK_VALUE(known.count(id), "build_manifest: split list names unknown image id '"
                                             << id << "'");
    SIAMUDA_CHECK_VALUE(assignment.emplace(id, SplitTag::kTrain).second,
                        "build_manifest: image id '" << id << "' assigned twice");
  }
  for (const auto& id : rule.test_ids) {
    SIAMUDA_CHECK_VALUE(known.count(id), "build_manifest: split list names unknown image id '"
                                             << id << "'");
    SIAMUDA_CHECK_VALUE(assignment.emplace(id, SplitTag::kTest).second,
                        "build_manifest: image id '" << id << "' assigned twice");
  }

  std::vector<ParentImage> ordered = parents;
  std::sort(ordered.begin(), ordered.end(),
            [](const ParentImage& a, const ParentImage& b) { return a.id < b.id; });

  DatasetManifest manifest;
  manifest.shape = shape;
  manifest.class_names = std::move(class_names);
  manifest.domain = domain;
  for (const auto& p : ordered) {
    const auto it = assignment.find(p.id);
    SIAMUDA_CHECK_VALUE(it != assignment.end(),
                        "build_manifest: image id '" << p.id << "' missing from split lists");
    for (const TileOrigin& o : tile_origins(p.height, p.width, spec)) {
      manifest.entries.push_back({p.id, o.row, o.col, it->second});
    }
  }
  return manifest;
}

void save_manifest_entries(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path);
  if (!out.good()) SIAMUDA_THROW(IoError, "manifest: cannot open for write: " << path);
  for (const auto& e : entries) {
    out << e.parent << '\t' << e.row << '\t' << e.col << '\t' << to_string(e.split) << '\n';
  }
  SIAMUDA_CHECK(out.good(), "manifest: write failed: " << path);
}

std::vector<ManifestEntry> load_manifest_entries(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) SIAMUDA_THROW(IoError, "manifest: cannot open: " << path);
  std::vector<ManifestEntry> entries;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    ManifestEntry e;
    std::string split;
    if (!(std::getline(ls, e.parent, '\t') && (ls >> e.row) && ls.get() == '\t' &&
          (ls >> e.col) && ls.get() == '\t' && std::getline(ls, split))) {
      SIAMUDA_THROW(ValueError, "manifest: malformed line " << lineno << " in " << path);
    }
    e.split = split_tag_from_string(split);
    entries.push_back(std::move(e));
  }
  return entries;
}

std::string tile_id(const std::string& parent, int row, int col) {
  std::ostringstream os;
  os << parent << '@' << row << ',' << col;
  return os.str();
}

}  // namespace siamuda
