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

#include "siamuda/data/store.hpp"

#include <algorithm>
#include <filesystem>

#include "siamuda/data/raster.hpp"

namespace siamuda {

namespace fs = std::filesystem;

DirectoryStore::DirectoryStore(std::string root, size_t cache_capacity)
    : root_(std::move(root)), capacity_(std::max<size_t>(1, cache_capacity)) {
  SIAMUDA_CHECK_VALUE(fs::is_directory(root_), "DirectoryStore: no such directory: " << root_);
}

Image DirectoryStore::parent_image(const std::string& id) {
  for (auto it = cache_.begin(); it != cache_.end(); ++it) {
    if (it->first == id) {
      cache_.splice(cache_.begin(), cache_, it);
      return cache_.front().second;
    }
  }
  Image img = read_image(root_ + "/images/" + id + ".png");
  cache_.emplace_front(id, img);
  if (cache_.size() > capacity_) cache_.pop_back();
  return img;
}

std::optional<LabelMap> DirectoryStore::parent_label(const std::string& id) {
  const std::string path = root_ + "/labels/" + id + ".png";
  if (!fs::exists(path)) return std::nullopt;
  return read_label(path);
}

std::vector<std::string> DirectoryStore::parent_ids() {
  std::vector<std::string> ids;
  const fs::path dir = fs::path(root_) / "images";
  SIAMUDA_CHECK_VALUE(fs::is_directory(dir), "DirectoryStore: no images directory under " << root_);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".png") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

void MemoryStore::add(const std::string& id, Image image, std::optional<LabelMap> label) {
  SIAMUDA_CHECK_VALUE(!images_.count(id), "MemoryStore: duplicate id '" << id << "'");
  images_.emplace(id, std::move(image));
  if (label) labels_.emplace(id, std::move(*label));
}

Image MemoryStore::parent_image(const std::string& id) {
  const auto it = images_.find(id);
  if (it == images_.end()) SIAMUDA_THROW(IoError, "MemoryStore: missing image '" << id << "'");
  return it->second;
}

std::optional<LabelMap> MemoryStore::parent_label(const std::string& id) {
  const auto it = labels_.find(id);
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> MemoryStore::parent_ids() {
  std::vector<std::string> ids;
  for (const auto& [id, img] : images_) ids.push_back(id);
  return ids;
}

std::vector<ParentImage> discover_parents(const std::string& root) {
  DirectoryStore probe(root);
  std::vector<ParentImage> parents;
  for (const auto& id : probe.parent_ids()) {
    const auto [h, w] = read_image_size(root + "/images/" + id + ".png");
    parents.push_back({id, h, w});
  }
  return parents;
}

DomainSample load_sample(const DatasetManifest& manifest, DatasetStore& store, size_t index,
                         bool eval_mode) {
  SIAMUDA_CHECK_VALUE(index < manifest.entries.size(),
                      "load_sample: index " << index << " out of range "
                                            << manifest.entries.size());
  const ManifestEntry& e = manifest.entries[index];
  const int crop_h = manifest.shape.height, crop_w = manifest.shape.width;

  Image parent = store.parent_image(e.parent);
  SIAMUDA_CHECK_SHAPE(parent.channels == manifest.shape.channels,
                      "load_sample: parent '" << e.parent << "' has " << parent.channels
                                              << " channels, manifest wants "
                                              << manifest.shape.channels);
  SIAMUDA_CHECK_SHAPE(e.row + crop_h <= parent.height && e.col + crop_w <= parent.width,
                      "load_sample: tile at (" << e.row << "," << e.col << ") overruns parent '"
                                               << e.parent << "' (" << parent.height << "x"
                                               << parent.width << ")");

  DomainSample sample;
  sample.domain = manifest.domain;
  sample.id = tile_id(e.parent, e.row, e.col);
  sample.image = Image(crop_h, crop_w, parent.channels);
  for (int y = 0; y < crop_h; ++y)
    for (int x = 0; x < crop_w; ++x)
      for (int c = 0; c < parent.channels; ++c)
        sample.image.at(y, x, c) = parent.at(e.row + y, e.col + x, c);

  const bool wants_label =
      manifest.domain == DomainTag::kSource || (manifest.domain == DomainTag::kTarget && eval_mode);
  if (wants_label) {
    std::optional<LabelMap> parent_label = store.parent_label(e.parent);
    if (manifest.domain == DomainTag::kSource) {
      SIAMUDA_CHECK_VALUE(parent_label.has_value(),
                          "load_sample: source parent '" << e.parent << "' has no label");
    }
    if (parent_label) {
      SIAMUDA_CHECK_SHAPE(parent_label->height == parent.height &&
                              parent_label->width == parent.width,
                          "load_sample: label size " << parent_label->height << "x"
                                                     << parent_label->width
                                                     << " does not match image " << parent.height
                                                     << "x" << parent.width << " for '" << e.parent
                                                     << "'");
      LabelMap crop(crop_h, crop_w);
      for (int y = 0; y < crop_h; ++y)
        for (int x = 0; x < crop_w; ++x) crop.at(y, x) = parent_label->at(e.row + y, e.col + x);
      sample.label = std::move(crop);
    }
  }
  sample.validate();
  return sample;
}

}  // namespace siamuda
