/*
 * Copyright 2026 The clay Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clay/layout/screen.hpp"

namespace clay::pipeline {

/// One admissible screen found on disk. The raster is read on demand.
struct StoredScreen {
  std::string source_id;
  std::filesystem::path hierarchy_path;
  std::filesystem::path image_path;
  ViewHierarchy hierarchy;

  Screen load() const;
};

/// Reads `json_path` and its raster. Without `image_path`, looks for a .png,
/// .jpg or .jpeg file with the same stem next to the JSON file.
Screen load_screen(const std::filesystem::path& json_path, const std::filesystem::path& image_path = {});

/// Loads every screen of `store` whose id is in `ids` (all when `ids` is empty).
std::vector<Screen> load_screens(const std::vector<StoredScreen>& store, const std::vector<std::string>& ids = {});

struct CorpusStats {
  std::int64_t screens = 0;
  std::int64_t nodes = 0;
  std::int64_t packages = 0;
  std::int64_t inadmissible = 0;
  std::int64_t dropped_nodes = 0;
  std::map<std::string, std::int64_t> class_histogram;  // terminal class name -> count
  std::map<std::string, std::int64_t> label_histogram;  // gold type -> count

  nlohmann::json to_json() const;
  std::string to_text(int top = 20) const;
};

struct ScreenStore {
  std::vector<StoredScreen> screens;
  std::vector<std::string> warnings;  // unpaired files, parse failures
  CorpusStats stats;
};

/// Pairs `<id>.json` with `<id>.png|.jpg|.jpeg` in `corpus_dir`, parses the
/// hierarchies, and keeps admissible screens sorted by id.
ScreenStore ingest(const std::filesystem::path& corpus_dir);

CorpusStats compute_stats(const std::vector<StoredScreen>& screens);

enum class Split { train = 0, validation = 1, test = 2 };

struct DatasetSplit {
  std::array<std::vector<std::string>, 3> ids;  // source ids per split
  std::array<double, 3> ratios{0.75, 0.10, 0.15};
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  const std::vector<std::string>& operator[](Split s) const { return ids[static_cast<std::size_t>(s)]; }
  nlohmann::json to_json() const;
  static DatasetSplit from_json(const nlohmann::json& j);
};

/// Position of `package` in [0, 1), from a seeded 64-bit FNV-1a hash.
double package_position(const std::string& package, std::uint64_t seed);

/// Package-wise split: each package lands in the bucket of the cumulative
/// ratio range containing its hashed position. Deterministic per seed.
struct ScreenKey {
  std::string source_id;
  std::string package;
};

DatasetSplit split(const std::vector<ScreenKey>& screens, std::array<double, 3> ratios, std::uint64_t seed);
DatasetSplit split(const std::vector<StoredScreen>& screens, std::array<double, 3> ratios, std::uint64_t seed);
DatasetSplit split(const std::vector<Screen>& screens, std::array<double, 3> ratios, std::uint64_t seed);

}  // namespace clay::pipeline
