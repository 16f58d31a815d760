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

#include "clay/pipeline/dataset.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "clay/error.hpp"
#include "clay/heuristic/labeler.hpp"

namespace clay::pipeline {

namespace fs = std::filesystem;

Screen StoredScreen::load() const {
  Screen s;
  s.hierarchy = hierarchy;
  s.screenshot = read_image(image_path);
  s.source_id = source_id;
  return s;
}

Screen load_screen(const fs::path& json_path, const fs::path& image_path) {
  fs::path image = image_path;
  if (image.empty()) {
    for (const char* ext : {".png", ".jpg", ".jpeg"}) {
      fs::path candidate = json_path;
      candidate.replace_extension(ext);
      if (fs::exists(candidate)) {
        image = candidate;
        break;
      }
    }
    if (image.empty()) throw DataError("no screenshot next to " + json_path.string());
  }
  Screen s;
  s.hierarchy = load_hierarchy(json_path.string()).hierarchy;
  s.screenshot = read_image(image);
  s.source_id = json_path.stem().string();
  return s;
}

std::vector<Screen> load_screens(const std::vector<StoredScreen>& store, const std::vector<std::string>& ids) {
  std::vector<Screen> out;
  if (ids.empty()) {
    for (const auto& s : store) out.push_back(s.load());
    return out;
  }
  std::map<std::string, const StoredScreen*> by_id;
  for (const auto& s : store) by_id[s.source_id] = &s;
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError("screen '" + id + "' is not in the corpus");
    out.push_back(it->second->load());
  }
  return out;
}

nlohmann::json CorpusStats::to_json() const {
  return {{"screens", screens},
          {"nodes", nodes},
          {"packages", packages},
          {"inadmissible", inadmissible},
          {"dropped_nodes", dropped_nodes},
          {"class_histogram", class_histogram},
          {"label_histogram", label_histogram}};
}

std::string CorpusStats::to_text(int top) const {
  std::ostringstream os;
  os << "screens " << screens << "\nnodes " << nodes << "\npackages " << packages << "\ninadmissible " << inadmissible
     << "\ndropped_nodes " << dropped_nodes << "\n";
  std::vector<std::pair<std::string, std::int64_t>> rows(class_histogram.begin(), class_histogram.end());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  os << "top classes:\n";
  for (std::size_t i = 0; i < rows.size() && static_cast<int>(i) < top; ++i)
    os << "  " << std::left << std::setw(32) << rows[i].first << rows[i].second << "\n";
  if (!label_histogram.empty()) {
    os << "labels:\n";
    for (const auto& [k, v] : label_histogram) os << "  " << std::left << std::setw(32) << k << v << "\n";
  }
  return os.str();
}

CorpusStats compute_stats(const std::vector<StoredScreen>& screens) {
  CorpusStats st;
  std::set<std::string> packages;
  for (const auto& s : screens) {
    ++st.screens;
    packages.insert(s.hierarchy.package_name);
    for (const Node* n : preorder(s.hierarchy)) {
      ++st.nodes;
      ++st.class_histogram[std::string(heuristic::terminal_class_segment(n->android_class))];
      if (n->label) ++st.label_histogram[std::string(to_string(*n->label))];
    }
  }
  st.packages = static_cast<std::int64_t>(packages.size());
  return st;
}

ScreenStore ingest(const fs::path& corpus_dir) {
  if (!fs::is_directory(corpus_dir)) throw DataError("not a directory: " + corpus_dir.string());
  std::map<std::string, fs::path> jsons, images;
  for (const auto& e : fs::directory_iterator(corpus_dir)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    const auto stem = e.path().stem().string();
    if (ext == ".json") jsons[stem] = e.path();
    else if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") images[stem] = e.path();
  }
  ScreenStore store;
  std::int64_t inadmissible = 0, dropped = 0;
  for (const auto& [id, img] : images)
    if (!jsons.count(id)) store.warnings.push_back(id + ": image without hierarchy, skipped");
  for (const auto& [id, js] : jsons) {
    auto img = images.find(id);
    if (img == images.end()) {
      store.warnings.push_back(id + ": hierarchy without image, skipped");
      continue;
    }
    try {
      auto parsed = load_hierarchy(js.string());
      dropped += parsed.dropped_nodes;
      for (const auto& w : parsed.warnings) store.warnings.push_back(id + ": " + w);
      if (!screen_admissible(parsed.hierarchy)) {
        ++inadmissible;
        continue;
      }
      store.screens.push_back({id, js, img->second, std::move(parsed.hierarchy)});
    } catch (const ParseError& e) {
      store.warnings.push_back(id + ": " + e.what());
    }
  }
  store.stats = compute_stats(store.screens);
  store.stats.inadmissible = inadmissible;
  store.stats.dropped_nodes = dropped;
  return store;
}

nlohmann::json DatasetSplit::to_json() const {
  return {{"seed", seed},
          {"ratios", ratios},
          {"train", ids[0]},
          {"validation", ids[1]},
          {"test", ids[2]},
          {"warnings", warnings}};
}

DatasetSplit DatasetSplit::from_json(const nlohmann::json& j) {
  DatasetSplit s;
  s.seed = j.value("seed", std::uint64_t{0});
  s.ratios = j.value("ratios", s.ratios);
  s.ids[0] = j.at("train").get<std::vector<std::string>>();
  s.ids[1] = j.at("validation").get<std::vector<std::string>>();
  s.ids[2] = j.at("test").get<std::vector<std::string>>();
  s.warnings = j.value("warnings", std::vector<std::string>{});
  return s;
}

double package_position(const std::string& package, std::uint64_t seed) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&](unsigned char c) {
    h ^= c;
    h *= 1099511628211ull;
  };
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(seed >> (8 * i)));
  for (unsigned char c : package) mix(c);
  // Finalizer so that nearby package names spread over [0, 1).
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  return double(h >> 11) / double(1ull << 53);
}

DatasetSplit split(const std::vector<ScreenKey>& screens, std::array<double, 3> ratios, std::uint64_t seed) {
  double sum = 0;
  for (double r : ratios) {
    if (r < 0) throw ContractViolation("split: negative ratio");
    sum += r;
  }
  if (sum <= 0) throw ContractViolation("split: ratios sum to zero");
  DatasetSplit out;
  out.seed = seed;
  for (std::size_t i = 0; i < 3; ++i) out.ratios[i] = ratios[i] / sum;
  std::set<std::string> packages;
  for (const auto& s : screens) {
    const double u = package_position(s.package, seed);
    std::size_t bucket = 2;
    if (u < out.ratios[0]) bucket = 0;
    else if (u < out.ratios[0] + out.ratios[1]) bucket = 1;
    out.ids[bucket].push_back(s.source_id);
    packages.insert(s.package);
  }
  const auto wanted = std::count_if(out.ratios.begin(), out.ratios.end(), [](double r) { return r > 0; });
  if (static_cast<std::ptrdiff_t>(packages.size()) < wanted)
    out.warnings.push_back("only " + std::to_string(packages.size()) + " package(s) for " + std::to_string(wanted) +
                           " splits; some splits are empty");
  for (auto& v : out.ids) std::sort(v.begin(), v.end());
  return out;
}

DatasetSplit split(const std::vector<StoredScreen>& screens, std::array<double, 3> ratios, std::uint64_t seed) {
  std::vector<ScreenKey> keys;
  for (const auto& s : screens) keys.push_back({s.source_id, s.hierarchy.package_name});
  return split(keys, ratios, seed);
}

DatasetSplit split(const std::vector<Screen>& screens, std::array<double, 3> ratios, std::uint64_t seed) {
  std::vector<ScreenKey> keys;
  for (const auto& s : screens) keys.push_back({s.source_id, s.hierarchy.package_name});
  return split(keys, ratios, seed);
}

}  // namespace clay::pipeline
