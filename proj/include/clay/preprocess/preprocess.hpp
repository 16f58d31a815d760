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

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "clay/heuristic/labeler.hpp"
#include "clay/layout/screen.hpp"

namespace clay::preprocess {

/// Why a node was removed. When several rules apply, the first in this order wins.
enum class DropReason {
  too_narrow,
  too_small,
  too_large,
  invisible_attr,
  duplicate_box,
  fully_occluded,
  blank_uniform,
  empty_container,
};

std::string_view to_string(DropReason r);
std::optional<DropReason> parse_drop_reason(std::string_view s);

struct Removal {
  int node_id;
  DropReason reason;
  bool operator==(const Removal&) const = default;
};

struct TrimRecord {
  int node_id;
  BoundingBox before;
  BoundingBox after;
  bool operator==(const TrimRecord&) const = default;
};

struct PreprocessReport {
  std::vector<int> kept;
  std::vector<Removal> removed;
  std::vector<TrimRecord> trimmed;

  std::optional<DropReason> reason_for(int node_id) const;
  nlohmann::json to_json() const;
};

struct PreprocessOptions {
  double min_aspect_ratio = 0.01;
  double min_area_fraction = 1e-4;
  double blank_modal_share = 0.99;
};

/// Class name of the full-screen root introduced when the original root is removed.
inline constexpr std::string_view kSyntheticRootClass = "clay.SyntheticRoot";

/// Size rules. `bounds` is the unclipped box; the aspect and area tests use
/// its intersection with the screen, the too_large test the unclipped area.
std::optional<DropReason> filter_degenerate(const BoundingBox& bounds, int screen_width, int screen_height,
                                            const PreprocessOptions& opts = {});
std::optional<DropReason> filter_invisible(const Node& n);

/// Among nodes with identical clipped boxes keeps the one with a specific
/// heuristic type (not CONTAINER, not unknown), else the last in pre-order.
std::vector<Removal> dedup_boxes(const ViewHierarchy& h, const heuristic::RuleTable& rules);

struct OcclusionResult {
  std::vector<Removal> removed;
  std::vector<TrimRecord> trimmed;
};

/// Occluders of a node are the later nodes in pre-order that are not its
/// descendants. A node is removed when their union covers it and trimmed
/// when the uncovered part is a single rectangle.
OcclusionResult trim_occlusions(const ViewHierarchy& h);

/// Part of `box` not covered by any of `occluders`, as disjoint rectangles.
std::vector<BoundingBox> subtract_boxes(const BoundingBox& box, const std::vector<BoundingBox>& occluders);

/// Share of the most frequent exact color in `region` of `image` (1 for an empty region).
double modal_color_share(const Image& image, const BoundingBox& region);

/// modal_color_share(image, region) >= share, for share > 0.5, in two linear scans.
bool is_uniform(const Image& image, const BoundingBox& region, double share);

/// Blank leaves and empty containers, iterated until no more nodes go.
std::vector<Removal> remove_blank(const ViewHierarchy& h, const Screen& s, const heuristic::RuleTable& rules,
                                  const PreprocessOptions& opts = {});

struct Result {
  ViewHierarchy cleaned;
  PreprocessReport report;
};

/// Full rule pass: clip, size, visibility, duplicates, occlusion, blank and
/// empty containers, repeated until the tree stops changing. Removed nodes'
/// children move to the nearest surviving ancestor. Node ids are preserved.
Result preprocess(const Screen& s, const heuristic::RuleTable& rules = heuristic::RuleTable::defaults(),
                  const PreprocessOptions& opts = {});

}  // namespace clay::preprocess
