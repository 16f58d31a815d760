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

#include "clay/preprocess/preprocess.hpp"

#include <algorithm>
#include <map>
#include <tuple>
#include <unordered_map>

#include "clay/error.hpp"

namespace clay::preprocess {

namespace {

constexpr std::pair<DropReason, std::string_view> kReasonNames[] = {
    {DropReason::too_narrow, "too_narrow"},         {DropReason::too_small, "too_small"},
    {DropReason::too_large, "too_large"},           {DropReason::invisible_attr, "invisible_attr"},
    {DropReason::duplicate_box, "duplicate_box"},   {DropReason::fully_occluded, "fully_occluded"},
    {DropReason::blank_uniform, "blank_uniform"},   {DropReason::empty_container, "empty_container"},
};

// The input tree flattened in pre-order. Descendants of item i occupy
// (i, end). Removing a node re-attaches its children to the nearest surviving
// ancestor, so ancestry among survivors never changes and one flat view
// serves every pass.
struct Item {
  const Node* node = nullptr;
  int parent = -1;
  int end = 0;
  BoundingBox unclipped;
  BoundingBox clipped;
  BoundingBox box;
  bool had_children = false;
  std::optional<ObjectType> heuristic;
  bool exempt = false;  // a synthetic root from an earlier run
  std::optional<DropReason> removed;
};

struct Work {
  std::vector<Item> items;
  int screen_width = 0;
  int screen_height = 0;

  bool alive(int i) const { return !items[std::size_t(i)].removed; }
  bool has_alive_descendant(int i) const {
    for (int j = i + 1; j < items[std::size_t(i)].end; ++j)
      if (alive(j)) return true;
    return false;
  }
  int size() const { return static_cast<int>(items.size()); }
};

Work flatten(const ViewHierarchy& h, const heuristic::RuleTable& rules) {
  Work w;
  w.screen_width = h.screen_width;
  w.screen_height = h.screen_height;
  const BoundingBox screen = h.screen_rect();
  struct Frame {
    const Node* node;
    int parent;
  };
  std::vector<Frame> stack{{&h.root, -1}};
  while (!stack.empty()) {
    auto [n, parent] = stack.back();
    stack.pop_back();
    Item it;
    it.node = n;
    it.parent = parent;
    it.unclipped = n->bounds;
    it.clipped = it.box = intersect(n->bounds, screen);
    it.had_children = !n->children.empty();
    it.heuristic =
        heuristic::infer_type(*n, rules, parent >= 0 ? w.items[std::size_t(parent)].node : nullptr);
    it.exempt = parent < 0 && n->android_class == kSyntheticRootClass;
    const int self = w.size();
    w.items.push_back(std::move(it));
    for (auto c = n->children.rbegin(); c != n->children.rend(); ++c) stack.push_back({&*c, self});
  }
  for (int i = w.size() - 1; i >= 0; --i) {
    auto& it = w.items[std::size_t(i)];
    if (it.end == 0) it.end = i + 1;
    if (it.parent >= 0) {
      auto& p = w.items[std::size_t(it.parent)];
      p.end = std::max(p.end, it.end);
    }
  }
  return w;
}

std::optional<DropReason> degenerate(const BoundingBox& unclipped, const BoundingBox& current, int sw, int sh,
                                     const PreprocessOptions& opts) {
  const double screen_area = double(sw) * double(sh);
  const double w = current.width(), h = current.height();
  if (w <= 0 || h <= 0 || std::min(w / h, h / w) < opts.min_aspect_ratio) return DropReason::too_narrow;
  if (w * h < opts.min_area_fraction * screen_area) return DropReason::too_small;
  if (double(unclipped.area()) > screen_area) return DropReason::too_large;
  return std::nullopt;
}

bool pass_attributes(Work& w, const PreprocessOptions& opts) {
  bool changed = false;
  for (auto& it : w.items) {
    if (it.removed || it.exempt) continue;
    auto r = degenerate(it.unclipped, it.box, w.screen_width, w.screen_height, opts);
    if (!r) r = filter_invisible(*it.node);
    if (r) {
      it.removed = r;
      changed = true;
    }
  }
  return changed;
}

bool pass_duplicates(Work& w) {
  std::map<std::tuple<int, int, int, int>, std::vector<int>> groups;
  for (int i = 0; i < w.size(); ++i) {
    const auto& it = w.items[std::size_t(i)];
    if (it.removed || it.exempt) continue;
    groups[{it.box.left, it.box.top, it.box.right, it.box.bottom}].push_back(i);
  }
  bool changed = false;
  for (const auto& [key, members] : groups) {
    if (members.size() < 2) continue;
    int keep = members.back();
    for (auto m = members.rbegin(); m != members.rend(); ++m) {
      const auto& t = w.items[std::size_t(*m)].heuristic;
      if (t && *t != ObjectType::CONTAINER) {
        keep = *m;
        break;
      }
    }
    for (int m : members)
      if (m != keep) w.items[std::size_t(m)].removed = DropReason::duplicate_box;
    changed = true;
  }
  return changed;
}

// Bounding box of disjoint fragments when their union is exactly that box.
std::optional<BoundingBox> as_rectangle(const std::vector<BoundingBox>& parts) {
  if (parts.empty()) return std::nullopt;
  BoundingBox bb = parts.front();
  std::int64_t area = 0;
  for (const auto& p : parts) {
    bb = {std::min(bb.left, p.left), std::min(bb.top, p.top), std::max(bb.right, p.right),
          std::max(bb.bottom, p.bottom)};
    area += p.area();
  }
  if (area != bb.area()) return std::nullopt;
  return bb;
}

bool pass_occlusion(Work& w, OcclusionResult* out) {
  const int n = w.size();
  std::vector<std::optional<DropReason>> removal(static_cast<std::size_t>(n));
  std::vector<std::optional<BoundingBox>> trim(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& it = w.items[std::size_t(i)];
    if (it.removed || it.exempt) continue;
    std::vector<BoundingBox> occluders;
    for (int j = it.end; j < n; ++j) {
      const auto& o = w.items[std::size_t(j)];
      if (!o.removed && !o.exempt && overlaps(o.box, it.box)) occluders.push_back(o.box);
    }
    if (occluders.empty()) continue;
    const auto rest = subtract_boxes(it.box, occluders);
    if (rest.empty()) {
      removal[std::size_t(i)] = DropReason::fully_occluded;
    } else if (auto r = as_rectangle(rest); r && !(*r == it.box)) {
      trim[std::size_t(i)] = *r;
    }
  }
  bool changed = false;
  for (int i = 0; i < n; ++i) {
    auto& it = w.items[std::size_t(i)];
    if (removal[std::size_t(i)]) {
      it.removed = removal[std::size_t(i)];
      if (out) out->removed.push_back({it.node->node_id, *it.removed});
      changed = true;
    } else if (trim[std::size_t(i)]) {
      if (out) out->trimmed.push_back({it.node->node_id, it.box, *trim[std::size_t(i)]});
      it.box = *trim[std::size_t(i)];
      changed = true;
    }
  }
  return changed;
}

bool pass_blank(Work& w, const Screen* s, const PreprocessOptions& opts) {
  const bool raster = s != nullptr && !s->screenshot.empty();
  bool changed = false;
  for (bool again = true; again;) {
    again = false;
    for (int i = w.size() - 1; i >= 0; --i) {
      auto& it = w.items[std::size_t(i)];
      if (it.removed || it.exempt || w.has_alive_descendant(i)) continue;
      if (raster && is_uniform(s->screenshot, s->to_raster(it.box), opts.blank_modal_share)) {
        it.removed = DropReason::blank_uniform;
      } else if (it.had_children && (!it.heuristic || *it.heuristic == ObjectType::CONTAINER)) {
        it.removed = DropReason::empty_container;
      } else {
        continue;
      }
      again = changed = true;
    }
  }
  return changed;
}

std::vector<Removal> removals(const Work& w) {
  std::vector<Removal> out;
  for (const auto& it : w.items)
    if (it.removed) out.push_back({it.node->node_id, *it.removed});
  return out;
}

Node build(const Work& w, int i, const std::vector<std::vector<int>>& kids) {
  const auto& it = w.items[std::size_t(i)];
  Node n = *it.node;
  n.children.clear();
  n.bounds = it.box;
  for (int k : kids[std::size_t(i)]) n.children.push_back(build(w, k, kids));
  return n;
}

}  // namespace

std::string_view to_string(DropReason r) {
  for (const auto& [k, name] : kReasonNames)
    if (k == r) return name;
  return "too_narrow";
}

std::optional<DropReason> parse_drop_reason(std::string_view s) {
  for (const auto& [k, name] : kReasonNames)
    if (name == s) return k;
  return std::nullopt;
}

std::optional<DropReason> PreprocessReport::reason_for(int node_id) const {
  for (const auto& r : removed)
    if (r.node_id == node_id) return r.reason;
  return std::nullopt;
}

nlohmann::json PreprocessReport::to_json() const {
  auto box = [](const BoundingBox& b) { return nlohmann::json::array({b.left, b.top, b.right, b.bottom}); };
  nlohmann::json j;
  j["kept"] = kept;
  j["removed"] = nlohmann::json::array();
  for (const auto& r : removed) j["removed"].push_back({{"node_id", r.node_id}, {"reason", std::string(to_string(r.reason))}});
  j["trimmed"] = nlohmann::json::array();
  for (const auto& t : trimmed) j["trimmed"].push_back({{"node_id", t.node_id}, {"before", box(t.before)}, {"after", box(t.after)}});
  return j;
}

std::optional<DropReason> filter_degenerate(const BoundingBox& bounds, int screen_width, int screen_height,
                                            const PreprocessOptions& opts) {
  const BoundingBox clipped = intersect(bounds, BoundingBox{0, 0, screen_width, screen_height});
  return degenerate(bounds, clipped, screen_width, screen_height, opts);
}

std::optional<DropReason> filter_invisible(const Node& n) {
  if (!n.visible_to_user || n.visibility != Visibility::visible) return DropReason::invisible_attr;
  return std::nullopt;
}

std::vector<Removal> dedup_boxes(const ViewHierarchy& h, const heuristic::RuleTable& rules) {
  Work w = flatten(h, rules);
  pass_duplicates(w);
  return removals(w);
}

OcclusionResult trim_occlusions(const ViewHierarchy& h) {
  Work w = flatten(h, heuristic::RuleTable::defaults());
  OcclusionResult out;
  pass_occlusion(w, &out);
  return out;
}

std::vector<BoundingBox> subtract_boxes(const BoundingBox& box, const std::vector<BoundingBox>& occluders) {
  std::vector<BoundingBox> parts;
  if (!box.empty()) parts.push_back(box);
  std::vector<BoundingBox> next;
  for (const auto& o : occluders) {
    next.clear();
    for (const auto& p : parts) {
      const BoundingBox c = intersect(p, o);
      if (c.empty()) {
        next.push_back(p);
        continue;
      }
      // Full-width bands above and below the cut, then the side pieces.
      if (p.top < c.top) next.push_back({p.left, p.top, p.right, c.top});
      if (c.bottom < p.bottom) next.push_back({p.left, c.bottom, p.right, p.bottom});
      if (p.left < c.left) next.push_back({p.left, c.top, c.left, c.bottom});
      if (c.right < p.right) next.push_back({c.right, c.top, p.right, c.bottom});
    }
    parts.swap(next);
    if (parts.empty()) break;
  }
  return parts;
}

double modal_color_share(const Image& image, const BoundingBox& region) {
  const BoundingBox r = intersect(region, image.rect());
  if (r.empty()) return 1.0;
  std::unordered_map<std::uint32_t, std::int64_t> counts;
  std::int64_t best = 0;
  for (int y = r.top; y < r.bottom; ++y)
    for (int x = r.left; x < r.right; ++x) {
      const std::uint32_t c = std::uint32_t(image.at(x, y, 0)) << 16 | std::uint32_t(image.at(x, y, 1)) << 8 |
                              image.at(x, y, 2);
      best = std::max(best, ++counts[c]);
    }
  return double(best) / double(r.area());
}

bool is_uniform(const Image& image, const BoundingBox& region, double share) {
  if (share <= 0.5) throw ContractViolation("is_uniform: share must exceed 0.5");
  const BoundingBox r = intersect(region, image.rect());
  if (r.empty()) return true;
  auto color = [&](int x, int y) {
    return std::uint32_t(image.at(x, y, 0)) << 16 | std::uint32_t(image.at(x, y, 1)) << 8 | image.at(x, y, 2);
  };
  // Boyer-Moore vote: a color holding more than half the pixels is the survivor.
  std::uint32_t candidate = 0;
  std::int64_t votes = 0;
  for (int y = r.top; y < r.bottom; ++y)
    for (int x = r.left; x < r.right; ++x) {
      const auto c = color(x, y);
      if (votes == 0) candidate = c;
      votes += c == candidate ? 1 : -1;
    }
  std::int64_t hits = 0;
  for (int y = r.top; y < r.bottom; ++y)
    for (int x = r.left; x < r.right; ++x) hits += color(x, y) == candidate;
  return double(hits) >= share * double(r.area());
}

std::vector<Removal> remove_blank(const ViewHierarchy& h, const Screen& s, const heuristic::RuleTable& rules,
                                  const PreprocessOptions& opts) {
  Work w = flatten(h, rules);
  pass_blank(w, &s, opts);
  return removals(w);
}

Result preprocess(const Screen& s, const heuristic::RuleTable& rules, const PreprocessOptions& opts) {
  Work w = flatten(s.hierarchy, rules);
  for (bool changed = true; changed;) {
    changed = pass_attributes(w, opts);
    changed = pass_duplicates(w) || changed;
    changed = pass_occlusion(w, nullptr) || changed;
    changed = pass_blank(w, &s, opts) || changed;
  }

  Result out;
  auto& report = out.report;
  std::vector<std::vector<int>> kids(w.items.size());
  std::vector<int> top;
  for (int i = 0; i < w.size(); ++i) {
    const auto& it = w.items[std::size_t(i)];
    if (it.removed) {
      report.removed.push_back({it.node->node_id, *it.removed});
      continue;
    }
    report.kept.push_back(it.node->node_id);
    if (!(it.box == it.clipped)) report.trimmed.push_back({it.node->node_id, it.clipped, it.box});
    int a = it.parent;
    while (a >= 0 && !w.alive(a)) a = w.items[std::size_t(a)].parent;
    (a >= 0 ? kids[std::size_t(a)] : top).push_back(i);
  }

  out.cleaned = s.hierarchy;
  if (w.alive(0)) {
    out.cleaned.root = build(w, 0, kids);
  } else {
    Node root;
    root.android_class = std::string(kSyntheticRootClass);
    root.bounds = s.hierarchy.screen_rect();
    root.node_id = -1;
    for (int k : top) root.children.push_back(build(w, k, kids));
    out.cleaned.root = std::move(root);
  }
  return out;
}

}  // namespace clay::preprocess
