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

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "clay/preprocess/preprocess.hpp"
#include "test_support.hpp"

using namespace clay;
using namespace clay::preprocess;
using clay::testing::fill_noise;
using clay::testing::fill_rect;
using clay::testing::make_hierarchy;
using clay::testing::make_node;
using clay::testing::noisy_screen;

namespace {

std::set<int> kept_ids(const PreprocessReport& r) {
  std::set<int> out;
  for (int id : r.kept)
    if (id >= 0) out.insert(id);
  return out;
}

}  // namespace

TEST_SUITE("preprocess") {
  TEST_CASE("size rules") {
    CHECK(filter_degenerate({0, 0, 4, 500}, 1440, 2560) == DropReason::too_narrow);
    CHECK(filter_degenerate({0, 0, 500, 4}, 1440, 2560) == DropReason::too_narrow);
    CHECK(filter_degenerate({0, 0, 10, 10}, 1440, 2560) == DropReason::too_small);
    CHECK_FALSE(filter_degenerate({0, 0, 1440, 2560}, 1440, 2560).has_value());
    CHECK(filter_degenerate({0, 0, 0, 100}, 1440, 2560) == DropReason::too_narrow);
    CHECK(filter_degenerate({-10, 0, 1440, 2560}, 1440, 2560) == DropReason::too_large);
    // The aspect and area tests use the clipped box.
    CHECK(filter_degenerate({1436, 0, 2000, 500}, 1440, 2560) == DropReason::too_narrow);
    // 20 x 19 = 380 is above 0.01% of the screen (368.64).
    CHECK_FALSE(filter_degenerate({0, 0, 20, 19}, 1440, 2560).has_value());
    CHECK(filter_degenerate({0, 0, 19, 19}, 1440, 2560) == DropReason::too_small);
  }

  TEST_CASE("visibility rules") {
    Node n = make_node("android.widget.TextView", {0, 0, 10, 10});
    CHECK_FALSE(filter_invisible(n).has_value());
    n.visible_to_user = false;
    CHECK(filter_invisible(n) == DropReason::invisible_attr);
    n.visible_to_user = true;
    n.visibility = Visibility::gone;
    CHECK(filter_invisible(n) == DropReason::invisible_attr);
    n.visibility = Visibility::invisible;
    CHECK(filter_invisible(n) == DropReason::invisible_attr);
  }

  TEST_CASE("duplicates keep the more specific type") {
    const auto h = make_hierarchy(make_node("android.widget.FrameLayout", {0, 0, 400, 400},
                                            {make_node("android.widget.Button", {10, 10, 100, 60}),
                                             make_node("android.widget.FrameLayout", {10, 10, 100, 60})}),
                                  400, 400);
    const auto r = dedup_boxes(h, heuristic::RuleTable::defaults());
    REQUIRE(r.size() == 1);
    CHECK(r[0] == Removal{2, DropReason::duplicate_box});
  }

  TEST_CASE("duplicates of equal specificity keep the later node") {
    const auto h = make_hierarchy(make_node("android.widget.FrameLayout", {0, 0, 400, 400},
                                            {make_node("android.widget.LinearLayout", {10, 10, 100, 60}),
                                             make_node("android.widget.LinearLayout", {10, 10, 100, 60})}),
                                  400, 400);
    const auto r = dedup_boxes(h, heuristic::RuleTable::defaults());
    REQUIRE(r.size() == 1);
    CHECK(r[0].node_id == 1);
  }

  TEST_CASE("distinct boxes have no duplicates") {
    const auto h = make_hierarchy(make_node("android.widget.FrameLayout", {0, 0, 400, 400},
                                            {make_node("android.widget.Button", {10, 10, 100, 60}),
                                             make_node("android.widget.Button", {10, 70, 100, 120})}),
                                  400, 400);
    CHECK(dedup_boxes(h, heuristic::RuleTable::defaults()).empty());
  }

  TEST_CASE("exact cover removes the earlier sibling") {
    const auto h = make_hierarchy(make_node("android.widget.FrameLayout", {0, 0, 200, 200},
                                            {make_node("android.view.View", {0, 0, 100, 100}),
                                             make_node("android.view.View", {0, 0, 100, 100})}),
                                  200, 200);
    const auto r = trim_occlusions(h);
    REQUIRE(r.removed.size() == 1);
    CHECK(r.removed[0] == Removal{1, DropReason::fully_occluded});
    CHECK(r.trimmed.empty());
  }

  TEST_CASE("bottom half occluder trims to the top half") {
    const auto h = make_hierarchy(make_node("android.widget.FrameLayout", {0, 0, 200, 200},
                                            {make_node("android.view.View", {0, 0, 100, 100}),
                                             make_node("android.view.View", {0, 50, 100, 100})}),
                                  200, 200);
    const auto r = trim_occlusions(h);
    CHECK(r.removed.empty());
    REQUIRE(r.trimmed.size() == 1);
    CHECK(r.trimmed[0] == TrimRecord{1, {0, 0, 100, 100}, {0, 0, 100, 50}});
    const clay::testing::PaintOracle oracle(h);
    CHECK(oracle.entries[1].visible_bbox == BoundingBox{0, 0, 100, 50});
    CHECK(oracle.entries[1].rectangular);
  }

  TEST_CASE("ancestors never occlude") {
    const auto h = make_hierarchy(
        make_node("android.widget.FrameLayout", {0, 0, 200, 200}, {make_node("android.view.View", {0, 0, 100, 100})}), 200,
        200);
    const auto r = trim_occlusions(h);
    CHECK(r.removed.empty());
    CHECK(r.trimmed.empty());
  }

  TEST_CASE("union cover and non-rectangular remainders") {
    // Two halves together cover the node.
    const auto covered = make_hierarchy(make_node("android.widget.FrameLayout", {0, 0, 200, 200},
                                                  {make_node("A", {0, 0, 100, 100}), make_node("B", {0, 0, 50, 100}),
                                                   make_node("C", {50, 0, 100, 100})}),
                                        200, 200);
    const auto r1 = trim_occlusions(covered);
    REQUIRE(r1.removed.size() == 1);
    CHECK(r1.removed[0].node_id == 1);
    // A corner bite leaves an L shape; the box is kept as is.
    const auto corner = make_hierarchy(make_node("android.widget.FrameLayout", {0, 0, 200, 200},
                                                 {make_node("A", {0, 0, 100, 100}), make_node("B", {50, 50, 150, 150})}),
                                       200, 200);
    const auto r2 = trim_occlusions(corner);
    CHECK(r2.removed.empty());
    CHECK(r2.trimmed.empty());
  }

  TEST_CASE("subtract boxes") {
    const auto parts = subtract_boxes({0, 0, 10, 10}, {{2, 2, 4, 4}});
    std::int64_t area = 0;
    for (const auto& p : parts) area += p.area();
    CHECK(area == 96);
    for (std::size_t i = 0; i < parts.size(); ++i)
      for (std::size_t j = i + 1; j < parts.size(); ++j) CHECK_FALSE(overlaps(parts[i], parts[j]));
    CHECK(subtract_boxes({0, 0, 10, 10}, {{0, 0, 10, 10}}).empty());
  }

  TEST_CASE("blank and empty container removal") {
    auto h = make_hierarchy(make_node("android.widget.FrameLayout", {0, 0, 200, 200},
                                      {make_node("android.view.View", {0, 0, 50, 50}),
                                       make_node("android.widget.ImageView", {60, 0, 110, 50}),
                                       make_node("android.widget.LinearLayout", {0, 100, 200, 200},
                                                 {make_node("android.widget.TextView", {0, 100, 100, 150})})}),
                            200, 200);
    preorder_mut(h.root)[4]->visibility = Visibility::gone;
    Screen s = noisy_screen(h, 5);
    fill_rect(s.screenshot, {0, 0, 50, 50}, 255, 255, 255);

    const auto blank = remove_blank(s.hierarchy, s, heuristic::RuleTable::defaults());
    REQUIRE(blank.size() == 1);
    CHECK(blank[0] == Removal{1, DropReason::blank_uniform});

    const auto r = preprocess::preprocess(s);
    CHECK(r.report.reason_for(1) == DropReason::blank_uniform);
    CHECK_FALSE(r.report.reason_for(2).has_value());
    CHECK(r.report.reason_for(3) == DropReason::empty_container);
    CHECK(r.report.reason_for(4) == DropReason::invisible_attr);
    CHECK(kept_ids(r.report) == std::set<int>{0, 2});
  }

  TEST_CASE("noise crops are not blank") {
    Image img(64, 64);
    fill_noise(img, img.rect(), 9);
    CHECK(modal_color_share(img, img.rect()) < 0.99);
    CHECK_FALSE(is_uniform(img, img.rect(), 0.99));
    fill_rect(img, {0, 0, 64, 64}, 10, 20, 30);
    img.set(0, 0, 0, 0, 0);
    CHECK(modal_color_share(img, img.rect()) == doctest::Approx(4095.0 / 4096.0));
    CHECK(is_uniform(img, img.rect(), 0.99));
    CHECK(modal_color_share(img, {5, 5, 5, 9}) == 1.0);
  }

  TEST_CASE("clean screen is a fixpoint") {
    const auto h = make_hierarchy(make_node("android.widget.FrameLayout", {0, 0, 200, 200},
                                            {make_node("android.widget.Button", {10, 10, 100, 60}),
                                             make_node("android.widget.TextView", {10, 70, 100, 120})}),
                                  200, 200);
    const Screen s = noisy_screen(h);
    const auto r = preprocess::preprocess(s);
    CHECK(r.cleaned == s.hierarchy);
    CHECK(r.report.removed.empty());
    CHECK(r.report.trimmed.empty());
    CHECK(r.report.kept.size() == 3);
  }

  TEST_CASE("hairline and gone nodes give exactly two removals") {
    auto h = make_hierarchy(make_node("android.widget.FrameLayout", {0, 0, 200, 400},
                                      {make_node("android.view.View", {10, 10, 11, 300}),
                                       make_node("android.widget.TextView", {20, 10, 100, 60}),
                                       make_node("android.widget.Button", {20, 100, 100, 160})}),
                            200, 400);
    preorder_mut(h.root)[3]->visibility = Visibility::gone;
    const auto r = preprocess::preprocess(noisy_screen(h));
    REQUIRE(r.report.removed.size() == 2);
    CHECK(r.report.reason_for(1) == DropReason::too_narrow);
    CHECK(r.report.reason_for(3) == DropReason::invisible_attr);
  }

  TEST_CASE("children of removed nodes move to the nearest surviving ancestor") {
    auto h = make_hierarchy(
        make_node("android.widget.FrameLayout", {0, 0, 200, 200},
                  {make_node("android.widget.LinearLayout", {0, 0, 200, 100},
                             {make_node("android.widget.TextView", {0, 0, 50, 50}),
                              make_node("android.widget.Button", {60, 0, 110, 50})}),
                   make_node("android.widget.TextView", {0, 120, 50, 170})}),
        200, 200);
    preorder_mut(h.root)[1]->visible_to_user = false;
    const auto r = preprocess::preprocess(noisy_screen(h));
    REQUIRE(r.cleaned.root.children.size() == 3);
    CHECK(r.cleaned.root.children[0].node_id == 2);
    CHECK(r.cleaned.root.children[1].node_id == 3);
    CHECK(r.cleaned.root.children[2].node_id == 4);
  }

  TEST_CASE("removed root is replaced by a synthetic root") {
    auto h = make_hierarchy(make_node("android.widget.FrameLayout", {0, 0, 200, 200},
                                      {make_node("android.widget.TextView", {0, 0, 50, 50}),
                                       make_node("android.widget.Button", {60, 0, 110, 50})}),
                            200, 200);
    h.root.visible_to_user = false;
    const auto r = preprocess::preprocess(noisy_screen(h));
    CHECK(r.cleaned.root.android_class == kSyntheticRootClass);
    CHECK(r.cleaned.root.bounds == BoundingBox{0, 0, 200, 200});
    CHECK(r.cleaned.root.children.size() == 2);
    CHECK(r.report.reason_for(0) == DropReason::invisible_attr);
  }

  TEST_CASE("occlusion decisions match the paint-order oracle") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 60; ++trial) {
      const int count = 2 + int(rng() % 19);
      const auto h = clay::testing::random_tree(rng, count, 40 + int(rng() % 160), 40 + int(rng() % 160));
      const auto r = trim_occlusions(h);
      const clay::testing::PaintOracle oracle(h);
      for (const auto& e : oracle.entries) {
        const bool removed = std::any_of(r.removed.begin(), r.removed.end(), [&](const Removal& x) {
          return x.node_id == e.node_id && x.reason == DropReason::fully_occluded;
        });
        CHECK(removed == (e.visible == 0));
        const auto t = std::find_if(r.trimmed.begin(), r.trimmed.end(),
                                    [&](const TrimRecord& x) { return x.node_id == e.node_id; });
        const bool expect_trim = e.visible > 0 && e.rectangular && !(e.visible_bbox == e.box);
        CHECK((t != r.trimmed.end()) == expect_trim);
        if (t != r.trimmed.end() && expect_trim) CHECK(t->after == e.visible_bbox);
      }
    }
  }

  TEST_CASE("idempotence, partition and monotonicity on random screens") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
      const Screen s = clay::testing::random_screen(rng, 3 + int(rng() % 25), 200, 200);
      const auto first = preprocess::preprocess(s);
      const std::size_t total = node_count(s.hierarchy);
      CHECK(kept_ids(first.report).size() + first.report.removed.size() == total);

      std::map<int, BoundingBox> original;
      for (const Node* n : preorder(s.hierarchy)) original[n->node_id] = n->bounds;
      for (const Node* n : preorder(first.cleaned)) {
        if (n->node_id < 0) continue;
        CHECK(original.at(n->node_id).contains(n->bounds));
      }

      Screen again = s;
      again.hierarchy = first.cleaned;
      const auto second = preprocess::preprocess(again);
      CHECK(second.cleaned == first.cleaned);
      CHECK(kept_ids(second.report) == kept_ids(first.report));
      CHECK(second.report.removed.empty());
    }
  }

  TEST_CASE("report json and reason names") {
    for (auto r : {DropReason::too_narrow, DropReason::too_small, DropReason::too_large, DropReason::invisible_attr,
                   DropReason::duplicate_box, DropReason::fully_occluded, DropReason::blank_uniform,
                   DropReason::empty_container})
      CHECK(parse_drop_reason(to_string(r)) == r);
    PreprocessReport rep;
    rep.kept = {0, 2};
    rep.removed = {{1, DropReason::duplicate_box}};
    rep.trimmed = {{2, {0, 0, 10, 10}, {0, 0, 10, 5}}};
    const auto j = rep.to_json();
    CHECK(j["removed"][0]["reason"] == "duplicate_box");
    CHECK(j["trimmed"][0]["after"] == nlohmann::json::array({0, 0, 10, 5}));
  }
}
