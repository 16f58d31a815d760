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

#include <fstream>
#include <functional>
#include <random>

#include <nlohmann/json.hpp>

#include "clay/error.hpp"
#include "clay/layout/hierarchy.hpp"
#include "test_support.hpp"

using namespace clay;
using clay::testing::make_hierarchy;
using clay::testing::make_node;
using nlohmann::json;

namespace {

// Counts objects with usable bounds by walking the raw document.
int count_raw(const json& n) {
  if (!n.is_object()) return 0;
  int self = 0;
  if (auto b = n.find("bounds"); b != n.end() && b->is_array() && b->size() == 4) {
    const auto& v = *b;
    self = v[0].get<int>() <= v[2].get<int>() && v[1].get<int>() <= v[3].get<int>() ? 1 : 0;
  }
  int total = self;
  if (auto c = n.find("children"); c != n.end() && c->is_array())
    for (const auto& child : *c) total += count_raw(child);
  return total;
}

void recursive_preorder(const Node& n, std::vector<const Node*>& out) {
  out.push_back(&n);
  for (const auto& c : n.children) recursive_preorder(c, out);
}

json load_fixture() {
  std::ifstream in(std::string(CLAY_TEST_FIXTURES) + "/rico_sample.json");
  return json::parse(in);
}

}  // namespace

TEST_SUITE("layout") {
  TEST_CASE("single node document parses to one node with id 0") {
    const json doc = {{"activity", {{"root", {{"bounds", {0, 0, 1440, 2560}}, {"class", "android.widget.FrameLayout"}}}}}};
    const auto r = parse_hierarchy(doc);
    CHECK(node_count(r.hierarchy) == 1);
    CHECK(r.hierarchy.root.node_id == 0);
    CHECK(r.hierarchy.screen_width == 1440);
    CHECK(r.hierarchy.screen_height == 2560);
    CHECK_FALSE(r.hierarchy.root.content_desc.has_value());
    CHECK_FALSE(r.hierarchy.root.resource_id.has_value());
  }

  TEST_CASE("two children with one child each give pre-order ids 0 to 4") {
    const json leaf_a = {{"bounds", {0, 0, 10, 10}}, {"class", "A1"}};
    const json leaf_b = {{"bounds", {0, 10, 10, 20}}, {"class", "B1"}};
    const json a = {{"bounds", {0, 0, 100, 100}}, {"class", "A"}, {"children", {leaf_a}}};
    const json b = {{"bounds", {0, 100, 100, 200}}, {"class", "B"}, {"children", {leaf_b}}};
    const json doc = {{"activity", {{"root", {{"bounds", {0, 0, 1440, 2560}}, {"class", "R"}, {"children", {a, b}}}}}}};
    const auto r = parse_hierarchy(doc);
    const auto order = preorder(r.hierarchy);
    REQUIRE(order.size() == 5);
    const std::vector<std::string> classes = {"R", "A", "A1", "B", "B1"};
    for (std::size_t i = 0; i < order.size(); ++i) {
      CHECK(order[i]->node_id == int(i));
      CHECK(order[i]->android_class == classes[i]);
    }
  }

  TEST_CASE("fixture node count matches an independent walk of the raw document") {
    const json doc = load_fixture();
    const auto r = parse_hierarchy(doc);
    const int expected = count_raw(doc["activity"]["root"]);
    CHECK(expected == 17);
    CHECK(int(node_count(r.hierarchy)) == expected);
    CHECK(r.dropped_nodes == 1);
    CHECK(r.warnings.size() == 1);
    CHECK(r.hierarchy.package_name == "com.example.weather");
  }

  TEST_CASE("fixture attributes") {
    const auto r = parse_hierarchy(load_fixture());
    const auto order = preorder(r.hierarchy);
    CHECK_FALSE(order[0]->content_desc.has_value());
    CHECK(order[3]->content_desc == std::optional<std::string>("Navigate up"));
    CHECK(order[3]->clickable);
    // The child of the bounds-less TextView moves up to the list row.
    CHECK(order[9]->android_class == "android.widget.TextView");
    CHECK(order[9]->bounds == BoundingBox{280, 440, 900, 500});
    const Node* gone = order[13];
    CHECK(gone->visibility == Visibility::gone);
    CHECK_FALSE(gone->visible_to_user);
    CHECK(order.back()->resource_id == std::optional<std::string>("android:id/navigationBarBackground"));
  }

  TEST_CASE("malformed documents raise parse errors with a path") {
    CHECK_THROWS_AS(parse_hierarchy(std::string_view("{not json")), ParseError);
    const json bad_bounds = {{"activity", {{"root", {{"bounds", {0, 0, 1440}}, {"class", "R"}}}}}};
    try {
      parse_hierarchy(bad_bounds);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.path() == "/activity/root/bounds");
    }
    const json bad_vis = {{"activity", {{"root", {{"bounds", {0, 0, 10, 10}}, {"visibility", "hidden"}}}}}};
    CHECK_THROWS_AS(parse_hierarchy(bad_vis), ParseError);
    CHECK_THROWS_AS(parse_hierarchy(json{{"activity", json::object()}}), ParseError);
  }

  TEST_CASE("preorder of small trees") {
    auto one = make_hierarchy(make_node("R", {0, 0, 10, 10}), 10, 10);
    CHECK(preorder(one).size() == 1);
    auto h = make_hierarchy(
        make_node("root", {0, 0, 10, 10}, {make_node("A", {0, 0, 5, 5}, {make_node("A1", {0, 0, 1, 1})}), make_node("B", {5, 5, 10, 10})}),
        10, 10);
    std::vector<std::string> names;
    for (const Node* n : preorder(h)) names.push_back(n->android_class);
    CHECK(names == std::vector<std::string>{"root", "A", "A1", "B"});
  }

  TEST_CASE("random 50-node trees match a recursive traversal") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      const auto h = clay::testing::random_tree(rng, 50, 300, 500);
      std::vector<const Node*> expected;
      recursive_preorder(h.root, expected);
      CHECK(preorder(h) == expected);
      const auto order = preorder(h);
      for (std::size_t i = 0; i < order.size(); ++i) CHECK(order[i]->node_id == int(i));
    }
  }

  TEST_CASE("admissibility needs more than two nodes") {
    auto one = make_hierarchy(make_node("R", {0, 0, 10, 10}), 10, 10);
    auto two = make_hierarchy(make_node("R", {0, 0, 10, 10}, {make_node("A", {0, 0, 5, 5})}), 10, 10);
    auto three =
        make_hierarchy(make_node("R", {0, 0, 10, 10}, {make_node("A", {0, 0, 5, 5}), make_node("B", {5, 5, 10, 10})}), 10, 10);
    CHECK_FALSE(screen_admissible(one));
    CHECK_FALSE(screen_admissible(two));
    CHECK(screen_admissible(three));
  }

  TEST_CASE("parse and serialize round trip") {
    const auto first = parse_hierarchy(load_fixture()).hierarchy;
    const auto second = parse_hierarchy(serialize_hierarchy(first)).hierarchy;
    CHECK(first == second);
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      auto h = clay::testing::random_tree(rng, 30, 200, 300);
      h.root.children.front().label = ObjectType::BUTTON;
      CHECK(parse_hierarchy(serialize_hierarchy(h)).hierarchy == h);
    }
  }

  TEST_CASE("children counts agree with parent lookup") {
    std::mt19937_64 rng(11);
    const auto h = clay::testing::random_tree(rng, 40, 100, 100);
    const auto order = preorder(h);
    const auto parent = parent_positions(h.root);
    std::vector<std::size_t> counted(order.size(), 0);
    for (std::size_t i = 1; i < order.size(); ++i) ++counted[std::size_t(parent[i])];
    for (std::size_t i = 0; i < order.size(); ++i) CHECK(order[i]->children.size() == counted[i]);
    CHECK(parent[0] == -1);
  }

  TEST_CASE("box geometry") {
    const BoundingBox a{0, 0, 100, 100}, b{50, 50, 150, 150}, c{100, 0, 200, 100};
    CHECK(intersect(a, b) == BoundingBox{50, 50, 100, 100});
    CHECK(intersect(a, c).empty());
    CHECK_FALSE(overlaps(a, c));
    CHECK(a.area() == 10000);
    CHECK(a.contains(BoundingBox{10, 10, 20, 20}));
    CHECK(scale_box({0, 0, 1440, 2560}, 0.0625, 0.0625) == BoundingBox{0, 0, 90, 160});
    CHECK(scale_box({3, 3, 5, 5}, 0.5, 0.5) == BoundingBox{2, 2, 3, 3});
  }

  TEST_CASE("object type names") {
    CHECK(kObjectTypeCount == 25);
    for (int i = 0; i < kObjectTypeCount; ++i) CHECK(parse_object_type(kObjectTypeNames[std::size_t(i)]) == object_type_at(i));
    CHECK(to_string(ObjectType::NAVIGATION_BAR) == "NAVIGATION_BAR");
    CHECK_FALSE(is_semantic(ObjectType::INVALID));
    CHECK_FALSE(parse_object_type("Button").has_value());
  }
}
