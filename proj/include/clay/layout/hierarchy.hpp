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
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "clay/layout/geometry.hpp"
#include "clay/layout/object_type.hpp"

namespace clay {

enum class Visibility { visible, invisible, gone };

std::string_view to_string(Visibility v);

/// One view in a layout tree.
struct Node {
  std::string android_class;
  std::optional<std::string> content_desc;
  std::optional<std::string> resource_id;
  BoundingBox bounds;
  bool visible_to_user = true;
  Visibility visibility = Visibility::visible;
  bool clickable = false;
  std::vector<Node> children;
  // Pre-order rank at parse time. Later stages keep the original id.
  int node_id = -1;
  // Ground-truth type when the document carries one (`clay_label`).
  std::optional<ObjectType> label;

  bool is_leaf() const { return children.empty(); }
  bool operator==(const Node&) const = default;
};

struct ViewHierarchy {
  Node root;
  std::string package_name;
  std::string activity_name;
  int screen_width = 1440;
  int screen_height = 2560;

  BoundingBox screen_rect() const { return {0, 0, screen_width, screen_height}; }
  bool operator==(const ViewHierarchy&) const = default;
};

struct ParseResult {
  ViewHierarchy hierarchy;
  // Nodes dropped because their bounds were missing or inverted.
  int dropped_nodes = 0;
  std::vector<std::string> warnings;
};

/// Parses a Rico-style view-hierarchy document. Throws ParseError with a JSON
/// pointer to the offending element on malformed input.
ParseResult parse_hierarchy(const nlohmann::json& document);
ParseResult parse_hierarchy(std::string_view text);
ParseResult load_hierarchy(const std::string& path);

/// Inverse of parse_hierarchy for the fields the model retains.
nlohmann::json serialize_hierarchy(const ViewHierarchy& h);
nlohmann::json serialize_node(const Node& n);

/// Depth-first, parent before children, children in document order.
std::vector<const Node*> preorder(const ViewHierarchy& h);
std::vector<const Node*> preorder(const Node& root);
std::vector<Node*> preorder_mut(Node& root);

std::size_t node_count(const ViewHierarchy& h);

/// A screen is worth keeping only with more than two objects.
bool screen_admissible(const ViewHierarchy& h);

/// Parent lookup for every node in a tree, indexed by position in preorder().
/// The root's parent is -1.
std::vector<int> parent_positions(const Node& root);

/// Assigns node_id = pre-order rank to every node.
void assign_preorder_ids(Node& root);

}  // namespace clay
