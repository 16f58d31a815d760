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

#include "clay/layout/hierarchy.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "clay/error.hpp"

namespace clay {

using nlohmann::json;

std::string_view to_string(Visibility v) {
  switch (v) {
    case Visibility::visible:
      return "visible";
    case Visibility::invisible:
      return "invisible";
    case Visibility::gone:
      return "gone";
  }
  return "visible";
}

namespace {

struct Parser {
  int dropped = 0;
  std::vector<std::string> warnings;

  static std::optional<std::string> text_field(const json& n, const char* key, const std::string& path) {
    auto it = n.find(key);
    if (it == n.end() || it->is_null()) return std::nullopt;
    if (it->is_string()) return it->get<std::string>();
    // Rico stores content-desc as a one-element list, often [null].
    if (it->is_array()) {
      for (const auto& e : *it)
        if (e.is_string()) return e.get<std::string>();
      return std::nullopt;
    }
    throw ParseError(path + "/" + key, "expected string, list or null");
  }

  static bool bool_field(const json& n, const char* key, bool fallback, const std::string& path) {
    auto it = n.find(key);
    if (it == n.end() || it->is_null()) return fallback;
    if (!it->is_boolean()) throw ParseError(path + "/" + key, "expected boolean");
    return it->get<bool>();
  }

  // Returns false when the node has no usable bounds.
  static bool read_bounds(const json& n, const std::string& path, BoundingBox& out) {
    auto it = n.find("bounds");
    if (it == n.end() || it->is_null()) return false;
    if (!it->is_array() || it->size() != 4) throw ParseError(path + "/bounds", "expected [left, top, right, bottom]");
    int v[4];
    for (int i = 0; i < 4; ++i) {
      const auto& e = (*it)[static_cast<std::size_t>(i)];
      if (!e.is_number()) throw ParseError(path + "/bounds/" + std::to_string(i), "expected a number");
      v[i] = e.is_number_integer() ? e.get<int>() : static_cast<int>(e.get<double>());
    }
    out = {v[0], v[1], v[2], v[3]};
    return out.left <= out.right && out.top <= out.bottom;
  }

  // Appends the parsed node (or, when it lacks bounds, its parsed children) to `out`.
  void parse_into(const json& n, const std::string& path, std::vector<Node>& out) {
    if (!n.is_object()) throw ParseError(path, "expected an object");
    Node node;
    const bool has_bounds = read_bounds(n, path, node.bounds);
    if (auto c = text_field(n, "class", path)) node.android_class = *c;
    node.content_desc = text_field(n, "content-desc", path);
    node.resource_id = text_field(n, "resource-id", path);
    node.visible_to_user = bool_field(n, "visible-to-user", true, path);
    node.clickable = bool_field(n, "clickable", false, path);
    if (auto v = text_field(n, "visibility", path)) {
      if (*v == "visible") node.visibility = Visibility::visible;
      else if (*v == "invisible") node.visibility = Visibility::invisible;
      else if (*v == "gone") node.visibility = Visibility::gone;
      else throw ParseError(path + "/visibility", "unknown visibility '" + *v + "'");
    }
    if (auto l = text_field(n, "clay_label", path)) {
      node.label = parse_object_type(*l);
      if (!node.label) throw ParseError(path + "/clay_label", "unknown object type '" + *l + "'");
    }
    std::vector<Node>& sink = has_bounds ? node.children : out;
    if (auto it = n.find("children"); it != n.end() && !it->is_null()) {
      if (!it->is_array()) throw ParseError(path + "/children", "expected an array");
      for (std::size_t i = 0; i < it->size(); ++i) {
        const auto& c = (*it)[i];
        if (c.is_null()) continue;
        parse_into(c, path + "/children/" + std::to_string(i), sink);
      }
    }
    if (has_bounds) {
      out.push_back(std::move(node));
    } else {
      ++dropped;
      warnings.push_back(path + ": node without valid bounds dropped");
    }
  }
};

std::string package_from_activity(const std::string& activity) {
  const auto slash = activity.find('/');
  return slash == std::string::npos ? activity : activity.substr(0, slash);
}

}  // namespace

ParseResult parse_hierarchy(const json& doc) {
  if (!doc.is_object()) throw ParseError("", "document must be a JSON object");
  const json* root = nullptr;
  std::string root_path;
  if (auto a = doc.find("activity"); a != doc.end() && a->is_object() && a->contains("root")) {
    root = &(*a)["root"];
    root_path = "/activity/root";
  } else if (doc.contains("root")) {
    root = &doc["root"];
    root_path = "/root";
  } else if (doc.contains("bounds")) {
    root = &doc;
  }
  if (root == nullptr || root->is_null()) throw ParseError("", "no root node");

  Parser p;
  std::vector<Node> top;
  p.parse_into(*root, root_path, top);
  if (top.size() != 1) throw ParseError(root_path, "root node lacks valid bounds");

  ParseResult r;
  r.hierarchy.root = std::move(top.front());
  assign_preorder_ids(r.hierarchy.root);
  r.dropped_nodes = p.dropped;
  r.warnings = std::move(p.warnings);

  auto& h = r.hierarchy;
  h.activity_name = doc.value("activity_name", std::string());
  if (auto it = doc.find("package_name"); it != doc.end() && it->is_string())
    h.package_name = it->get<std::string>();
  else if (!h.activity_name.empty())
    h.package_name = package_from_activity(h.activity_name);
  else if (auto pk = root->find("package"); pk != root->end() && pk->is_string())
    h.package_name = pk->get<std::string>();

  const BoundingBox rb = h.root.bounds;
  if (doc.contains("screen_width") && doc.contains("screen_height")) {
    h.screen_width = doc["screen_width"].get<int>();
    h.screen_height = doc["screen_height"].get<int>();
  } else if (rb.left == 0 && rb.top == 0 && rb.right > 0 && rb.bottom > 0) {
    h.screen_width = rb.right;
    h.screen_height = rb.bottom;
  }
  if (h.screen_width <= 0 || h.screen_height <= 0) throw ParseError("/screen_width", "screen dimensions must be positive");
  return r;
}

ParseResult parse_hierarchy(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("invalid JSON: ") + e.what());
  }
  return parse_hierarchy(doc);
}

ParseResult load_hierarchy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return parse_hierarchy(std::string_view(text));
  } catch (const ParseError& e) {
    throw ParseError(path + "#" + e.path(), e.what());
  }
}

json serialize_node(const Node& n) {
  json j;
  j["bounds"] = {n.bounds.left, n.bounds.top, n.bounds.right, n.bounds.bottom};
  j["class"] = n.android_class;
  if (n.content_desc) j["content-desc"] = *n.content_desc;
  if (n.resource_id) j["resource-id"] = *n.resource_id;
  j["visibility"] = std::string(to_string(n.visibility));
  j["visible-to-user"] = n.visible_to_user;
  j["clickable"] = n.clickable;
  if (n.label) j["clay_label"] = std::string(to_string(*n.label));
  j["children"] = json::array();
  for (const auto& c : n.children) j["children"].push_back(serialize_node(c));
  return j;
}

json serialize_hierarchy(const ViewHierarchy& h) {
  json j;
  j["package_name"] = h.package_name;
  if (!h.activity_name.empty()) j["activity_name"] = h.activity_name;
  j["screen_width"] = h.screen_width;
  j["screen_height"] = h.screen_height;
  j["activity"] = {{"root", serialize_node(h.root)}};
  return j;
}

std::vector<const Node*> preorder(const Node& root) {
  std::vector<const Node*> out;
  std::vector<const Node*> stack{&root};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    out.push_back(n);
    for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) stack.push_back(&*it);
  }
  return out;
}

std::vector<const Node*> preorder(const ViewHierarchy& h) { return preorder(h.root); }

std::vector<Node*> preorder_mut(Node& root) {
  std::vector<Node*> out;
  std::vector<Node*> stack{&root};
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    out.push_back(n);
    for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) stack.push_back(&*it);
  }
  return out;
}

std::size_t node_count(const ViewHierarchy& h) { return preorder(h).size(); }

bool screen_admissible(const ViewHierarchy& h) { return node_count(h) > 2; }

std::vector<int> parent_positions(const Node& root) {
  std::vector<int> parent;
  std::function<void(const Node&, int)> walk = [&](const Node& n, int p) {
    const int self = static_cast<int>(parent.size());
    parent.push_back(p);
    for (const auto& c : n.children) walk(c, self);
  };
  walk(root, -1);
  return parent;
}

void assign_preorder_ids(Node& root) {
  int next = 0;
  for (Node* n : preorder_mut(root)) n->node_id = next++;
}

}  // namespace clay
