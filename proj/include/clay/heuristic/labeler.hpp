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

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clay/layout/hierarchy.hpp"
#include "clay/layout/object_type.hpp"

namespace clay {
struct EvalReport;
}

namespace clay::heuristic {

enum class Matcher {
  class_substring,
  class_suffix,
  resource_id_exact,
  resource_id_substring,
  content_desc_substring,
  // Extension: matches the terminal class segment of the node's parent.
  parent_class_suffix,
};

std::string_view to_string(Matcher m);
std::optional<Matcher> parse_matcher(std::string_view s);

struct HeuristicRule {
  Matcher matcher;
  std::string pattern;  // compared case-insensitively
  ObjectType target;
  int priority;
};

/// Ordered, validated rule set. Resource-id rules take precedence over class
/// rules, which take precedence over parent-class and content-description
/// rules; within a family, lower priority numbers win.
class RuleTable {
 public:
  explicit RuleTable(std::vector<HeuristicRule> rules, std::string version = "1");

  /// Parses `priority<TAB>matcher<TAB>pattern<TAB>type` lines; `#` starts a
  /// comment and `# version: X` sets the table version.
  static RuleTable parse(std::string_view text);
  static RuleTable load(const std::filesystem::path& path);
  static const RuleTable& defaults();
  static std::string_view default_text();

  const std::vector<HeuristicRule>& rules() const { return rules_; }
  const std::string& version() const { return version_; }

  /// Returns a copy with `rule` appended at the lowest precedence of its family.
  RuleTable with_rule(HeuristicRule rule) const;

 private:
  std::vector<HeuristicRule> rules_;
  std::string version_;
};

/// "com.example.app.FancyButton" -> "FancyButton".
std::string_view terminal_class_segment(std::string_view android_class);

/// First matching rule wins. Unmatched nodes with children are CONTAINER,
/// unmatched leaves are unknown (nullopt).
std::optional<ObjectType> infer_type(const Node& node, const RuleTable& rules, const Node* parent = nullptr);

/// Runs infer_type over every labeled, non-INVALID node of every hierarchy.
EvalReport evaluate_baseline(const std::vector<ViewHierarchy>& dataset, const RuleTable& rules);

}  // namespace clay::heuristic
