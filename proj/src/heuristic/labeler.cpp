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

#include "clay/heuristic/labeler.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "clay/error.hpp"
#include "clay/eval/metrics.hpp"

namespace clay::heuristic {

namespace detail {
extern const std::string_view kDefaultRuleText;
}

namespace {

constexpr std::pair<Matcher, std::string_view> kMatcherNames[] = {
    {Matcher::class_substring, "class_substring"},
    {Matcher::class_suffix, "class_suffix"},
    {Matcher::resource_id_exact, "resource_id_exact"},
    {Matcher::resource_id_substring, "resource_id_substring"},
    {Matcher::content_desc_substring, "content_desc_substring"},
    {Matcher::parent_class_suffix, "parent_class_suffix"},
};

int family(Matcher m) {
  switch (m) {
    case Matcher::resource_id_exact:
    case Matcher::resource_id_substring:
      return 0;
    case Matcher::class_substring:
    case Matcher::class_suffix:
      return 1;
    case Matcher::parent_class_suffix:
      return 2;
    case Matcher::content_desc_substring:
      return 3;
  }
  return 3;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool matches(const HeuristicRule& r, const Node& n, const Node* parent) {
  const std::string& pattern = r.pattern;
  switch (r.matcher) {
    case Matcher::class_substring:
      return lower(terminal_class_segment(n.android_class)).find(pattern) != std::string::npos;
    case Matcher::class_suffix:
      return ends_with(lower(terminal_class_segment(n.android_class)), pattern);
    case Matcher::resource_id_exact:
      return n.resource_id && lower(*n.resource_id) == pattern;
    case Matcher::resource_id_substring:
      return n.resource_id && lower(*n.resource_id).find(pattern) != std::string::npos;
    case Matcher::content_desc_substring:
      return n.content_desc && lower(*n.content_desc).find(pattern) != std::string::npos;
    case Matcher::parent_class_suffix:
      return parent != nullptr && ends_with(lower(terminal_class_segment(parent->android_class)), pattern);
  }
  return false;
}

}  // namespace

std::string_view to_string(Matcher m) {
  for (const auto& [k, name] : kMatcherNames)
    if (k == m) return name;
  return "class_substring";
}

std::optional<Matcher> parse_matcher(std::string_view s) {
  for (const auto& [k, name] : kMatcherNames)
    if (name == s) return k;
  return std::nullopt;
}

RuleTable::RuleTable(std::vector<HeuristicRule> rules, std::string version)
    : rules_(std::move(rules)), version_(std::move(version)) {
  std::set<int> seen;
  for (auto& r : rules_) {
    if (!seen.insert(r.priority).second)
      throw ContractViolation("heuristic rules: duplicate priority " + std::to_string(r.priority));
    if (r.pattern.empty()) throw ContractViolation("heuristic rules: empty pattern at priority " + std::to_string(r.priority));
    if (r.target == ObjectType::INVALID) throw ContractViolation("heuristic rules: INVALID is not a rule target");
    r.pattern = lower(r.pattern);
  }
  std::stable_sort(rules_.begin(), rules_.end(), [](const HeuristicRule& a, const HeuristicRule& b) {
    const int fa = family(a.matcher), fb = family(b.matcher);
    return fa != fb ? fa < fb : a.priority < b.priority;
  });
}

RuleTable RuleTable::parse(std::string_view text) {
  std::vector<HeuristicRule> rules;
  std::string version = "1";
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = "line " + std::to_string(line_no);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const std::string body = trim(std::string_view(t).substr(1));
      if (body.rfind("version:", 0) == 0) version = trim(std::string_view(body).substr(8));
      continue;
    }
    std::vector<std::string> cols;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, '\t');) cols.push_back(trim(c));
    if (cols.size() != 4) throw ParseError(where, "expected 4 tab-separated columns, got " + std::to_string(cols.size()));
    HeuristicRule r;
    try {
      std::size_t used = 0;
      r.priority = std::stoi(cols[0], &used);
      if (used != cols[0].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ParseError(where, "bad priority '" + cols[0] + "'");
    }
    auto m = parse_matcher(cols[1]);
    if (!m) throw ParseError(where, "unknown matcher '" + cols[1] + "'");
    r.matcher = *m;
    r.pattern = cols[2];
    auto type = parse_object_type(cols[3]);
    if (!type) throw ParseError(where, "unknown object type '" + cols[3] + "'");
    r.target = *type;
    rules.push_back(std::move(r));
  }
  return RuleTable(std::move(rules), version);
}

RuleTable RuleTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open rule table " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ":" + e.path(), e.what());
  }
}

std::string_view RuleTable::default_text() { return detail::kDefaultRuleText; }

const RuleTable& RuleTable::defaults() {
  static const RuleTable table = parse(default_text());
  return table;
}

RuleTable RuleTable::with_rule(HeuristicRule rule) const {
  auto rules = rules_;
  int last = 0;
  for (const auto& r : rules) last = std::max(last, r.priority);
  rule.priority = last + 1;
  rules.push_back(std::move(rule));
  return RuleTable(std::move(rules), version_);
}

std::string_view terminal_class_segment(std::string_view android_class) {
  const auto cut = android_class.find_last_of(".$");
  return cut == std::string_view::npos ? android_class : android_class.substr(cut + 1);
}

std::optional<ObjectType> infer_type(const Node& node, const RuleTable& rules, const Node* parent) {
  for (const auto& r : rules.rules())
    if (matches(r, node, parent)) return r.target;
  if (!node.children.empty()) return ObjectType::CONTAINER;
  return std::nullopt;
}

EvalReport evaluate_baseline(const std::vector<ViewHierarchy>& dataset, const RuleTable& rules) {
  std::vector<Prediction> preds;
  std::vector<ObjectType> golds;
  for (const auto& h : dataset) {
    std::vector<std::pair<const Node*, const Node*>> stack{{&h.root, nullptr}};
    while (!stack.empty()) {
      auto [n, parent] = stack.back();
      stack.pop_back();
      if (n->label && *n->label != ObjectType::INVALID) {
        preds.push_back(infer_type(*n, rules, parent));
        golds.push_back(*n->label);
      }
      for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) stack.push_back({&*it, n});
    }
  }
  return evaluate(preds, golds);
}

}  // namespace clay::heuristic
