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
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clay/detector/detector.hpp"
#include "clay/gnn/gnn.hpp"
#include "clay/heuristic/labeler.hpp"
#include "clay/preprocess/preprocess.hpp"
#include "clay/transformer/transformer.hpp"

namespace clay::pipeline {

enum class TypeModel { heuristic, gnn, transformer };

std::string_view to_string(TypeModel m);
std::optional<TypeModel> parse_type_model(std::string_view s);

struct PipelineConfig {
  preprocess::PreprocessOptions preprocess;
  std::filesystem::path rules;  // empty: built-in table
  std::filesystem::path detector_checkpoint;  // empty: no detector stage
  double detector_threshold = 0.5;
  TypeModel type_model = TypeModel::heuristic;
  std::filesystem::path gnn_checkpoint;
  std::filesystem::path transformer_checkpoint;
  std::filesystem::path output_dir = "out";

  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::filesystem::path& path);
};

/// A surviving node with its final box and predictions.
struct NodeResult {
  int node_id;
  BoundingBox bounds;
  std::optional<ObjectType> type;  // nullopt: unknown (heuristic only)
  double type_prob = 0.0;
  std::optional<double> invalid_prob;
};

struct CleanedScreen {
  std::string source_id;
  ViewHierarchy hierarchy;  // survivors only, children re-attached
  std::vector<NodeResult> nodes;  // pre-order of `hierarchy`
  preprocess::PreprocessReport report;
  std::vector<int> model_removed;
  std::vector<std::pair<int, double>> model_removed_prob;
  std::size_t original_count = 0;

  const NodeResult* find(int node_id) const;
  /// Survivors + rule removals + model removals; equals original_count.
  std::size_t accounted() const;
  /// The input document shape with `clay_type`, `type_prob`, `invalid_prob`
  /// on survivors and a top-level `removed` ledger with `removed_reason`.
  nlohmann::json to_json() const;
};

/// Drops the nodes in `ids`, moving their children to the nearest surviving
/// ancestor. The root is never dropped.
ViewHierarchy remove_nodes(const ViewHierarchy& h, const std::set<int>& ids);

/// Loaded models for the two-stage cleaning flow.
class Pipeline {
 public:
  /// Loads the rule table and checkpoints named by `cfg`. Throws DataError
  /// when a referenced checkpoint is missing or inconsistent.
  explicit Pipeline(PipelineConfig cfg);
  Pipeline(PipelineConfig cfg, heuristic::RuleTable rules, std::shared_ptr<const detector::DetectorModel> det,
           std::shared_ptr<const gnn::GnnModel> gnn, std::shared_ptr<const transformer::TransformerModel> tf);

  const PipelineConfig& config() const { return cfg_; }
  const heuristic::RuleTable& rules() const { return rules_; }

  /// Rules, then the invalid detector, then the selected type model.
  CleanedScreen clean(const Screen& s) const;

 private:
  void check() const;
  PipelineConfig cfg_;
  heuristic::RuleTable rules_;
  std::shared_ptr<const detector::DetectorModel> detector_;
  std::shared_ptr<const gnn::GnnModel> gnn_;
  std::shared_ptr<const transformer::TransformerModel> transformer_;
};

}  // namespace clay::pipeline
