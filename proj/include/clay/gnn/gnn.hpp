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
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "clay/features/embedding.hpp"
#include "clay/nn/train.hpp"

namespace clay::gnn {

using nn::Matrix;
using nn::Tape;
using nn::Var;

enum class EdgeKind : int { parent_child = 0, child_parent = 1, spatial = 2 };
inline constexpr int kEdgeKinds = 3;

struct Edge {
  int from;
  int to;
  EdgeKind kind;
  bool operator==(const Edge&) const = default;
};

/// Nodes are positions in preorder(h).
struct LayoutGraph {
  std::vector<const Node*> nodes;
  std::vector<Edge> edges;
  int size() const { return static_cast<int>(nodes.size()); }
};

/// Spatial neighbours: along one axis the gap between the boxes is at most
/// threshold * screen_height (overlap counts as a negative gap) while their
/// projections on the other axis overlap by a positive length. Pairs already
/// joined by a parent-child edge get no spatial edge.
bool spatially_adjacent(const BoundingBox& a, const BoundingBox& b, double max_gap);

/// Parent-child edges in both directions plus symmetric spatial edges.
LayoutGraph build_graph(const ViewHierarchy& h, double spatial_threshold = 0.01, bool spatial = true);

struct GnnConfig {
  features::FeatureConfig features;
  int hidden_dim = 64;
  int message_dim = 32;
  int edge_dim = 8;
  int rounds = 5;
  double spatial_threshold = 0.01;
  bool spatial_edges = true;

  void validate() const;
  friend void to_json(nlohmann::json& j, const GnnConfig& c);
  friend void from_json(const nlohmann::json& j, GnnConfig& c);
};

/// Model-ready form of one or more screens' graphs.
struct GraphInput {
  features::NodeInputs nodes;
  std::vector<int> src, dst, kind;
  std::vector<int> labels;    // semantic index or -1
  std::vector<int> node_ids;  // original ids, for reporting
  int count() const { return nodes.count(); }
};

/// `with_labels` reads gold types from the nodes; otherwise every label is -1.
GraphInput make_graph_input(const Screen& s, const features::TokenizerModel& tok, const GnnConfig& cfg,
                            bool with_labels = true);
/// Disjoint union; messages never cross screens.
GraphInput merge(const std::vector<const GraphInput*>& parts);

class GnnModel {
 public:
  GnnModel(GnnConfig cfg, features::TokenizerModel tokenizer, std::uint64_t seed = 0);

  const GnnConfig& config() const { return cfg_; }
  const features::TokenizerModel& tokenizer() const { return tok_; }
  nn::ParameterSet& params() { return params_; }

  /// Pre-projection h0 = [I, W, P], [N, node_width].
  Var node_features(Tape& t, const GraphInput& g) const;
  /// h0 projected to the hidden width.
  Var init_states(Tape& t, const GraphInput& g) const;
  /// One synchronous round. `attention`, when given, receives the per-edge weights.
  Var message_round(Tape& t, const GraphInput& g, const Var& h, Matrix* attention = nullptr) const;
  /// [N, 24] logits after `rounds` rounds (defaults to the configured count).
  Var forward(Tape& t, const GraphInput& g, int rounds = -1) const;
  /// Softmax probabilities, [N, 24].
  Matrix predict(const GraphInput& g) const;

  nlohmann::json meta() const;
  void save(const std::filesystem::path& path) const;
  static GnnModel load(const std::filesystem::path& path);

 private:
  GnnConfig cfg_;
  features::TokenizerModel tok_;
  nn::ParameterSet params_;
  features::TextEmbedding text_;
  features::PositionEmbedding position_;
  features::CropEncoder crop_;
  nn::Linear init_;
  nn::Parameter* edge_table_ = nullptr;
  nn::Linear message_, score_, update_, readout_;
};

/// Cross-entropy + L2 over batches of `config.batch_size` screens.
nn::TrainResult train_gnn(GnnModel& model, const std::vector<GraphInput>& screens, const nn::TrainConfig& config,
                          const nn::TrainHooks& hooks = {});

/// Full-scale schedule, kept for reference.
nn::TrainConfig full_scale_gnn_config();

}  // namespace clay::gnn
