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

#include "clay/gnn/gnn.hpp"

#include <algorithm>
#include <random>

#include "clay/error.hpp"
#include "clay/nn/checkpoint.hpp"

namespace clay::gnn {

bool spatially_adjacent(const BoundingBox& a, const BoundingBox& b, double max_gap) {
  const int gap_x = std::max(a.left, b.left) - std::min(a.right, b.right);
  const int gap_y = std::max(a.top, b.top) - std::min(a.bottom, b.bottom);
  // A negative gap is an overlap of that length.
  return (gap_x <= max_gap && gap_y < 0) || (gap_y <= max_gap && gap_x < 0);
}

LayoutGraph build_graph(const ViewHierarchy& h, double spatial_threshold, bool spatial) {
  LayoutGraph g;
  g.nodes = preorder(h);
  const auto parent = parent_positions(h.root);
  const int n = g.size();
  for (int i = 1; i < n; ++i) {
    g.edges.push_back({parent[std::size_t(i)], i, EdgeKind::parent_child});
    g.edges.push_back({i, parent[std::size_t(i)], EdgeKind::child_parent});
  }
  if (!spatial) return g;
  const double max_gap = spatial_threshold * h.screen_height;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (parent[std::size_t(j)] == i || parent[std::size_t(i)] == j) continue;
      if (!spatially_adjacent(g.nodes[std::size_t(i)]->bounds, g.nodes[std::size_t(j)]->bounds, max_gap)) continue;
      g.edges.push_back({i, j, EdgeKind::spatial});
      g.edges.push_back({j, i, EdgeKind::spatial});
    }
  return g;
}

void GnnConfig::validate() const {
  features.validate();
  if (hidden_dim <= 0 || message_dim <= 0 || edge_dim <= 0 || rounds < 0)
    throw ContractViolation("gnn config: dims must be positive and rounds non-negative");
}

void to_json(nlohmann::json& j, const GnnConfig& c) {
  j = {{"features", c.features},       {"hidden_dim", c.hidden_dim},
       {"message_dim", c.message_dim}, {"edge_dim", c.edge_dim},
       {"rounds", c.rounds},           {"spatial_threshold", c.spatial_threshold},
       {"spatial_edges", c.spatial_edges}};
}

void from_json(const nlohmann::json& j, GnnConfig& c) {
  if (j.contains("features")) c.features = j.at("features").get<features::FeatureConfig>();
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.message_dim = j.value("message_dim", c.message_dim);
  c.edge_dim = j.value("edge_dim", c.edge_dim);
  c.rounds = j.value("rounds", c.rounds);
  c.spatial_threshold = j.value("spatial_threshold", c.spatial_threshold);
  c.spatial_edges = j.value("spatial_edges", c.spatial_edges);
}

GraphInput make_graph_input(const Screen& s, const features::TokenizerModel& tok, const GnnConfig& cfg,
                            bool with_labels) {
  const LayoutGraph g = build_graph(s.hierarchy, cfg.spatial_threshold, cfg.spatial_edges);
  GraphInput in;
  in.nodes = features::node_inputs(s, g.nodes, tok, cfg.features, true);
  for (const auto& e : g.edges) {
    in.src.push_back(e.from);
    in.dst.push_back(e.to);
    in.kind.push_back(static_cast<int>(e.kind));
  }
  in.labels = with_labels ? features::semantic_labels(g.nodes) : std::vector<int>(g.nodes.size(), -1);
  for (const Node* n : g.nodes) in.node_ids.push_back(n->node_id);
  return in;
}

GraphInput merge(const std::vector<const GraphInput*>& parts) {
  GraphInput out;
  std::vector<const features::NodeInputs*> nodes;
  int offset = 0;
  for (const auto* p : parts) {
    nodes.push_back(&p->nodes);
    for (std::size_t e = 0; e < p->src.size(); ++e) {
      out.src.push_back(p->src[e] + offset);
      out.dst.push_back(p->dst[e] + offset);
      out.kind.push_back(p->kind[e]);
    }
    out.labels.insert(out.labels.end(), p->labels.begin(), p->labels.end());
    out.node_ids.insert(out.node_ids.end(), p->node_ids.begin(), p->node_ids.end());
    offset += p->count();
  }
  out.nodes = features::concat(nodes);
  return out;
}

GnnModel::GnnModel(GnnConfig cfg, features::TokenizerModel tokenizer, std::uint64_t seed)
    : cfg_(std::move(cfg)), tok_(std::move(tokenizer)) {
  cfg_.validate();
  const auto& f = cfg_.features;
  nn::Rng rng(seed);
  text_ = features::TextEmbedding(params_, "gnn/text", tok_.vocab_size(), f.text_dim, rng);
  position_ = features::PositionEmbedding(params_, "gnn/position", f.sinusoid_frequencies, f.position_dim, rng);
  crop_ = features::CropEncoder(params_, "gnn/crop", f.crop_size, f.image_dim, rng);
  init_ = nn::Linear(params_, "gnn/init", f.node_width(), cfg_.hidden_dim, rng);
  edge_table_ = &params_.add("gnn/edge_kind", kEdgeKinds, cfg_.edge_dim);
  nn::truncated_normal(*edge_table_, 1.0 / std::sqrt(double(cfg_.edge_dim)), rng);
  const int h = cfg_.hidden_dim, m = cfg_.message_dim;
  message_ = nn::Linear(params_, "gnn/message", 2 * h + cfg_.edge_dim, m, rng);
  score_ = nn::Linear(params_, "gnn/attention", h + m, 1, rng);
  update_ = nn::Linear(params_, "gnn/update", h + m, h, rng);
  readout_ = nn::Linear(params_, "gnn/readout", h, kSemanticTypeCount, rng, 0, 0.1);
}

Var GnnModel::node_features(Tape& t, const GraphInput& g) const {
  const int n = g.count();
  Var img = crop_(t, g.nodes.crops, n);
  Var txt = text_(t, g.nodes.text);
  Var pos = position_(t, g.nodes.coords);
  return nn::concat_cols(std::vector<Var>{img, txt, pos});
}

Var GnnModel::init_states(Tape& t, const GraphInput& g) const { return init_(t, node_features(t, g)); }

Var GnnModel::message_round(Tape& t, const GraphInput& g, const Var& h, Matrix* attention) const {
  const int n = g.count();
  Var p;
  if (g.src.empty()) {
    p = t.constant(Matrix::Zero(n, cfg_.message_dim));
    if (attention) attention->resize(0, 1);
  } else {
    Var hu = nn::gather_rows(h, g.src), ho = nn::gather_rows(h, g.dst);
    Var e = nn::gather_rows(t.param(*edge_table_), g.kind);
    Var m = nn::relu(message_(t, nn::concat_cols(std::vector<Var>{hu, ho, e})));
    Var alpha = nn::segment_softmax(score_(t, nn::concat_cols(std::vector<Var>{ho, m})), g.dst, n);
    if (attention) *attention = alpha.value();
    p = nn::scatter_add_rows(nn::mul_rows(m, alpha), g.dst, n);
  }
  return nn::add(h, nn::tanh(update_(t, nn::concat_cols(std::vector<Var>{h, p}))));
}

Var GnnModel::forward(Tape& t, const GraphInput& g, int rounds) const {
  Var h = init_states(t, g);
  const int r = rounds < 0 ? cfg_.rounds : rounds;
  for (int i = 0; i < r; ++i) h = message_round(t, g, h);
  return readout_(t, h);
}

Matrix GnnModel::predict(const GraphInput& g) const {
  Tape t;
  Matrix z = forward(t, g).value();
  for (nn::Index i = 0; i < z.rows(); ++i) {
    z.row(i).array() -= z.row(i).maxCoeff();
    z.row(i) = z.row(i).array().exp().matrix();
    z.row(i) /= z.row(i).sum();
  }
  return z;
}

nlohmann::json GnnModel::meta() const { return {{"kind", "gnn"}, {"config", cfg_}, {"tokenizer", tok_.to_json()}}; }

void GnnModel::save(const std::filesystem::path& path) const { nn::save_checkpoint(path, params_, meta()); }

GnnModel GnnModel::load(const std::filesystem::path& path) {
  const auto meta = nn::read_checkpoint_meta(path);
  if (meta.value("kind", "") != "gnn") throw DataError(path.string() + " is not a GNN checkpoint");
  GnnModel m(meta.at("config").get<GnnConfig>(), features::TokenizerModel::from_json(meta.at("tokenizer")));
  nn::load_checkpoint(path, m.params_);
  return m;
}

nn::TrainResult train_gnn(GnnModel& model, const std::vector<GraphInput>& screens, const nn::TrainConfig& config,
                          const nn::TrainHooks& hooks) {
  if (screens.empty()) throw DataError("train_gnn: no training screens");
  std::vector<int> order(screens.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::mt19937_64 rng(config.seed);
  std::size_t cursor = order.size();
  auto h = hooks;
  if (h.checkpoint_meta.is_null()) h.checkpoint_meta = model.meta();
  return nn::train_loop(
      model.params(), config,
      [&](Tape& t, long) {
        std::vector<const GraphInput*> batch;
        const auto want = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), screens.size());
        while (batch.size() < want) {
          if (cursor == order.size()) {
            std::shuffle(order.begin(), order.end(), rng);
            cursor = 0;
          }
          batch.push_back(&screens[std::size_t(order[cursor++])]);
        }
        const GraphInput g = merge(batch);
        std::vector<std::uint8_t> mask;
        std::vector<int> labels = g.labels;
        for (auto& y : labels) {
          mask.push_back(y >= 0);
          y = std::max(y, 0);
        }
        return nn::cross_entropy(model.forward(t, g), labels, mask);
      },
      h);
}

nn::TrainConfig full_scale_gnn_config() {
  nn::TrainConfig c;
  c.batch_size = 32;
  c.total_steps = 500000;
  c.initial_lr = 2e-3;
  c.reduced_lr = 1e-4;
  c.lr_drop_step = 200000;
  return c;
}

}  // namespace clay::gnn
