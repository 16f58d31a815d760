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

#include "clay/pipeline/pipeline.hpp"

#include <fstream>
#include <functional>

#include "clay/error.hpp"

namespace clay::pipeline {

namespace fs = std::filesystem;
using nn::Matrix;

std::string_view to_string(TypeModel m) {
  switch (m) {
    case TypeModel::heuristic:
      return "heuristic";
    case TypeModel::gnn:
      return "gnn";
    case TypeModel::transformer:
      return "transformer";
  }
  return "heuristic";
}

std::optional<TypeModel> parse_type_model(std::string_view s) {
  for (auto m : {TypeModel::heuristic, TypeModel::gnn, TypeModel::transformer})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

nlohmann::json PipelineConfig::to_json() const {
  return {{"preprocess",
           {{"min_aspect_ratio", preprocess.min_aspect_ratio},
            {"min_area_fraction", preprocess.min_area_fraction},
            {"blank_modal_share", preprocess.blank_modal_share}}},
          {"rules", rules.string()},
          {"detector_checkpoint", detector_checkpoint.string()},
          {"detector_threshold", detector_threshold},
          {"type_model", std::string(to_string(type_model))},
          {"gnn_checkpoint", gnn_checkpoint.string()},
          {"transformer_checkpoint", transformer_checkpoint.string()},
          {"output_dir", output_dir.string()}};
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  PipelineConfig c;
  if (auto p = j.find("preprocess"); p != j.end()) {
    c.preprocess.min_aspect_ratio = p->value("min_aspect_ratio", c.preprocess.min_aspect_ratio);
    c.preprocess.min_area_fraction = p->value("min_area_fraction", c.preprocess.min_area_fraction);
    c.preprocess.blank_modal_share = p->value("blank_modal_share", c.preprocess.blank_modal_share);
  }
  c.rules = j.value("rules", std::string());
  c.detector_checkpoint = j.value("detector_checkpoint", std::string());
  c.detector_threshold = j.value("detector_threshold", c.detector_threshold);
  const auto model = j.value("type_model", std::string("heuristic"));
  auto m = parse_type_model(model);
  if (!m) throw ParseError("/type_model", "expected heuristic, gnn or transformer, got '" + model + "'");
  c.type_model = *m;
  c.gnn_checkpoint = j.value("gnn_checkpoint", std::string());
  c.transformer_checkpoint = j.value("transformer_checkpoint", std::string());
  c.output_dir = j.value("output_dir", c.output_dir.string());
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), e.what());
  }
}

const NodeResult* CleanedScreen::find(int node_id) const {
  for (const auto& n : nodes)
    if (n.node_id == node_id) return &n;
  return nullptr;
}

std::size_t CleanedScreen::accounted() const {
  std::size_t survivors = 0;
  for (const auto& n : nodes) survivors += n.node_id >= 0;
  return survivors + report.removed.size() + model_removed.size();
}

nlohmann::json CleanedScreen::to_json() const {
  std::function<nlohmann::json(const Node&)> node_json = [&](const Node& n) {
    nlohmann::json j = serialize_node(n);
    j["node_id"] = n.node_id;
    if (const NodeResult* r = find(n.node_id)) {
      j["clay_type"] = r->type ? nlohmann::json(std::string(to_string(*r->type))) : nlohmann::json(nullptr);
      j["type_prob"] = r->type_prob;
      j["invalid_prob"] = r->invalid_prob ? nlohmann::json(*r->invalid_prob) : nlohmann::json(nullptr);
    }
    j["children"] = nlohmann::json::array();
    for (const auto& c : n.children) j["children"].push_back(node_json(c));
    return j;
  };
  nlohmann::json j = serialize_hierarchy(hierarchy);
  j["source_id"] = source_id;
  j["activity"]["root"] = node_json(hierarchy.root);
  j["original_node_count"] = original_count;
  j["removed"] = nlohmann::json::array();
  for (const auto& r : report.removed)
    j["removed"].push_back({{"node_id", r.node_id}, {"removed_reason", std::string(preprocess::to_string(r.reason))}});
  for (const auto& [id, p] : model_removed_prob)
    j["removed"].push_back({{"node_id", id}, {"removed_reason", "invalid_detector"}, {"invalid_prob", p}});
  j["trimmed"] = report.to_json()["trimmed"];
  return j;
}

ViewHierarchy remove_nodes(const ViewHierarchy& h, const std::set<int>& ids) {
  std::function<void(const Node&, Node&)> copy_kids = [&](const Node& src, Node& dst) {
    for (const auto& c : src.children) {
      if (ids.count(c.node_id)) {
        copy_kids(c, dst);
        continue;
      }
      Node k = c;
      k.children.clear();
      copy_kids(c, k);
      dst.children.push_back(std::move(k));
    }
  };
  ViewHierarchy out = h;
  out.root.children.clear();
  copy_kids(h.root, out.root);
  return out;
}

Pipeline::Pipeline(PipelineConfig cfg)
    : cfg_(std::move(cfg)),
      rules_(cfg_.rules.empty() ? heuristic::RuleTable::defaults() : heuristic::RuleTable::load(cfg_.rules)) {
  auto need = [](const fs::path& p, const char* what) {
    if (p.empty()) throw DataError(std::string(what) + " checkpoint required by the configured type model");
    if (!fs::exists(p)) throw DataError(std::string(what) + " checkpoint not found: " + p.string());
  };
  if (!cfg_.detector_checkpoint.empty()) {
    need(cfg_.detector_checkpoint, "detector");
    detector_ = std::make_shared<detector::DetectorModel>(detector::DetectorModel::load(cfg_.detector_checkpoint));
  }
  if (cfg_.type_model == TypeModel::gnn) {
    need(cfg_.gnn_checkpoint, "gnn");
    gnn_ = std::make_shared<gnn::GnnModel>(gnn::GnnModel::load(cfg_.gnn_checkpoint));
  } else if (cfg_.type_model == TypeModel::transformer) {
    need(cfg_.transformer_checkpoint, "transformer");
    transformer_ = std::make_shared<transformer::TransformerModel>(
        transformer::TransformerModel::load(cfg_.transformer_checkpoint));
  }
  check();
}

Pipeline::Pipeline(PipelineConfig cfg, heuristic::RuleTable rules, std::shared_ptr<const detector::DetectorModel> det,
                   std::shared_ptr<const gnn::GnnModel> gnn, std::shared_ptr<const transformer::TransformerModel> tf)
    : cfg_(std::move(cfg)), rules_(std::move(rules)), detector_(std::move(det)), gnn_(std::move(gnn)),
      transformer_(std::move(tf)) {
  check();
}

void Pipeline::check() const {
  if (!(cfg_.detector_threshold > 0 && cfg_.detector_threshold < 1))
    throw DataError("pipeline: detector threshold must lie in (0, 1)");
  if (cfg_.type_model == TypeModel::gnn && !gnn_) throw DataError("pipeline: gnn type model selected but not loaded");
  if (cfg_.type_model == TypeModel::transformer && !transformer_)
    throw DataError("pipeline: transformer type model selected but not loaded");
}

CleanedScreen Pipeline::clean(const Screen& s) const {
  CleanedScreen out;
  out.source_id = s.source_id;
  out.original_count = node_count(s.hierarchy);
  auto pre = preprocess::preprocess(s, rules_, cfg_.preprocess);
  out.report = std::move(pre.report);

  std::map<int, double> invalid_prob;
  std::set<int> drop;
  if (detector_) {
    const auto& dc = detector_->config();
    const Matrix rgb = detector::resize_screen(s, dc.height, dc.width);
    std::vector<int> ids;
    std::vector<BoundingBox> rects;
    for (const Node* n : preorder(pre.cleaned)) {
      if (n == &pre.cleaned.root) continue;
      ids.push_back(n->node_id);
      rects.push_back(detector::mask_rect(n->bounds, s.hierarchy.screen_width, s.hierarchy.screen_height, dc.height,
                                          dc.width));
    }
    const Eigen::Index hw = Eigen::Index(dc.height) * dc.width;
    constexpr std::size_t kChunk = 32;
    for (std::size_t start = 0; start < ids.size(); start += kChunk) {
      const std::size_t n = std::min(kChunk, ids.size() - start);
      Matrix x(hw * Eigen::Index(n), 4);
      for (std::size_t i = 0; i < n; ++i)
        x.middleRows(Eigen::Index(i) * hw, hw) = detector::assemble_input(rgb, rects[start + i], dc.height, dc.width);
      const auto p = detector_->predict(x, static_cast<int>(n));
      for (std::size_t i = 0; i < n; ++i) {
        invalid_prob[ids[start + i]] = p[i];
        if (p[i] > cfg_.detector_threshold) {
          drop.insert(ids[start + i]);
          out.model_removed.push_back(ids[start + i]);
          out.model_removed_prob.emplace_back(ids[start + i], p[i]);
        }
      }
    }
  }

  out.hierarchy = remove_nodes(pre.cleaned, drop);
  Screen typed{out.hierarchy, s.screenshot, s.source_id};
  const auto nodes = preorder(out.hierarchy);
  std::vector<std::optional<ObjectType>> types(nodes.size());
  std::vector<double> probs(nodes.size(), 0.0);
  auto take_argmax = [&](const Matrix& p) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      Eigen::Index k;
      probs[i] = p.row(Eigen::Index(i)).maxCoeff(&k);
      types[i] = object_type_at(static_cast<int>(k));
    }
  };
  switch (cfg_.type_model) {
    case TypeModel::heuristic: {
      const auto parent = parent_positions(out.hierarchy.root);
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const int pi = parent[i];
        types[i] = heuristic::infer_type(*nodes[i], rules_, pi >= 0 ? nodes[std::size_t(pi)] : nullptr);
        probs[i] = types[i] ? 1.0 : 0.0;
      }
      break;
    }
    case TypeModel::gnn:
      take_argmax(gnn_->predict(gnn::make_graph_input(typed, gnn_->tokenizer(), gnn_->config(), false)));
      break;
    case TypeModel::transformer:
      take_argmax(transformer_->predict(
          transformer::make_screen_input(typed, transformer_->tokenizer(), transformer_->config(), false)));
      break;
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    NodeResult r{nodes[i]->node_id, nodes[i]->bounds, types[i], probs[i], std::nullopt};
    if (auto it = invalid_prob.find(r.node_id); it != invalid_prob.end()) r.invalid_prob = it->second;
    out.nodes.push_back(r);
  }
  return out;
}

}  // namespace clay::pipeline
