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

#include "clay/pipeline/training.hpp"

#include <map>
#include <set>

#include "clay/error.hpp"

namespace clay::pipeline {

std::vector<std::string> corpus_words(const std::vector<Screen>& screens) {
  std::vector<std::string> words;
  auto add = [&](const std::string& text) {
    for (auto& w : features::split_words(text)) words.push_back(std::move(w));
  };
  for (const auto& s : screens)
    for (const Node* n : preorder(s.hierarchy)) {
      add(n->android_class);
      if (n->content_desc) add(*n->content_desc);
      if (n->resource_id) add(*n->resource_id);
    }
  return words;
}

features::TokenizerModel train_tokenizer(const std::vector<Screen>& screens, int vocab_size) {
  return features::train_bpe(corpus_words(screens), vocab_size);
}

Screen cleaned_copy(const Screen& s, const heuristic::RuleTable& rules, const preprocess::PreprocessOptions& opts) {
  Screen out = s;
  out.hierarchy = preprocess::preprocess(s, rules, opts).cleaned;
  return out;
}

Screen drop_gold_invalid(const Screen& s) {
  std::set<int> ids;
  for (const Node* n : preorder(s.hierarchy))
    if (n->label == ObjectType::INVALID) ids.insert(n->node_id);
  Screen out = s;
  out.hierarchy = remove_nodes(s.hierarchy, ids);
  return out;
}

void add_detector_examples(detector::DetectorDataset& data, const Screen& cleaned) {
  std::vector<std::pair<BoundingBox, bool>> boxes;
  for (const Node* n : preorder(cleaned.hierarchy)) {
    if (n == &cleaned.hierarchy.root) continue;
    boxes.emplace_back(n->bounds, n->label == ObjectType::INVALID);
  }
  if (!boxes.empty()) data.add_screen(cleaned, boxes);
}

nlohmann::json PipelineEvaluation::to_json() const {
  auto scores = [](const clay::Scores& s) {
    return nlohmann::json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
  };
  return {{"invalid", scores(invalid)},
          {"detector", scores(detector)},
          {"type_accuracy", type_accuracy},
          {"typed_nodes", typed},
          {"types", typed > 0 ? types.to_json() : nlohmann::json(nullptr)}};
}

PipelineEvaluation evaluate_pipeline(const Pipeline& p, const std::vector<Screen>& screens) {
  std::vector<bool> removed, gold, det_pred, det_gold;
  std::vector<clay::Prediction> predictions;
  std::vector<ObjectType> golds;
  for (const auto& s : screens) {
    const CleanedScreen c = p.clean(s);
    std::set<int> model(c.model_removed.begin(), c.model_removed.end());
    for (const Node* n : preorder(s.hierarchy)) {
      if (n == &s.hierarchy.root || !n->label) continue;
      const bool is_invalid = *n->label == ObjectType::INVALID;
      const NodeResult* r = c.find(n->node_id);
      removed.push_back(r == nullptr);
      gold.push_back(is_invalid);
      if (model.count(n->node_id) || (r != nullptr && r->invalid_prob)) {
        det_pred.push_back(model.count(n->node_id) > 0);
        det_gold.push_back(is_invalid);
      }
      if (r != nullptr && !is_invalid) {
        predictions.push_back(r->type);
        golds.push_back(*n->label);
      }
    }
  }
  PipelineEvaluation e;
  e.invalid = clay::binary_scores(removed, gold);
  if (!det_pred.empty()) e.detector = clay::binary_scores(det_pred, det_gold);
  e.typed = predictions.size();
  if (!predictions.empty()) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) correct += predictions[i] == golds[i];
    e.type_accuracy = double(correct) / double(predictions.size());
    e.types = clay::evaluate(predictions, golds);
  }
  return e;
}

}  // namespace clay::pipeline
