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

#include <string>
#include <vector>

#include "clay/detector/detector.hpp"
#include "clay/eval/metrics.hpp"
#include "clay/features/tokenizer.hpp"
#include "clay/pipeline/pipeline.hpp"

namespace clay::pipeline {

/// Words of every class name, content description and resource id.
std::vector<std::string> corpus_words(const std::vector<Screen>& screens);

features::TokenizerModel train_tokenizer(const std::vector<Screen>& screens, int vocab_size);

/// `s` with its hierarchy replaced by the preprocessed one.
Screen cleaned_copy(const Screen& s, const heuristic::RuleTable& rules,
                    const preprocess::PreprocessOptions& opts = {});

/// `s` without the nodes labeled INVALID.
Screen drop_gold_invalid(const Screen& s);

/// One detector example per non-root node of `cleaned`; the positive class
/// is the INVALID label.
void add_detector_examples(detector::DetectorDataset& data, const Screen& cleaned);

struct PipelineEvaluation {
  clay::Scores invalid;  // removal (any stage) vs INVALID label, non-root labeled nodes
  clay::Scores detector;  // detector decisions on nodes that reached it
  double type_accuracy = 0.0;  // survivors with a semantic label
  std::size_t typed = 0;
  clay::EvalReport types;

  nlohmann::json to_json() const;
};

/// Runs `p.clean` on labeled screens and scores both stages.
PipelineEvaluation evaluate_pipeline(const Pipeline& p, const std::vector<Screen>& screens);

}  // namespace clay::pipeline
