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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "clay/layout/object_type.hpp"

namespace clay {

/// A model's answer for one node; nullopt is "unknown" (no type produced).
using Prediction = std::optional<ObjectType>;

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct TypeScores : Scores {
  std::int64_t support = 0;         // gold count
  std::int64_t predicted = 0;       // prediction count
  std::int64_t true_positive = 0;
  bool precision_undefined = false;  // no predictions of this type
  bool recall_undefined = false;     // no gold of this type
};

enum class AggregateMode { weighted, macro };

/// Rows are gold types, columns predicted types, both indexed by ObjectType;
/// the extra last column counts unknown predictions.
struct ConfusionMatrix {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;
  // counts row / gold support; rows with zero support stay zero.
  Eigen::MatrixXd normalized;
  std::vector<bool> zero_support;

  static constexpr int unknown_column() { return kObjectTypeCount; }
};

struct EvalReport {
  std::map<ObjectType, TypeScores> per_type;
  Scores weighted;
  Scores macro;
  ConfusionMatrix confusion;
  std::int64_t total = 0;

  nlohmann::json to_json() const;
  /// Aligned text table: one row per type, then weighted and macro averages.
  std::string to_table(const std::string& title = {}) const;
  std::string confusion_csv() const;
};

/// Precision/recall/F1 per type present in either sequence. Zero
/// denominators give 0 with the matching *_undefined flag.
std::map<ObjectType, TypeScores> per_type_scores(const std::vector<Prediction>& predictions,
                                                 const std::vector<ObjectType>& golds);

/// Weighted (by support) or macro mean over types with nonzero support.
Scores aggregate(const std::map<ObjectType, TypeScores>& per_type, AggregateMode mode);

ConfusionMatrix confusion(const std::vector<Prediction>& predictions, const std::vector<ObjectType>& golds);

EvalReport evaluate(const std::vector<Prediction>& predictions, const std::vector<ObjectType>& golds);

/// Harmonic mean of precision and recall, 0 when both are 0.
double f1_score(double precision, double recall);

/// Scores of the positive class of a binary task.
Scores binary_scores(const std::vector<bool>& predicted_positive, const std::vector<bool>& gold_positive);

}  // namespace clay
