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

#include "clay/eval/metrics.hpp"

#include <iomanip>
#include <sstream>

#include "clay/error.hpp"

namespace clay {

double f1_score(double precision, double recall) {
  return precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

std::map<ObjectType, TypeScores> per_type_scores(const std::vector<Prediction>& predictions,
                                                 const std::vector<ObjectType>& golds) {
  if (predictions.size() != golds.size())
    throw ContractViolation("per_type_scores: " + std::to_string(predictions.size()) + " predictions for " +
                            std::to_string(golds.size()) + " gold labels");
  std::map<ObjectType, TypeScores> out;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    auto& g = out[golds[i]];
    ++g.support;
    if (predictions[i]) {
      auto& p = out[*predictions[i]];
      ++p.predicted;
      if (*predictions[i] == golds[i]) ++g.true_positive;
    }
  }
  for (auto& [type, s] : out) {
    s.precision_undefined = s.predicted == 0;
    s.recall_undefined = s.support == 0;
    s.precision = s.predicted > 0 ? double(s.true_positive) / double(s.predicted) : 0.0;
    s.recall = s.support > 0 ? double(s.true_positive) / double(s.support) : 0.0;
    s.f1 = f1_score(s.precision, s.recall);
  }
  return out;
}

Scores aggregate(const std::map<ObjectType, TypeScores>& per_type, AggregateMode mode) {
  Scores acc;
  double weight_sum = 0.0;
  for (const auto& [type, s] : per_type) {
    if (s.support == 0) continue;
    const double w = mode == AggregateMode::weighted ? double(s.support) : 1.0;
    acc.precision += w * s.precision;
    acc.recall += w * s.recall;
    acc.f1 += w * s.f1;
    weight_sum += w;
  }
  if (weight_sum == 0.0) throw ContractViolation("aggregate: every type has zero support");
  acc.precision /= weight_sum;
  acc.recall /= weight_sum;
  acc.f1 /= weight_sum;
  return acc;
}

ConfusionMatrix confusion(const std::vector<Prediction>& predictions, const std::vector<ObjectType>& golds) {
  if (predictions.size() != golds.size()) throw ContractViolation("confusion: length mismatch");
  ConfusionMatrix cm;
  cm.counts.setZero(kObjectTypeCount, kObjectTypeCount + 1);
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const int col = predictions[i] ? index_of(*predictions[i]) : ConfusionMatrix::unknown_column();
    ++cm.counts(index_of(golds[i]), col);
  }
  cm.normalized.setZero(cm.counts.rows(), cm.counts.cols());
  cm.zero_support.assign(static_cast<std::size_t>(cm.counts.rows()), false);
  for (Eigen::Index r = 0; r < cm.counts.rows(); ++r) {
    const auto support = cm.counts.row(r).sum();
    if (support == 0) {
      cm.zero_support[static_cast<std::size_t>(r)] = true;
      continue;
    }
    cm.normalized.row(r) = cm.counts.row(r).cast<double>() / double(support);
  }
  return cm;
}

EvalReport evaluate(const std::vector<Prediction>& predictions, const std::vector<ObjectType>& golds) {
  EvalReport r;
  r.per_type = per_type_scores(predictions, golds);
  r.total = static_cast<std::int64_t>(golds.size());
  r.confusion = confusion(predictions, golds);
  if (!golds.empty()) {
    r.weighted = aggregate(r.per_type, AggregateMode::weighted);
    r.macro = aggregate(r.per_type, AggregateMode::macro);
  }
  return r;
}

Scores binary_scores(const std::vector<bool>& predicted_positive, const std::vector<bool>& gold_positive) {
  if (predicted_positive.size() != gold_positive.size()) throw ContractViolation("binary_scores: length mismatch");
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < gold_positive.size(); ++i) {
    if (predicted_positive[i] && gold_positive[i]) ++tp;
    else if (predicted_positive[i]) ++fp;
    else if (gold_positive[i]) ++fn;
  }
  Scores s;
  s.precision = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
  s.recall = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
  s.f1 = f1_score(s.precision, s.recall);
  return s;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["total"] = total;
  j["aggregation_note"] = "averages over types with nonzero gold support";
  auto scores = [](const Scores& s) { return nlohmann::json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}}; };
  j["weighted_avg"] = scores(weighted);
  j["macro_avg"] = scores(macro);
  j["per_type"] = nlohmann::json::object();
  for (const auto& [type, s] : per_type) {
    auto e = scores(s);
    e["support"] = s.support;
    e["predicted"] = s.predicted;
    e["precision_undefined"] = s.precision_undefined;
    e["recall_undefined"] = s.recall_undefined;
    j["per_type"][std::string(to_string(type))] = e;
  }
  nlohmann::json counts = nlohmann::json::array();
  for (Eigen::Index r = 0; r < confusion.counts.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < confusion.counts.cols(); ++c) row.push_back(confusion.counts(r, c));
    counts.push_back(row);
  }
  j["confusion"]["counts"] = counts;
  j["confusion"]["columns"] = nlohmann::json::array();
  for (int i = 0; i < kObjectTypeCount; ++i) j["confusion"]["columns"].push_back(std::string(kObjectTypeNames[i]));
  j["confusion"]["columns"].push_back("UNKNOWN");
  return j;
}

std::string EvalReport::to_table(const std::string& title) const {
  std::ostringstream os;
  if (!title.empty()) os << title << "\n";
  os << std::left << std::setw(18) << "Object Type" << std::right << std::setw(10) << "Precision" << std::setw(10)
     << "Recall" << std::setw(10) << "F-score" << std::setw(10) << "Support" << "\n";
  os << std::fixed << std::setprecision(1);
  for (const auto& [type, s] : per_type) {
    if (s.support == 0) continue;
    os << std::left << std::setw(18) << to_string(type) << std::right << std::setw(10) << 100.0 * s.precision
       << std::setw(10) << 100.0 * s.recall << std::setw(10) << 100.0 * s.f1 << std::setw(10) << s.support << "\n";
  }
  auto row = [&](const char* name, const Scores& s) {
    os << std::left << std::setw(18) << name << std::right << std::setw(10) << 100.0 * s.precision << std::setw(10)
       << 100.0 * s.recall << std::setw(10) << 100.0 * s.f1 << std::setw(10) << total << "\n";
  };
  row("Weighted Average", weighted);
  row("Macro Average", macro);
  return os.str();
}

std::string EvalReport::confusion_csv() const {
  std::ostringstream os;
  os << "gold\\predicted";
  for (int i = 0; i < kObjectTypeCount; ++i) os << "," << kObjectTypeNames[i];
  os << ",UNKNOWN\n";
  os << std::setprecision(6);
  for (Eigen::Index r = 0; r < confusion.normalized.rows(); ++r) {
    if (confusion.zero_support[static_cast<std::size_t>(r)]) continue;
    os << kObjectTypeNames[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < confusion.normalized.cols(); ++c) os << "," << confusion.normalized(r, c);
    os << "\n";
  }
  return os.str();
}

}  // namespace clay
