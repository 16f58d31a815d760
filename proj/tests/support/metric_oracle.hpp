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

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "clay/eval/metrics.hpp"

namespace clay::testing {

/// Independent tally over plain arrays, for cross-checking the metrics module.
struct MetricOracle {
  static constexpr int kTypes = kObjectTypeCount;
  std::array<std::array<long, kTypes + 1>, kTypes> counts{};
  std::array<double, kTypes> precision{}, recall{}, f1{};
  std::array<long, kTypes> support{}, predicted{};
  double weighted_f1 = 0, macro_f1 = 0, weighted_p = 0, macro_p = 0, weighted_r = 0, macro_r = 0;

  MetricOracle(const std::vector<Prediction>& preds, const std::vector<ObjectType>& golds) {
    for (std::size_t i = 0; i < golds.size(); ++i) {
      const int g = int(golds[i]);
      const int p = preds[i] ? int(*preds[i]) : kTypes;
      counts[std::size_t(g)][std::size_t(p)] += 1;
    }
    for (int t = 0; t < kTypes; ++t) {
      for (int p = 0; p <= kTypes; ++p) support[std::size_t(t)] += counts[std::size_t(t)][std::size_t(p)];
      for (int g = 0; g < kTypes; ++g) predicted[std::size_t(t)] += counts[std::size_t(g)][std::size_t(t)];
      const double tp = double(counts[std::size_t(t)][std::size_t(t)]);
      const double pr = predicted[std::size_t(t)] ? tp / double(predicted[std::size_t(t)]) : 0.0;
      const double rc = support[std::size_t(t)] ? tp / double(support[std::size_t(t)]) : 0.0;
      precision[std::size_t(t)] = pr;
      recall[std::size_t(t)] = rc;
      f1[std::size_t(t)] = pr + rc == 0 ? 0.0 : 2 * pr * rc / (pr + rc);
    }
    long total = 0;
    int present = 0;
    for (int t = 0; t < kTypes; ++t) {
      const long s = support[std::size_t(t)];
      if (s == 0) continue;
      total += s;
      ++present;
      weighted_f1 += double(s) * f1[std::size_t(t)];
      weighted_p += double(s) * precision[std::size_t(t)];
      weighted_r += double(s) * recall[std::size_t(t)];
      macro_f1 += f1[std::size_t(t)];
      macro_p += precision[std::size_t(t)];
      macro_r += recall[std::size_t(t)];
    }
    if (present > 0) {
      weighted_f1 /= double(total);
      weighted_p /= double(total);
      weighted_r /= double(total);
      macro_f1 /= present;
      macro_p /= present;
      macro_r /= present;
    }
  }

  /// Largest absolute disagreement with a report; 0 when every count matches.
  double max_error(const EvalReport& r) const {
    double err = 0;
    auto track = [&err](double a, double b) { err = std::max(err, std::abs(a - b)); };
    for (int t = 0; t < kTypes; ++t) {
      const auto type = object_type_at(t);
      const auto it = r.per_type.find(type);
      const bool seen = support[std::size_t(t)] + predicted[std::size_t(t)] > 0;
      if (seen != (it != r.per_type.end())) return 1.0;
      if (!seen) continue;
      track(it->second.precision, precision[std::size_t(t)]);
      track(it->second.recall, recall[std::size_t(t)]);
      track(it->second.f1, f1[std::size_t(t)]);
      track(double(it->second.support), double(support[std::size_t(t)]));
      track(double(it->second.predicted), double(predicted[std::size_t(t)]));
      for (int p = 0; p <= kTypes; ++p) {
        track(double(r.confusion.counts(t, p)), double(counts[std::size_t(t)][std::size_t(p)]));
        const double norm = support[std::size_t(t)]
                                ? double(counts[std::size_t(t)][std::size_t(p)]) / double(support[std::size_t(t)])
                                : 0.0;
        track(r.confusion.normalized(t, p), norm);
      }
    }
    track(r.weighted.f1, weighted_f1);
    track(r.weighted.precision, weighted_p);
    track(r.weighted.recall, weighted_r);
    track(r.macro.f1, macro_f1);
    track(r.macro.precision, macro_p);
    track(r.macro.recall, macro_r);
    return err;
  }
};

/// Random aligned predictions and golds over `types` semantic classes, with
/// a share of correct and unknown answers.
inline void random_predictions(std::mt19937_64& rng, int count, int types, std::vector<Prediction>& preds,
                               std::vector<ObjectType>& golds) {
  std::uniform_int_distribution<int> type(0, types - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  preds.clear();
  golds.clear();
  for (int i = 0; i < count; ++i) {
    const auto g = object_type_at(type(rng));
    golds.push_back(g);
    const double roll = u(rng);
    if (roll < 0.5) preds.emplace_back(g);
    else if (roll < 0.6) preds.emplace_back(std::nullopt);
    else preds.emplace_back(object_type_at(type(rng)));
  }
}

}  // namespace clay::testing
