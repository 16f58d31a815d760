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

#include "clay/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace clay::nn {

GradCheckResult gradcheck(ParameterSet& params, const std::function<Var(Tape&)>& loss,
                          const GradCheckOptions& options) {
  params.zero_grad();
  {
    Tape t;
    t.backward(loss(t));
  }
  auto evaluate = [&]() {
    Tape t;
    return loss(t).scalar();
  };

  const double center = evaluate();
  auto relative = [&](double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), options.abs_floor});
  };
  std::mt19937_64 rng(options.seed);
  GradCheckResult result;
  for (auto& p : params) {
    const Matrix analytic = p.grad;
    std::vector<Index> entries(static_cast<std::size_t>(p.value.size()));
    std::iota(entries.begin(), entries.end(), Index(0));
    if (static_cast<Index>(entries.size()) > options.max_entries_per_param) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(static_cast<std::size_t>(options.max_entries_per_param));
    }
    for (Index e : entries) {
      double& x = p.value.data()[e];
      const double saved = x;
      x = saved + options.eps;
      const double up = evaluate();
      x = saved - options.eps;
      const double down = evaluate();
      x = saved;
      const double numeric = (up - down) / (2.0 * options.eps);
      const double a = analytic.data()[e];
      const double rel = relative(a, numeric);
      ++result.entries_checked;
      if (rel > options.kink_tolerance) {
        const double forward = (up - center) / options.eps, backward = (center - down) / options.eps;
        if (relative(forward, backward) > options.kink_tolerance &&
            std::min(relative(a, forward), relative(a, backward)) < options.kink_tolerance) {
          ++result.kinks;
          continue;
        }
      }
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = p.name;
        result.worst_entry = e;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  params.zero_grad();
  return result;
}

}  // namespace clay::nn
