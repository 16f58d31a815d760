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
#include <functional>
#include <string>

#include "clay/nn/tape.hpp"

namespace clay::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  Index worst_entry = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  Index entries_checked = 0;
  // Entries where a ReLU kink lies inside [x - eps, x + eps]: the central
  // difference straddles it, and the analytic value instead matches one of
  // the one-sided differences within `kink_tolerance`.
  Index kinks = 0;
};

struct GradCheckOptions {
  double eps = 1e-5;
  // Entries sampled per parameter tensor; tensors at or below this size are checked exhaustively.
  Index max_entries_per_param = 24;
  // Denominator floor so that two vanishing gradients do not produce a huge ratio.
  double abs_floor = 1e-6;
  double kink_tolerance = 1e-3;
  std::uint64_t seed = 0;
};

/// Compares reverse-mode gradients of `loss` against central finite
/// differences. Relative error is |a - n| / max(|a|, |n|, abs_floor).
GradCheckResult gradcheck(ParameterSet& params, const std::function<Var(Tape&)>& loss,
                          const GradCheckOptions& options = {});

}  // namespace clay::nn
