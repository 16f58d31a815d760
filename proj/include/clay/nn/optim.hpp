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
#include <vector>

#include <nlohmann/json.hpp>

#include "clay/nn/tape.hpp"

namespace clay::nn {

/// Step schedule: `initial_lr` before `lr_drop_step`, `reduced_lr` from it on.
struct LrSchedule {
  double initial_lr = 1e-3;
  double reduced_lr = 1e-4;

  double at(long step, long drop_step) const { return step < drop_step ? initial_lr : reduced_lr; }
};

struct TrainConfig {
  long batch_size = 32;
  long total_steps = 1000;
  double initial_lr = 1e-3;
  double reduced_lr = 1e-4;
  long lr_drop_step = 500;
  double l2_coefficient = 0.0;
  std::uint64_t seed = 0;
  // Optional second learning-rate group (parameters with group == 1).
  double group1_initial_lr = 0.0;
  double group1_reduced_lr = 0.0;

  void validate() const;
  LrSchedule schedule(int group) const;

  friend void to_json(nlohmann::json& j, const TrainConfig& c);
  friend void from_json(const nlohmann::json& j, TrainConfig& c);
};

/// Adam with per-group learning-rate schedules.
class Adam {
 public:
  Adam(ParameterSet& params, TrainConfig config, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  /// Applies one update using the gradients currently stored in the parameters.
  void step(long step_index);
  double lr(long step_index, int group) const;

 private:
  struct Moments {
    Parameter* param;
    Matrix m, v;
  };
  TrainConfig config_;
  double beta1_, beta2_, eps_;
  std::vector<Moments> state_;
  long updates_ = 0;
};

/// l2 * sum of squared entries over every parameter, recorded on `t`.
Var l2_penalty(Tape& t, ParameterSet& params, double l2);

}  // namespace clay::nn
