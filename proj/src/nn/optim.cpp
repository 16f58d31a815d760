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

#include "clay/nn/optim.hpp"

#include <cmath>

#include "clay/nn/ops.hpp"

namespace clay::nn {

void TrainConfig::validate() const {
  if (batch_size <= 0 || total_steps <= 0) throw ContractViolation("train config: batch size and steps must be positive");
  if (lr_drop_step >= total_steps) throw ContractViolation("train config: lr_drop_step must be < total_steps");
  if (initial_lr <= 0 || reduced_lr <= 0) throw ContractViolation("train config: learning rates must be positive");
  if (group1_initial_lr < 0 || group1_reduced_lr < 0) throw ContractViolation("train config: negative group lr");
  if (l2_coefficient < 0) throw ContractViolation("train config: negative l2 coefficient");
}

LrSchedule TrainConfig::schedule(int group) const {
  if (group == 1 && group1_initial_lr > 0) return {group1_initial_lr, group1_reduced_lr};
  return {initial_lr, reduced_lr};
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"batch_size", c.batch_size},         {"total_steps", c.total_steps},
                     {"initial_lr", c.initial_lr},         {"reduced_lr", c.reduced_lr},
                     {"lr_drop_step", c.lr_drop_step},     {"l2_coefficient", c.l2_coefficient},
                     {"seed", c.seed},                     {"group1_initial_lr", c.group1_initial_lr},
                     {"group1_reduced_lr", c.group1_reduced_lr}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.batch_size = j.value("batch_size", c.batch_size);
  c.total_steps = j.value("total_steps", c.total_steps);
  c.initial_lr = j.value("initial_lr", c.initial_lr);
  c.reduced_lr = j.value("reduced_lr", c.reduced_lr);
  c.lr_drop_step = j.value("lr_drop_step", c.lr_drop_step);
  c.l2_coefficient = j.value("l2_coefficient", c.l2_coefficient);
  c.seed = j.value("seed", c.seed);
  c.group1_initial_lr = j.value("group1_initial_lr", c.group1_initial_lr);
  c.group1_reduced_lr = j.value("group1_reduced_lr", c.group1_reduced_lr);
}

Adam::Adam(ParameterSet& params, TrainConfig config, double beta1, double beta2, double eps)
    : config_(config), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (auto& p : params)
    state_.push_back({&p, Matrix::Zero(p.value.rows(), p.value.cols()), Matrix::Zero(p.value.rows(), p.value.cols())});
}

double Adam::lr(long step_index, int group) const {
  return config_.schedule(group).at(step_index, config_.lr_drop_step);
}

void Adam::step(long step_index) {
  ++updates_;
  const double c1 = 1.0 - std::pow(beta1_, double(updates_));
  const double c2 = 1.0 - std::pow(beta2_, double(updates_));
  for (auto& s : state_) {
    const Matrix& g = s.param->grad;
    if (g.size() != s.param->value.size()) continue;
    s.m = beta1_ * s.m + (1.0 - beta1_) * g;
    s.v = beta2_ * s.v + (1.0 - beta2_) * g.cwiseProduct(g);
    const double rate = lr(step_index, s.param->group);
    s.param->value.array() -= rate * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + eps_);
  }
}

Var l2_penalty(Tape& t, ParameterSet& params, double l2) {
  Var total = t.constant(Matrix::Zero(1, 1));
  if (l2 == 0.0) return total;
  for (auto& p : params) total = add(total, sum_squares(t.param(p)));
  return scale(total, l2);
}

}  // namespace clay::nn
