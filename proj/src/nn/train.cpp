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

#include "clay/nn/train.hpp"

#include <cmath>

#include "clay/nn/checkpoint.hpp"
#include "clay/nn/ops.hpp"

namespace clay::nn {

namespace {

std::vector<Matrix> snapshot(const ParameterSet& params) {
  std::vector<Matrix> s;
  for (const auto& p : params) s.push_back(p.value);
  return s;
}

void restore(ParameterSet& params, const std::vector<Matrix>& s) {
  std::size_t i = 0;
  for (auto& p : params) p.value = s[i++];
}

}  // namespace

TrainResult train_loop(ParameterSet& params, const TrainConfig& config,
                       const std::function<Var(Tape&, long step)>& batch_loss, const TrainHooks& hooks) {
  config.validate();
  Adam adam(params, config);
  TrainResult result;
  auto good = snapshot(params);
  for (long step = 0; step < config.total_steps; ++step) {
    params.zero_grad();
    Tape tape;
    Var data = batch_loss(tape, step);
    const double loss = data.scalar();
    Var total = config.l2_coefficient > 0 ? add(data, l2_penalty(tape, params, config.l2_coefficient)) : data;
    bool finite = std::isfinite(loss);
    if (finite) {
      tape.backward(total);
      for (const auto& p : params) finite = finite && p.grad.allFinite();
    }
    if (!finite) {
      restore(params, good);
      if (!hooks.checkpoint.empty()) save_checkpoint(hooks.checkpoint, params, hooks.checkpoint_meta);
      throw DivergenceError("training diverged at step " + std::to_string(step) + " (loss " + std::to_string(loss) +
                                "); parameters restored to the last good snapshot",
                            step);
    }
    adam.step(step);
    result.losses.push_back(loss);
    result.steps = step + 1;
    if (hooks.snapshot_every > 0 && (step + 1) % hooks.snapshot_every == 0) good = snapshot(params);
    if (hooks.on_step) hooks.on_step(step, loss);
    if (hooks.stop && hooks.stop(step)) break;
  }
  params.zero_grad();
  if (!hooks.checkpoint.empty()) save_checkpoint(hooks.checkpoint, params, hooks.checkpoint_meta);
  return result;
}

}  // namespace clay::nn
