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

#include <filesystem>
#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "clay/nn/optim.hpp"

namespace clay::nn {

struct TrainHooks {
  /// Called after every optimizer step with the data loss (without L2).
  std::function<void(long step, double loss)> on_step;
  /// Returning true ends training after the current step.
  std::function<bool(long step)> stop;
  /// Parameters are snapshotted every `snapshot_every` finite steps.
  long snapshot_every = 50;
  /// When set, the last good snapshot is written here on divergence and at the end.
  std::filesystem::path checkpoint;
  nlohmann::json checkpoint_meta;
};

struct TrainResult {
  long steps = 0;
  std::vector<double> losses;
};

/// Runs `config.total_steps` Adam steps of `batch_loss(tape, step) + l2`.
/// A non-finite loss restores the last good snapshot, writes it to
/// `hooks.checkpoint` when set, and throws DivergenceError.
TrainResult train_loop(ParameterSet& params, const TrainConfig& config,
                       const std::function<Var(Tape&, long step)>& batch_loss, const TrainHooks& hooks = {});

}  // namespace clay::nn
