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
#include <string>
#include <vector>

#include "clay/nn/gradcheck.hpp"

namespace clay::pipeline {

struct GradientCase {
  std::string name;
  nn::GradCheckResult result;
  double seconds = 0.0;
};

/// Finite-difference checks of every trainable module on small random
/// shapes: text, position and crop embeddings, the detector network, one
/// GNN round, the GNN readout, the transformer encoder, decoder and readout.
std::vector<GradientCase> run_gradient_suite(std::uint64_t seed = 0, const nn::GradCheckOptions& options = {});

}  // namespace clay::pipeline
