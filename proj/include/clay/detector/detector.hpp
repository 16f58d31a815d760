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
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "clay/layout/screen.hpp"
#include "clay/nn/layers.hpp"
#include "clay/nn/optim.hpp"
#include "clay/nn/train.hpp"

namespace clay::detector {

using nn::Matrix;

struct DetectorConfig {
  int height = 144;
  int width = 80;
  std::array<int, 4> channels = {8, 16, 32, 32};
  double threshold = 0.5;

  void validate() const;
  friend void to_json(nlohmann::json& j, const DetectorConfig& c);
  friend void from_json(const nlohmann::json& j, DetectorConfig& c);
};

/// Screenshot resized to height x width: [height*width, 3] RGB in [0, 1].
Matrix resize_screen(const Screen& s, int height, int width);

/// `box` (hierarchy frame) mapped onto a height x width grid with half-up
/// rounding, clipped, and widened to at least one pixel per axis.
/// Throws ContractViolation when the box lies entirely off-screen.
BoundingBox mask_rect(const BoundingBox& box, int screen_width, int screen_height, int height, int width);

/// [height*width, 4]: RGB from `rgb` plus a binary mask channel over `rect`.
Matrix assemble_input(const Matrix& rgb, const BoundingBox& rect, int height, int width);

/// Resizes the screenshot and appends the mask of `box`.
Matrix build_input(const Screen& s, const BoundingBox& box, int height, int width);

/// Four stride-2 conv blocks, global average pooling and a single logit.
class DetectorModel {
 public:
  explicit DetectorModel(DetectorConfig cfg = {}, std::uint64_t seed = 0);

  const DetectorConfig& config() const { return cfg_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

  /// inputs [batch*height*width, 4] -> logits [batch, 1].
  nn::Var logits(nn::Tape& t, const Matrix& inputs, int batch) const;
  /// sigmoid(logit) per example.
  std::vector<double> predict(const Matrix& inputs, int batch) const;
  double predict(const Matrix& input) const { return predict(input, 1).front(); }

  nlohmann::json meta() const;
  void save(const std::filesystem::path& path) const;
  static DetectorModel load(const std::filesystem::path& path);

 private:
  DetectorConfig cfg_;
  nn::ParameterSet params_;
  std::array<nn::Conv2d, 4> blocks_;
  nn::Linear head_;
};

/// Examples that share resized screenshots. `invalid` is the positive class.
struct DetectorDataset {
  struct Sample {
    int screen;
    BoundingBox rect;  // mask rectangle on the model grid
    bool invalid;
  };
  int height = 0, width = 0;
  std::vector<Matrix> screens;
  std::vector<Sample> samples;

  DetectorDataset(int h, int w) : height(h), width(w) {}
  /// Adds one screen and one example per (box, invalid) pair.
  void add_screen(const Screen& s, const std::vector<std::pair<BoundingBox, bool>>& boxes);
  /// Inputs for `indices`, stacked as [n*height*width, 4].
  Matrix batch(const std::vector<int>& indices) const;
  std::vector<bool> labels() const;
};

/// Endless stream of example indices in which valid:invalid equals
/// `target_ratio` within every epoch. Each epoch keeps all majority
/// examples and repeats every minority example floor(k) times plus a
/// without-replacement draw for the fractional part, then shuffles.
class ResampledStream {
 public:
  ResampledStream(const std::vector<bool>& invalid, double target_ratio, std::uint64_t seed);
  int next();
  std::vector<int> take(int n);
  std::size_t epoch_size() const { return epoch_.size(); }

 private:
  void refill();
  std::vector<int> valid_, invalid_;
  double ratio_;
  std::mt19937_64 rng_;
  std::vector<int> epoch_;
  std::size_t pos_ = 0;
};

struct DetectorTrainOptions {
  double resample_ratio = 4.0;  // valid:invalid; <= 0 disables resampling
  nn::TrainHooks hooks;
};

/// Binary cross-entropy + L2 on resampled batches.
nn::TrainResult train_detector(DetectorModel& model, const DetectorDataset& data, const nn::TrainConfig& config,
                               const DetectorTrainOptions& options = {});

/// Full-scale training schedule, kept for reference.
nn::TrainConfig full_scale_detector_config();

}  // namespace clay::detector
