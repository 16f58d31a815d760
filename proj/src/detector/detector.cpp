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

#include "clay/detector/detector.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "clay/error.hpp"
#include "clay/nn/checkpoint.hpp"

namespace clay::detector {

void DetectorConfig::validate() const {
  if (height < 16 || width < 16) throw ContractViolation("detector: input dims must be at least 16x16");
  for (int c : channels)
    if (c <= 0) throw ContractViolation("detector: channel counts must be positive");
  if (!(threshold > 0 && threshold < 1)) throw ContractViolation("detector: threshold must lie in (0, 1)");
}

void to_json(nlohmann::json& j, const DetectorConfig& c) {
  j = {{"height", c.height}, {"width", c.width}, {"channels", c.channels}, {"threshold", c.threshold}};
}

void from_json(const nlohmann::json& j, DetectorConfig& c) {
  c.height = j.value("height", c.height);
  c.width = j.value("width", c.width);
  c.channels = j.value("channels", c.channels);
  c.threshold = j.value("threshold", c.threshold);
}

Matrix resize_screen(const Screen& s, int height, int width) {
  if (s.screenshot.empty()) throw ContractViolation("detector input: empty screen raster");
  return resize_bilinear<double>(s.screenshot, height, width);
}

BoundingBox mask_rect(const BoundingBox& box, int screen_width, int screen_height, int height, int width) {
  BoundingBox r = scale_box(box, double(width) / screen_width, double(height) / screen_height);
  r = intersect(r, BoundingBox{0, 0, width, height});
  const bool off_x = box.right <= 0 || box.left >= screen_width;
  const bool off_y = box.bottom <= 0 || box.top >= screen_height;
  if (off_x || off_y) throw ContractViolation("detector input: box lies off-screen");
  if (r.right <= r.left) {
    r.left = std::min(r.left, width - 1);
    r.right = r.left + 1;
  }
  if (r.bottom <= r.top) {
    r.top = std::min(r.top, height - 1);
    r.bottom = r.top + 1;
  }
  return r;
}

Matrix assemble_input(const Matrix& rgb, const BoundingBox& rect, int height, int width) {
  Matrix x(Eigen::Index(height) * width, 4);
  x.leftCols(3) = rgb;
  x.col(3).setZero();
  for (int y = rect.top; y < rect.bottom; ++y) x.col(3).segment(Eigen::Index(y) * width + rect.left, rect.width()).setOnes();
  return x;
}

Matrix build_input(const Screen& s, const BoundingBox& box, int height, int width) {
  return assemble_input(resize_screen(s, height, width),
                        mask_rect(box, s.hierarchy.screen_width, s.hierarchy.screen_height, height, width), height,
                        width);
}

DetectorModel::DetectorModel(DetectorConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  nn::Rng rng(seed);
  const nn::ConvGeometry g{3, 2, 1};
  int in = 4;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    blocks_[b] = nn::Conv2d(params_, "detector/block" + std::to_string(b), in, cfg_.channels[b], g, rng);
    in = cfg_.channels[b];
  }
  head_ = nn::Linear(params_, "detector/head", in, 1, rng);
}

nn::Var DetectorModel::logits(nn::Tape& t, const Matrix& inputs, int batch) const {
  if (inputs.rows() != Eigen::Index(batch) * cfg_.height * cfg_.width || inputs.cols() != 4)
    throw ContractViolation("detector: input " + nn::shape_str(inputs) + " does not match " +
                            std::to_string(batch) + "x" + std::to_string(cfg_.height) + "x" +
                            std::to_string(cfg_.width) + "x4");
  nn::FeatureMap<double> x{t.constant(inputs), {batch, cfg_.height, cfg_.width, 4}};
  for (const auto& b : blocks_) {
    auto y = b(t, x);
    x = {nn::relu(y.data), y.shape};
  }
  return head_(t, nn::global_avg_pool(x));
}

std::vector<double> DetectorModel::predict(const Matrix& inputs, int batch) const {
  nn::Tape t;
  const Matrix z = logits(t, inputs, batch).value();
  std::vector<double> p(static_cast<std::size_t>(batch));
  for (int i = 0; i < batch; ++i) p[std::size_t(i)] = 1.0 / (1.0 + std::exp(-z(i, 0)));
  return p;
}

nlohmann::json DetectorModel::meta() const { return {{"kind", "detector"}, {"config", cfg_}}; }

void DetectorModel::save(const std::filesystem::path& path) const { nn::save_checkpoint(path, params_, meta()); }

DetectorModel DetectorModel::load(const std::filesystem::path& path) {
  const auto meta = nn::read_checkpoint_meta(path);
  if (meta.value("kind", "") != "detector") throw DataError(path.string() + " is not a detector checkpoint");
  DetectorModel m(meta.at("config").get<DetectorConfig>());
  nn::load_checkpoint(path, m.params_);
  return m;
}

void DetectorDataset::add_screen(const Screen& s, const std::vector<std::pair<BoundingBox, bool>>& boxes) {
  const int id = static_cast<int>(screens.size());
  screens.push_back(resize_screen(s, height, width));
  for (const auto& [box, invalid] : boxes)
    samples.push_back({id, mask_rect(box, s.hierarchy.screen_width, s.hierarchy.screen_height, height, width), invalid});
}

Matrix DetectorDataset::batch(const std::vector<int>& indices) const {
  const Eigen::Index hw = Eigen::Index(height) * width;
  Matrix x(hw * static_cast<Eigen::Index>(indices.size()), 4);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& s = samples.at(static_cast<std::size_t>(indices[i]));
    x.middleRows(static_cast<Eigen::Index>(i) * hw, hw) = assemble_input(screens[std::size_t(s.screen)], s.rect, height, width);
  }
  return x;
}

std::vector<bool> DetectorDataset::labels() const {
  std::vector<bool> y;
  for (const auto& s : samples) y.push_back(s.invalid);
  return y;
}

ResampledStream::ResampledStream(const std::vector<bool>& invalid, double target_ratio, std::uint64_t seed)
    : ratio_(target_ratio), rng_(seed) {
  for (std::size_t i = 0; i < invalid.size(); ++i) (invalid[i] ? invalid_ : valid_).push_back(static_cast<int>(i));
  if (valid_.empty() || invalid_.empty()) throw DataError("resample: both valid and invalid examples are required");
  if (!(target_ratio > 0)) throw ContractViolation("resample: target ratio must be positive");
  refill();
}

void ResampledStream::refill() {
  const double v = double(valid_.size()), iv = double(invalid_.size());
  const bool invalid_minority = v / iv >= ratio_;
  const auto& minority = invalid_minority ? invalid_ : valid_;
  const auto& majority = invalid_minority ? valid_ : invalid_;
  const double target = invalid_minority ? v / ratio_ : iv * ratio_;
  const auto wanted = static_cast<std::size_t>(std::llround(target));
  epoch_ = majority;
  for (std::size_t r = 0; r < wanted / minority.size(); ++r) epoch_.insert(epoch_.end(), minority.begin(), minority.end());
  std::vector<int> pool = minority;
  std::shuffle(pool.begin(), pool.end(), rng_);
  epoch_.insert(epoch_.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(wanted % minority.size()));
  std::shuffle(epoch_.begin(), epoch_.end(), rng_);
  pos_ = 0;
}

int ResampledStream::next() {
  if (pos_ == epoch_.size()) refill();
  return epoch_[pos_++];
}

std::vector<int> ResampledStream::take(int n) {
  std::vector<int> out(static_cast<std::size_t>(n));
  for (auto& i : out) i = next();
  return out;
}

nn::TrainResult train_detector(DetectorModel& model, const DetectorDataset& data, const nn::TrainConfig& config,
                               const DetectorTrainOptions& options) {
  if (data.height != model.config().height || data.width != model.config().width)
    throw ContractViolation("train_detector: dataset dims differ from the model's");
  const auto labels = data.labels();
  std::vector<int> order(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::mt19937_64 rng(config.seed);
  std::unique_ptr<ResampledStream> stream;
  if (options.resample_ratio > 0) stream = std::make_unique<ResampledStream>(labels, options.resample_ratio, config.seed);
  std::size_t cursor = order.size();
  auto draw = [&](int n) {
    if (stream) return stream->take(n);
    std::vector<int> out;
    while (static_cast<int>(out.size()) < n) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      out.push_back(order[cursor++]);
    }
    return out;
  };
  const int b = static_cast<int>(config.batch_size);
  auto hooks = options.hooks;
  if (hooks.checkpoint_meta.is_null()) hooks.checkpoint_meta = model.meta();
  return nn::train_loop(
      model.params(), config,
      [&](nn::Tape& t, long) {
        const auto idx = draw(b);
        std::vector<double> y;
        for (int i : idx) y.push_back(labels[std::size_t(i)] ? 1.0 : 0.0);
        return nn::bce_with_logits(model.logits(t, data.batch(idx), b), y);
      },
      hooks);
}

nn::TrainConfig full_scale_detector_config() {
  nn::TrainConfig c;
  c.batch_size = 1024;
  c.total_steps = 15000;
  c.initial_lr = 6e-4;
  c.reduced_lr = 6e-5;
  c.lr_drop_step = 5500;
  return c;
}

}  // namespace clay::detector
