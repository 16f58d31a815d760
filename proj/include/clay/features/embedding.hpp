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
#include <vector>

#include <nlohmann/json.hpp>

#include "clay/features/tokenizer.hpp"
#include "clay/layout/screen.hpp"
#include "clay/nn/layers.hpp"

namespace clay::features {

using nn::Matrix;
using nn::Tape;
using nn::Var;

struct FeatureConfig {
  int max_words_per_field = 10;
  int text_dim = 32;      // d_W, per field
  int position_dim = 32;  // d_P, per coordinate
  int image_dim = 32;     // d_I
  int sinusoid_frequencies = 8;
  int crop_size = 64;
  int vocab_size = 2000;

  int text_width() const { return 3 * text_dim; }
  int position_width() const { return 4 * position_dim; }
  int node_width() const { return image_dim + text_width() + position_width(); }
  void validate() const;

  friend void to_json(nlohmann::json& j, const FeatureConfig& c);
  friend void from_json(const nlohmann::json& j, FeatureConfig& c);
};

/// Token ids of the class name, content description and resource id, each
/// cut to the first `max_words` words.
struct NodeText {
  std::array<std::vector<int>, 3> fields;
};

NodeText tokenize_node(const Node& n, const TokenizerModel& tok, int max_words);

/// Box edges as fractions of the screen, ordered left, right, top, bottom.
/// Throws ContractViolation outside [-0.5, 1.5].
std::array<double, 4> normalized_coords(const BoundingBox& b, int screen_width, int screen_height);

/// [sin(2^k 2pi x), cos(2^k 2pi x)] for k = 0..K-1, interleaved, as a 1 x 2K row.
Matrix sinusoid_features(double x, int frequencies);

/// Raster crop of `box` resized to crop x crop, [crop*crop, 3] in [0, 1].
/// A box thinner than one raster pixel is widened to one. Throws
/// ContractViolation for an empty box or one entirely off the raster.
Matrix crop_pixels(const Screen& s, const BoundingBox& box, int crop);

/// Everything the embedders read about a set of nodes, computed once.
struct NodeInputs {
  std::vector<NodeText> text;
  Matrix coords;  // [N, 4]
  Matrix crops;   // [N*crop*crop, 3], empty when the image branch is unused
  int count() const { return static_cast<int>(text.size()); }
};

/// Stacks the inputs of several screens in order.
NodeInputs concat(const std::vector<const NodeInputs*>& parts);

/// Semantic class index per node, -1 for unlabeled nodes. Throws
/// ContractViolation on INVALID, which the type models never see.
std::vector<int> semantic_labels(const std::vector<const Node*>& nodes);

/// Builds inputs for `nodes` of one screen. `with_crops` controls the image branch.
NodeInputs node_inputs(const Screen& s, const std::vector<const Node*>& nodes, const TokenizerModel& tok,
                       const FeatureConfig& cfg, bool with_crops);

/// Per-field max-pool of token embeddings; an empty field pools to zeros.
struct TextEmbedding {
  nn::Parameter* table = nullptr;
  int dim = 0;

  TextEmbedding() = default;
  TextEmbedding(nn::ParameterSet& ps, const std::string& name, int vocab_size, int dim, nn::Rng& rng, int group = 0);
  /// [N, 3*dim]: the pooled class, content-description and resource-id vectors.
  Var operator()(Tape& t, const std::vector<NodeText>& nodes) const;
};

/// One dense layer per box edge over its sinusoid features.
struct PositionEmbedding {
  std::array<nn::Linear, 4> dense;
  int frequencies = 8;

  PositionEmbedding() = default;
  PositionEmbedding(nn::ParameterSet& ps, const std::string& name, int frequencies, int dim, nn::Rng& rng,
                    int group = 0);
  /// coords [N, 4] -> [N, 4*dim].
  Var operator()(Tape& t, const Matrix& coords) const;
};

/// Three stride-2 conv blocks (8, 16, 32 channels), flatten, dense.
struct CropEncoder {
  std::array<nn::Conv2d, 3> conv;
  nn::Linear out;
  int crop = 64;

  CropEncoder() = default;
  CropEncoder(nn::ParameterSet& ps, const std::string& name, int crop_size, int out_dim, nn::Rng& rng, int group = 0);
  /// crops [N*crop*crop, 3] -> [N, out_dim].
  Var operator()(Tape& t, const Matrix& crops, int count) const;
};

}  // namespace clay::features
