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
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "clay/features/embedding.hpp"
#include "clay/nn/train.hpp"

namespace clay::transformer {

using nn::Matrix;
using nn::Tape;
using nn::Var;

struct TransformerConfig {
  // text_dim * 3 and position_dim * 4 must both equal model_dim.
  features::FeatureConfig features{10, 32, 24, 32, 8, 64, 2000};
  int model_dim = 96;
  int heads = 4;
  int encoder_layers = 2;
  int decoder_layers = 2;
  int mlp_dim = 192;
  int image_height = 144;
  int image_width = 80;
  int patch = 2;  // patch side on the backbone feature map
  std::array<int, 3> backbone_channels = {8, 16, 32};

  int grid_rows() const { return image_height / 8 / patch; }
  int grid_cols() const { return image_width / 8 / patch; }
  int patches() const { return grid_rows() * grid_cols(); }
  void validate() const;

  friend void to_json(nlohmann::json& j, const TransformerConfig& c);
  friend void from_json(const nlohmann::json& j, TransformerConfig& c);
};

/// Dimensions of the full-size model, kept for reference. It is never
/// instantiated: 256 is not divisible into three equal text fields.
nlohmann::json full_scale_dims();

struct ScreenEncoding {
  Var patches;  // [grid_rows*grid_cols, model_dim]
  int grid_rows = 0;
  int grid_cols = 0;
};

/// One screen in model-ready form.
struct ScreenInput {
  Matrix image;  // [image_height*image_width, 3]
  features::NodeInputs nodes;
  std::vector<int> labels;
  std::vector<int> node_ids;
};

/// `with_labels` reads gold types from the nodes; otherwise every label is -1.
ScreenInput make_screen_input(const Screen& s, const features::TokenizerModel& tok, const TransformerConfig& cfg,
                              bool with_labels = true);

/// Attention maps captured during a forward pass, one matrix per head.
struct AttentionTrace {
  std::vector<Matrix> encoder_self;
  std::vector<Matrix> decoder_self;
  std::vector<Matrix> decoder_cross;
};

class TransformerModel {
 public:
  /// Backbone parameters are in learning-rate group 1, everything else in group 0.
  TransformerModel(TransformerConfig cfg, features::TokenizerModel tokenizer, std::uint64_t seed = 0);

  const TransformerConfig& config() const { return cfg_; }
  const features::TokenizerModel& tokenizer() const { return tok_; }
  nn::ParameterSet& params() { return params_; }

  ScreenEncoding encode_screen(Tape& t, const Matrix& image, AttentionTrace* trace = nullptr) const;
  /// h0 = W + P per node, [N, model_dim].
  Var node_queries(Tape& t, const features::NodeInputs& nodes) const;
  /// Parallel decoding of all nodes against the encoding; [N, 24] logits.
  Var decode_types(Tape& t, const Var& queries, const ScreenEncoding& enc, AttentionTrace* trace = nullptr) const;
  Var forward(Tape& t, const ScreenInput& s, AttentionTrace* trace = nullptr) const;
  Matrix predict(const ScreenInput& s) const;

  nlohmann::json meta() const;
  void save(const std::filesystem::path& path) const;
  static TransformerModel load(const std::filesystem::path& path);

 private:
  struct EncoderLayer {
    nn::LayerNorm ln1, ln2;
    nn::MultiHeadAttention attn;
    nn::Mlp mlp;
  };
  struct DecoderLayer {
    nn::LayerNorm ln1, ln2, ln3;
    nn::MultiHeadAttention self_attn, cross_attn;
    nn::Mlp mlp;
  };

  TransformerConfig cfg_;
  features::TokenizerModel tok_;
  nn::ParameterSet params_;
  std::array<nn::Conv2d, 3> backbone_;
  nn::Linear patch_proj_;
  nn::Parameter* patch_pos_ = nullptr;
  std::vector<EncoderLayer> encoder_;
  nn::LayerNorm encoder_norm_;
  features::TextEmbedding text_;
  features::PositionEmbedding position_;
  std::vector<DecoderLayer> decoder_;
  nn::LayerNorm decoder_norm_;
  nn::Linear readout_;
};

/// Cross-entropy + L2 over batches of `config.batch_size` screens. Set
/// `config.group1_*` for the backbone learning rates.
nn::TrainResult train_transformer(TransformerModel& model, const std::vector<ScreenInput>& screens,
                                  const nn::TrainConfig& config, const nn::TrainHooks& hooks = {});

/// Full-scale schedule, kept for reference.
nn::TrainConfig full_scale_transformer_config();

}  // namespace clay::transformer
