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

#include "clay/transformer/transformer.hpp"

#include <algorithm>
#include <random>

#include "clay/error.hpp"
#include "clay/nn/checkpoint.hpp"

namespace clay::transformer {

void TransformerConfig::validate() const {
  features.validate();
  if (3 * features.text_dim != model_dim || 4 * features.position_dim != model_dim)
    throw ContractViolation("transformer config: 3*text_dim and 4*position_dim must equal model_dim (" +
                            std::to_string(model_dim) + "), got " + std::to_string(3 * features.text_dim) + " and " +
                            std::to_string(4 * features.position_dim));
  if (heads <= 0 || model_dim % heads != 0) throw ContractViolation("transformer config: model_dim not divisible by heads");
  if (encoder_layers < 0 || decoder_layers < 0 || mlp_dim <= 0 || patch <= 0)
    throw ContractViolation("transformer config: invalid layer counts or widths");
  if (image_height % (8 * patch) != 0 || image_width % (8 * patch) != 0 || patches() <= 0)
    throw ContractViolation("transformer config: image dims must be positive multiples of 8*patch");
}

void to_json(nlohmann::json& j, const TransformerConfig& c) {
  j = {{"features", c.features},
       {"model_dim", c.model_dim},
       {"heads", c.heads},
       {"encoder_layers", c.encoder_layers},
       {"decoder_layers", c.decoder_layers},
       {"mlp_dim", c.mlp_dim},
       {"image_height", c.image_height},
       {"image_width", c.image_width},
       {"patch", c.patch},
       {"backbone_channels", c.backbone_channels}};
}

void from_json(const nlohmann::json& j, TransformerConfig& c) {
  if (j.contains("features")) c.features = j.at("features").get<features::FeatureConfig>();
  c.model_dim = j.value("model_dim", c.model_dim);
  c.heads = j.value("heads", c.heads);
  c.encoder_layers = j.value("encoder_layers", c.encoder_layers);
  c.decoder_layers = j.value("decoder_layers", c.decoder_layers);
  c.mlp_dim = j.value("mlp_dim", c.mlp_dim);
  c.image_height = j.value("image_height", c.image_height);
  c.image_width = j.value("image_width", c.image_width);
  c.patch = j.value("patch", c.patch);
  c.backbone_channels = j.value("backbone_channels", c.backbone_channels);
}

nlohmann::json full_scale_dims() {
  return {{"encoder_layers", 6}, {"decoder_layers", 6}, {"heads", 8},
          {"mlp_dim", 2048},     {"qkv_dim", 256},      {"backbone", "ResNet-50"}};
}

ScreenInput make_screen_input(const Screen& s, const features::TokenizerModel& tok, const TransformerConfig& cfg,
                              bool with_labels) {
  if (s.screenshot.empty()) throw ContractViolation("transformer input: empty screen raster");
  ScreenInput in;
  in.image = resize_bilinear<double>(s.screenshot, cfg.image_height, cfg.image_width);
  const auto nodes = preorder(s.hierarchy);
  in.nodes = features::node_inputs(s, nodes, tok, cfg.features, false);
  in.labels = with_labels ? features::semantic_labels(nodes) : std::vector<int>(nodes.size(), -1);
  for (const Node* n : nodes) in.node_ids.push_back(n->node_id);
  return in;
}

TransformerModel::TransformerModel(TransformerConfig cfg, features::TokenizerModel tokenizer, std::uint64_t seed)
    : cfg_(std::move(cfg)), tok_(std::move(tokenizer)) {
  cfg_.validate();
  nn::Rng rng(seed);
  const int d = cfg_.model_dim;
  const nn::ConvGeometry g{3, 2, 1};
  int in = 3;
  for (std::size_t b = 0; b < backbone_.size(); ++b) {
    backbone_[b] = nn::Conv2d(params_, "tf/backbone" + std::to_string(b), in, cfg_.backbone_channels[b], g, rng, 1);
    in = cfg_.backbone_channels[b];
  }
  patch_proj_ = nn::Linear(params_, "tf/patch_proj", nn::Index(cfg_.patch) * cfg_.patch * in, d, rng);
  patch_pos_ = &params_.add("tf/patch_pos", cfg_.patches(), d);
  nn::truncated_normal(*patch_pos_, 0.02, rng);
  for (int l = 0; l < cfg_.encoder_layers; ++l) {
    const std::string p = "tf/enc" + std::to_string(l);
    encoder_.push_back({nn::LayerNorm(params_, p + "/ln1", d), nn::LayerNorm(params_, p + "/ln2", d),
                        nn::MultiHeadAttention(params_, p + "/attn", d, cfg_.heads, rng),
                        nn::Mlp(params_, p + "/mlp", d, cfg_.mlp_dim, rng)});
  }
  encoder_norm_ = nn::LayerNorm(params_, "tf/enc_norm", d);
  text_ = features::TextEmbedding(params_, "tf/text", tok_.vocab_size(), cfg_.features.text_dim, rng);
  position_ = features::PositionEmbedding(params_, "tf/position", cfg_.features.sinusoid_frequencies,
                                          cfg_.features.position_dim, rng);
  for (int l = 0; l < cfg_.decoder_layers; ++l) {
    const std::string p = "tf/dec" + std::to_string(l);
    decoder_.push_back({nn::LayerNorm(params_, p + "/ln1", d), nn::LayerNorm(params_, p + "/ln2", d),
                        nn::LayerNorm(params_, p + "/ln3", d),
                        nn::MultiHeadAttention(params_, p + "/self", d, cfg_.heads, rng),
                        nn::MultiHeadAttention(params_, p + "/cross", d, cfg_.heads, rng),
                        nn::Mlp(params_, p + "/mlp", d, cfg_.mlp_dim, rng)});
  }
  decoder_norm_ = nn::LayerNorm(params_, "tf/dec_norm", d);
  readout_ = nn::Linear(params_, "tf/readout", d, kSemanticTypeCount, rng, 0, 0.1);
}

ScreenEncoding TransformerModel::encode_screen(Tape& t, const Matrix& image, AttentionTrace* trace) const {
  const int h = cfg_.image_height, w = cfg_.image_width;
  if (image.rows() != nn::Index(h) * w || image.cols() != 3)
    throw ContractViolation("encode_screen: image " + nn::shape_str(image) + " does not match " + std::to_string(h) +
                            "x" + std::to_string(w) + "x3");
  nn::FeatureMap<double> x{t.constant(image), {1, h, w, 3}};
  for (const auto& c : backbone_) {
    auto y = c(t, x);
    x = {nn::relu(y.data), y.shape};
  }
  // Regroup the feature map into patch x patch cells, one row per cell.
  const int p = cfg_.patch, fw = x.shape.width;
  std::vector<int> order;
  for (int py = 0; py < cfg_.grid_rows(); ++py)
    for (int px = 0; px < cfg_.grid_cols(); ++px)
      for (int dy = 0; dy < p; ++dy)
        for (int dx = 0; dx < p; ++dx) order.push_back((py * p + dy) * fw + px * p + dx);
  Var cells = nn::reshape(nn::gather_rows(x.data, order), cfg_.patches(), nn::Index(p) * p * x.shape.channels);
  Var z = nn::add(patch_proj_(t, cells), t.param(*patch_pos_));
  for (const auto& l : encoder_) {
    Var a = l.ln1(t, z);
    z = nn::add(z, l.attn(t, a, a, {}, trace ? &trace->encoder_self : nullptr));
    z = nn::add(z, l.mlp(t, l.ln2(t, z)));
  }
  return {encoder_norm_(t, z), cfg_.grid_rows(), cfg_.grid_cols()};
}

Var TransformerModel::node_queries(Tape& t, const features::NodeInputs& nodes) const {
  return nn::add(text_(t, nodes.text), position_(t, nodes.coords));
}

Var TransformerModel::decode_types(Tape& t, const Var& queries, const ScreenEncoding& enc, AttentionTrace* trace) const {
  if (queries.rows() == 0) return t.constant(Matrix::Zero(0, kSemanticTypeCount));
  Var h = queries;
  for (const auto& l : decoder_) {
    Var a = l.ln1(t, h);
    h = nn::add(h, l.self_attn(t, a, a, {}, trace ? &trace->decoder_self : nullptr));
    h = nn::add(h, l.cross_attn(t, l.ln2(t, h), enc.patches, {}, trace ? &trace->decoder_cross : nullptr));
    h = nn::add(h, l.mlp(t, l.ln3(t, h)));
  }
  return readout_(t, decoder_norm_(t, h));
}

Var TransformerModel::forward(Tape& t, const ScreenInput& s, AttentionTrace* trace) const {
  return decode_types(t, node_queries(t, s.nodes), encode_screen(t, s.image, trace), trace);
}

Matrix TransformerModel::predict(const ScreenInput& s) const {
  Tape t;
  Matrix z = forward(t, s).value();
  for (nn::Index i = 0; i < z.rows(); ++i) {
    z.row(i).array() -= z.row(i).maxCoeff();
    z.row(i) = z.row(i).array().exp().matrix();
    z.row(i) /= z.row(i).sum();
  }
  return z;
}

nlohmann::json TransformerModel::meta() const {
  return {{"kind", "transformer"}, {"config", cfg_}, {"tokenizer", tok_.to_json()}};
}

void TransformerModel::save(const std::filesystem::path& path) const { nn::save_checkpoint(path, params_, meta()); }

TransformerModel TransformerModel::load(const std::filesystem::path& path) {
  const auto meta = nn::read_checkpoint_meta(path);
  if (meta.value("kind", "") != "transformer") throw DataError(path.string() + " is not a transformer checkpoint");
  TransformerModel m(meta.at("config").get<TransformerConfig>(), features::TokenizerModel::from_json(meta.at("tokenizer")));
  nn::load_checkpoint(path, m.params_);
  return m;
}

nn::TrainResult train_transformer(TransformerModel& model, const std::vector<ScreenInput>& screens,
                                  const nn::TrainConfig& config, const nn::TrainHooks& hooks) {
  if (screens.empty()) throw DataError("train_transformer: no training screens");
  std::vector<int> order(screens.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::mt19937_64 rng(config.seed);
  std::size_t cursor = order.size();
  auto h = hooks;
  if (h.checkpoint_meta.is_null()) h.checkpoint_meta = model.meta();
  return nn::train_loop(
      model.params(), config,
      [&](Tape& t, long) {
        const auto want = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), screens.size());
        std::vector<Var> logits;
        std::vector<int> labels;
        std::vector<std::uint8_t> mask;
        for (std::size_t b = 0; b < want; ++b) {
          if (cursor == order.size()) {
            std::shuffle(order.begin(), order.end(), rng);
            cursor = 0;
          }
          const auto& s = screens[std::size_t(order[cursor++])];
          if (s.nodes.count() == 0) continue;
          logits.push_back(model.forward(t, s));
          for (int y : s.labels) {
            labels.push_back(std::max(y, 0));
            mask.push_back(y >= 0);
          }
        }
        if (logits.empty()) return t.constant(Matrix::Zero(1, 1));
        return nn::cross_entropy(logits.size() == 1 ? logits[0] : nn::concat_rows(logits), labels, mask);
      },
      h);
}

nn::TrainConfig full_scale_transformer_config() {
  nn::TrainConfig c;
  c.batch_size = 128;
  c.total_steps = 15000;
  c.initial_lr = 1e-4;
  c.reduced_lr = 1e-5;
  c.group1_initial_lr = 6e-5;
  c.group1_reduced_lr = 6e-6;
  c.lr_drop_step = 5000;
  return c;
}

}  // namespace clay::transformer
