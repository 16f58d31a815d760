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

#include "clay/pipeline/gradient_suite.hpp"

#include <chrono>
#include <random>

#include "clay/detector/detector.hpp"
#include "clay/gnn/gnn.hpp"
#include "clay/pipeline/synth.hpp"
#include "clay/pipeline/training.hpp"
#include "clay/transformer/transformer.hpp"

namespace clay::pipeline {

namespace {

using nn::Matrix;
using nn::Tape;
using nn::Var;

Matrix random_matrix(nn::Index rows, nn::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  Matrix m(rows, cols);
  for (nn::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

// mean(out * R) for a fixed random R, so every output entry reaches the loss
// with a distinct weight.
Var projection_loss(Tape& t, const Var& out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Var weighted = nn::mul(out, t.constant(random_matrix(out.rows(), out.cols(), rng)));
  return nn::scale(nn::sum_all(weighted), 1.0 / double(weighted.value().size()));
}

// Zero-initialized biases put ReLU inputs exactly on the kink wherever the
// incoming activations vanish; a small perturbation moves every parameter
// to a generic point.
void perturb(nn::ParameterSet& ps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 0.05);
  for (auto& p : ps)
    for (nn::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] += d(rng);
}

features::FeatureConfig tiny_features(int vocab) {
  features::FeatureConfig f;
  f.max_words_per_field = 4;
  f.text_dim = 4;
  f.position_dim = 3;
  f.image_dim = 5;
  f.sinusoid_frequencies = 2;
  f.crop_size = 8;
  f.vocab_size = vocab;
  return f;
}

}  // namespace

std::vector<GradientCase> run_gradient_suite(std::uint64_t seed, const nn::GradCheckOptions& options) {
  using Clock = std::chrono::steady_clock;
  std::vector<GradientCase> out;
  auto run = [&](std::string name, nn::ParameterSet& ps, const std::function<Var(Tape&)>& loss,
                 nn::Index entries = 0) {
    const auto start = Clock::now();
    perturb(ps, seed + 100 + out.size());
    nn::GradCheckOptions o = options;
    o.seed = seed + out.size();
    if (entries > 0) o.max_entries_per_param = entries;
    GradientCase c{std::move(name), nn::gradcheck(ps, loss, o), 0.0};
    c.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    out.push_back(std::move(c));
  };

  synth::SynthOptions so;
  so.raster_width = 45;
  so.raster_height = 80;
  so.invalid_per_screen = 0.0;
  // Toolbar and navigation bar only: about ten nodes of several types.
  Screen screen = drop_gold_invalid(synth::generate_screen(seed, 0, so));
  auto& kids = screen.hierarchy.root.children;
  kids = {kids.front(), kids.back()};
  assign_preorder_ids(screen.hierarchy.root);
  const auto tok = train_tokenizer({screen}, 300);
  std::mt19937_64 rng(seed);

  {
    nn::ParameterSet ps;
    nn::Rng r(seed);
    features::TextEmbedding text(ps, "text", tok.vocab_size(), 4, r);
    std::vector<features::NodeText> nodes;
    for (const Node* n : preorder(screen.hierarchy)) nodes.push_back(features::tokenize_node(*n, tok, 4));
    // Most table rows are unused by one screen; check every entry.
    run("text_embedding", ps, [&](Tape& t) { return projection_loss(t, text(t, nodes), seed + 1); },
        ps.begin()->value.size());
  }
  {
    nn::ParameterSet ps;
    nn::Rng r(seed);
    features::PositionEmbedding pos(ps, "position", 3, 4, r);
    const Matrix coords = random_matrix(5, 4, rng).cwiseAbs() * 0.3;
    run("position_embedding", ps, [&](Tape& t) { return projection_loss(t, pos(t, coords), seed + 2); });
  }
  {
    nn::ParameterSet ps;
    nn::Rng r(seed);
    features::CropEncoder crop(ps, "crop", 8, 5, r);
    const Matrix crops = random_matrix(3 * 8 * 8, 3, rng);
    run("crop_encoder", ps, [&](Tape& t) { return projection_loss(t, crop(t, crops, 3), seed + 3); });
  }
  {
    detector::DetectorConfig dc;
    dc.height = 16;
    dc.width = 16;
    dc.channels = {2, 3, 3, 4};
    detector::DetectorModel det(dc, seed);
    const Matrix x = random_matrix(2 * 16 * 16, 4, rng);
    const std::vector<double> y = {1.0, 0.0};
    run("detector_cnn", det.params(), [&](Tape& t) { return nn::bce_with_logits(det.logits(t, x, 2), y); });
  }
  {
    gnn::GnnConfig gc;
    gc.features = tiny_features(tok.vocab_size());
    gc.hidden_dim = 6;
    gc.message_dim = 5;
    gc.edge_dim = 3;
    gc.rounds = 2;
    gnn::GnnModel model(gc, tok, seed);
    const auto g = gnn::make_graph_input(screen, tok, gc);
    run("gnn_round", model.params(), [&](Tape& t) {
      return projection_loss(t, model.message_round(t, g, model.init_states(t, g)), seed + 4);
    });
    run("gnn_readout", model.params(), [&](Tape& t) { return nn::cross_entropy(model.forward(t, g), g.labels); });
  }
  {
    transformer::TransformerConfig xc;
    xc.features = tiny_features(tok.vocab_size());
    xc.model_dim = 12;
    xc.heads = 2;
    xc.encoder_layers = 1;
    xc.decoder_layers = 1;
    xc.mlp_dim = 10;
    xc.image_height = 32;
    xc.image_width = 16;
    xc.backbone_channels = {2, 3, 4};
    transformer::TransformerModel model(xc, tok, seed);
    const auto s = transformer::make_screen_input(screen, tok, xc);
    run("transformer_encoder", model.params(),
        [&](Tape& t) { return projection_loss(t, model.encode_screen(t, s.image).patches, seed + 5); });
    run("transformer_decoder", model.params(), [&](Tape& t) {
      const auto enc = model.encode_screen(t, s.image);
      return projection_loss(t, model.decode_types(t, model.node_queries(t, s.nodes), enc), seed + 6);
    });
    run("transformer_readout", model.params(), [&](Tape& t) { return nn::cross_entropy(model.forward(t, s), s.labels); });
  }
  return out;
}

}  // namespace clay::pipeline
