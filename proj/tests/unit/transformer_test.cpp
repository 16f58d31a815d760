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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "clay/error.hpp"
#include "clay/transformer/transformer.hpp"
#include "test_support.hpp"

using namespace clay;
using namespace clay::transformer;
using clay::testing::make_hierarchy;
using clay::testing::make_node;

namespace {

features::TokenizerModel small_tokenizer() {
  return features::train_bpe(features::split_words("android widget text view frame layout button image linear"), 300);
}

TransformerConfig tiny_config() {
  TransformerConfig cfg;
  cfg.features = {10, 4, 3, 4, 4, 8, 300};
  cfg.model_dim = 12;
  cfg.heads = 2;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 2;
  cfg.mlp_dim = 10;
  cfg.image_height = 32;
  cfg.image_width = 16;
  cfg.backbone_channels = {2, 3, 4};
  return cfg;
}

Screen sample_screen(std::uint64_t seed = 3) {
  auto h = make_hierarchy(
      make_node("android.widget.FrameLayout", {0, 0, 1440, 2560},
                {make_node("android.widget.LinearLayout", {0, 0, 1440, 400},
                           {make_node("android.widget.ImageButton", {0, 0, 200, 200}),
                            make_node("android.widget.TextView", {200, 0, 1000, 200})}),
                 make_node("android.widget.ImageView", {100, 500, 700, 1100}),
                 make_node("android.widget.Button", {800, 500, 1400, 700})}),
      1440, 2560);
  const std::vector<ObjectType> labels = {ObjectType::CONTAINER, ObjectType::TOOLBAR, ObjectType::BUTTON,
                                          ObjectType::TEXT, ObjectType::IMAGE, ObjectType::BUTTON};
  auto order = preorder_mut(h.root);
  for (std::size_t i = 0; i < order.size(); ++i) order[i]->label = labels[i];
  Screen s;
  s.hierarchy = std::move(h);
  s.screenshot = Image(90, 160);
  clay::testing::fill_noise(s.screenshot, s.screenshot.rect(), seed);
  return s;
}

ScreenInput permute(const ScreenInput& in, const std::vector<int>& perm) {
  ScreenInput out = in;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const int j = perm[i];
    out.nodes.text[std::size_t(j)] = in.nodes.text[i];
    out.nodes.coords.row(j) = in.nodes.coords.row(nn::Index(i));
    out.labels[std::size_t(j)] = in.labels[i];
  }
  return out;
}

void jitter(nn::ParameterSet& ps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 0.05);
  for (auto& p : ps)
    for (nn::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] += d(rng);
}

}  // namespace

TEST_SUITE("transformer") {
  TEST_CASE("encoding shape and determinism") {
    const auto tok = small_tokenizer();
    const TransformerModel m(tiny_config(), tok, 1);
    const auto cfg = m.config();
    CHECK(cfg.grid_rows() == 2);
    CHECK(cfg.grid_cols() == 1);
    const auto a = make_screen_input(sample_screen(), tok, cfg);
    const auto b = make_screen_input(sample_screen(), tok, cfg);
    nn::Tape t;
    const auto ea = m.encode_screen(t, a.image), eb = m.encode_screen(t, b.image);
    CHECK(ea.patches.rows() == cfg.patches());
    CHECK(ea.patches.cols() == 12);
    CHECK(ea.patches.value() == eb.patches.value());

    TransformerConfig desk;
    const TransformerModel big(desk, tok, 1);
    nn::Tape t2;
    const auto e = big.encode_screen(t2, make_screen_input(sample_screen(), tok, desk).image);
    CHECK(e.grid_rows == 9);
    CHECK(e.grid_cols == 5);
    CHECK(e.patches.rows() == 45);
    CHECK(e.patches.cols() == 96);
  }

  TEST_CASE("single node self-attention has weight one") {
    const auto tok = small_tokenizer();
    const TransformerModel m(tiny_config(), tok, 2);
    auto in = make_screen_input(sample_screen(), tok, m.config());
    in.nodes.text.resize(1);
    in.nodes.coords.conservativeResize(1, 4);
    in.labels.resize(1);
    nn::Tape t;
    AttentionTrace trace;
    const Var logits = m.forward(t, in, &trace);
    CHECK(logits.rows() == 1);
    REQUIRE(trace.decoder_self.size() == 4);
    for (const auto& a : trace.decoder_self) CHECK(a(0, 0) == 1.0);
  }

  TEST_CASE("attention rows are normalized in every head and layer") {
    const auto tok = small_tokenizer();
    const TransformerModel m(tiny_config(), tok, 3);
    const auto in = make_screen_input(sample_screen(), tok, m.config());
    nn::Tape t;
    AttentionTrace trace;
    m.forward(t, in, &trace);
    CHECK(trace.encoder_self.size() == 2);
    CHECK(trace.decoder_cross.size() == 4);
    for (const auto* group : {&trace.encoder_self, &trace.decoder_self, &trace.decoder_cross})
      for (const auto& a : *group)
        for (nn::Index r = 0; r < a.rows(); ++r) CHECK(std::abs(a.row(r).sum() - 1.0) < 1e-6);
  }

  TEST_CASE("node order permutation permutes the logits") {
    const auto tok = small_tokenizer();
    TransformerModel m(tiny_config(), tok, 4);
    jitter(m.params(), 5);
    const auto in = make_screen_input(sample_screen(), tok, m.config());
    const Matrix base = m.predict(in);
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<int> perm(in.labels.size());
      for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = int(i);
      std::shuffle(perm.begin(), perm.end(), rng);
      const Matrix p = m.predict(permute(in, perm));
      for (std::size_t i = 0; i < perm.size(); ++i)
        CHECK((base.row(nn::Index(i)) - p.row(perm[i])).cwiseAbs().maxCoeff() < 1e-5);
    }
  }

  TEST_CASE("initial loss is close to ln 24") {
    const auto tok = small_tokenizer();
    const TransformerConfig cfg;
    const TransformerModel m(cfg, tok, 7);
    const auto in = make_screen_input(sample_screen(), tok, cfg);
    nn::Tape t;
    const double loss = nn::cross_entropy(m.forward(t, in), in.labels).scalar();
    CHECK(std::abs(loss - std::log(24.0)) < 0.2);
  }

  TEST_CASE("decoder consumes the screen encoding") {
    const auto tok = small_tokenizer();
    TransformerModel m(tiny_config(), tok, 8);
    jitter(m.params(), 9);
    const auto in = make_screen_input(sample_screen(), tok, m.config());
    nn::Tape t;
    const auto enc = m.encode_screen(t, in.image);
    const Var q = m.node_queries(t, in.nodes);
    const Matrix real = m.decode_types(t, q, enc).value();
    ScreenEncoding zero = enc;
    zero.patches = t.constant(Matrix::Zero(enc.patches.rows(), enc.patches.cols()));
    const Matrix blind = m.decode_types(t, q, zero).value();
    CHECK((real - blind).cwiseAbs().maxCoeff() > 1e-6);
  }

  TEST_CASE("zero nodes give empty logits") {
    const auto tok = small_tokenizer();
    const TransformerModel m(tiny_config(), tok, 10);
    auto in = make_screen_input(sample_screen(), tok, m.config());
    in.nodes.text.clear();
    in.nodes.coords.resize(0, 4);
    in.labels.clear();
    CHECK(m.predict(in).rows() == 0);
  }

  TEST_CASE("config validation") {
    TransformerConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.model_dim = 64;
    CHECK_THROWS_AS(cfg.validate(), ContractViolation);
    cfg = TransformerConfig{};
    cfg.heads = 5;
    CHECK_THROWS_AS(cfg.validate(), ContractViolation);
    cfg = TransformerConfig{};
    cfg.image_height = 100;
    CHECK_THROWS_AS(cfg.validate(), ContractViolation);
    CHECK_THROWS_AS(TransformerModel(TransformerConfig{{10, 32, 32, 32, 8, 64, 2000}}, small_tokenizer()), ContractViolation);
  }

  TEST_CASE("INVALID labels are rejected") {
    Screen s = sample_screen();
    preorder_mut(s.hierarchy.root)[2]->label = ObjectType::INVALID;
    CHECK_THROWS_AS(make_screen_input(s, small_tokenizer(), tiny_config()), ContractViolation);
  }

  TEST_CASE("backbone parameters use the second learning-rate group") {
    TransformerModel m(tiny_config(), small_tokenizer(), 11);
    int backbone = 0;
    for (const auto& p : m.params()) {
      const bool is_backbone = p.name.find("backbone") != std::string::npos;
      CHECK(p.group == (is_backbone ? 1 : 0));
      backbone += is_backbone;
    }
    CHECK(backbone == 6);
  }

  TEST_CASE("checkpoint round trip") {
    const auto dir = clay::testing::fresh_temp_dir("transformer");
    const auto tok = small_tokenizer();
    const TransformerModel m(tiny_config(), tok, 12);
    m.save(dir / "tf.ckpt");
    const TransformerModel back = TransformerModel::load(dir / "tf.ckpt");
    CHECK(back.config().model_dim == 12);
    const auto in = make_screen_input(sample_screen(), tok, m.config());
    CHECK((back.predict(in) - m.predict(in)).cwiseAbs().maxCoeff() < 1e-5);
  }

  TEST_CASE("reference schedule and dimensions") {
    const auto c = full_scale_transformer_config();
    CHECK(c.batch_size == 128);
    CHECK(c.total_steps == 15000);
    CHECK(c.initial_lr == 1e-4);
    CHECK(c.group1_initial_lr == 6e-5);
    CHECK(c.reduced_lr == doctest::Approx(c.initial_lr / 10));
    CHECK(c.group1_reduced_lr == doctest::Approx(c.group1_initial_lr / 10));
    CHECK(c.lr_drop_step == 5000);
    const auto dims = full_scale_dims();
    CHECK(dims["heads"] == 8);
    CHECK(dims["mlp_dim"] == 2048);
    CHECK(dims["qkv_dim"] == 256);
  }
}
