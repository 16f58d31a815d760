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
#include <set>
#include <tuple>

#include "clay/error.hpp"
#include "clay/gnn/gnn.hpp"
#include "clay/nn/gradcheck.hpp"
#include "test_support.hpp"

using namespace clay;
using namespace clay::gnn;
using clay::testing::make_hierarchy;
using clay::testing::make_node;

namespace {

features::TokenizerModel small_tokenizer() {
  return features::train_bpe(features::split_words("android widget text view frame layout button image linear"), 300);
}

GnnConfig tiny_config() {
  GnnConfig cfg;
  cfg.features = {10, 4, 3, 4, 4, 8, 300};
  cfg.hidden_dim = 6;
  cfg.message_dim = 5;
  cfg.edge_dim = 3;
  cfg.rounds = 2;
  return cfg;
}

Screen small_screen(ViewHierarchy h, std::uint64_t seed = 2) {
  Screen s;
  s.screenshot = Image(90, 160);
  clay::testing::fill_noise(s.screenshot, s.screenshot.rect(), seed);
  s.hierarchy = std::move(h);
  s.source_id = "gnn";
  return s;
}

Screen sample_screen() {
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
  return small_screen(std::move(h));
}

void jitter(nn::ParameterSet& ps, std::uint64_t seed, double std = 0.05) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, std);
  for (auto& p : ps)
    for (nn::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] += d(rng);
}

// GraphInput with empty features, for driving message_round directly.
GraphInput bare_graph(int n, std::vector<std::tuple<int, int, EdgeKind>> edges) {
  GraphInput g;
  g.nodes.text.resize(std::size_t(n));
  for (const auto& [s, d, k] : edges) {
    g.src.push_back(s);
    g.dst.push_back(d);
    g.kind.push_back(int(k));
  }
  g.labels.assign(std::size_t(n), -1);
  return g;
}

// Permutes the nodes of `g`: new position perm[i] holds old node i.
GraphInput permute(const GraphInput& g, const std::vector<int>& perm, int crop) {
  GraphInput out = g;
  const int n = g.count(), px = crop * crop;
  for (int i = 0; i < n; ++i) {
    const int j = perm[std::size_t(i)];
    out.nodes.text[std::size_t(j)] = g.nodes.text[std::size_t(i)];
    out.nodes.coords.row(j) = g.nodes.coords.row(i);
    out.nodes.crops.block(j * px, 0, px, 3) = g.nodes.crops.block(i * px, 0, px, 3);
    out.labels[std::size_t(j)] = g.labels[std::size_t(i)];
  }
  for (std::size_t e = 0; e < g.src.size(); ++e) {
    out.src[e] = perm[std::size_t(g.src[e])];
    out.dst[e] = perm[std::size_t(g.dst[e])];
  }
  std::reverse(out.src.begin(), out.src.end());
  std::reverse(out.dst.begin(), out.dst.end());
  std::reverse(out.kind.begin(), out.kind.end());
  return out;
}

}  // namespace

TEST_SUITE("gnn") {
  TEST_CASE("chain tree mirrors parent child edges") {
    const auto h = make_hierarchy(make_node("R", {0, 0, 1000, 1000}, {make_node("A", {0, 0, 500, 500}, {make_node("B", {0, 0, 100, 100})})}),
                                  1000, 1000);
    const auto g = build_graph(h, 0.01, false);
    const std::set<std::tuple<int, int, int>> got = [&] {
      std::set<std::tuple<int, int, int>> s;
      for (const auto& e : g.edges) s.insert({e.from, e.to, int(e.kind)});
      return s;
    }();
    const std::set<std::tuple<int, int, int>> expected = {
        {0, 1, 0}, {1, 0, 1}, {1, 2, 0}, {2, 1, 1}};
    CHECK(got == expected);
  }

  TEST_CASE("siblings sharing an edge are spatial neighbours") {
    const auto h = make_hierarchy(make_node("R", {0, 0, 1000, 1000}, {make_node("A", {0, 0, 100, 100}), make_node("B", {100, 20, 200, 80}),
                                                                       make_node("C", {500, 500, 600, 600})}),
                                  1000, 1000);
    const auto g = build_graph(h, 0.01);
    int ab = 0, ac = 0;
    for (const auto& e : g.edges) {
      if (e.kind != EdgeKind::spatial) continue;
      ab += (e.from == 1 && e.to == 2) || (e.from == 2 && e.to == 1);
      ac += (e.from == 1 && e.to == 3) || (e.from == 3 && e.to == 1);
    }
    CHECK(ab == 2);
    CHECK(ac == 0);
    CHECK(spatially_adjacent({0, 0, 100, 100}, {105, 0, 200, 100}, 10));
    CHECK_FALSE(spatially_adjacent({0, 0, 100, 100}, {105, 100, 200, 200}, 10));
  }

  TEST_CASE("spatial edges match an exhaustive pair check") {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 30; ++trial) {
      const auto h = clay::testing::random_tree(rng, 20, 500, 900);
      const double max_gap = 0.01 * 900;
      const auto g = build_graph(h, 0.01);
      const auto order = preorder(h);
      const auto parent = parent_positions(h.root);
      std::set<std::pair<int, int>> expected, got;
      for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j) {
          if (i == j || parent[std::size_t(i)] == j || parent[std::size_t(j)] == i) continue;
          const auto& a = order[std::size_t(i)]->bounds;
          const auto& b = order[std::size_t(j)]->bounds;
          const int overlap_x = std::min(a.right, b.right) - std::max(a.left, b.left);
          const int overlap_y = std::min(a.bottom, b.bottom) - std::max(a.top, b.top);
          const bool near = (overlap_y > 0 && -overlap_x <= max_gap) || (overlap_x > 0 && -overlap_y <= max_gap);
          if (near) expected.insert({i, j});
        }
      for (const auto& e : g.edges) {
        CHECK(e.from != e.to);
        if (e.kind == EdgeKind::spatial) got.insert({e.from, e.to});
      }
      CHECK(got == expected);
    }
  }

  TEST_CASE("initial state width") {
    const auto tok = small_tokenizer();
    GnnModel m(tiny_config(), tok, 1);
    const auto g = make_graph_input(sample_screen(), tok, m.config());
    nn::Tape t;
    CHECK(m.node_features(t, g).cols() == 4 + 3 * 4 + 4 * 3);
    CHECK(m.init_states(t, g).cols() == 6);
    CHECK(m.forward(t, g).cols() == kSemanticTypeCount);
  }

  TEST_CASE("identical nodes get identical initial states") {
    const auto tok = small_tokenizer();
    GnnModel m(tiny_config(), tok, 1);
    auto g = make_graph_input(sample_screen(), tok, m.config());
    g.nodes.text[4] = g.nodes.text[5];
    g.nodes.coords.row(4) = g.nodes.coords.row(5);
    g.nodes.crops.block(4 * 64, 0, 64, 3) = g.nodes.crops.block(5 * 64, 0, 64, 3);
    nn::Tape t;
    const Matrix h0 = m.init_states(t, g).value();
    CHECK(h0.row(4) == h0.row(5));
  }

  TEST_CASE("isolated node and single incoming edge") {
    const auto tok = small_tokenizer();
    GnnModel m(tiny_config(), tok, 2);
    jitter(m.params(), 3);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> d;
    Matrix h(2, 6);
    for (nn::Index i = 0; i < h.size(); ++i) h.data()[i] = d(rng);

    nn::Tape t;
    const auto lone = bare_graph(1, {});
    const Matrix out = m.message_round(t, lone, t.constant(h.topRows(1))).value();
    const auto& wu = m.params().find("gnn/update/w")->value;
    const auto& bu = m.params().find("gnn/update/b")->value;
    Matrix in = Matrix::Zero(1, 11);
    in.leftCols(6) = h.topRows(1);
    const Matrix expected = h.topRows(1) + (in * wu + bu).unaryExpr([](double v) { return std::tanh(v); });
    CHECK((out - expected).cwiseAbs().maxCoeff() < 1e-12);

    const auto pair = bare_graph(2, {{0, 1, EdgeKind::parent_child}});
    Matrix attention;
    m.message_round(t, pair, t.constant(h), &attention);
    REQUIRE(attention.rows() == 1);
    CHECK(attention(0, 0) == 1.0);
  }

  TEST_CASE("three node path matches a scalar computation") {
    GnnConfig cfg = tiny_config();
    cfg.hidden_dim = 2;
    cfg.message_dim = 2;
    cfg.edge_dim = 1;
    const auto tok = small_tokenizer();
    GnnModel m(cfg, tok, 0);
    auto set = [&](const char* name, std::vector<double> v) {
      auto* p = m.params().find(name);
      REQUIRE(p != nullptr);
      REQUIRE(p->value.size() == nn::Index(v.size()));
      for (std::size_t i = 0; i < v.size(); ++i) p->value.data()[i] = v[i];
    };
    // Row-major [in x out] weights.
    set("gnn/edge_kind", {0.5, -0.5, 0.25});
    set("gnn/message/w", {0.1, -0.2, 0.3, 0.1, -0.1, 0.2, 0.2, 0.05, 0.4, -0.3});
    set("gnn/message/b", {0.05, 0.1});
    set("gnn/attention/w", {0.3, -0.1, 0.2, 0.4});
    set("gnn/attention/b", {0.0});
    set("gnn/update/w", {0.2, -0.1, 0.1, 0.3, -0.2, 0.25, 0.15, 0.05});
    set("gnn/update/b", {0.01, -0.02});

    const double h[3][2] = {{1.0, -0.5}, {0.2, 0.8}, {-0.6, 0.4}};
    Matrix hm(3, 2);
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 2; ++k) hm(i, k) = h[i][k];
    const std::vector<std::tuple<int, int, EdgeKind>> edges = {{0, 1, EdgeKind::parent_child},
                                                               {1, 0, EdgeKind::child_parent},
                                                               {1, 2, EdgeKind::parent_child},
                                                               {2, 1, EdgeKind::child_parent}};
    nn::Tape t;
    const Matrix out = m.message_round(t, bare_graph(3, edges), t.constant(hm)).value();

    const double edge[3] = {0.5, -0.5, 0.25};
    const double wm[5][2] = {{0.1, -0.2}, {0.3, 0.1}, {-0.1, 0.2}, {0.2, 0.05}, {0.4, -0.3}};
    const double bm[2] = {0.05, 0.1};
    const double ws[4] = {0.3, -0.1, 0.2, 0.4};
    const double wu[4][2] = {{0.2, -0.1}, {0.1, 0.3}, {-0.2, 0.25}, {0.15, 0.05}};
    const double bu[2] = {0.01, -0.02};
    double msg[4][2], score[4];
    for (int e = 0; e < 4; ++e) {
      const auto [u, o, kind] = edges[std::size_t(e)];
      const double in[5] = {h[u][0], h[u][1], h[o][0], h[o][1], edge[int(kind)]};
      for (int k = 0; k < 2; ++k) {
        double z = bm[k];
        for (int r = 0; r < 5; ++r) z += in[r] * wm[r][k];
        msg[e][k] = std::max(z, 0.0);
      }
      score[e] = h[o][0] * ws[0] + h[o][1] * ws[1] + msg[e][0] * ws[2] + msg[e][1] * ws[3];
    }
    for (int o = 0; o < 3; ++o) {
      double denom = 0, pooled[2] = {0, 0};
      for (int e = 0; e < 4; ++e)
        if (std::get<1>(edges[std::size_t(e)]) == o) denom += std::exp(score[e]);
      for (int e = 0; e < 4; ++e)
        if (std::get<1>(edges[std::size_t(e)]) == o)
          for (int k = 0; k < 2; ++k) pooled[k] += std::exp(score[e]) / denom * msg[e][k];
      const double in[4] = {h[o][0], h[o][1], pooled[0], pooled[1]};
      for (int k = 0; k < 2; ++k) {
        double z = bu[k];
        for (int r = 0; r < 4; ++r) z += in[r] * wu[r][k];
        CHECK(out(o, k) == doctest::Approx(h[o][k] + std::tanh(z)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("zero rounds reads out the initial states") {
    const auto tok = small_tokenizer();
    GnnModel m(tiny_config(), tok, 5);
    const auto g = make_graph_input(sample_screen(), tok, m.config());
    nn::Tape t;
    const Matrix z = m.forward(t, g, 0).value();
    const auto& w = m.params().find("gnn/readout/w")->value;
    const auto& b = m.params().find("gnn/readout/b")->value;
    const Matrix expected = (m.init_states(t, g).value() * w).rowwise() + b.row(0);
    CHECK((z - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(z.allFinite());
  }

  TEST_CASE("outputs are permutation equivariant") {
    const auto tok = small_tokenizer();
    GnnModel m(tiny_config(), tok, 6);
    jitter(m.params(), 7);
    const auto g = make_graph_input(sample_screen(), tok, m.config());
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<int> perm(std::size_t(g.count()));
      for (int i = 0; i < g.count(); ++i) perm[std::size_t(i)] = i;
      std::shuffle(perm.begin(), perm.end(), rng);
      const Matrix a = m.predict(g), b = m.predict(permute(g, perm, 8));
      for (int i = 0; i < g.count(); ++i)
        CHECK((a.row(i) - b.row(perm[std::size_t(i)])).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("predictions only see nodes within the round count") {
    Node chain = make_node("android.widget.TextView", {0, 2300, 1440, 2560});
    for (int depth = 6; depth >= 0; --depth)
      chain = make_node("android.widget.FrameLayout", {0, depth * 300, 1440, 2560}, {chain});
    const Screen s = small_screen(make_hierarchy(chain, 1440, 2560));
    GnnConfig cfg = tiny_config();
    cfg.spatial_edges = false;
    cfg.rounds = 2;
    const auto tok = small_tokenizer();
    GnnModel m(cfg, tok, 9);
    jitter(m.params(), 10, 0.2);
    const auto g = make_graph_input(s, tok, cfg, false);
    const Matrix base = m.predict(g);
    auto perturbed = [&](int node) {
      GraphInput p = g;
      p.nodes.coords(node, 0) += 0.3;
      p.nodes.crops.block(node * 64, 0, 64, 3).array() = 1.0 - p.nodes.crops.block(node * 64, 0, 64, 3).array();
      return m.predict(p);
    };
    CHECK(perturbed(3).row(0) == base.row(0));
    CHECK(perturbed(5).row(0) == base.row(0));
    CHECK(perturbed(2).row(0) != base.row(0));
    CHECK(perturbed(1).row(0) != base.row(0));
  }

  TEST_CASE("attention over incoming messages sums to one") {
    const auto tok = small_tokenizer();
    GnnModel m(tiny_config(), tok, 11);
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 5; ++trial) {
      const Screen s = small_screen(clay::testing::random_tree(rng, 12, 1440, 2560), rng());
      const auto g = make_graph_input(s, tok, m.config(), false);
      nn::Tape t;
      Matrix attention;
      m.message_round(t, g, m.init_states(t, g), &attention);
      std::vector<double> sums(std::size_t(g.count()), 0.0);
      for (std::size_t e = 0; e < g.dst.size(); ++e) sums[std::size_t(g.dst[e])] += attention(nn::Index(e), 0);
      for (int i = 0; i < g.count(); ++i) CHECK(std::abs(sums[std::size_t(i)] - 1.0) < 1e-6);
    }
  }

  TEST_CASE("full model gradients on a small graph") {
    auto h = make_hierarchy(make_node("android.widget.FrameLayout", {0, 0, 1440, 2560},
                                      {make_node("android.widget.Button", {0, 0, 700, 600}),
                                       make_node("android.widget.TextView", {0, 600, 700, 1200})}),
                            1440, 2560);
    auto order = preorder_mut(h.root);
    order[0]->label = ObjectType::CONTAINER;
    order[1]->label = ObjectType::BUTTON;
    order[2]->label = ObjectType::TEXT;
    const auto tok = small_tokenizer();
    GnnModel m(tiny_config(), tok, 13);
    jitter(m.params(), 14);
    const auto g = make_graph_input(small_screen(h), tok, m.config());
    const auto r = nn::gradcheck(m.params(), [&](nn::Tape& t) { return nn::cross_entropy(m.forward(t, g), g.labels); });
    CHECK(r.max_rel_error < 1e-4);
  }

  TEST_CASE("INVALID labels are rejected") {
    Screen s = sample_screen();
    preorder_mut(s.hierarchy.root)[3]->label = ObjectType::INVALID;
    CHECK_THROWS_AS(make_graph_input(s, small_tokenizer(), tiny_config()), ContractViolation);
  }

  TEST_CASE("checkpoint round trip") {
    const auto dir = clay::testing::fresh_temp_dir("gnn");
    const auto tok = small_tokenizer();
    GnnModel m(tiny_config(), tok, 15);
    m.save(dir / "gnn.ckpt");
    const GnnModel back = GnnModel::load(dir / "gnn.ckpt");
    CHECK(back.tokenizer() == tok);
    const auto g = make_graph_input(sample_screen(), tok, m.config());
    CHECK((back.predict(g) - m.predict(g)).cwiseAbs().maxCoeff() < 1e-5);
  }

  TEST_CASE("reference schedule") {
    const auto c = full_scale_gnn_config();
    CHECK(c.batch_size == 32);
    CHECK(c.initial_lr == 2e-3);
    CHECK(c.reduced_lr == 1e-4);
    CHECK(c.lr_drop_step == 200000);
    CHECK(c.total_steps == 500000);
  }
}
