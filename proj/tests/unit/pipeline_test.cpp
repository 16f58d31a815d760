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

#include <fstream>
#include <iterator>
#include <random>
#include <set>

#include "clay/error.hpp"
#include "clay/pipeline/dataset.hpp"
#include "clay/pipeline/overlay.hpp"
#include "clay/pipeline/pipeline.hpp"
#include "clay/pipeline/synth.hpp"
#include "clay/pipeline/training.hpp"
#include "test_support.hpp"

using namespace clay;
using namespace clay::pipeline;
using clay::testing::make_hierarchy;
using clay::testing::make_node;

namespace {

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::set<int> survivor_ids(const CleanedScreen& c) {
  std::set<int> ids;
  for (const auto& n : c.nodes)
    if (n.node_id >= 0) ids.insert(n.node_id);
  return ids;
}

features::TokenizerModel corpus_tokenizer(const std::vector<Screen>& screens) {
  return train_tokenizer(screens, 300);
}

std::shared_ptr<const gnn::GnnModel> tiny_gnn(const features::TokenizerModel& tok) {
  gnn::GnnConfig cfg;
  cfg.features = {10, 4, 3, 4, 4, 8, 300};
  cfg.hidden_dim = 6;
  cfg.message_dim = 5;
  cfg.edge_dim = 3;
  cfg.rounds = 2;
  return std::make_shared<gnn::GnnModel>(cfg, tok, 1);
}

std::shared_ptr<const transformer::TransformerModel> tiny_transformer(const features::TokenizerModel& tok) {
  transformer::TransformerConfig cfg;
  cfg.features = {10, 4, 3, 4, 4, 8, 300};
  cfg.model_dim = 12;
  cfg.heads = 2;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.mlp_dim = 8;
  cfg.image_height = 32;
  cfg.image_width = 16;
  cfg.backbone_channels = {2, 3, 4};
  return std::make_shared<transformer::TransformerModel>(cfg, tok, 2);
}

std::shared_ptr<const detector::DetectorModel> tiny_detector() {
  detector::DetectorConfig cfg;
  cfg.height = 16;
  cfg.width = 16;
  cfg.channels = {2, 3, 3, 4};
  return std::make_shared<detector::DetectorModel>(cfg, 3);
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("empty corpus directory") {
    const auto dir = clay::testing::fresh_temp_dir("ingest_empty");
    const auto store = ingest(dir);
    CHECK(store.screens.empty());
    CHECK(store.stats.screens == 0);
    CHECK(store.stats.nodes == 0);
    CHECK(store.stats.class_histogram.empty());
  }

  TEST_CASE("ingest drops inadmissible screens and unpaired files") {
    const auto dir = clay::testing::fresh_temp_dir("ingest_five");
    auto screens = synth::generate_corpus(4, 5);
    Screen tiny;
    tiny.source_id = "tiny";
    tiny.hierarchy = make_hierarchy(make_node("R", {0, 0, 1440, 2560}, {make_node("C", {0, 0, 100, 100})}), 1440, 2560);
    tiny.hierarchy.package_name = "com.tiny";
    tiny.screenshot = Image(90, 160, 128);
    screens.push_back(tiny);
    synth::write_corpus(dir, screens);
    write_png(dir / "orphan.png", Image(4, 4));

    const auto store = ingest(dir);
    REQUIRE(store.screens.size() == 4);
    CHECK(store.stats.screens == 4);
    CHECK(store.stats.inadmissible == 1);
    std::int64_t nodes = 0, histogram = 0;
    for (int i = 0; i < 4; ++i) {
      CHECK(store.screens[std::size_t(i)].source_id == screens[std::size_t(i)].source_id);
      nodes += std::int64_t(node_count(screens[std::size_t(i)].hierarchy));
    }
    for (const auto& [cls, n] : store.stats.class_histogram) histogram += n;
    CHECK(store.stats.nodes == nodes);
    CHECK(histogram == nodes);
    bool orphan = false;
    for (const auto& w : store.warnings) orphan |= w.find("orphan") != std::string::npos;
    CHECK(orphan);

    const Screen back = store.screens[0].load();
    CHECK(back.screenshot.width == 90);
    CHECK(serialize_hierarchy(back.hierarchy) == serialize_hierarchy(screens[0].hierarchy));
  }

  TEST_CASE("one package lands in a single split with a warning") {
    std::vector<ScreenKey> keys;
    for (int i = 0; i < 10; ++i) keys.push_back({"s" + std::to_string(i), "com.only"});
    const auto s = split(keys, {0.75, 0.10, 0.15}, 1);
    int nonempty = 0;
    for (const auto& ids : s.ids) nonempty += !ids.empty();
    CHECK(nonempty == 1);
    CHECK(s.ids[0].size() + s.ids[1].size() + s.ids[2].size() == 10);
    CHECK_FALSE(s.warnings.empty());
  }

  TEST_CASE("splits are deterministic and package disjoint") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<ScreenKey> keys;
      const int packages = 3 + int(rng() % 40);
      for (int i = 0; i < 200; ++i)
        keys.push_back({"s" + std::to_string(i), "com.app" + std::to_string(rng() % std::uint64_t(packages))});
      const std::uint64_t seed = rng();
      const auto a = split(keys, {0.75, 0.10, 0.15}, seed);
      const auto b = split(keys, {0.75, 0.10, 0.15}, seed);
      CHECK(a.ids == b.ids);
      std::map<std::string, std::string> package_of;
      for (const auto& k : keys) package_of[k.source_id] = k.package;
      std::map<std::string, int> bucket;
      std::size_t total = 0;
      for (int s = 0; s < 3; ++s)
        for (const auto& id : a.ids[std::size_t(s)]) {
          ++total;
          auto [it, fresh] = bucket.emplace(package_of.at(id), s);
          CHECK(it->second == s);
        }
      CHECK(total == keys.size());
    }
    CHECK(package_position("com.a", 1) >= 0.0);
    CHECK(package_position("com.a", 1) < 1.0);
    CHECK(package_position("com.a", 1) != package_position("com.a", 2));
  }

  TEST_CASE("split round trips through JSON") {
    std::vector<ScreenKey> keys;
    for (int i = 0; i < 30; ++i) keys.push_back({"s" + std::to_string(i), "p" + std::to_string(i % 7)});
    const auto s = split(keys, {0.6, 0.2, 0.2}, 9);
    const auto back = DatasetSplit::from_json(s.to_json());
    CHECK(back.ids == s.ids);
    CHECK(back.seed == 9);
    CHECK(back.ratios == s.ratios);
  }

  TEST_CASE("heuristic cleaning labels survivors with the rule table") {
    const Screen s = synth::generate_screen(7, 0);
    const Pipeline p(PipelineConfig{});
    const auto c = p.clean(s);
    CHECK(c.accounted() == c.original_count);
    const auto nodes = preorder(c.hierarchy);
    const auto parent = parent_positions(c.hierarchy.root);
    REQUIRE(nodes.size() == c.nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const Node* up = parent[i] >= 0 ? nodes[std::size_t(parent[i])] : nullptr;
      CHECK(c.nodes[i].type == heuristic::infer_type(*nodes[i], p.rules(), up));
      CHECK_FALSE(c.nodes[i].invalid_prob.has_value());
    }
  }

  TEST_CASE("planted blank node is removed by the rules") {
    auto h = make_hierarchy(make_node("android.widget.FrameLayout", {0, 0, 180, 320},
                                      {make_node("android.widget.TextView", {10, 10, 170, 60}),
                                       make_node("android.widget.ImageView", {20, 100, 160, 200}),
                                       make_node("android.widget.TextView", {20, 220, 160, 300})}),
                            180, 320);
    Screen s = clay::testing::noisy_screen(h, 5);
    clay::testing::fill_rect(s.screenshot, {20, 220, 160, 300}, 250, 250, 250);
    const auto c = Pipeline(PipelineConfig{}).clean(s);
    CHECK(c.report.reason_for(3) == preprocess::DropReason::blank_uniform);
    CHECK(c.find(3) == nullptr);
    CHECK(c.find(1) != nullptr);
    CHECK(c.accounted() == c.original_count);
    const auto j = c.to_json();
    REQUIRE(j["removed"].size() == 1);
    CHECK(j["removed"][0]["removed_reason"] == "blank_uniform");
  }

  TEST_CASE("ledger conservation across configurations") {
    const auto screens = synth::generate_corpus(6, 8);
    const auto tok = corpus_tokenizer(screens);
    const auto det = tiny_detector();
    for (double threshold : {0.01, 0.5, 0.99}) {
      for (auto model : {TypeModel::heuristic, TypeModel::gnn, TypeModel::transformer}) {
        PipelineConfig cfg;
        cfg.detector_threshold = threshold;
        cfg.type_model = model;
        const Pipeline p(cfg, heuristic::RuleTable::defaults(), det, tiny_gnn(tok), tiny_transformer(tok));
        for (const auto& s : screens) {
          const auto c = p.clean(s);
          CHECK(c.accounted() == c.original_count);
          std::set<int> seen = survivor_ids(c);
          for (const auto& r : c.report.removed) CHECK(seen.insert(r.node_id).second);
          for (int id : c.model_removed) CHECK(seen.insert(id).second);
          CHECK(seen.size() == c.original_count);
        }
      }
    }
  }

  TEST_CASE("learned type models never emit INVALID or unknown") {
    const auto screens = synth::generate_corpus(4, 9);
    const auto tok = corpus_tokenizer(screens);
    for (auto model : {TypeModel::gnn, TypeModel::transformer}) {
      PipelineConfig cfg;
      cfg.type_model = model;
      const Pipeline p(cfg, heuristic::RuleTable::defaults(), tiny_detector(), tiny_gnn(tok), tiny_transformer(tok));
      for (const auto& s : screens)
        for (const auto& n : p.clean(s).nodes) {
          REQUIRE(n.type.has_value());
          CHECK(is_semantic(*n.type));
          CHECK(n.type_prob > 0.0);
          CHECK(n.type_prob <= 1.0);
        }
    }
  }

  TEST_CASE("missing models are startup errors") {
    PipelineConfig cfg;
    cfg.type_model = TypeModel::gnn;
    CHECK_THROWS_AS(Pipeline{cfg}, DataError);
    cfg.gnn_checkpoint = "/nonexistent/gnn.ckpt";
    CHECK_THROWS_AS(Pipeline{cfg}, DataError);
    PipelineConfig bad;
    bad.detector_threshold = 1.5;
    CHECK_THROWS_AS(Pipeline(bad, heuristic::RuleTable::defaults(), nullptr, nullptr, nullptr), DataError);
  }

  TEST_CASE("cleaning its own output keeps the survivors") {
    const Pipeline p(PipelineConfig{});
    for (int i = 0; i < 10; ++i) {
      const Screen s = synth::generate_screen(12, i);
      const auto first = p.clean(s);
      const Screen again{first.hierarchy, s.screenshot, s.source_id};
      const auto second = p.clean(again);
      CHECK(survivor_ids(second) == survivor_ids(first));
      CHECK(second.report.removed.empty());
      for (const auto& n : first.nodes) {
        const NodeResult* m = second.find(n.node_id);
        REQUIRE(m != nullptr);
        CHECK(m->bounds == n.bounds);
        CHECK(m->type == n.type);
      }
    }
  }

  TEST_CASE("node removal re-attaches children") {
    const auto h = make_hierarchy(make_node("A", {0, 0, 100, 100},
                                            {make_node("B", {0, 0, 50, 50}, {make_node("C", {0, 0, 10, 10})}),
                                             make_node("D", {50, 50, 100, 100})}),
                                  100, 100);
    const auto out = remove_nodes(h, {1, 0});
    CHECK(out.root.node_id == 0);
    REQUIRE(out.root.children.size() == 2);
    CHECK(out.root.children[0].node_id == 2);
    CHECK(out.root.children[1].node_id == 3);
  }

  TEST_CASE("overlay with no survivors is the screenshot plus a legend") {
    const Screen s = synth::generate_screen(13, 0);
    CleanedScreen empty;
    const Image img = render_overlay(s, empty);
    CHECK(img.width == s.screenshot.width + legend_width(empty));
    int diff = 0;
    for (int y = 0; y < s.screenshot.height; ++y)
      for (int x = 0; x < s.screenshot.width; ++x)
        for (int c = 0; c < 3; ++c) diff += img.at(x, y, c) != s.screenshot.at(x, y, c);
    CHECK(diff == 0);
  }

  TEST_CASE("overlay is deterministic and draws at the scaled box") {
    const Screen s = synth::generate_screen(14, 0);
    const auto c = Pipeline(PipelineConfig{}).clean(s);
    const auto dir = clay::testing::fresh_temp_dir("overlay");
    write_png(dir / "a.png", render_overlay(s, c));
    write_png(dir / "b.png", render_overlay(s, c));
    CHECK(read_bytes(dir / "a.png") == read_bytes(dir / "b.png"));

    CleanedScreen one;
    const BoundingBox box{288, 512, 1152, 1792};
    one.nodes.push_back({0, box, ObjectType::BUTTON, 1.0, std::nullopt});
    const Image img = render_overlay(s, one);
    const BoundingBox r = s.to_raster(box);
    CHECK(r == BoundingBox{18, 32, 72, 112});
    const auto color = type_color("BUTTON");
    for (auto [x, y] : {std::pair{r.left, r.top}, {r.right - 1, r.top}, {r.left, r.bottom - 1}, {r.right - 1, r.bottom - 1}})
      for (int ch = 0; ch < 3; ++ch) CHECK(img.at(x, y, ch) == color[std::size_t(ch)]);
    // The interior is untouched.
    CHECK(img.at(45, 72, 0) == s.screenshot.at(45, 72, 0));
    CHECK(type_color("BUTTON") != type_color("TEXT"));
  }

  TEST_CASE("synthetic screens are deterministic and fully labeled") {
    const Screen a = synth::generate_screen(15, 3), b = synth::generate_screen(15, 3);
    CHECK(serialize_hierarchy(a.hierarchy) == serialize_hierarchy(b.hierarchy));
    CHECK(a.screenshot.pixels == b.screenshot.pixels);
    CHECK(serialize_hierarchy(synth::generate_screen(15, 4).hierarchy) != serialize_hierarchy(a.hierarchy));
    for (const Node* n : preorder(a.hierarchy)) CHECK(n->label.has_value());
    const auto corpus = synth::generate_corpus(20, 16);
    std::set<std::string> ids;
    for (const auto& s : corpus) ids.insert(s.source_id);
    CHECK(ids.size() == 20);
  }

  TEST_CASE("pipeline config round trip") {
    PipelineConfig cfg;
    cfg.detector_threshold = 0.7;
    cfg.type_model = TypeModel::transformer;
    cfg.transformer_checkpoint = "models/tf.ckpt";
    cfg.preprocess.blank_modal_share = 0.95;
    const auto back = PipelineConfig::from_json(cfg.to_json());
    CHECK(back.detector_threshold == 0.7);
    CHECK(back.type_model == TypeModel::transformer);
    CHECK(back.transformer_checkpoint == cfg.transformer_checkpoint);
    CHECK(back.preprocess.blank_modal_share == 0.95);
    CHECK(parse_type_model("gnn") == TypeModel::gnn);
    CHECK_FALSE(parse_type_model("svm").has_value());
  }

  TEST_CASE("gold INVALID nodes are dropped for type training") {
    const Screen s = synth::generate_screen(17, 1);
    const Screen clean = drop_gold_invalid(s);
    for (const Node* n : preorder(clean.hierarchy)) CHECK(n->label != ObjectType::INVALID);
  }
}
