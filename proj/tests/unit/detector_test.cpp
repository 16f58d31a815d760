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
#include <map>
#include <random>

#include "clay/detector/detector.hpp"
#include "clay/error.hpp"
#include "test_support.hpp"

using namespace clay;
using namespace clay::detector;
using clay::testing::make_hierarchy;
using clay::testing::make_node;

namespace {

Screen test_screen(int width = 1440, int height = 2560) {
  Screen s;
  s.hierarchy = make_hierarchy(make_node("R", {0, 0, width, height}), width, height);
  s.screenshot = Image(90, 160);
  clay::testing::fill_noise(s.screenshot, s.screenshot.rect(), 3);
  return s;
}

DetectorConfig small_config() {
  DetectorConfig cfg;
  cfg.height = 16;
  cfg.width = 16;
  cfg.channels = {2, 3, 3, 4};
  return cfg;
}

}  // namespace

TEST_SUITE("detector") {
  TEST_CASE("full screen box gives an all-ones mask") {
    const Matrix x = build_input(test_screen(), {0, 0, 1440, 2560}, 144, 80);
    REQUIRE(x.rows() == 144 * 80);
    REQUIRE(x.cols() == 4);
    CHECK(x.col(3).minCoeff() == 1.0);
  }

  TEST_CASE("left half box masks the left columns") {
    const Matrix x = build_input(test_screen(), {0, 0, 720, 2560}, 144, 80);
    for (int y = 0; y < 144; ++y)
      for (int col = 0; col < 80; ++col) REQUIRE(x(y * 80 + col, 3) == (col < 40 ? 1.0 : 0.0));
  }

  TEST_CASE("mask pixels match a per-pixel center test") {
    std::mt19937_64 rng(8);
    const Screen s = test_screen();
    std::uniform_int_distribution<int> xs(0, 1440), ys(0, 2560);
    for (int trial = 0; trial < 200; ++trial) {
      int l = xs(rng), r = xs(rng), t = ys(rng), b = ys(rng);
      if (l > r) std::swap(l, r);
      if (t > b) std::swap(t, b);
      if (r - l < 40 || b - t < 40) continue;
      const Matrix x = build_input(s, {l, t, r, b}, 144, 80);
      const double sx = 80.0 / 1440.0, sy = 144.0 / 2560.0;
      double expected = 0;
      int mismatches = 0;
      for (int py = 0; py < 144; ++py)
        for (int px = 0; px < 80; ++px) {
          // Half-up edge rounding keeps pixel p iff its center lies in (edge_lo, edge_hi].
          const double cx = px + 0.5, cy = py + 0.5;
          const bool in = l * sx < cx && cx <= r * sx && t * sy < cy && cy <= b * sy;
          expected += in ? 1.0 : 0.0;
          mismatches += x(py * 80 + px, 3) != (in ? 1.0 : 0.0);
        }
      CHECK(mismatches == 0);
      CHECK(x.col(3).sum() == expected);
    }
  }

  TEST_CASE("thin and off-screen boxes") {
    const BoundingBox r = mask_rect({100, 100, 101, 2000}, 1440, 2560, 144, 80);
    CHECK(r.width() == 1);
    CHECK(r.height() > 1);
    CHECK_THROWS_AS(mask_rect({1500, 0, 1600, 100}, 1440, 2560, 144, 80), ContractViolation);
    const BoundingBox edge = mask_rect({1430, 0, 1440, 10}, 1440, 2560, 144, 80);
    CHECK(edge.right <= 80);
    CHECK(edge.area() >= 1);
  }

  TEST_CASE("mask is scale consistent") {
    std::mt19937_64 rng(10);
    std::uniform_int_distribution<int> xs(0, 1440), ys(0, 2560);
    for (int trial = 0; trial < 500; ++trial) {
      int l = xs(rng), r = xs(rng), t = ys(rng), b = ys(rng);
      if (l > r) std::swap(l, r);
      if (t > b) std::swap(t, b);
      if (r - l < 60 || b - t < 60) continue;
      const BoundingBox lo = mask_rect({l, t, r, b}, 1440, 2560, 72, 40);
      const BoundingBox hi = mask_rect({l, t, r, b}, 1440, 2560, 144, 80);
      CHECK(std::abs(2 * lo.left - hi.left) <= 1);
      CHECK(std::abs(2 * lo.right - hi.right) <= 1);
      CHECK(std::abs(2 * lo.top - hi.top) <= 1);
      CHECK(std::abs(2 * lo.bottom - hi.bottom) <= 1);
    }
  }

  TEST_CASE("predictions are probabilities and deterministic") {
    const DetectorModel m(small_config(), 4);
    const Screen s = test_screen();
    const Matrix a = build_input(s, {0, 0, 720, 1280}, 16, 16);
    const Matrix b = build_input(s, {720, 1280, 1440, 2560}, 16, 16);
    const double pa = m.predict(a);
    CHECK(pa > 0.0);
    CHECK(pa < 1.0);
    CHECK(m.predict(a) == pa);
    CHECK(DetectorModel(small_config(), 4).predict(a) == pa);
    // Only the mask differs between a and b.
    CHECK(m.predict(b) != pa);
    Matrix batch(2 * 256, 4);
    batch << a, b;
    const auto both = m.predict(batch, 2);
    CHECK(both[0] == doctest::Approx(pa).epsilon(1e-12));
  }

  TEST_CASE("checkpoint round trip keeps predictions") {
    const auto dir = clay::testing::fresh_temp_dir("detector");
    const DetectorModel m(small_config(), 6);
    m.save(dir / "det.ckpt");
    const DetectorModel back = DetectorModel::load(dir / "det.ckpt");
    CHECK(back.config().height == 16);
    CHECK(back.config().channels == small_config().channels);
    const Matrix x = build_input(test_screen(), {100, 100, 900, 900}, 16, 16);
    CHECK(back.predict(x) == doctest::Approx(m.predict(x)).epsilon(1e-5));
  }

  TEST_CASE("minority examples repeat to reach the target ratio") {
    std::vector<bool> invalid(900, false);
    for (int i = 0; i < 100; ++i) invalid[std::size_t(i * 9)] = true;
    ResampledStream stream(invalid, 4.0, 1);
    REQUIRE(stream.epoch_size() == 1000);
    std::map<int, int> seen;
    for (int i : stream.take(1000)) ++seen[i];
    for (int i = 0; i < 900; ++i) CHECK(seen[i] == (invalid[std::size_t(i)] ? 2 : 1));
  }

  TEST_CASE("fractional repeat counts") {
    std::vector<bool> invalid(800, false);
    for (int i = 0; i < 100; ++i) invalid[std::size_t(i)] = true;
    ResampledStream stream(invalid, 4.0, 2);
    REQUIRE(stream.epoch_size() == 700 + 175);
    std::map<int, int> seen;
    for (int i : stream.take(875)) ++seen[i];
    int minority = 0;
    for (int i = 0; i < 100; ++i) {
      CHECK(seen[i] >= 1);
      CHECK(seen[i] <= 2);
      minority += seen[i];
    }
    CHECK(minority == 175);
  }

  TEST_CASE("matching ratio is a plain shuffle") {
    std::vector<bool> invalid(500, false);
    for (int i = 0; i < 100; ++i) invalid[std::size_t(i * 5)] = true;
    ResampledStream stream(invalid, 4.0, 3);
    auto first = stream.take(500);
    std::vector<int> sorted = first;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 500; ++i) CHECK(sorted[std::size_t(i)] == i);
    std::vector<int> identity(500);
    for (int i = 0; i < 500; ++i) identity[std::size_t(i)] = i;
    CHECK(first != identity);
  }

  TEST_CASE("resampling needs both classes") {
    CHECK_THROWS_AS(ResampledStream(std::vector<bool>(10, false), 4.0, 0), DataError);
    CHECK_THROWS_AS(ResampledStream(std::vector<bool>(10, true), 4.0, 0), DataError);
  }

  TEST_CASE("reference training schedule") {
    const auto c = full_scale_detector_config();
    CHECK(c.batch_size == 1024);
    CHECK(c.total_steps == 15000);
    CHECK(c.initial_lr == 6e-4);
    CHECK(c.reduced_lr == 6e-5);
    CHECK(c.lr_drop_step == 5500);
    CHECK_NOTHROW(c.validate());
  }

  TEST_CASE("config validation") {
    DetectorConfig cfg = small_config();
    cfg.height = 0;
    CHECK_THROWS_AS(cfg.validate(), ContractViolation);
    CHECK_THROWS_AS(DetectorModel{cfg}, ContractViolation);
  }
}
