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

#include "clay/pipeline/overlay.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <vector>

namespace clay::pipeline {

namespace {

constexpr std::uint8_t kLetters[26][7] = {
    {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}, {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},
    {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}, {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E},
    {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}, {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},
    {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}, {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},
    {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}, {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},
    {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}, {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},
    {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}, {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11},
    {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},
    {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}, {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},
    {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}, {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},
    {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},
    {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}, {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},
    {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F},
};

constexpr std::uint8_t kDigits[10][7] = {
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}, {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},
    {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}, {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}, {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}, {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},
};

constexpr int kGlyphAdvance = 6;
constexpr int kRowHeight = 10;
constexpr int kMargin = 4;
constexpr int kSwatch = 7;
constexpr Rgb kLegendBackground = {255, 255, 255};
constexpr Rgb kInk = {0, 0, 0};
constexpr Rgb kRemoved = {128, 128, 128};
constexpr std::string_view kUnknown = "UNKNOWN";
constexpr std::string_view kRemovedLabel = "REMOVED";
constexpr std::string_view kTitle = "LEGEND";

void put(Image& img, int x, int y, const Rgb& c) {
  if (x >= 0 && y >= 0 && x < img.width && y < img.height) img.set(x, y, c[0], c[1], c[2]);
}

void fill(Image& img, const BoundingBox& r, const Rgb& c) {
  for (int y = r.top; y < r.bottom; ++y)
    for (int x = r.left; x < r.right; ++x) put(img, x, y, c);
}

// Outline drawn inside `r`. With `dashed`, runs of 3 pixels on, 3 off along
// each edge.
void outline(Image& img, const BoundingBox& r, int thickness, const Rgb& c, bool dashed) {
  const int t = std::max(1, std::min({thickness, r.width(), r.height()}));
  for (int y = r.top; y < r.bottom; ++y) {
    for (int x = r.left; x < r.right; ++x) {
      const bool edge = x < r.left + t || x >= r.right - t || y < r.top + t || y >= r.bottom - t;
      if (!edge) continue;
      if (dashed && ((x - r.left) / 3 + (y - r.top) / 3) % 2 == 1) continue;
      put(img, x, y, c);
    }
  }
}

void text(Image& img, int x, int y, std::string_view s, const Rgb& c) {
  for (char ch : s) {
    const auto rows = glyph(ch);
    for (int gy = 0; gy < 7; ++gy)
      for (int gx = 0; gx < 5; ++gx)
        if (rows[std::size_t(gy)] & (0x10 >> gx)) put(img, x + gx, y + gy, c);
    x += kGlyphAdvance;
  }
}

struct Entry {
  std::string label;
  Rgb color;
};

std::vector<Entry> legend_entries(const CleanedScreen& c, const OverlayOptions& opts) {
  std::vector<bool> present(kObjectTypeCount, false);
  bool unknown = false;
  for (const auto& n : c.nodes) {
    if (n.type) present[std::size_t(index_of(*n.type))] = true;
    else unknown = true;
  }
  std::vector<Entry> out;
  for (int i = 0; i < kObjectTypeCount; ++i)
    if (present[std::size_t(i)]) {
      const auto name = to_string(object_type_at(i));
      out.push_back({std::string(name), type_color(name)});
    }
  if (unknown) out.push_back({std::string(kUnknown), type_color(kUnknown)});
  if (opts.draw_removed && (!c.report.removed.empty() || !c.model_removed.empty()))
    out.push_back({std::string(kRemovedLabel), kRemoved});
  return out;
}

}  // namespace

std::array<std::uint8_t, 7> glyph(char ch) {
  std::array<std::uint8_t, 7> g{};
  const unsigned char u = static_cast<unsigned char>(std::toupper(static_cast<unsigned char>(ch)));
  if (u >= 'A' && u <= 'Z') std::copy(std::begin(kLetters[u - 'A']), std::end(kLetters[u - 'A']), g.begin());
  else if (u >= '0' && u <= '9') std::copy(std::begin(kDigits[u - '0']), std::end(kDigits[u - '0']), g.begin());
  else if (u == '_') g[6] = 0x1F;
  return g;
}

Rgb type_color(std::string_view name) {
  std::uint64_t h = 14695981039346656037ULL;
  for (char ch : name) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ULL;
  }
  // HSV with fixed saturation and value; hue from the hash.
  const double hue = double(h % 360) / 60.0;
  const double s = 0.85, v = 0.95;
  const double chroma = v * s;
  const double x = chroma * (1.0 - std::abs(std::fmod(hue, 2.0) - 1.0));
  const double m = v - chroma;
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hue)) {
    case 0: r = chroma, g = x; break;
    case 1: r = x, g = chroma; break;
    case 2: g = chroma, b = x; break;
    case 3: g = x, b = chroma; break;
    case 4: r = x, b = chroma; break;
    default: r = chroma, b = x; break;
  }
  auto q = [&](double c) { return static_cast<std::uint8_t>(std::lround((c + m) * 255.0)); };
  return {q(r), q(g), q(b)};
}

int legend_width(const CleanedScreen& c, const OverlayOptions& opts) {
  std::size_t longest = kTitle.size();
  for (const auto& e : legend_entries(c, opts)) longest = std::max(longest, e.label.size());
  return 2 * kMargin + kSwatch + kMargin + int(longest) * kGlyphAdvance;
}

Image render_overlay(const Screen& s, const CleanedScreen& c, const OverlayOptions& opts) {
  const auto entries = legend_entries(c, opts);
  const int lw = legend_width(c, opts);
  const int legend_h = kMargin + kRowHeight * int(entries.size() + 1) + kMargin;
  const int w = s.screenshot.width + lw;
  const int h = std::max(s.screenshot.height, legend_h);
  Image img(w, h, 0);
  fill(img, {0, 0, w, h}, kLegendBackground);
  for (int y = 0; y < s.screenshot.height; ++y)
    for (int x = 0; x < s.screenshot.width; ++x)
      img.set(x, y, s.screenshot.at(x, y, 0), s.screenshot.at(x, y, 1), s.screenshot.at(x, y, 2));

  if (opts.draw_removed) {
    std::vector<int> gone;
    for (const auto& r : c.report.removed) gone.push_back(r.node_id);
    gone.insert(gone.end(), c.model_removed.begin(), c.model_removed.end());
    for (const Node* n : preorder(s.hierarchy))
      if (std::find(gone.begin(), gone.end(), n->node_id) != gone.end()) {
        const BoundingBox r = s.to_raster(n->bounds);
        if (r.width() > 0 && r.height() > 0) outline(img, r, opts.thickness, kRemoved, true);
      }
  }
  for (const auto& n : c.nodes) {
    const BoundingBox r = s.to_raster(n.bounds);
    if (r.width() <= 0 || r.height() <= 0) continue;
    outline(img, r, opts.thickness, type_color(n.type ? to_string(*n.type) : kUnknown), false);
  }

  const int x0 = s.screenshot.width + kMargin;
  text(img, x0, kMargin, kTitle, kInk);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const int y = kMargin + kRowHeight * int(i + 1);
    fill(img, {x0, y, x0 + kSwatch, y + kSwatch}, entries[i].color);
    text(img, x0 + kSwatch + kMargin, y, entries[i].label, kInk);
  }
  return img;
}

}  // namespace clay::pipeline
