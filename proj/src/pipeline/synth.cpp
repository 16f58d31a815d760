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

#include "clay/pipeline/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>

#include "clay/error.hpp"

namespace clay::pipeline::synth {

namespace {

using Rng = std::mt19937_64;
using Rgb = std::array<int, 3>;

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
bool chance(Rng& rng, double p) { return uniform01(rng) < p; }
template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[std::size_t(uniform(rng, 0, int(v.size()) - 1))];
}

const std::vector<Rgb> kAccents = {{33, 150, 243}, {233, 30, 99}, {76, 175, 80},  {255, 87, 34},
                                   {156, 39, 176}, {0, 150, 136}, {63, 81, 181}, {121, 85, 72}};

class Canvas {
 public:
  explicit Canvas(Screen& s) : s_(s) {}

  BoundingBox raster(const BoundingBox& b) const {
    BoundingBox r = s_.to_raster(b);
    if (r.width() <= 0 || r.height() <= 0) return {0, 0, 0, 0};
    return r;
  }
  void set(int x, int y, const Rgb& c) {
    if (x < 0 || y < 0 || x >= s_.screenshot.width || y >= s_.screenshot.height) return;
    s_.screenshot.set(x, y, std::uint8_t(std::clamp(c[0], 0, 255)), std::uint8_t(std::clamp(c[1], 0, 255)),
                      std::uint8_t(std::clamp(c[2], 0, 255)));
  }
  void fill(const BoundingBox& r, const Rgb& c) {
    for (int y = r.top; y < r.bottom; ++y)
      for (int x = r.left; x < r.right; ++x) set(x, y, c);
  }
  void frame(const BoundingBox& r, const Rgb& c) {
    for (int y = r.top; y < r.bottom; ++y)
      for (int x = r.left; x < r.right; ++x)
        if (x == r.left || y == r.top || x == r.right - 1 || y == r.bottom - 1) set(x, y, c);
  }
  void disc(const BoundingBox& r, const Rgb& c, bool ring) {
    const double cx = (r.left + r.right) / 2.0, cy = (r.top + r.bottom) / 2.0;
    const double rad = std::min(r.width(), r.height()) / 2.0;
    for (int y = r.top; y < r.bottom; ++y)
      for (int x = r.left; x < r.right; ++x) {
        const double d = std::hypot(x + 0.5 - cx, y + 0.5 - cy);
        if (d <= rad && (!ring || d >= rad - 1.0)) set(x, y, c);
      }
  }

 private:
  Screen& s_;
};

struct Builder {
  Rng rng;
  const SynthOptions& opts;
  Screen screen;
  Canvas canvas;
  std::string package;
  Rgb accent;
  Rgb panel;

  Builder(std::uint64_t seed, const SynthOptions& o) : rng(seed), opts(o), canvas(screen) {}
  Builder(const Builder&) = delete;
  Builder& operator=(const Builder&) = delete;

  std::string rid(const std::string& name) {
    return package + ":id/" + name;
  }

  Node node(const std::string& cls, const BoundingBox& b, ObjectType label, const std::string& id = {}) {
    Node n;
    n.android_class = cls;
    n.bounds = b;
    n.label = label;
    if (!id.empty() && chance(rng, 0.8)) n.resource_id = rid(id);
    return n;
  }

  // Leaf drawings. Every leaf differs from its surroundings in well over 1%
  // of its pixels so that the blank rule never fires on valid objects.
  void draw_text(const BoundingBox& b, const Rgb& ink) {
    const BoundingBox r = canvas.raster(b);
    const int lines = std::max(1, std::min(2, r.height() / 3));
    for (int i = 0; i < lines; ++i) {
      const int y = r.top + (i + 1) * r.height() / (lines + 1);
      const int len = std::max(2, int(r.width() * (0.5 + 0.5 * uniform01(rng))));
      canvas.fill({r.left, y, r.left + len, y + 1}, ink);
    }
  }
  void draw_button(const BoundingBox& b) {
    const BoundingBox r = canvas.raster(b);
    canvas.fill(r, accent);
    const int y = (r.top + r.bottom) / 2;
    canvas.fill({r.left + r.width() / 4, y, r.right - r.width() / 4, y + 1}, {255, 255, 255});
  }
  void draw_image(const BoundingBox& b) {
    const BoundingBox r = canvas.raster(b);
    const int ia = uniform(rng, 0, int(kAccents.size()) - 1);
    const int ic = (ia + uniform(rng, 1, int(kAccents.size()) - 1)) % int(kAccents.size());
    const Rgb a = kAccents[std::size_t(ia)], c = kAccents[std::size_t(ic)];
    for (int y = r.top; y < r.bottom; ++y)
      for (int x = r.left; x < r.right; ++x) {
        const double t = uniform01(rng);
        canvas.set(x, y, {int(a[0] * t + c[0] * (1 - t)), int(a[1] * t + c[1] * (1 - t)), int(a[2] * t + c[2] * (1 - t))});
      }
  }
  void draw_glyph(const BoundingBox& b, const Rgb& ink) {
    const BoundingBox r = canvas.raster(b);
    switch (uniform(rng, 0, 2)) {
      case 0:
        canvas.disc(r, ink, true);
        break;
      case 1: {
        const int cx = (r.left + r.right) / 2, cy = (r.top + r.bottom) / 2;
        canvas.fill({r.left, cy, r.right, cy + 1}, ink);
        canvas.fill({cx, r.top, cx + 1, r.bottom}, ink);
        break;
      }
      default:
        canvas.frame(r, ink);
        canvas.fill({r.left + 1, (r.top + r.bottom) / 2, r.right - 1, (r.top + r.bottom) / 2 + 1}, ink);
        break;
    }
  }
  void draw_checkbox(const BoundingBox& b) {
    const BoundingBox r = canvas.raster(b);
    canvas.frame(r, {60, 60, 60});
    if (chance(rng, 0.5)) canvas.fill({r.left + 2, r.top + 2, r.right - 2, r.bottom - 2}, accent);
  }
  void draw_radio(const BoundingBox& b) {
    const BoundingBox r = canvas.raster(b);
    canvas.disc(r, {60, 60, 60}, true);
    if (chance(rng, 0.5)) canvas.disc({r.left + 2, r.top + 2, r.right - 2, r.bottom - 2}, accent, false);
  }
  void draw_switch(const BoundingBox& b) {
    const BoundingBox r = canvas.raster(b);
    const int h = std::max(1, r.height() / 2);
    const int y = r.top + (r.height() - h) / 2;
    canvas.fill({r.left, y, r.right, y + h}, {170, 170, 170});
    const int k = r.height();
    const bool on = chance(rng, 0.5);
    const int x = on ? r.right - k : r.left;
    canvas.disc({x, r.top, x + k, r.bottom}, on ? accent : Rgb{90, 90, 90}, false);
  }
  void draw_input(const BoundingBox& b) {
    const BoundingBox r = canvas.raster(b);
    canvas.fill({r.left, r.bottom - 1, r.right, r.bottom}, accent);
    const int y = (r.top + r.bottom) / 2;
    canvas.fill({r.left, y, r.left + std::max(2, r.width() / 2), y + 1}, {150, 150, 150});
  }
  void draw_slider(const BoundingBox& b) {
    const BoundingBox r = canvas.raster(b);
    const int y = (r.top + r.bottom) / 2;
    canvas.fill({r.left, y, r.right, y + 1}, accent);
    const int k = std::max(2, r.height() - 1);
    const int x = r.left + int((r.width() - k) * uniform01(rng));
    canvas.disc({x, y - k / 2, x + k, y - k / 2 + k}, accent, false);
  }
  void draw_progress(const BoundingBox& b) {
    const BoundingBox r = canvas.raster(b);
    canvas.fill(r, {200, 200, 200});
    canvas.fill({r.left, r.top, r.left + std::max(1, int(r.width() * (0.2 + 0.6 * uniform01(rng)))), r.bottom}, accent);
  }
  void draw_ad(const BoundingBox& b) {
    const BoundingBox r = canvas.raster(b);
    canvas.fill(r, {250, 214, 60});
    for (int y = r.top + 1; y < r.bottom - 1; y += 2)
      canvas.fill({r.left + 1, y, r.left + std::max(2, int(r.width() * (0.3 + 0.6 * uniform01(rng)))), y + 1},
                  {60, 50, 20});
  }

  Node toolbar(int height) {
    const int w = opts.screen_width;
    Node bar = node("android.support.v7.widget.Toolbar", {0, 0, w, height}, ObjectType::TOOLBAR, "toolbar");
    canvas.fill(canvas.raster(bar.bounds), accent);
    const int pad = 48;
    const int icon = height - 2 * pad;
    Node up = node("android.widget.ImageButton", {32, pad, 32 + icon, pad + icon}, ObjectType::BUTTON);
    up.content_desc = "Navigate up";
    up.clickable = true;
    draw_glyph(up.bounds, {255, 255, 255});
    Node title = node("android.widget.TextView", {64 + icon, pad, uniform(rng, 640, 1100), height - pad},
                      ObjectType::TEXT, "title");
    draw_text(title.bounds, {255, 255, 255});
    bar.children = {std::move(up), std::move(title)};
    return bar;
  }

  Node list_section(int left, int top, int right, int rows, int row_h) {
    Node list = node("android.support.v7.widget.RecyclerView", {left, top, right, top + rows * row_h},
                     ObjectType::CONTAINER, "list");
    canvas.fill(canvas.raster(list.bounds), panel);
    const bool photos = chance(rng, 0.5);
    const int trailing = uniform(rng, 0, 2);
    for (int i = 0; i < rows; ++i) {
      const int y0 = top + i * row_h;
      Node row = node(chance(rng, 0.5) ? "android.widget.LinearLayout" : "android.widget.RelativeLayout",
                      {left, y0, right, y0 + row_h}, ObjectType::LIST_ITEM, "row");
      row.clickable = true;
      const BoundingBox rr = canvas.raster(row.bounds);
      canvas.fill({rr.left, rr.bottom - 1, rr.right, rr.bottom}, {200, 200, 200});
      const int pad = 32, sz = row_h - 2 * pad - 16;
      BoundingBox lead{left + pad, y0 + pad, left + pad + sz, y0 + pad + sz};
      if (photos) {
        row.children.push_back(node("android.widget.ImageView", lead, ObjectType::IMAGE, "thumbnail"));
        draw_image(lead);
      } else {
        row.children.push_back(node("android.widget.ImageView", lead, ObjectType::PICTOGRAM, "icon"));
        draw_glyph(lead, {70, 70, 70});
      }
      const int tx = lead.right + 48;
      const int tr = right - 240;
      BoundingBox txt{tx, y0 + pad, tr, y0 + row_h - pad - 16};
      row.children.push_back(node("android.widget.TextView", txt, ObjectType::TEXT, "label"));
      draw_text(txt, {40, 40, 40});
      BoundingBox tail{right - 160, y0 + row_h / 2 - 48, right - 64, y0 + row_h / 2 + 48};
      if (trailing == 1) {
        row.children.push_back(node("android.widget.CheckBox", tail, ObjectType::CHECKBOX, "check"));
        draw_checkbox(tail);
      } else if (trailing == 2) {
        tail.left -= 64;
        row.children.push_back(node("android.widget.Switch", tail, ObjectType::SWITCH, "toggle"));
        draw_switch(tail);
      }
      list.children.push_back(std::move(row));
    }
    return list;
  }

  static constexpr int kFormItem = 160;

  Node form_section(int left, int top, int right, int items) {
    const int item_h = kFormItem;
    Node form = node(chance(rng, 0.5) ? "android.widget.LinearLayout" : "android.widget.ScrollView",
                     {left, top, right, top + items * item_h}, ObjectType::CONTAINER, "form");
    canvas.fill(canvas.raster(form.bounds), panel);
    for (int i = 0; i < items; ++i) {
      const int y0 = top + i * item_h + 32;
      const int y1 = y0 + item_h - 64;
      const int kind = uniform(rng, 0, 6);
      BoundingBox wide{left + 48, y0, right - 48, y1};
      BoundingBox square{left + 48, y0, left + 48 + (y1 - y0), y1};
      switch (kind) {
        case 0:
          form.children.push_back(node("android.widget.EditText", wide, ObjectType::TEXT_INPUT, "input"));
          draw_input(wide);
          break;
        case 1: {
          BoundingBox b{left + 48, y0, left + uniform(rng, 400, 800), y1};
          Node n = node("android.widget.Button", b, ObjectType::BUTTON, "submit");
          n.clickable = true;
          form.children.push_back(std::move(n));
          draw_button(b);
          break;
        }
        case 2:
          form.children.push_back(node("android.widget.CheckBox", square, ObjectType::CHECKBOX, "agree"));
          draw_checkbox(square);
          break;
        case 3:
          form.children.push_back(node("android.widget.RadioButton", square, ObjectType::RADIO_BUTTON, "option"));
          draw_radio(square);
          break;
        case 4: {
          BoundingBox b{left + 48, y0, left + 48 + 2 * (y1 - y0), y1};
          form.children.push_back(node("android.widget.Switch", b, ObjectType::SWITCH, "toggle"));
          draw_switch(b);
          break;
        }
        case 5:
          form.children.push_back(node("android.widget.SeekBar", wide, ObjectType::SLIDER, "volume"));
          draw_slider(wide);
          break;
        default: {
          BoundingBox b{left + 48, y0 + 16, right - 48, y1 - 16};
          form.children.push_back(node("android.widget.ProgressBar", b, ObjectType::PROGRESS_BAR, "progress"));
          draw_progress(b);
          break;
        }
      }
    }
    return form;
  }

  Node card_section(int left, int top, int right, int h) {
    Node card = node("android.support.v7.widget.CardView", {left, top, right, top + h}, ObjectType::CARD_VIEW, "card");
    const BoundingBox cr = canvas.raster(card.bounds);
    canvas.fill(cr, {255, 255, 255});
    canvas.frame(cr, {180, 180, 180});
    BoundingBox img{left + 32, top + 32, right - 32, top + h - 192};
    card.children.push_back(node("android.widget.ImageView", img, ObjectType::IMAGE, "cover"));
    draw_image(img);
    BoundingBox caption{left + 32, top + h - 160, right - uniform(rng, 100, 500), top + h - 48};
    card.children.push_back(node("android.widget.TextView", caption, ObjectType::TEXT, "caption"));
    draw_text(caption, {40, 40, 40});
    return card;
  }

  Node ad_section(int left, int top, int right, int h) {
    Node ad = node("com.google.android.gms.ads.AdView", {left, top, right, top + h}, ObjectType::ADVERTISEMENT, "banner");
    draw_ad(ad.bounds);
    return ad;
  }

  Node nav_bar(int top) {
    const int w = opts.screen_width, h = opts.screen_height;
    Node bar = node("android.support.design.widget.BottomNavigationView", {0, top, w, h}, ObjectType::NAVIGATION_BAR,
                    "bottom_nav");
    canvas.fill(canvas.raster(bar.bounds), {250, 250, 250});
    const int items = uniform(rng, 3, 5);
    const int slot = w / items;
    const int icon = std::min(h - top - 64, 112);
    for (int i = 0; i < items; ++i) {
      const int cx = i * slot + slot / 2;
      BoundingBox b{cx - icon / 2, top + (h - top - icon) / 2, cx + icon / 2, top + (h - top - icon) / 2 + icon};
      bar.children.push_back(node("android.widget.ImageView", b, ObjectType::PICTOGRAM, "nav_icon"));
      draw_glyph(b, accent);
    }
    return bar;
  }

  void background() {
    const int bw = opts.raster_width, bh = opts.raster_height;
    const Rgb base = {uniform(rng, 60, 120), uniform(rng, 60, 120), uniform(rng, 60, 120)};
    const double gx = uniform(rng, -30, 30), gy = uniform(rng, -30, 30);
    for (int y = 0; y < bh; ++y)
      for (int x = 0; x < bw; ++x) {
        const int d = int(gx * x / bw + gy * y / bh);
        canvas.set(x, y, {base[0] + d + uniform(rng, -8, 8), base[1] + d + uniform(rng, -8, 8),
                          base[2] + d + uniform(rng, -8, 8)});
      }
  }
};

const std::vector<std::string> kDecoyClasses = {"android.widget.TextView", "android.widget.ImageView",
                                                 "android.widget.Button", "android.view.View"};

}  // namespace

Screen generate_screen(std::uint64_t seed, int index, const SynthOptions& opts) {
  if (opts.screen_width <= 0 || opts.screen_height <= 0 || opts.raster_width <= 0 || opts.raster_height <= 0)
    throw ContractViolation("synth: screen and raster dims must be positive");
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(index)};
  std::uint64_t mixed;
  {
    std::array<std::uint32_t, 2> w{};
    seq.generate(w.begin(), w.end());
    mixed = (std::uint64_t(w[0]) << 32) | w[1];
  }
  Builder b(mixed, opts);
  char id[32];
  std::snprintf(id, sizeof(id), "synth_%05d", index);
  b.screen.source_id = id;
  b.package = "com.synth.app" + std::to_string(index % std::max(1, opts.packages));
  b.screen.screenshot = Image(opts.raster_width, opts.raster_height);
  auto& h = b.screen.hierarchy;
  h.screen_width = opts.screen_width;
  h.screen_height = opts.screen_height;
  h.package_name = b.package;
  h.activity_name = b.package + "/.MainActivity";
  b.accent = pick(b.rng, kAccents);
  const int tint = uniform(b.rng, 236, 250);
  b.panel = {tint, tint, std::min(255, tint + 4)};

  const int W = opts.screen_width, H = opts.screen_height;
  h.root = b.node("android.widget.FrameLayout", {0, 0, W, H}, ObjectType::CONTAINER);
  h.root.resource_id.reset();
  b.background();

  const int bar_h = pick(b.rng, std::vector<int>{192, 224, 256});
  const int nav_h = pick(b.rng, std::vector<int>{160, 192});
  const int nav_top = H - nav_h;
  std::vector<Node> content;
  content.push_back(b.toolbar(bar_h));
  const int margin = 48, gap = 48;
  int y = bar_h + gap;
  const int limit = nav_top - 480;  // leaves a background band above the nav bar
  for (int attempt = 0; attempt < 6; ++attempt) {
    // Sizes are drawn first so that a section that would not fit is skipped
    // before anything is painted.
    const int kind = uniform(b.rng, 0, 9);
    int count = 0, size = 0;
    if (kind < 4) {
      count = uniform(b.rng, 2, 4);
      size = pick(b.rng, std::vector<int>{176, 192, 224});
    } else if (kind < 7) {
      count = uniform(b.rng, 2, 4);
      size = Builder::kFormItem;
    } else if (kind < 9) {
      count = 1;
      size = uniform(b.rng, 25, 40) * 16;
    } else {
      count = 1;
      size = pick(b.rng, std::vector<int>{160, 192, 240});
    }
    if (y + count * size > limit) continue;
    if (kind < 4) content.push_back(b.list_section(margin, y, W - margin, count, size));
    else if (kind < 7) content.push_back(b.form_section(margin, y, W - margin, count));
    else if (kind < 9) content.push_back(b.card_section(margin, y, W - margin, size));
    else content.push_back(b.ad_section(margin, y, W - margin, size));
    y += count * size + gap;
  }
  content.push_back(b.nav_bar(nav_top));

  // Planted invalid nodes go first under the root so that no valid object is
  // painted below them.
  std::vector<const Node*> leaves;
  for (const auto& c : content)
    for (const Node* n : preorder(c))
      if (n->is_leaf()) leaves.push_back(n);
  std::poisson_distribution<int> count(opts.invalid_per_screen);
  const int planted = std::min(count(b.rng), 4);
  std::vector<Node> invalid;
  const int band_top = y, band_bottom = nav_top;
  for (int i = 0; i < planted; ++i) {
    Node n;
    n.android_class = pick(b.rng, kDecoyClasses);
    n.label = ObjectType::INVALID;
    const double kind = uniform01(b.rng);
    if (kind < 0.6 && band_bottom - band_top >= 256) {
      // Over the textured background.
      const int w = uniform(b.rng, 10, 50) * 16, ht = uniform(b.rng, 6, std::min(25, (band_bottom - band_top) / 16 - 2)) * 16;
      const int x0 = uniform(b.rng, 0, (W - w) / 16) * 16;
      const int y0 = uniform(b.rng, band_top / 16, (band_bottom - ht) / 16) * 16;
      n.bounds = {x0, y0, x0 + w, y0 + ht};
    } else if (kind < 0.9 && !leaves.empty()) {
      // A copy of a real object's box moved mostly off its pixels.
      const Node* src = leaves[std::size_t(uniform(b.rng, 0, int(leaves.size()) - 1))];
      BoundingBox box = src->bounds;
      n.android_class = src->android_class;
      if (chance(b.rng, 0.5)) {
        const int dx = std::max(1, int(box.width() * (0.6 + 0.4 * uniform01(b.rng))));
        const int s = box.right + dx <= W ? dx : -dx;
        box.left += s, box.right += s;
      } else {
        const int dy = std::max(1, int(box.height() * (0.6 + 0.4 * uniform01(b.rng))));
        const int s = box.bottom + dy <= H ? dy : -dy;
        box.top += s, box.bottom += s;
      }
      n.bounds = intersect(box, h.screen_rect());
      if (n.bounds.width() <= 0 || n.bounds.height() <= 0) continue;
    } else {
      // Hidden by its attributes.
      const int x0 = uniform(b.rng, 0, 60) * 16, y0 = uniform(b.rng, 0, 120) * 16;
      n.bounds = {x0, y0, x0 + 320, y0 + 160};
      n.visibility = Visibility::gone;
    }
    if (chance(b.rng, 0.5)) n.resource_id = b.rid("view_" + std::to_string(i));
    invalid.push_back(std::move(n));
  }
  for (auto& n : invalid) h.root.children.push_back(std::move(n));
  for (auto& n : content) h.root.children.push_back(std::move(n));
  assign_preorder_ids(h.root);
  return std::move(b.screen);
}

std::vector<Screen> generate_corpus(int count, std::uint64_t seed, const SynthOptions& opts) {
  std::vector<Screen> out;
  out.reserve(std::size_t(std::max(0, count)));
  for (int i = 0; i < count; ++i) out.push_back(generate_screen(seed, i, opts));
  return out;
}

void write_corpus(const std::filesystem::path& dir, const std::vector<Screen>& screens) {
  std::filesystem::create_directories(dir);
  for (const auto& s : screens) {
    std::ofstream out(dir / (s.source_id + ".json"));
    if (!out) throw DataError("cannot write " + (dir / (s.source_id + ".json")).string());
    out << serialize_hierarchy(s.hierarchy).dump(1) << '\n';
    write_png(dir / (s.source_id + ".png"), s.screenshot);
  }
}

}  // namespace clay::pipeline::synth
