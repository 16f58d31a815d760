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

#include "clay/features/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "clay/error.hpp"

namespace clay::features {

void FeatureConfig::validate() const {
  if (max_words_per_field <= 0 || text_dim <= 0 || position_dim <= 0 || image_dim <= 0 || sinusoid_frequencies <= 0 ||
      crop_size < 8 || vocab_size < TokenizerModel::kFirstMergedId)
    throw ContractViolation("feature config: dimensions must be positive, crop_size >= 8, vocab_size >= 257");
}

void to_json(nlohmann::json& j, const FeatureConfig& c) {
  j = {{"max_words_per_field", c.max_words_per_field},
       {"text_dim", c.text_dim},
       {"position_dim", c.position_dim},
       {"image_dim", c.image_dim},
       {"sinusoid_frequencies", c.sinusoid_frequencies},
       {"crop_size", c.crop_size},
       {"vocab_size", c.vocab_size}};
}

void from_json(const nlohmann::json& j, FeatureConfig& c) {
  c.max_words_per_field = j.value("max_words_per_field", c.max_words_per_field);
  c.text_dim = j.value("text_dim", c.text_dim);
  c.position_dim = j.value("position_dim", c.position_dim);
  c.image_dim = j.value("image_dim", c.image_dim);
  c.sinusoid_frequencies = j.value("sinusoid_frequencies", c.sinusoid_frequencies);
  c.crop_size = j.value("crop_size", c.crop_size);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
}

NodeText tokenize_node(const Node& n, const TokenizerModel& tok, int max_words) {
  NodeText t;
  t.fields[0] = tok.encode(n.android_class, max_words);
  if (n.content_desc) t.fields[1] = tok.encode(*n.content_desc, max_words);
  if (n.resource_id) t.fields[2] = tok.encode(*n.resource_id, max_words);
  return t;
}

std::array<double, 4> normalized_coords(const BoundingBox& b, int screen_width, int screen_height) {
  const std::array<double, 4> c = {double(b.left) / screen_width, double(b.right) / screen_width,
                                   double(b.top) / screen_height, double(b.bottom) / screen_height};
  for (double v : c)
    if (!(v >= -0.5 && v <= 1.5))
      throw ContractViolation("normalized coordinate " + std::to_string(v) + " outside [-0.5, 1.5]");
  return c;
}

Matrix sinusoid_features(double x, int frequencies) {
  Matrix f(1, 2 * frequencies);
  for (int k = 0; k < frequencies; ++k) {
    const double w = 2.0 * std::numbers::pi * std::ldexp(1.0, k) * x;
    f(0, 2 * k) = std::sin(w);
    f(0, 2 * k + 1) = std::cos(w);
  }
  return f;
}

Matrix crop_pixels(const Screen& s, const BoundingBox& box, int crop) {
  BoundingBox r = scale_box(box, s.scale_x(), s.scale_y());
  const BoundingBox img = s.screenshot.rect();
  if (box.empty() || r.right < 0 || r.bottom < 0 || r.left > img.right || r.top > img.bottom || img.empty())
    throw ContractViolation("crop_pixels: box maps to no raster pixel");
  // Boxes thinner than a raster pixel keep one pixel.
  r = intersect(r, img);
  if (r.right <= r.left) r = {std::min(r.left, img.right - 1), r.top, std::min(r.left, img.right - 1) + 1, r.bottom};
  if (r.bottom <= r.top) r = {r.left, std::min(r.top, img.bottom - 1), r.right, std::min(r.top, img.bottom - 1) + 1};
  return resize_bilinear<double>(s.screenshot, r, crop, crop);
}

NodeInputs concat(const std::vector<const NodeInputs*>& parts) {
  NodeInputs out;
  nn::Index rows = 0, crop_rows = 0;
  for (const auto* p : parts) {
    rows += p->coords.rows();
    crop_rows += p->crops.rows();
  }
  out.coords.resize(rows, 4);
  out.crops.resize(crop_rows, 3);
  nn::Index r = 0, cr = 0;
  for (const auto* p : parts) {
    out.text.insert(out.text.end(), p->text.begin(), p->text.end());
    out.coords.middleRows(r, p->coords.rows()) = p->coords;
    out.crops.middleRows(cr, p->crops.rows()) = p->crops;
    r += p->coords.rows();
    cr += p->crops.rows();
  }
  return out;
}

std::vector<int> semantic_labels(const std::vector<const Node*>& nodes) {
  std::vector<int> y;
  y.reserve(nodes.size());
  for (const Node* n : nodes) {
    if (!n->label) {
      y.push_back(-1);
      continue;
    }
    if (!is_semantic(*n->label))
      throw ContractViolation("node " + std::to_string(n->node_id) + " is labeled INVALID; type models take semantic labels only");
    y.push_back(index_of(*n->label));
  }
  return y;
}

NodeInputs node_inputs(const Screen& s, const std::vector<const Node*>& nodes, const TokenizerModel& tok,
                       const FeatureConfig& cfg, bool with_crops) {
  NodeInputs in;
  const auto n = static_cast<nn::Index>(nodes.size());
  in.coords.resize(n, 4);
  const int cc = cfg.crop_size * cfg.crop_size;
  if (with_crops) in.crops.resize(n * cc, 3);
  for (nn::Index i = 0; i < n; ++i) {
    const Node& node = *nodes[static_cast<std::size_t>(i)];
    in.text.push_back(tokenize_node(node, tok, cfg.max_words_per_field));
    const auto c = normalized_coords(node.bounds, s.hierarchy.screen_width, s.hierarchy.screen_height);
    for (int k = 0; k < 4; ++k) in.coords(i, k) = c[static_cast<std::size_t>(k)];
    if (with_crops) in.crops.middleRows(i * cc, cc) = crop_pixels(s, node.bounds, cfg.crop_size);
  }
  return in;
}

TextEmbedding::TextEmbedding(nn::ParameterSet& ps, const std::string& name, int vocab_size, int d, nn::Rng& rng,
                             int group)
    : dim(d) {
  table = &ps.add(name + "/table", vocab_size, d, group);
  nn::truncated_normal(*table, 1.0 / std::sqrt(double(d)), rng);
}

Var TextEmbedding::operator()(Tape& t, const std::vector<NodeText>& nodes) const {
  std::vector<int> ids, segment;
  for (std::size_t n = 0; n < nodes.size(); ++n)
    for (int f = 0; f < 3; ++f)
      for (int id : nodes[n].fields[static_cast<std::size_t>(f)]) {
        ids.push_back(id);
        segment.push_back(static_cast<int>(n) * 3 + f);
      }
  const auto segments = static_cast<nn::Index>(nodes.size()) * 3;
  Var pooled = ids.empty() ? t.constant(Matrix::Zero(segments, dim))
                           : nn::segment_max_rows(nn::gather_rows(t.param(*table), ids), segment, segments);
  return nn::reshape(pooled, static_cast<nn::Index>(nodes.size()), 3 * dim);
}

PositionEmbedding::PositionEmbedding(nn::ParameterSet& ps, const std::string& name, int k, int dim, nn::Rng& rng,
                                     int group)
    : frequencies(k) {
  static constexpr const char* kEdge[] = {"left", "right", "top", "bottom"};
  for (int e = 0; e < 4; ++e) dense[std::size_t(e)] = nn::Linear(ps, name + "/" + kEdge[e], 2 * k, dim, rng, group);
}

Var PositionEmbedding::operator()(Tape& t, const Matrix& coords) const {
  std::vector<Var> parts;
  for (int e = 0; e < 4; ++e) {
    Matrix f(coords.rows(), 2 * frequencies);
    for (nn::Index i = 0; i < coords.rows(); ++i) f.row(i) = sinusoid_features(coords(i, e), frequencies);
    parts.push_back(dense[std::size_t(e)](t, t.constant(std::move(f))));
  }
  return nn::concat_cols(parts);
}

CropEncoder::CropEncoder(nn::ParameterSet& ps, const std::string& name, int crop_size, int out_dim, nn::Rng& rng,
                         int group)
    : crop(crop_size) {
  const nn::ConvGeometry g{3, 2, 1};
  const int channels[] = {3, 8, 16, 32};
  int side = crop_size;
  for (int b = 0; b < 3; ++b) {
    conv[std::size_t(b)] = nn::Conv2d(ps, name + "/conv" + std::to_string(b), channels[b], channels[b + 1], g, rng, group);
    side = g.out_size(side);
  }
  out = nn::Linear(ps, name + "/dense", nn::Index(side) * side * 32, out_dim, rng, group);
}

Var CropEncoder::operator()(Tape& t, const Matrix& crops, int count) const {
  if (crops.rows() != nn::Index(count) * crop * crop || crops.cols() != 3)
    throw ContractViolation("crop encoder: expected [" + std::to_string(count * crop * crop) + "x3] pixels, got " +
                            nn::shape_str(crops));
  nn::FeatureMap<double> x{t.constant(crops), {count, crop, crop, 3}};
  for (const auto& c : conv) {
    auto y = c(t, x);
    x = {nn::relu(y.data), y.shape};
  }
  return out(t, nn::flatten(x));
}

}  // namespace clay::features
