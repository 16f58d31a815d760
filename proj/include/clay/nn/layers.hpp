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

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "clay/nn/ops.hpp"

namespace clay::nn {

using Rng = std::mt19937_64;

/// Fills `p` with a normal(0, std) sample truncated at two standard deviations.
inline void truncated_normal(Parameter& p, double std, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  for (Index i = 0; i < p.value.size(); ++i) {
    double z;
    do {
      z = dist(rng);
    } while (std::abs(z) > 2.0);
    p.value.data()[i] = z * std;
  }
}

/// y = x W + b. `init_scale` multiplies the default 1/sqrt(fan_in) init std.
struct Linear {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;

  Linear() = default;
  Linear(ParameterSet& ps, const std::string& name, Index in, Index out, Rng& rng, int group = 0,
         double init_scale = 1.0) {
    weight = &ps.add(name + "/w", in, out, group);
    bias = &ps.add(name + "/b", 1, out, group);
    truncated_normal(*weight, init_scale / std::sqrt(double(in)), rng);
  }
  Index in_dim() const { return weight->value.rows(); }
  Index out_dim() const { return weight->value.cols(); }

  Var operator()(Tape& t, const Var& x) const { return add_bias(matmul(x, t.param(*weight)), t.param(*bias)); }
};

struct LayerNorm {
  Parameter* gain = nullptr;
  Parameter* bias = nullptr;

  LayerNorm() = default;
  LayerNorm(ParameterSet& ps, const std::string& name, Index dim, int group = 0) {
    gain = &ps.add(name + "/gain", 1, dim, group);
    bias = &ps.add(name + "/bias", 1, dim, group);
    gain->value.setOnes();
  }
  Var operator()(Tape& t, const Var& x) const { return layer_norm(x, t.param(*gain), t.param(*bias)); }
};

struct Conv2d {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;
  ConvGeometry geom;

  Conv2d() = default;
  Conv2d(ParameterSet& ps, const std::string& name, int in_channels, int out_channels, ConvGeometry g, Rng& rng,
         int group = 0)
      : geom(g) {
    const Index fan_in = Index(g.kernel) * g.kernel * in_channels;
    weight = &ps.add(name + "/w", fan_in, out_channels, group);
    bias = &ps.add(name + "/b", 1, out_channels, group);
    truncated_normal(*weight, 1.0 / std::sqrt(double(fan_in)), rng);
  }
  FeatureMap<double> operator()(Tape& t, const FeatureMap<double>& x) const {
    return conv2d(x, t.param(*weight), t.param(*bias), geom);
  }
};

/// Two dense layers with a ReLU between them.
struct Mlp {
  Linear up, down;

  Mlp() = default;
  Mlp(ParameterSet& ps, const std::string& name, Index dim, Index hidden, Rng& rng, int group = 0)
      : up(ps, name + "/up", dim, hidden, rng, group), down(ps, name + "/down", hidden, dim, rng, group) {}
  Var operator()(Tape& t, const Var& x) const { return down(t, relu(up(t, x))); }
};

/// Scaled dot-product attention with `heads` heads of width dim/heads.
struct MultiHeadAttention {
  Linear q, k, v, o;
  int heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterSet& ps, const std::string& name, Index dim, int num_heads, Rng& rng, int group = 0)
      : q(ps, name + "/q", dim, dim, rng, group),
        k(ps, name + "/k", dim, dim, rng, group),
        v(ps, name + "/v", dim, dim, rng, group),
        o(ps, name + "/o", dim, dim, rng, group),
        heads(num_heads) {
    if (num_heads <= 0 || dim % num_heads != 0)
      throw ContractViolation("attention: model dim " + std::to_string(dim) + " not divisible by " +
                              std::to_string(num_heads) + " heads");
  }

  /// queries [n x dim], keys/values [m x dim]. `weights`, when given, receives
  /// one [n x m] attention matrix per head.
  Var operator()(Tape& t, const Var& queries, const Var& keys_values, const std::vector<std::uint8_t>& key_mask = {},
                 std::vector<Matrix>* weights = nullptr) const {
    const Index dim = q.out_dim();
    if (queries.cols() != q.in_dim() || keys_values.cols() != k.in_dim())
      throw ContractViolation("attention: inputs " + shape_str(queries.value()) + " / " +
                              shape_str(keys_values.value()) + " do not match model dim " + std::to_string(dim));
    const Index hd = dim / heads;
    const double inv = 1.0 / std::sqrt(double(hd));
    Var qp = q(t, queries), kp = k(t, keys_values), vp = v(t, keys_values);
    std::vector<Var> outs;
    outs.reserve(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
      Var qh = slice_cols(qp, h * hd, hd), kh = slice_cols(kp, h * hd, hd), vh = slice_cols(vp, h * hd, hd);
      Var a = softmax_rows(scale(matmul_nt(qh, kh), inv), key_mask);
      if (weights != nullptr) weights->push_back(a.value());
      outs.push_back(matmul(a, vh));
    }
    return o(t, heads == 1 ? outs[0] : concat_cols(outs));
  }
};

}  // namespace clay::nn
