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

// Differentiable operations over row-major matrices. Every op computes its
// value eagerly and records a closure that maps the output gradient back onto
// its operands.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "clay/nn/tape.hpp"

namespace clay::nn {

namespace detail {

template <typename S>
void require_same_shape(const char* op, const BasicVar<S>& a, const BasicVar<S>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ContractViolation(std::string(op) + ": shape mismatch " + shape_str(a.value()) + " vs " +
                            shape_str(b.value()));
}

}  // namespace detail

template <typename S>
BasicVar<S> matmul(const BasicVar<S>& a, const BasicVar<S>& b) {
  if (a.cols() != b.rows())
    throw ContractViolation("matmul: shape mismatch " + shape_str(a.value()) + " x " + shape_str(b.value()));
  MatrixX<S> out = a.value() * b.value();
  return a.tape()->record(std::move(out), {a, b}, [a, b](BasicTape<S>& t, int self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(a)) t.accumulate(a, g * t.value(b.id()).transpose());
    if (t.requires_grad(b)) t.accumulate(b, t.value(a.id()).transpose() * g);
  });
}

/// a * b^T
template <typename S>
BasicVar<S> matmul_nt(const BasicVar<S>& a, const BasicVar<S>& b) {
  if (a.cols() != b.cols())
    throw ContractViolation("matmul_nt: shape mismatch " + shape_str(a.value()) + " x " +
                            shape_str(b.value()) + "^T");
  MatrixX<S> out = a.value() * b.value().transpose();
  return a.tape()->record(std::move(out), {a, b}, [a, b](BasicTape<S>& t, int self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(a)) t.accumulate(a, g * t.value(b.id()));
    if (t.requires_grad(b)) t.accumulate(b, g.transpose() * t.value(a.id()));
  });
}

template <typename S>
BasicVar<S> add(const BasicVar<S>& a, const BasicVar<S>& b) {
  detail::require_same_shape("add", a, b);
  MatrixX<S> out = a.value() + b.value();
  return a.tape()->record(std::move(out), {a, b}, [a, b](BasicTape<S>& t, int self) {
    t.accumulate(a, t.grad(self));
    t.accumulate(b, t.grad(self));
  });
}

template <typename S>
BasicVar<S> sub(const BasicVar<S>& a, const BasicVar<S>& b) {
  detail::require_same_shape("sub", a, b);
  MatrixX<S> out = a.value() - b.value();
  return a.tape()->record(std::move(out), {a, b}, [a, b](BasicTape<S>& t, int self) {
    t.accumulate(a, t.grad(self));
    t.accumulate(b, -t.grad(self));
  });
}

/// Element-wise product.
template <typename S>
BasicVar<S> mul(const BasicVar<S>& a, const BasicVar<S>& b) {
  detail::require_same_shape("mul", a, b);
  MatrixX<S> out = a.value().cwiseProduct(b.value());
  return a.tape()->record(std::move(out), {a, b}, [a, b](BasicTape<S>& t, int self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(a)) t.accumulate(a, g.cwiseProduct(t.value(b.id())));
    if (t.requires_grad(b)) t.accumulate(b, g.cwiseProduct(t.value(a.id())));
  });
}

template <typename S>
BasicVar<S> scale(const BasicVar<S>& a, S factor) {
  MatrixX<S> out = a.value() * factor;
  return a.tape()->record(std::move(out), {a}, [a, factor](BasicTape<S>& t, int self) {
    t.accumulate(a, t.grad(self) * factor);
  });
}

/// x + b with b a single row broadcast over the rows of x.
template <typename S>
BasicVar<S> add_bias(const BasicVar<S>& x, const BasicVar<S>& b) {
  if (b.rows() != 1 || b.cols() != x.cols())
    throw ContractViolation("add_bias: shape mismatch " + shape_str(x.value()) + " + " + shape_str(b.value()));
  MatrixX<S> out = x.value().rowwise() + b.value().row(0);
  return x.tape()->record(std::move(out), {x, b}, [x, b](BasicTape<S>& t, int self) {
    const auto& g = t.grad(self);
    t.accumulate(x, g);
    if (t.requires_grad(b)) t.accumulate(b, g.colwise().sum());
  });
}

/// Scales row i of x by w(i, 0).
template <typename S>
BasicVar<S> mul_rows(const BasicVar<S>& x, const BasicVar<S>& w) {
  if (w.cols() != 1 || w.rows() != x.rows())
    throw ContractViolation("mul_rows: shape mismatch " + shape_str(x.value()) + " * " + shape_str(w.value()));
  MatrixX<S> out = w.value().col(0).asDiagonal() * x.value();
  return x.tape()->record(std::move(out), {x, w}, [x, w](BasicTape<S>& t, int self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(x)) t.accumulate(x, t.value(w.id()).col(0).asDiagonal() * g);
    if (t.requires_grad(w)) t.accumulate(w, g.cwiseProduct(t.value(x.id())).rowwise().sum());
  });
}

template <typename S>
BasicVar<S> relu(const BasicVar<S>& a) {
  MatrixX<S> out = a.value().cwiseMax(S(0));
  return a.tape()->record(std::move(out), {a}, [a](BasicTape<S>& t, int self) {
    const auto& x = t.value(a.id());
    t.accumulate(a, (x.array() > S(0)).select(t.grad(self).array(), S(0)).matrix());
  });
}

template <typename S>
BasicVar<S> tanh(const BasicVar<S>& a) {
  MatrixX<S> out = a.value().array().tanh().matrix();
  return a.tape()->record(std::move(out), {a}, [a](BasicTape<S>& t, int self) {
    const auto& y = t.value(self);
    t.accumulate(a, t.grad(self).cwiseProduct((S(1) - y.array().square()).matrix()));
  });
}

template <typename S>
BasicVar<S> sigmoid(const BasicVar<S>& a) {
  MatrixX<S> out = (S(1) / (S(1) + (-a.value().array()).exp())).matrix();
  return a.tape()->record(std::move(out), {a}, [a](BasicTape<S>& t, int self) {
    const auto& y = t.value(self);
    t.accumulate(a, t.grad(self).cwiseProduct((y.array() * (S(1) - y.array())).matrix()));
  });
}

template <typename S>
BasicVar<S> transpose(const BasicVar<S>& a) {
  MatrixX<S> out = a.value().transpose();
  return a.tape()->record(std::move(out), {a}, [a](BasicTape<S>& t, int self) {
    t.accumulate(a, t.grad(self).transpose());
  });
}

/// Reinterprets the row-major data with a new shape.
template <typename S>
BasicVar<S> reshape(const BasicVar<S>& a, Index rows, Index cols) {
  if (rows * cols != a.value().size())
    throw ContractViolation("reshape: cannot view " + shape_str(a.value()) + " as [" + std::to_string(rows) + "x" +
                            std::to_string(cols) + "]");
  MatrixX<S> out = Eigen::Map<const MatrixX<S>>(a.value().data(), rows, cols);
  const Index r0 = a.rows(), c0 = a.cols();
  return a.tape()->record(std::move(out), {a}, [a, r0, c0](BasicTape<S>& t, int self) {
    t.accumulate(a, Eigen::Map<const MatrixX<S>>(t.grad(self).data(), r0, c0));
  });
}

template <typename S>
BasicVar<S> concat_cols(const std::vector<BasicVar<S>>& parts) {
  if (parts.empty()) throw ContractViolation("concat_cols: no operands");
  const Index rows = parts[0].rows();
  Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows)
      throw ContractViolation("concat_cols: shape mismatch " + shape_str(parts[0].value()) + " vs " +
                              shape_str(p.value()));
    cols += p.cols();
  }
  MatrixX<S> out(rows, cols);
  std::vector<Index> offsets;
  Index c = 0;
  for (const auto& p : parts) {
    offsets.push_back(c);
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return parts[0].tape()->record(std::move(out), parts, [parts, offsets](BasicTape<S>& t, int self) {
    const auto& g = t.grad(self);
    for (std::size_t i = 0; i < parts.size(); ++i)
      if (t.requires_grad(parts[i])) t.accumulate(parts[i], g.middleCols(offsets[i], parts[i].cols()));
  });
}

template <typename S>
BasicVar<S> concat_rows(const std::vector<BasicVar<S>>& parts) {
  if (parts.empty()) throw ContractViolation("concat_rows: no operands");
  const Index cols = parts[0].cols();
  Index rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols)
      throw ContractViolation("concat_rows: shape mismatch " + shape_str(parts[0].value()) + " vs " +
                              shape_str(p.value()));
    rows += p.rows();
  }
  MatrixX<S> out(rows, cols);
  std::vector<Index> offsets;
  Index r = 0;
  for (const auto& p : parts) {
    offsets.push_back(r);
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return parts[0].tape()->record(std::move(out), parts, [parts, offsets](BasicTape<S>& t, int self) {
    const auto& g = t.grad(self);
    for (std::size_t i = 0; i < parts.size(); ++i)
      if (t.requires_grad(parts[i])) t.accumulate(parts[i], g.middleRows(offsets[i], parts[i].rows()));
  });
}

template <typename S>
BasicVar<S> slice_cols(const BasicVar<S>& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols())
    throw ContractViolation("slice_cols: range out of " + shape_str(a.value()));
  MatrixX<S> out = a.value().middleCols(start, count);
  const Index r = a.rows(), c = a.cols();
  return a.tape()->record(std::move(out), {a}, [a, start, count, r, c](BasicTape<S>& t, int self) {
    MatrixX<S> g = MatrixX<S>::Zero(r, c);
    g.middleCols(start, count) = t.grad(self);
    t.accumulate(a, g);
  });
}

template <typename S>
BasicVar<S> slice_rows(const BasicVar<S>& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.rows())
    throw ContractViolation("slice_rows: range out of " + shape_str(a.value()));
  MatrixX<S> out = a.value().middleRows(start, count);
  const Index r = a.rows(), c = a.cols();
  return a.tape()->record(std::move(out), {a}, [a, start, count, r, c](BasicTape<S>& t, int self) {
    MatrixX<S> g = MatrixX<S>::Zero(r, c);
    g.middleRows(start, count) = t.grad(self);
    t.accumulate(a, g);
  });
}

/// out.row(i) = a.row(index[i]). Serves as embedding lookup.
template <typename S>
BasicVar<S> gather_rows(const BasicVar<S>& a, std::vector<int> index) {
  MatrixX<S> out(static_cast<Index>(index.size()), a.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= a.rows())
      throw ContractViolation("gather_rows: index " + std::to_string(index[i]) + " out of " + shape_str(a.value()));
    out.row(static_cast<Index>(i)) = a.value().row(index[i]);
  }
  const Index r = a.rows(), c = a.cols();
  return a.tape()->record(std::move(out), {a}, [a, index = std::move(index), r, c](BasicTape<S>& t, int self) {
    MatrixX<S> g = MatrixX<S>::Zero(r, c);
    const auto& go = t.grad(self);
    for (std::size_t i = 0; i < index.size(); ++i) g.row(index[i]) += go.row(static_cast<Index>(i));
    t.accumulate(a, g);
  });
}

/// out.row(segment[e]) += a.row(e) for an output of `segments` rows.
template <typename S>
BasicVar<S> scatter_add_rows(const BasicVar<S>& a, std::vector<int> segment, Index segments) {
  if (static_cast<Index>(segment.size()) != a.rows())
    throw ContractViolation("scatter_add_rows: segment ids do not match " + shape_str(a.value()));
  MatrixX<S> out = MatrixX<S>::Zero(segments, a.cols());
  for (std::size_t e = 0; e < segment.size(); ++e) {
    if (segment[e] < 0 || segment[e] >= segments) throw ContractViolation("scatter_add_rows: segment out of range");
    out.row(segment[e]) += a.value().row(static_cast<Index>(e));
  }
  return a.tape()->record(std::move(out), {a}, [a, segment = std::move(segment)](BasicTape<S>& t, int self) {
    const auto& go = t.grad(self);
    MatrixX<S> g(static_cast<Index>(segment.size()), go.cols());
    for (std::size_t e = 0; e < segment.size(); ++e) g.row(static_cast<Index>(e)) = go.row(segment[e]);
    t.accumulate(a, g);
  });
}

/// Column-wise max over the rows of each segment. Empty segments yield zeros.
template <typename S>
BasicVar<S> segment_max_rows(const BasicVar<S>& a, const std::vector<int>& segment, Index segments) {
  if (static_cast<Index>(segment.size()) != a.rows())
    throw ContractViolation("segment_max_rows: segment ids do not match " + shape_str(a.value()));
  const Index d = a.cols();
  MatrixX<S> out = MatrixX<S>::Zero(segments, d);
  std::vector<Index> argmax(static_cast<std::size_t>(segments * d), -1);
  const auto& x = a.value();
  for (Index e = 0; e < a.rows(); ++e) {
    const int s = segment[static_cast<std::size_t>(e)];
    if (s < 0 || s >= segments) throw ContractViolation("segment_max_rows: segment out of range");
    for (Index j = 0; j < d; ++j) {
      Index& am = argmax[static_cast<std::size_t>(s * d + j)];
      if (am < 0 || x(e, j) > out(s, j)) {
        out(s, j) = x(e, j);
        am = e;
      }
    }
  }
  const Index r = a.rows();
  return a.tape()->record(std::move(out), {a}, [a, argmax, d, r](BasicTape<S>& t, int self) {
    const auto& go = t.grad(self);
    MatrixX<S> g = MatrixX<S>::Zero(r, d);
    for (Index s = 0; s < go.rows(); ++s)
      for (Index j = 0; j < d; ++j) {
        const Index e = argmax[static_cast<std::size_t>(s * d + j)];
        if (e >= 0) g(e, j) += go(s, j);
      }
    t.accumulate(a, g);
  });
}

/// Softmax of a column of scores within each segment.
template <typename S>
BasicVar<S> segment_softmax(const BasicVar<S>& scores, std::vector<int> segment, Index segments) {
  if (scores.cols() != 1 || static_cast<Index>(segment.size()) != scores.rows())
    throw ContractViolation("segment_softmax: expects [E x 1] scores, got " + shape_str(scores.value()));
  const auto& x = scores.value();
  std::vector<S> mx(static_cast<std::size_t>(segments), -std::numeric_limits<S>::infinity());
  for (std::size_t e = 0; e < segment.size(); ++e)
    mx[segment[e]] = std::max(mx[segment[e]], x(static_cast<Index>(e), 0));
  MatrixX<S> out(x.rows(), 1);
  std::vector<S> z(static_cast<std::size_t>(segments), S(0));
  for (std::size_t e = 0; e < segment.size(); ++e) {
    out(static_cast<Index>(e), 0) = std::exp(x(static_cast<Index>(e), 0) - mx[segment[e]]);
    z[segment[e]] += out(static_cast<Index>(e), 0);
  }
  for (std::size_t e = 0; e < segment.size(); ++e) out(static_cast<Index>(e), 0) /= z[segment[e]];
  return scores.tape()->record(
      std::move(out), {scores}, [scores, segment = std::move(segment), segments](BasicTape<S>& t, int self) {
        const auto& y = t.value(self);
        const auto& go = t.grad(self);
        std::vector<S> dot(static_cast<std::size_t>(segments), S(0));
        for (std::size_t e = 0; e < segment.size(); ++e)
          dot[segment[e]] += go(static_cast<Index>(e), 0) * y(static_cast<Index>(e), 0);
        MatrixX<S> g(y.rows(), 1);
        for (std::size_t e = 0; e < segment.size(); ++e) {
          const Index i = static_cast<Index>(e);
          g(i, 0) = y(i, 0) * (go(i, 0) - dot[segment[e]]);
        }
        t.accumulate(scores, g);
      });
}

/// Row-wise softmax. Columns with `key_mask[j] == 0` get zero weight; a row
/// whose keys are all masked is all zeros.
template <typename S>
BasicVar<S> softmax_rows(const BasicVar<S>& a, const std::vector<std::uint8_t>& key_mask = {}) {
  if (!key_mask.empty() && static_cast<Index>(key_mask.size()) != a.cols())
    throw ContractViolation("softmax_rows: mask length does not match " + shape_str(a.value()));
  const auto& x = a.value();
  MatrixX<S> out = MatrixX<S>::Zero(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    S mx = -std::numeric_limits<S>::infinity();
    for (Index j = 0; j < x.cols(); ++j)
      if (key_mask.empty() || key_mask[static_cast<std::size_t>(j)]) mx = std::max(mx, x(i, j));
    if (!std::isfinite(mx)) continue;
    S z = 0;
    for (Index j = 0; j < x.cols(); ++j)
      if (key_mask.empty() || key_mask[static_cast<std::size_t>(j)]) {
        out(i, j) = std::exp(x(i, j) - mx);
        z += out(i, j);
      }
    out.row(i) /= z;
  }
  return a.tape()->record(std::move(out), {a}, [a](BasicTape<S>& t, int self) {
    const auto& y = t.value(self);
    const auto& go = t.grad(self);
    Eigen::Matrix<S, Eigen::Dynamic, 1> dot = go.cwiseProduct(y).rowwise().sum();
    MatrixX<S> g = y.cwiseProduct(go - dot.replicate(1, y.cols()));
    t.accumulate(a, g);
  });
}

/// Per-row normalization to zero mean / unit variance, then affine.
template <typename S>
BasicVar<S> layer_norm(const BasicVar<S>& x, const BasicVar<S>& gain, const BasicVar<S>& bias, S eps = S(1e-5)) {
  if (gain.rows() != 1 || gain.cols() != x.cols() || bias.rows() != 1 || bias.cols() != x.cols())
    throw ContractViolation("layer_norm: shape mismatch " + shape_str(x.value()) + " with gain " +
                            shape_str(gain.value()));
  const auto& v = x.value();
  const Index n = v.rows(), d = v.cols();
  MatrixX<S> xhat(n, d);
  Eigen::Matrix<S, Eigen::Dynamic, 1> inv_std(n);
  for (Index i = 0; i < n; ++i) {
    const S mu = v.row(i).mean();
    const S var = (v.row(i).array() - mu).square().mean();
    inv_std(i) = S(1) / std::sqrt(var + eps);
    xhat.row(i) = (v.row(i).array() - mu) * inv_std(i);
  }
  MatrixX<S> out = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
  out.rowwise() += bias.value().row(0);
  return x.tape()->record(std::move(out), {x, gain, bias},
                          [x, gain, bias, xhat, inv_std, d](BasicTape<S>& t, int self) {
                            const auto& go = t.grad(self);
                            if (t.requires_grad(gain)) t.accumulate(gain, go.cwiseProduct(xhat).colwise().sum());
                            if (t.requires_grad(bias)) t.accumulate(bias, go.colwise().sum());
                            if (!t.requires_grad(x)) return;
                            MatrixX<S> gx = (go.array().rowwise() * t.value(gain.id()).row(0).array()).matrix();
                            for (Index i = 0; i < gx.rows(); ++i) {
                              const S m1 = gx.row(i).mean();
                              const S m2 = gx.row(i).dot(xhat.row(i)) / S(d);
                              gx.row(i) = ((gx.row(i).array() - m1 - xhat.row(i).array() * m2) * inv_std(i)).matrix();
                            }
                            t.accumulate(x, gx);
                          });
}

template <typename S>
BasicVar<S> sum_all(const BasicVar<S>& a) {
  MatrixX<S> out(1, 1);
  out(0, 0) = a.value().sum();
  const Index r = a.rows(), c = a.cols();
  return a.tape()->record(std::move(out), {a}, [a, r, c](BasicTape<S>& t, int self) {
    t.accumulate(a, MatrixX<S>::Constant(r, c, t.grad(self)(0, 0)));
  });
}

template <typename S>
BasicVar<S> sum_squares(const BasicVar<S>& a) {
  MatrixX<S> out(1, 1);
  out(0, 0) = a.value().squaredNorm();
  return a.tape()->record(std::move(out), {a}, [a](BasicTape<S>& t, int self) {
    t.accumulate(a, t.value(a.id()) * (S(2) * t.grad(self)(0, 0)));
  });
}

/// Mean softmax cross-entropy over rows with `mask[i] != 0` (all rows when mask is empty).
template <typename S>
BasicVar<S> cross_entropy(const BasicVar<S>& logits, const std::vector<int>& labels,
                          const std::vector<std::uint8_t>& mask = {}) {
  const auto& x = logits.value();
  if (static_cast<Index>(labels.size()) != x.rows())
    throw ContractViolation("cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                            shape_str(x));
  if (!mask.empty() && mask.size() != labels.size())
    throw ContractViolation("cross_entropy: mask length mismatch");
  MatrixX<S> probs(x.rows(), x.cols());
  S total = 0;
  Index counted = 0;
  for (Index i = 0; i < x.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    const bool use = mask.empty() || mask[static_cast<std::size_t>(i)];
    if (use && (y < 0 || y >= x.cols()))
      throw ContractViolation("cross_entropy: label " + std::to_string(y) + " out of range for " +
                              std::to_string(x.cols()) + " classes");
    const S mx = x.row(i).maxCoeff();
    const S lse = mx + std::log((x.row(i).array() - mx).exp().sum());
    probs.row(i) = (x.row(i).array() - lse).exp().matrix();
    if (use) {
      total += lse - x(i, y);
      ++counted;
    }
  }
  MatrixX<S> out(1, 1);
  out(0, 0) = counted > 0 ? total / S(counted) : S(0);
  return logits.tape()->record(std::move(out), {logits},
                               [logits, labels, mask, probs, counted](BasicTape<S>& t, int self) {
                                 if (counted == 0) return;
                                 const S gs = t.grad(self)(0, 0) / S(counted);
                                 MatrixX<S> g = MatrixX<S>::Zero(probs.rows(), probs.cols());
                                 for (Index i = 0; i < probs.rows(); ++i) {
                                   if (!mask.empty() && !mask[static_cast<std::size_t>(i)]) continue;
                                   g.row(i) = probs.row(i) * gs;
                                   g(i, labels[static_cast<std::size_t>(i)]) -= gs;
                                 }
                                 t.accumulate(logits, g);
                               });
}

/// Mean binary cross-entropy of an [n x 1] logit column against 0/1 targets.
template <typename S>
BasicVar<S> bce_with_logits(const BasicVar<S>& logits, const std::vector<S>& targets) {
  const auto& x = logits.value();
  if (x.cols() != 1 || static_cast<Index>(targets.size()) != x.rows())
    throw ContractViolation("bce_with_logits: expects [n x 1] logits matching targets, got " + shape_str(x));
  S total = 0;
  for (Index i = 0; i < x.rows(); ++i) {
    const S z = x(i, 0), y = targets[static_cast<std::size_t>(i)];
    total += std::max(z, S(0)) - z * y + std::log1p(std::exp(-std::abs(z)));
  }
  MatrixX<S> out(1, 1);
  out(0, 0) = x.rows() > 0 ? total / S(x.rows()) : S(0);
  return logits.tape()->record(std::move(out), {logits}, [logits, targets](BasicTape<S>& t, int self) {
    const auto& x = t.value(logits.id());
    const S gs = t.grad(self)(0, 0) / S(x.rows());
    MatrixX<S> g(x.rows(), 1);
    for (Index i = 0; i < x.rows(); ++i)
      g(i, 0) = (S(1) / (S(1) + std::exp(-x(i, 0))) - targets[static_cast<std::size_t>(i)]) * gs;
    t.accumulate(logits, g);
  });
}

// ---------------------------------------------------------------------------
// Image ops. A batch of feature maps is stored as [batch*height*width, channels]
// in (batch, row, col) order.

struct MapShape {
  int batch = 1;
  int height = 0;
  int width = 0;
  int channels = 0;
  Index rows() const { return Index(batch) * height * width; }
};

template <typename S>
struct FeatureMap {
  BasicVar<S> data;
  MapShape shape;
};

struct ConvGeometry {
  int kernel = 3;
  int stride = 1;
  int padding = 1;
  int out_size(int in) const { return (in + 2 * padding - kernel) / stride + 1; }
};

namespace detail {

template <typename S>
MatrixX<S> im2col(const MatrixX<S>& x, const MapShape& in, const ConvGeometry& g, int oh, int ow) {
  const int k = g.kernel, c = in.channels;
  MatrixX<S> cols = MatrixX<S>::Zero(Index(in.batch) * oh * ow, Index(k) * k * c);
  for (int b = 0; b < in.batch; ++b)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const Index r = (Index(b) * oh + oy) * ow + ox;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * g.stride - g.padding + ky;
          if (iy < 0 || iy >= in.height) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * g.stride - g.padding + kx;
            if (ix < 0 || ix >= in.width) continue;
            const Index src = (Index(b) * in.height + iy) * in.width + ix;
            cols.block(r, (Index(ky) * k + kx) * c, 1, c) = x.row(src);
          }
        }
      }
  return cols;
}

template <typename S>
MatrixX<S> col2im(const MatrixX<S>& cols, const MapShape& in, const ConvGeometry& g, int oh, int ow) {
  const int k = g.kernel, c = in.channels;
  MatrixX<S> x = MatrixX<S>::Zero(in.rows(), c);
  for (int b = 0; b < in.batch; ++b)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const Index r = (Index(b) * oh + oy) * ow + ox;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * g.stride - g.padding + ky;
          if (iy < 0 || iy >= in.height) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * g.stride - g.padding + kx;
            if (ix < 0 || ix >= in.width) continue;
            const Index dst = (Index(b) * in.height + iy) * in.width + ix;
            x.row(dst) += cols.block(r, (Index(ky) * k + kx) * c, 1, c);
          }
        }
      }
  return x;
}

}  // namespace detail

/// 2-D convolution; weight is [kernel*kernel*in_channels, out_channels] in
/// (ky, kx, channel) row order, bias is [1, out_channels].
template <typename S>
FeatureMap<S> conv2d(const FeatureMap<S>& x, const BasicVar<S>& weight, const BasicVar<S>& bias,
                     const ConvGeometry& geom) {
  const MapShape in = x.shape;
  if (x.data.rows() != in.rows() || x.data.cols() != in.channels)
    throw ContractViolation("conv2d: data " + shape_str(x.data.value()) + " does not match declared map shape");
  if (weight.rows() != Index(geom.kernel) * geom.kernel * in.channels || bias.cols() != weight.cols() ||
      bias.rows() != 1)
    throw ContractViolation("conv2d: weight " + shape_str(weight.value()) + " incompatible with " +
                            std::to_string(in.channels) + " input channels");
  const int oh = geom.out_size(in.height), ow = geom.out_size(in.width);
  if (oh <= 0 || ow <= 0) throw ContractViolation("conv2d: input too small for kernel");
  MatrixX<S> cols = detail::im2col(x.data.value(), in, geom, oh, ow);
  MatrixX<S> out = cols * weight.value();
  out.rowwise() += bias.value().row(0);
  const BasicVar<S> xd = x.data;
  auto v = xd.tape()->record(std::move(out), {xd, weight, bias},
                             [xd, weight, bias, cols = std::move(cols), in, geom, oh, ow](BasicTape<S>& t, int self) {
                               const auto& g = t.grad(self);
                               if (t.requires_grad(weight)) t.accumulate(weight, cols.transpose() * g);
                               if (t.requires_grad(bias)) t.accumulate(bias, g.colwise().sum());
                               if (t.requires_grad(xd)) {
                                 MatrixX<S> gc = g * t.value(weight.id()).transpose();
                                 t.accumulate(xd, detail::col2im(gc, in, geom, oh, ow));
                               }
                             });
  return {v, MapShape{in.batch, oh, ow, static_cast<int>(weight.cols())}};
}

template <typename S>
FeatureMap<S> max_pool2d(const FeatureMap<S>& x, int kernel, int stride) {
  const MapShape in = x.shape;
  const int oh = (in.height - kernel) / stride + 1, ow = (in.width - kernel) / stride + 1;
  if (oh <= 0 || ow <= 0) throw ContractViolation("max_pool2d: input smaller than window");
  const auto& v = x.data.value();
  const int c = in.channels;
  MatrixX<S> out(Index(in.batch) * oh * ow, c);
  std::vector<Index> arg(static_cast<std::size_t>(out.size()));
  for (int b = 0; b < in.batch; ++b)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const Index r = (Index(b) * oh + oy) * ow + ox;
        for (int ch = 0; ch < c; ++ch) {
          S best = -std::numeric_limits<S>::infinity();
          Index best_row = -1;
          for (int ky = 0; ky < kernel; ++ky)
            for (int kx = 0; kx < kernel; ++kx) {
              const Index src = (Index(b) * in.height + oy * stride + ky) * in.width + ox * stride + kx;
              if (v(src, ch) > best) {
                best = v(src, ch);
                best_row = src;
              }
            }
          out(r, ch) = best;
          arg[static_cast<std::size_t>(r * c + ch)] = best_row;
        }
      }
  const BasicVar<S> xd = x.data;
  const Index in_rows = in.rows();
  auto rec = xd.tape()->record(std::move(out), {xd}, [xd, arg, in_rows, c](BasicTape<S>& t, int self) {
    const auto& go = t.grad(self);
    MatrixX<S> g = MatrixX<S>::Zero(in_rows, c);
    for (Index r = 0; r < go.rows(); ++r)
      for (int ch = 0; ch < c; ++ch) g(arg[static_cast<std::size_t>(r * c + ch)], ch) += go(r, ch);
    t.accumulate(xd, g);
  });
  return {rec, MapShape{in.batch, oh, ow, c}};
}

/// Mean over spatial positions: [batch*h*w, c] -> [batch, c].
template <typename S>
BasicVar<S> global_avg_pool(const FeatureMap<S>& x) {
  const MapShape in = x.shape;
  const Index hw = Index(in.height) * in.width;
  MatrixX<S> out(in.batch, in.channels);
  for (int b = 0; b < in.batch; ++b) out.row(b) = x.data.value().middleRows(b * hw, hw).colwise().mean();
  const BasicVar<S> xd = x.data;
  return xd.tape()->record(std::move(out), {xd}, [xd, in, hw](BasicTape<S>& t, int self) {
    const auto& go = t.grad(self);
    MatrixX<S> g(in.rows(), in.channels);
    for (int b = 0; b < in.batch; ++b) g.middleRows(b * hw, hw) = (go.row(b) / S(hw)).replicate(hw, 1);
    t.accumulate(xd, g);
  });
}

/// [batch*h*w, c] -> [batch, h*w*c], i.e. one flattened row per image.
template <typename S>
BasicVar<S> flatten(const FeatureMap<S>& x) {
  const MapShape s = x.shape;
  return reshape(x.data, s.batch, Index(s.height) * s.width * s.channels);
}

}  // namespace clay::nn
