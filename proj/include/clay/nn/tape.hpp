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

#include <deque>
#include <functional>
#include <initializer_list>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "clay/error.hpp"

namespace clay::nn {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = MatrixX<double>;
using Index = Eigen::Index;

template <typename Derived>
std::string shape_str(const Eigen::EigenBase<Derived>& m) {
  std::ostringstream os;
  os << "[" << m.rows() << "x" << m.cols() << "]";
  return os.str();
}

/// A trainable tensor. `group` selects the optimizer learning-rate group.
template <typename Scalar>
struct BasicParameter {
  std::string name;
  MatrixX<Scalar> value;
  MatrixX<Scalar> grad;
  int group = 0;
  // Set by a backward pass that reached this parameter, cleared by zero_grad().
  bool grad_pending = false;

  void zero_grad() {
    grad.setZero(value.rows(), value.cols());
    grad_pending = false;
  }
};

/// Owns the parameters of one model. Addresses are stable for the lifetime of the set.
template <typename Scalar>
class BasicParameterSet {
 public:
  using Param = BasicParameter<Scalar>;

  BasicParameterSet() = default;
  BasicParameterSet(const BasicParameterSet&) = delete;
  BasicParameterSet& operator=(const BasicParameterSet&) = delete;
  BasicParameterSet(BasicParameterSet&&) = default;
  BasicParameterSet& operator=(BasicParameterSet&&) = default;

  Param& add(const std::string& name, Index rows, Index cols, int group = 0) {
    if (find(name) != nullptr) throw ContractViolation("parameter registered twice: " + name);
    Param& p = params_.emplace_back();
    p.name = name;
    p.value.setZero(rows, cols);
    p.grad.setZero(rows, cols);
    p.group = group;
    return p;
  }

  Param* find(const std::string& name) {
    for (auto& p : params_)
      if (p.name == name) return &p;
    return nullptr;
  }
  const Param* find(const std::string& name) const {
    for (const auto& p : params_)
      if (p.name == name) return &p;
    return nullptr;
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  /// Total number of scalars across all parameters.
  Index count() const {
    Index n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  std::size_t size() const { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::deque<Param> params_;
};

template <typename Scalar>
class BasicTape;

/// Handle to a value recorded on a tape. Cheap to copy.
template <typename Scalar>
class BasicVar {
 public:
  BasicVar() = default;
  BasicVar(BasicTape<Scalar>* tape, int id) : tape_(tape), id_(id) {}

  BasicTape<Scalar>* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  // Invalidated by the next record() on the same tape.
  const MatrixX<Scalar>& value() const { return tape_->value(id_); }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Scalar scalar() const { return value()(0, 0); }

 private:
  BasicTape<Scalar>* tape_ = nullptr;
  int id_ = -1;
};

/// Records a forward computation and replays it in reverse to produce gradients.
/// One tape serves exactly one backward pass.
template <typename Scalar>
class BasicTape {
 public:
  using Mat = MatrixX<Scalar>;
  using Var = BasicVar<Scalar>;
  using BackwardFn = std::function<void(BasicTape&, int self)>;

  Var constant(Mat value) {
    nodes_.push_back(Node{std::move(value), Mat(), false, false, nullptr, nullptr});
    return Var(this, static_cast<int>(nodes_.size()) - 1);
  }

  Var param(BasicParameter<Scalar>& p) {
    nodes_.push_back(Node{p.value, Mat(), true, false, nullptr, &p});
    return Var(this, static_cast<int>(nodes_.size()) - 1);
  }

  Var record(Mat value, const std::vector<Var>& parents, BackwardFn fn) {
    bool rg = false;
    for (const auto& v : parents) {
      if (v.tape() != this) throw ContractViolation("operand recorded on a different tape");
      rg = rg || nodes_[v.id()].requires_grad;
    }
    nodes_.push_back(Node{std::move(value), Mat(), rg, false, rg ? std::move(fn) : nullptr, nullptr});
    return Var(this, static_cast<int>(nodes_.size()) - 1);
  }
  Var record(Mat value, std::initializer_list<Var> parents, BackwardFn fn) {
    return record(std::move(value), std::vector<Var>(parents), std::move(fn));
  }

  const Mat& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  bool requires_grad(const Var& v) const { return nodes_[v.id()].requires_grad; }
  const Mat& grad(int id) const { return nodes_[id].grad; }

  template <typename Derived>
  void accumulate(int id, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (!n.has_grad) {
      n.grad = g;
      n.has_grad = true;
    } else {
      n.grad += g;
    }
  }
  template <typename Derived>
  void accumulate(const Var& v, const Eigen::MatrixBase<Derived>& g) {
    accumulate(v.id(), g);
  }

  /// Reverse pass from a 1x1 loss; accumulates into every bound Parameter's gradient.
  void backward(const Var& loss) {
    if (backward_done_) throw ContractViolation("backward called twice on the same tape");
    if (loss.tape() != this || loss.rows() != 1 || loss.cols() != 1)
      throw ContractViolation("backward needs a 1x1 loss on this tape, got " + shape_str(loss.value()));
    for (const auto& n : nodes_)
      if (n.param != nullptr && n.param->grad_pending)
        throw ContractViolation("gradient of '" + n.param->name + "' not zeroed since the last backward");
    backward_done_ = true;

    accumulate(loss.id(), Mat::Ones(1, 1));
    for (int id = loss.id(); id >= 0; --id) {
      Node& n = nodes_[id];
      if (!n.has_grad || !n.backward) continue;
      n.backward(*this, id);
    }
    for (auto& n : nodes_) {
      if (n.param == nullptr) continue;
      if (n.param->grad.rows() != n.param->value.rows() || n.param->grad.cols() != n.param->value.cols())
        n.param->grad.setZero(n.param->value.rows(), n.param->value.cols());
      if (n.has_grad) n.param->grad += n.grad;
      n.param->grad_pending = true;
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad;
    bool has_grad;
    BackwardFn backward;
    BasicParameter<Scalar>* param;
  };
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

using Parameter = BasicParameter<double>;
using ParameterSet = BasicParameterSet<double>;
using Tape = BasicTape<double>;
using Var = BasicVar<double>;

}  // namespace clay::nn
