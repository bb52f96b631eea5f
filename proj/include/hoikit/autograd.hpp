// Copyright 2026 The hoikit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Minimal reverse-mode differentiation over dense matrices. A Tape records
// every op of one forward pass; backward() replays them in reverse and
// accumulates into leaf Parameters.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hoikit/core.hpp"

namespace hoikit::ag {

using Matrix = Eigen::MatrixXd;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}
  Eigen::Index size() const { return value.size(); }
  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

struct Var {
  int id = -1;
};

class Tape {
 public:
  const Matrix& value(Var v) const { return nodes_[v.id].value; }

  Var constant(Matrix v) { return push(std::move(v), false, {}); }

  Var param(Parameter& p) {
    Var out = push(p.value, true, {});
    nodes_[out.id].backward = [this, out, &p] {
      if (has_grad(out)) p.grad += nodes_[out.id].grad;
    };
    return out;
  }

  Var matmul(Var a, Var b) {
    Var out = push(value(a) * value(b), needs(a, b), {});
    set_backward(out, [this, a, b, out] {
      const Matrix& g = nodes_[out.id].grad;
      if (needs(a)) accumulate(a, g * value(b).transpose());
      if (needs(b)) accumulate(b, value(a).transpose() * g);
    });
    return out;
  }

  // a * b^T
  Var matmul_nt(Var a, Var b) {
    Var out = push(value(a) * value(b).transpose(), needs(a, b), {});
    set_backward(out, [this, a, b, out] {
      const Matrix& g = nodes_[out.id].grad;
      if (needs(a)) accumulate(a, g * value(b));
      if (needs(b)) accumulate(b, g.transpose() * value(a));
    });
    return out;
  }

  Var add(Var a, Var b) {
    Var out = push(value(a) + value(b), needs(a, b), {});
    set_backward(out, [this, a, b, out] {
      const Matrix& g = nodes_[out.id].grad;
      if (needs(a)) accumulate(a, g);
      if (needs(b)) accumulate(b, g);
    });
    return out;
  }

  // Adds a 1 x C row to every row of a.
  Var add_row(Var a, Var row) {
    Matrix v = value(a);
    v.rowwise() += value(row).row(0);
    Var out = push(std::move(v), needs(a, row), {});
    set_backward(out, [this, a, row, out] {
      const Matrix& g = nodes_[out.id].grad;
      if (needs(a)) accumulate(a, g);
      if (needs(row)) accumulate(row, g.colwise().sum());
    });
    return out;
  }

  Var scale(Var a, double s) {
    Var out = push(value(a) * s, needs(a), {});
    set_backward(out, [this, a, s, out] { accumulate(a, nodes_[out.id].grad * s); });
    return out;
  }

  Var relu(Var a) {
    Var out = push(value(a).cwiseMax(0.0), needs(a), {});
    set_backward(out, [this, a, out] {
      const Matrix mask = (value(a).array() > 0).cast<double>().matrix();
      accumulate(a, nodes_[out.id].grad.cwiseProduct(mask));
    });
    return out;
  }

  Var sigmoid(Var a) {
    Matrix y = value(a).unaryExpr([](double x) {
      return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    });
    Var out = push(std::move(y), needs(a), {});
    set_backward(out, [this, a, out] {
      const Matrix& y = nodes_[out.id].value;
      accumulate(a, nodes_[out.id].grad.cwiseProduct(
                        y.cwiseProduct((1.0 - y.array()).matrix())));
    });
    return out;
  }

  Var softmax_rows(Var a) {
    Matrix y = value(a);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double mx = y.row(r).maxCoeff();
      y.row(r) = (y.row(r).array() - mx).exp();
      y.row(r) /= y.row(r).sum();
    }
    Var out = push(std::move(y), needs(a), {});
    set_backward(out, [this, a, out] {
      const Matrix& y = nodes_[out.id].value;
      const Matrix& g = nodes_[out.id].grad;
      const Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
      Matrix d = g;
      d.colwise() -= dot;
      accumulate(a, d.cwiseProduct(y));
    });
    return out;
  }

  // Row-wise normalization with 1 x C gain and bias.
  Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5) {
    const Matrix& xv = value(x);
    const Eigen::Index c = xv.cols();
    const Eigen::VectorXd mean = xv.rowwise().mean();
    Matrix centered = xv;
    centered.colwise() -= mean;
    const Eigen::VectorXd inv_std =
        ((centered.array().square().rowwise().sum() / static_cast<double>(c)) + eps)
            .rsqrt()
            .matrix();
    Matrix xhat = centered.array().colwise() * inv_std.array();
    Matrix y = xhat.array().rowwise() * value(gamma).row(0).array();
    y.rowwise() += value(beta).row(0);
    Var out = push(std::move(y), needs(x) || needs(gamma) || needs(beta), {});
    set_backward(out, [this, x, gamma, beta, out, xhat = std::move(xhat), inv_std, c] {
      const Matrix& g = nodes_[out.id].grad;
      if (needs(beta)) accumulate(beta, g.colwise().sum());
      if (needs(gamma)) accumulate(gamma, g.cwiseProduct(xhat).colwise().sum());
      if (needs(x)) {
        const Matrix dxhat = g.array().rowwise() * value(gamma).row(0).array();
        const Eigen::VectorXd m1 = dxhat.rowwise().mean();
        const Eigen::VectorXd m2 = dxhat.cwiseProduct(xhat).rowwise().mean();
        Matrix dx = dxhat;
        dx.colwise() -= m1;
        dx -= (xhat.array().colwise() * m2.array()).matrix();
        dx = dx.array().colwise() * inv_std.array();
        accumulate(x, dx);
      }
      (void)c;
    });
    return out;
  }

  Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
    Var out = push(value(a).middleCols(start, count), needs(a), {});
    set_backward(out, [this, a, start, count, out] {
      Node& src = nodes_[a.id];
      ensure_grad(a);
      src.grad.middleCols(start, count) += nodes_[out.id].grad;
    });
    return out;
  }

  Var concat_cols(std::span<const Var> parts) {
    Eigen::Index rows = value(parts[0]).rows(), cols = 0;
    bool any = false;
    for (Var p : parts) {
      if (value(p).rows() != rows) throw InvalidArgument("concat_cols: row mismatch");
      cols += value(p).cols();
      any = any || needs(p);
    }
    Matrix v(rows, cols);
    Eigen::Index at = 0;
    for (Var p : parts) {
      v.middleCols(at, value(p).cols()) = value(p);
      at += value(p).cols();
    }
    std::vector<Var> ps(parts.begin(), parts.end());
    Var out = push(std::move(v), any, {});
    set_backward(out, [this, ps = std::move(ps), out] {
      Eigen::Index at = 0;
      for (Var p : ps) {
        const Eigen::Index w = value(p).cols();
        if (needs(p)) accumulate(p, nodes_[out.id].grad.middleCols(at, w));
        at += w;
      }
    });
    return out;
  }

  // Seeds d(objective)/d(output) for each listed output and runs the tape in
  // reverse.
  void backward(std::span<const std::pair<Var, Matrix>> seeds) {
    for (const auto& [v, g] : seeds) {
      if (g.rows() != value(v).rows() || g.cols() != value(v).cols())
        throw InvalidArgument("backward seed shape mismatch");
      accumulate(v, g);
    }
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.needs_grad && n.backward && n.grad.size() > 0) n.backward();
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    std::function<void()> backward;
  };

  Var push(Matrix v, bool needs_grad, std::function<void()> bw) {
    nodes_.push_back({std::move(v), Matrix(), needs_grad, std::move(bw)});
    return Var{static_cast<int>(nodes_.size()) - 1};
  }
  void set_backward(Var v, std::function<void()> bw) {
    if (nodes_[v.id].needs_grad) nodes_[v.id].backward = std::move(bw);
  }
  bool needs(Var a) const { return nodes_[a.id].needs_grad; }
  bool needs(Var a, Var b) const { return needs(a) || needs(b); }
  bool has_grad(Var a) const { return nodes_[a.id].grad.size() > 0; }
  void ensure_grad(Var a) {
    Node& n = nodes_[a.id];
    if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  }
  template <class Expr>
  void accumulate(Var a, const Expr& g) {
    if (!needs(a)) return;
    Node& n = nodes_[a.id];
    if (n.grad.size() == 0)
      n.grad = g;
    else
      n.grad += g;
  }

  std::vector<Node> nodes_;
};

}  // namespace hoikit::ag
