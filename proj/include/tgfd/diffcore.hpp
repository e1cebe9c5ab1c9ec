// Copyright 2026 The tgfd Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/** @file diffcore.hpp Dense matrices with taped reverse-mode differentiation.
 *
 * A Tape records every primitive applied during one forward pass. Values on
 * the tape are addressed through lightweight Var handles. Nodes are appended
 * in evaluation order, so the record is already topologically sorted and
 * backward() is a single reverse sweep.
 *
 * All arithmetic is 64-bit. Every primitive checks its result for NaN/Inf
 * and throws NumericalError instead of letting bad values spread.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tgfd/error.hpp"

namespace tgfd {

/// Row-major dense matrix. Column vectors are n x 1.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  static Matrix column(std::vector<double> values) {
    Matrix m;
    m.rows = values.size();
    m.cols = 1;
    m.data = std::move(values);
    return m;
  }

  static Matrix row(std::vector<double> values) {
    Matrix m;
    m.rows = 1;
    m.cols = values.size();
    m.data = std::move(values);
    return m;
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  std::size_t size() const noexcept { return data.size(); }
  bool is_vector() const noexcept { return rows == 1 || cols == 1; }
  bool same_shape(const Matrix& o) const noexcept { return rows == o.rows && cols == o.cols; }
  std::string shape_str() const { return std::to_string(rows) + "x" + std::to_string(cols); }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
  }
};

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

/// Softmax with the maximum subtracted before exponentiation.
inline std::vector<double> stable_softmax(std::span<const double> v) {
  if (v.empty()) throw ShapeError("stable_softmax: empty vector");
  const double mx = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

inline constexpr double kLogFloor = 1e-12;
inline constexpr double kLeakySlope = 0.2;

enum class Prim : std::uint8_t {
  kLeaf,
  kMatMul,
  kMatVec,
  kAdd,
  kMul,
  kScale,
  kConcat,
  kSigmoid,
  kTanh,
  kLeakyRelu,
  kRelu,
  kSoftmax,
  kLogClamp,
  kMean,
  kSum,
};

inline const char* prim_name(Prim p) {
  switch (p) {
    case Prim::kLeaf: return "leaf";
    case Prim::kMatMul: return "matmul";
    case Prim::kMatVec: return "matvec";
    case Prim::kAdd: return "add";
    case Prim::kMul: return "mul";
    case Prim::kScale: return "scale";
    case Prim::kConcat: return "concat";
    case Prim::kSigmoid: return "sigmoid";
    case Prim::kTanh: return "tanh";
    case Prim::kLeakyRelu: return "leaky_relu";
    case Prim::kRelu: return "relu";
    case Prim::kSoftmax: return "softmax";
    case Prim::kLogClamp: return "log_clamp";
    case Prim::kMean: return "mean";
    case Prim::kSum: return "sum";
  }
  return "?";
}

/// Extra scalar/axis arguments for primitives that take them.
/// scale: factor. leaky_relu: negative slope. log_clamp: floor.
/// concat: axis 0 stacks rows (feature axis of column vectors), axis 1 stacks columns.
struct PrimArgs {
  double scalar = 0.0;
  int axis = 0;
};

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;

  const Matrix& value() const;
  const Matrix& grad() const;
  std::size_t rows() const { return value().rows; }
  std::size_t cols() const { return value().cols; }
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void reserve(std::size_t n) { nodes_.reserve(n); }

  Var leaf(Matrix m) {
    if (!all_finite(m.data)) throw NumericalError("leaf: non-finite input");
    nodes_.push_back(Node{Prim::kLeaf, std::move(m), {}, 0, 0, {}});
    return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  Var apply(Prim kind, std::span<const Var> in, PrimArgs args = {});

  /// Reverse sweep from a 1x1 output. Leaves hold d(output)/d(leaf) afterwards.
  void backward(Var out);

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  /// Zero matrix of the value's shape when backward has not reached it.
  const Matrix& grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    if (n.grad.size() != n.value.size()) {
      n.grad = Matrix(n.value.rows, n.value.cols);
    }
    return n.grad;
  }

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Prim kind;
    Matrix value;
    mutable Matrix grad;
    std::uint32_t arg_begin;
    std::uint32_t arg_count;
    PrimArgs args;
  };

  std::span<const std::uint32_t> inputs_of(const Node& n) const {
    return {args_.data() + n.arg_begin, n.arg_count};
  }
  Matrix& grad_buf(std::uint32_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() != n.value.size()) n.grad = Matrix(n.value.rows, n.value.cols);
    return n.grad;
  }

  Matrix forward_value(Prim kind, std::span<const Var> in, const PrimArgs& args) const;
  void backward_node(std::uint32_t id);

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> args_;
};

inline const Matrix& Var::value() const { return tape->value(*this); }
inline const Matrix& Var::grad() const { return tape->grad(*this); }

namespace detail {

[[noreturn]] inline void shape_fail(Prim kind, std::span<const Var> in) {
  std::string msg = std::string(prim_name(kind)) + ": shape mismatch (";
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (i) msg += ", ";
    msg += in[i].value().shape_str();
  }
  throw ShapeError(msg + ")");
}

// out += a * b
inline void gemm_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  const std::size_t n = a.rows, k = a.cols, m = b.cols;
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = out.data.data() + i * m;
    const double* arow = a.data.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.data.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

// out += a * b^T
inline void gemm_abt_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  const std::size_t n = a.rows, k = a.cols, m = b.rows;
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a.data.data() + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double* brow = b.data.data() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      out.data[i * m + j] += s;
    }
  }
}

// out += a^T * b
inline void gemm_atb_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  const std::size_t k = a.rows, n = a.cols, m = b.cols;
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a.data.data() + p * n;
    const double* brow = b.data.data() + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* orow = out.data.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

}  // namespace detail

inline Matrix Tape::forward_value(Prim kind, std::span<const Var> in, const PrimArgs& args) const {
  auto need = [&](std::size_t n) {
    if (in.size() != n) {
      throw ShapeError(std::string(prim_name(kind)) + ": expected " + std::to_string(n) +
                       " inputs, got " + std::to_string(in.size()));
    }
  };
  auto unary = [&](auto&& f) {
    need(1);
    const Matrix& x = value(in[0]);
    Matrix y(x.rows, x.cols);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
    return y;
  };

  switch (kind) {
    case Prim::kLeaf:
      throw ShapeError("leaf is not an applicable primitive");
    case Prim::kMatMul:
    case Prim::kMatVec: {
      need(2);
      const Matrix& a = value(in[0]);
      const Matrix& b = value(in[1]);
      if (a.cols != b.rows || (kind == Prim::kMatVec && b.cols != 1)) detail::shape_fail(kind, in);
      Matrix y(a.rows, b.cols);
      detail::gemm_acc(a, b, y);
      return y;
    }
    case Prim::kAdd:
    case Prim::kMul: {
      need(2);
      const Matrix& a = value(in[0]);
      const Matrix& b = value(in[1]);
      if (!a.same_shape(b)) detail::shape_fail(kind, in);
      Matrix y(a.rows, a.cols);
      if (kind == Prim::kAdd) {
        for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] + b[i];
      } else {
        for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] * b[i];
      }
      return y;
    }
    case Prim::kScale: {
      const double s = args.scalar;
      return unary([s](double x) { return s * x; });
    }
    case Prim::kConcat: {
      if (in.empty()) throw ShapeError("concat: no inputs");
      const Matrix& first = value(in[0]);
      if (args.axis == 0) {
        std::size_t rows = 0;
        for (Var v : in) {
          if (value(v).cols != first.cols) detail::shape_fail(kind, in);
          rows += value(v).rows;
        }
        Matrix y(rows, first.cols);
        std::size_t off = 0;
        for (Var v : in) {
          const Matrix& x = value(v);
          std::copy(x.data.begin(), x.data.end(), y.data.begin() + static_cast<std::ptrdiff_t>(off));
          off += x.size();
        }
        return y;
      }
      if (args.axis != 1) throw ShapeError("concat: axis must be 0 or 1");
      std::size_t cols = 0;
      for (Var v : in) {
        if (value(v).rows != first.rows) detail::shape_fail(kind, in);
        cols += value(v).cols;
      }
      Matrix y(first.rows, cols);
      std::size_t c0 = 0;
      for (Var v : in) {
        const Matrix& x = value(v);
        for (std::size_t r = 0; r < x.rows; ++r) {
          for (std::size_t c = 0; c < x.cols; ++c) y(r, c0 + c) = x(r, c);
        }
        c0 += x.cols;
      }
      return y;
    }
    case Prim::kSigmoid:
      return unary([](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
    case Prim::kTanh:
      return unary([](double x) { return std::tanh(x); });
    case Prim::kLeakyRelu: {
      const double slope = args.scalar;
      return unary([slope](double x) { return x > 0 ? x : slope * x; });
    }
    case Prim::kRelu:
      return unary([](double x) { return x > 0 ? x : 0.0; });
    case Prim::kSoftmax: {
      need(1);
      const Matrix& x = value(in[0]);
      if (!x.is_vector() || x.size() == 0) detail::shape_fail(kind, in);
      Matrix y(x.rows, x.cols);
      y.data = stable_softmax(x.data);
      return y;
    }
    case Prim::kLogClamp: {
      const double floor = args.scalar;
      return unary([floor](double x) { return std::log(std::max(x, floor)); });
    }
    case Prim::kMean:
    case Prim::kSum: {
      if (in.empty()) throw ShapeError(std::string(prim_name(kind)) + ": empty set");
      const Matrix& first = value(in[0]);
      Matrix y(first.rows, first.cols);
      for (Var v : in) {
        const Matrix& x = value(v);
        if (!x.same_shape(first)) detail::shape_fail(kind, in);
        for (std::size_t i = 0; i < x.size(); ++i) y[i] += x[i];
      }
      if (kind == Prim::kMean) {
        const double inv = 1.0 / static_cast<double>(in.size());
        for (double& e : y.data) e *= inv;
      }
      return y;
    }
  }
  throw ShapeError("unknown primitive");
}

inline Var Tape::apply(Prim kind, std::span<const Var> in, PrimArgs args) {
  for (Var v : in) {
    if (v.tape != this) throw ShapeError(std::string(prim_name(kind)) + ": input from another tape");
  }
  Matrix y = forward_value(kind, in, args);
  if (!all_finite(y.data)) {
    throw NumericalError(std::string(prim_name(kind)) + ": non-finite result");
  }
  const auto begin = static_cast<std::uint32_t>(args_.size());
  for (Var v : in) args_.push_back(v.id);
  nodes_.push_back(Node{kind, std::move(y), {}, begin, static_cast<std::uint32_t>(in.size()), args});
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

inline void Tape::backward_node(std::uint32_t id) {
  // grad_buf() only touches elements of nodes_, never its storage, so these
  // references stay valid for the whole rule.
  const Node& node = nodes_[id];
  const std::span<const std::uint32_t> in = inputs_of(node);
  const Matrix& dy = node.grad;
  const Matrix& y = node.value;

  auto unary = [&](auto&& dfdx) {
    Matrix& dx = grad_buf(in[0]);
    const Matrix& x = nodes_[in[0]].value;
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * dfdx(x[i], y[i]);
  };

  switch (node.kind) {
    case Prim::kLeaf:
      return;
    case Prim::kMatMul:
    case Prim::kMatVec: {
      const Matrix& a = nodes_[in[0]].value;
      const Matrix& b = nodes_[in[1]].value;
      detail::gemm_abt_acc(dy, b, grad_buf(in[0]));
      detail::gemm_atb_acc(a, dy, grad_buf(in[1]));
      return;
    }
    case Prim::kAdd: {
      for (std::uint32_t src : {in[0], in[1]}) {
        Matrix& dx = grad_buf(src);
        for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
      }
      return;
    }
    case Prim::kMul: {
      const Matrix& a = nodes_[in[0]].value;
      const Matrix& b = nodes_[in[1]].value;
      Matrix& da = grad_buf(in[0]);
      for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * b[i];
      Matrix& db = grad_buf(in[1]);
      for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i] * a[i];
      return;
    }
    case Prim::kScale: {
      const double s = node.args.scalar;
      unary([s](double, double) { return s; });
      return;
    }
    case Prim::kConcat: {
      if (node.args.axis == 0) {
        std::size_t off = 0;
        for (std::uint32_t src : in) {
          Matrix& dx = grad_buf(src);
          for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[off + i];
          off += dx.size();
        }
      } else {
        std::size_t c0 = 0;
        for (std::uint32_t src : in) {
          Matrix& dx = grad_buf(src);
          for (std::size_t r = 0; r < dx.rows; ++r) {
            for (std::size_t c = 0; c < dx.cols; ++c) dx(r, c) += dy(r, c0 + c);
          }
          c0 += dx.cols;
        }
      }
      return;
    }
    case Prim::kSigmoid:
      unary([](double, double s) { return s * (1.0 - s); });
      return;
    case Prim::kTanh:
      unary([](double, double t) { return 1.0 - t * t; });
      return;
    case Prim::kLeakyRelu: {
      const double slope = node.args.scalar;
      unary([slope](double x, double) { return x > 0 ? 1.0 : slope; });
      return;
    }
    case Prim::kRelu:
      unary([](double x, double) { return x > 0 ? 1.0 : 0.0; });
      return;
    case Prim::kSoftmax: {
      double dot = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) dot += dy[i] * y[i];
      Matrix& dx = grad_buf(in[0]);
      for (std::size_t i = 0; i < y.size(); ++i) dx[i] += y[i] * (dy[i] - dot);
      return;
    }
    case Prim::kLogClamp: {
      const double floor = node.args.scalar;
      unary([floor](double x, double) { return x > floor ? 1.0 / x : 0.0; });
      return;
    }
    case Prim::kMean:
    case Prim::kSum: {
      const double w = node.kind == Prim::kMean ? 1.0 / static_cast<double>(in.size()) : 1.0;
      for (std::uint32_t src : in) {
        Matrix& dx = grad_buf(src);
        for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += w * dy[i];
      }
      return;
    }
  }
}

inline void Tape::backward(Var out) {
  if (out.tape != this) throw ShapeError("backward: output belongs to another tape");
  const Matrix& v = value(out);
  if (v.rows != 1 || v.cols != 1) {
    throw ShapeError("backward: output must be 1x1, got " + v.shape_str());
  }
  for (Node& n : nodes_) {
    if (n.grad.size() == n.value.size()) std::fill(n.grad.data.begin(), n.grad.data.end(), 0.0);
  }
  grad_buf(out.id)[0] = 1.0;
  for (std::uint32_t id = out.id + 1; id-- > 0;) {
    if (nodes_[id].grad.size() != nodes_[id].value.size()) continue;  // unreached
    backward_node(id);
  }
}

// Convenience wrappers. All inputs must live on the same tape.

inline Var apply_primitive(Prim kind, std::span<const Var> in, PrimArgs args = {}) {
  if (in.empty()) throw ShapeError(std::string(prim_name(kind)) + ": no inputs");
  return in[0].tape->apply(kind, in, args);
}

inline Var matmul(Var a, Var b) {
  const Var in[] = {a, b};
  return a.tape->apply(Prim::kMatMul, in);
}
inline Var matvec(Var a, Var x) {
  const Var in[] = {a, x};
  return a.tape->apply(Prim::kMatVec, in);
}
inline Var add(Var a, Var b) {
  const Var in[] = {a, b};
  return a.tape->apply(Prim::kAdd, in);
}
inline Var mul(Var a, Var b) {
  const Var in[] = {a, b};
  return a.tape->apply(Prim::kMul, in);
}
inline Var scale(Var a, double s) {
  const Var in[] = {a};
  return a.tape->apply(Prim::kScale, in, {s, 0});
}
inline Var concat(std::span<const Var> parts, int axis = 0) {
  return apply_primitive(Prim::kConcat, parts, {0.0, axis});
}
inline Var concat(std::initializer_list<Var> parts, int axis = 0) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}
inline Var sigmoid(Var a) {
  const Var in[] = {a};
  return a.tape->apply(Prim::kSigmoid, in);
}
inline Var tanh(Var a) {
  const Var in[] = {a};
  return a.tape->apply(Prim::kTanh, in);
}
inline Var leaky_relu(Var a, double slope = kLeakySlope) {
  const Var in[] = {a};
  return a.tape->apply(Prim::kLeakyRelu, in, {slope, 0});
}
inline Var relu(Var a) {
  const Var in[] = {a};
  return a.tape->apply(Prim::kRelu, in);
}
inline Var softmax(Var a) {
  const Var in[] = {a};
  return a.tape->apply(Prim::kSoftmax, in);
}
inline Var log_clamp(Var a, double floor = kLogFloor) {
  const Var in[] = {a};
  return a.tape->apply(Prim::kLogClamp, in, {floor, 0});
}
inline Var mean(std::span<const Var> set) { return apply_primitive(Prim::kMean, set); }
inline Var sum(std::span<const Var> set) { return apply_primitive(Prim::kSum, set); }

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_entry = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

/// Builds the scalar being differentiated from parameter leaves.
using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

/// Compares taped gradients against central differences
/// (f(p + step) - f(p - step)) / (2 step) for every entry of every parameter.
/// Relative error uses max(|analytic|, |numeric|, 1e-8) as the denominator.
inline GradCheckResult grad_check(const ScalarFn& fn, std::vector<Matrix> params, double step) {
  if (!(step > 0)) throw ValidationError("grad_check: step must be positive");

  auto eval = [&](const std::vector<Matrix>& ps, std::vector<Matrix>* grads) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(ps.size());
    for (const Matrix& p : ps) leaves.push_back(tape.leaf(p));
    Var out = fn(tape, leaves);
    const Matrix& v = out.value();
    if (v.size() != 1) throw ShapeError("grad_check: forward must return a 1x1 value");
    if (!std::isfinite(v[0])) throw NumericalError("grad_check: non-finite forward value");
    if (grads) {
      tape.backward(out);
      grads->clear();
      for (Var l : leaves) grads->push_back(l.grad());
    }
    return v[0];
  };

  std::vector<Matrix> analytic;
  eval(params, &analytic);

  GradCheckResult res;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t e = 0; e < params[p].size(); ++e) {
      const double orig = params[p][e];
      params[p][e] = orig + step;
      const double fp = eval(params, nullptr);
      params[p][e] = orig - step;
      const double fm = eval(params, nullptr);
      params[p][e] = orig;

      const double num = (fp - fm) / (2.0 * step);
      const double ana = analytic[p][e];
      const double denom = std::max({std::abs(ana), std::abs(num), 1e-8});
      const double rel = std::abs(ana - num) / denom;
      ++res.entries_checked;
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst_param = p;
        res.worst_entry = e;
        res.analytic = ana;
        res.numeric = num;
      }
    }
  }
  return res;
}

}  // namespace tgfd
