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

/** @file tgnn.hpp Temporal graph network for window-level fault classification.
 *
 * Pipeline for one window, all parameters shared across services:
 *
 *   u(i,t) = Wx x(i,t) + bx
 *   h(i,t) = GRU(u(i,t), h(i,t-1)),  h(i,0) = 0
 *   e(ij,t) = a . leaky_relu(Wq h(i,t) + Wk h(j,t) + b),  j calls i at step t
 *   alpha(i,.,t) = softmax over the callers of i
 *   m(i,t) = sum_j alpha(ij,t) Wv h(j,t)            (zero when i has no callers)
 *   z(i,t) = tanh(Ws [h(i,t) ; m(i,t)] + bs)
 *   g_t = Pool_i z(i,t),  g = Pool_t g_t            (mean or attention pooling)
 *   y_hat = softmax(Wc g + bc),  loss = -log y_hat[label]
 *
 * GRU convention:
 *   zg = sigmoid(Wz u + Uz h + bz), r = sigmoid(Wr u + Ur h + br)
 *   n  = tanh(Wn u + Un (r * h) + bn),  h' = (1 - zg) * h + zg * n
 *
 * Attention pooling uses one query vector for both the node and time pools.
 */

#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tgfd/diffcore.hpp"
#include "tgfd/error.hpp"
#include "tgfd/graphseq.hpp"
#include "tgfd/random.hpp"

namespace tgfd {

enum class Pooling { kMean, kAttention };

inline std::string_view pooling_name(Pooling p) { return p == Pooling::kMean ? "mean" : "attention"; }

inline Pooling parse_pooling(std::string_view s) {
  if (s == "mean") return Pooling::kMean;
  if (s == "attention") return Pooling::kAttention;
  throw ValidationError("unknown pooling kind '" + std::string(s) + "'");
}

// name, rows, cols in terms of (dx, dh, nc)
#define TGFD_MODEL_TENSORS(X)            \
  X(input_weight, dh, dx)                \
  X(input_bias, dh, 1)                   \
  X(update_input, dh, dh)                \
  X(update_recurrent, dh, dh)            \
  X(update_bias, dh, 1)                  \
  X(reset_input, dh, dh)                 \
  X(reset_recurrent, dh, dh)             \
  X(reset_bias, dh, 1)                   \
  X(cand_input, dh, dh)                  \
  X(cand_recurrent, dh, dh)              \
  X(cand_bias, dh, 1)                    \
  X(attn_vector, 1, dh)                  \
  X(attn_query, dh, dh)                  \
  X(attn_key, dh, dh)                    \
  X(attn_bias, dh, 1)                    \
  X(value_weight, dh, dh)                \
  X(fuse_weight, dh, 2 * dh)             \
  X(fuse_bias, dh, 1)                    \
  X(pool_query, 1, dh)                   \
  X(cls_weight, nc, dh)                  \
  X(cls_bias, nc, 1)

struct ModelParams {
  std::size_t d_x = 0;
  std::size_t d_h = 0;
  std::size_t num_classes = 0;
  Pooling pooling = Pooling::kMean;

#define TGFD_DECLARE(name, r, c) Matrix name;
  TGFD_MODEL_TENSORS(TGFD_DECLARE)
#undef TGFD_DECLARE

  /// Calls f(name, matrix) for every tensor in a fixed order.
  template <class F>
  void for_each(F&& f) {
#define TGFD_VISIT(name, r, c) f(std::string_view(#name), name);
    TGFD_MODEL_TENSORS(TGFD_VISIT)
#undef TGFD_VISIT
  }
  template <class F>
  void for_each(F&& f) const {
#define TGFD_VISIT(name, r, c) f(std::string_view(#name), name);
    TGFD_MODEL_TENSORS(TGFD_VISIT)
#undef TGFD_VISIT
  }

  /// Same hyper fields, every tensor zero.
  static ModelParams zeros(std::size_t dx, std::size_t dh, std::size_t nc, Pooling pooling) {
    ModelParams p;
    p.d_x = dx;
    p.d_h = dh;
    p.num_classes = nc;
    p.pooling = pooling;
#define TGFD_ZERO(name, r, c) p.name = Matrix(r, c);
    TGFD_MODEL_TENSORS(TGFD_ZERO)
#undef TGFD_ZERO
    return p;
  }

  ModelParams zeros_like() const { return zeros(d_x, d_h, num_classes, pooling); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each([&](std::string_view, const Matrix& m) { n += m.size(); });
    return n;
  }

  /// Throws ShapeError/NumericalError if any tensor disagrees with the hyper fields.
  void check() const {
    const std::size_t dx = d_x, dh = d_h, nc = num_classes;
#define TGFD_CHECK(name, r, c)                                                                  \
  if (name.rows != (r) || name.cols != (c) || name.data.size() != (r) * (c))                    \
    throw ShapeError(std::string(#name) + ": expected " + std::to_string(r) + "x" +             \
                     std::to_string(c) + ", got " + name.shape_str());                          \
  if (!all_finite(name.data)) throw NumericalError(std::string(#name) + ": non-finite entry");
    TGFD_MODEL_TENSORS(TGFD_CHECK)
#undef TGFD_CHECK
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

inline bool is_bias_tensor(std::string_view name) {
  return name.size() >= 4 && name.substr(name.size() - 4) == "bias";
}

/// Glorot-uniform weights, s = sqrt(6 / (fan_in + fan_out)); zero biases.
inline ModelParams init_params(std::size_t d_x, std::size_t d_h, std::size_t num_classes, Pooling pooling,
                               std::uint64_t seed) {
  if (d_x < 1 || d_h < 1) throw ValidationError("init_params: dimensions must be >= 1");
  if (num_classes < 2) throw ValidationError("init_params: need at least 2 classes");
  ModelParams p = ModelParams::zeros(d_x, d_h, num_classes, pooling);
  Rng rng(seed);
  p.for_each([&](std::string_view name, Matrix& m) {
    if (is_bias_tensor(name)) return;
    const double s = std::sqrt(6.0 / static_cast<double>(m.rows + m.cols));
    for (double& v : m.data) v = rng.uniform(-s, s);
  });
  return p;
}

/// Parameter leaves of one tape, mirroring ModelParams.
struct ParamVars {
#define TGFD_DECLARE(name, r, c) Var name;
  TGFD_MODEL_TENSORS(TGFD_DECLARE)
#undef TGFD_DECLARE

  template <class F>
  void for_each(F&& f) const {
#define TGFD_VISIT(name, r, c) f(std::string_view(#name), name);
    TGFD_MODEL_TENSORS(TGFD_VISIT)
#undef TGFD_VISIT
  }
};

inline ParamVars bind_params(Tape& tape, const ModelParams& p) {
  ParamVars v;
#define TGFD_BIND(name, r, c) v.name = tape.leaf(p.name);
  TGFD_MODEL_TENSORS(TGFD_BIND)
#undef TGFD_BIND
  return v;
}

/// Copies the gradients of every leaf in `vars` into a ModelParams-shaped struct.
inline ModelParams collect_grads(const ParamVars& vars, const ModelParams& like) {
  ModelParams g = like.zeros_like();
#define TGFD_COLLECT(name, r, c) g.name = vars.name.grad();
  TGFD_MODEL_TENSORS(TGFD_COLLECT)
#undef TGFD_COLLECT
  return g;
}

struct ForwardOptions {
  /// Drop every invocation edge, so all messages are zero.
  bool ablate_structure = false;
};

// ---------------------------------------------------------------------------
// Taped building blocks. Each returns handles into the caller's tape.

namespace taped {

struct Encoded {
  std::vector<std::vector<Var>> u;  // [t][i]
  std::vector<std::vector<Var>> h;  // [t][i]
};

inline Var gru_cell(const ParamVars& p, Var u, Var h) {
  Var zg = sigmoid(add(add(matvec(p.update_input, u), matvec(p.update_recurrent, h)), p.update_bias));
  Var r = sigmoid(add(add(matvec(p.reset_input, u), matvec(p.reset_recurrent, h)), p.reset_bias));
  Var cand = tanh(add(add(matvec(p.cand_input, u), matvec(p.cand_recurrent, mul(r, h))), p.cand_bias));
  // (1 - zg) * h + zg * cand
  Var keep = mul(add(scale(zg, -1.0), h.tape->leaf(Matrix(zg.rows(), 1, 1.0))), h);
  return add(keep, mul(zg, cand));
}

inline Encoded encode(Tape& tape, const ParamVars& p, const GraphWindow& w, std::size_t d_h) {
  Encoded enc;
  enc.u.resize(w.num_steps);
  enc.h.resize(w.num_steps);
  Var zero = tape.leaf(Matrix(d_h, 1));
  std::vector<Var> prev(w.num_nodes, zero);
  for (std::size_t t = 0; t < w.num_steps; ++t) {
    for (std::size_t i = 0; i < w.num_nodes; ++i) {
      auto f = w.feature(t, i);
      Var x = tape.leaf(Matrix::column({f.begin(), f.end()}));
      Var u = add(matvec(p.input_weight, x), p.input_bias);
      Var h = gru_cell(p, u, prev[i]);
      enc.u[t].push_back(u);
      enc.h[t].push_back(h);
      prev[i] = h;
    }
  }
  return enc;
}

struct StepMessages {
  std::vector<std::vector<std::size_t>> neighbors;  // [i]
  std::vector<std::optional<Var>> scores;           // [i] k x 1
  std::vector<std::optional<Var>> alpha;            // [i] k x 1
  std::vector<Var> m;                               // [i] d_h x 1
};

inline StepMessages message_pass(Tape& tape, const ParamVars& p, std::span<const Var> h, const Adjacency& adj) {
  const std::size_t n = h.size();
  if (adj.n() != n) {
    throw ShapeError("message_pass: adjacency is " + std::to_string(adj.n()) + " nodes, states are " +
                     std::to_string(n));
  }
  StepMessages out;
  out.neighbors.resize(n);
  out.scores.resize(n);
  out.alpha.resize(n);
  const std::size_t d_h = n ? h[0].rows() : 0;
  std::optional<Var> zero;
  std::vector<std::optional<Var>> key(n), value(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.neighbors[i] = neighborhood(adj, i);
    const auto& nbrs = out.neighbors[i];
    if (nbrs.empty()) {
      if (!zero) zero = tape.leaf(Matrix(d_h, 1));
      out.m.push_back(*zero);
      continue;
    }
    Var query = add(matvec(p.attn_query, h[i]), p.attn_bias);
    std::vector<Var> e, vals;
    e.reserve(nbrs.size());
    vals.reserve(nbrs.size());
    for (std::size_t j : nbrs) {
      if (!key[j]) {
        key[j] = matvec(p.attn_key, h[j]);
        value[j] = matvec(p.value_weight, h[j]);
      }
      e.push_back(matmul(p.attn_vector, leaky_relu(add(query, *key[j]))));
      vals.push_back(*value[j]);
    }
    Var scores = concat(e, 0);
    Var alpha = softmax(scores);
    out.scores[i] = scores;
    out.alpha[i] = alpha;
    out.m.push_back(matmul(concat(vals, 1), alpha));
  }
  return out;
}

inline Var fuse(const ParamVars& p, Var h, Var m) {
  return tanh(add(matvec(p.fuse_weight, concat({h, m}, 0)), p.fuse_bias));
}

/// Mean, or softmax(q . v_k)-weighted sum.
inline Var pool(const ParamVars& p, std::span<const Var> set, Pooling kind, std::optional<Var>* weights = nullptr) {
  if (set.empty()) throw ShapeError("pool: empty set");
  if (kind == Pooling::kMean) return mean(set);
  std::vector<Var> scores;
  scores.reserve(set.size());
  for (Var v : set) scores.push_back(matmul(p.pool_query, v));
  Var w = softmax(concat(scores, 0));
  if (weights) *weights = w;
  return matmul(concat(set, 1), w);
}

struct Readout {
  std::vector<Var> g_t;
  Var g;
};

inline Readout readout(const ParamVars& p, const std::vector<std::vector<Var>>& z, Pooling kind) {
  if (z.empty() || z[0].empty()) throw ShapeError("readout: no nodes or steps");
  Readout r;
  for (const auto& step : z) r.g_t.push_back(pool(p, step, kind));
  r.g = pool(p, r.g_t, kind);
  return r;
}

struct Head {
  Var logits;
  Var y_hat;
  Var loss;
};

inline Head classify(Tape& tape, const ParamVars& p, Var g, std::size_t label, std::size_t num_classes) {
  if (label >= num_classes) {
    throw ValidationError("label " + std::to_string(label) + " out of range for " + std::to_string(num_classes) +
                          " classes");
  }
  Head hd;
  hd.logits = add(matmul(p.cls_weight, g), p.cls_bias);
  hd.y_hat = softmax(hd.logits);
  Matrix onehot(1, num_classes);
  onehot[label] = 1.0;
  hd.loss = scale(matmul(tape.leaf(std::move(onehot)), log_clamp(hd.y_hat)), -1.0);
  return hd;
}

struct Forward {
  Encoded enc;
  std::vector<StepMessages> msg;
  std::vector<std::vector<Var>> z;
  Readout ro;
  Head head;
};

inline Forward forward(Tape& tape, const ParamVars& p, const GraphWindow& w, const ModelParams& hyper,
                       const ForwardOptions& opt = {}) {
  if (w.feat_dim != hyper.d_x) {
    throw ShapeError("window '" + w.id + "' has feat_dim " + std::to_string(w.feat_dim) + ", model expects " +
                     std::to_string(hyper.d_x));
  }
  Forward f;
  f.enc = encode(tape, p, w, hyper.d_h);
  f.z.resize(w.num_steps);
  const Adjacency empty(w.num_nodes);
  for (std::size_t t = 0; t < w.num_steps; ++t) {
    const Adjacency adj = opt.ablate_structure ? empty : build_adjacency(w.edges[t], w.num_nodes);
    f.msg.push_back(message_pass(tape, p, f.enc.h[t], adj));
    for (std::size_t i = 0; i < w.num_nodes; ++i) f.z[t].push_back(fuse(p, f.enc.h[t][i], f.msg[t].m[i]));
  }
  f.ro = readout(p, f.z, hyper.pooling);
  f.head = classify(tape, p, f.ro.g, w.label, hyper.num_classes);
  return f;
}

}  // namespace taped

// ---------------------------------------------------------------------------
// Value-level API.

/// Every intermediate of one forward pass. Per-node entries are indexed [t][i].
struct ForwardCache {
  std::vector<std::vector<Matrix>> u, h, m, z;
  std::vector<std::vector<std::vector<std::size_t>>> neighbors;
  std::vector<std::vector<std::vector<double>>> e, alpha;
  std::vector<Matrix> g_t;
  Matrix g;
  std::vector<double> y_hat;
  double loss = 0.0;
};

inline ForwardCache extract_cache(const taped::Forward& f) {
  ForwardCache c;
  const std::size_t steps = f.z.size();
  auto vals = [](const std::vector<Var>& vs) {
    std::vector<Matrix> out;
    out.reserve(vs.size());
    for (Var v : vs) out.push_back(v.value());
    return out;
  };
  for (std::size_t t = 0; t < steps; ++t) {
    c.u.push_back(vals(f.enc.u[t]));
    c.h.push_back(vals(f.enc.h[t]));
    c.m.push_back(vals(f.msg[t].m));
    c.z.push_back(vals(f.z[t]));
    c.neighbors.push_back(f.msg[t].neighbors);
    std::vector<std::vector<double>> e, a;
    for (std::size_t i = 0; i < f.msg[t].m.size(); ++i) {
      e.push_back(f.msg[t].scores[i] ? f.msg[t].scores[i]->value().data : std::vector<double>{});
      a.push_back(f.msg[t].alpha[i] ? f.msg[t].alpha[i]->value().data : std::vector<double>{});
    }
    c.e.push_back(std::move(e));
    c.alpha.push_back(std::move(a));
  }
  c.g_t = vals(f.ro.g_t);
  c.g = f.ro.g.value();
  c.y_hat = f.head.y_hat.value().data;
  c.loss = f.head.loss.value()[0];
  return c;
}

inline ForwardCache forward(const GraphWindow& w, const ModelParams& params, const ForwardOptions& opt = {}) {
  params.check();
  Tape tape;
  ParamVars p = bind_params(tape, params);
  return extract_cache(taped::forward(tape, p, w, params, opt));
}

struct LossGrad {
  double loss = 0.0;
  std::vector<double> y_hat;
  ModelParams grad;
};

inline LossGrad loss_and_grad(const GraphWindow& w, const ModelParams& params, const ForwardOptions& opt = {}) {
  Tape tape;
  tape.reserve(4096);
  ParamVars p = bind_params(tape, params);
  taped::Forward f = taped::forward(tape, p, w, params, opt);
  tape.backward(f.head.loss);
  LossGrad out;
  out.loss = f.head.loss.value()[0];
  out.y_hat = f.head.y_hat.value().data;
  out.grad = collect_grads(p, params);
  return out;
}

struct EncodedStates {
  std::vector<std::vector<Matrix>> u, h;  // [t][i]
};

inline EncodedStates temporal_encode(const GraphWindow& w, const ModelParams& params) {
  if (w.feat_dim != params.d_x) {
    throw ShapeError("window '" + w.id + "' has feat_dim " + std::to_string(w.feat_dim) + ", model expects " +
                     std::to_string(params.d_x));
  }
  Tape tape;
  ParamVars p = bind_params(tape, params);
  taped::Encoded enc = taped::encode(tape, p, w, params.d_h);
  EncodedStates out;
  for (std::size_t t = 0; t < w.num_steps; ++t) {
    out.u.emplace_back();
    out.h.emplace_back();
    for (std::size_t i = 0; i < w.num_nodes; ++i) {
      out.u[t].push_back(enc.u[t][i].value());
      out.h[t].push_back(enc.h[t][i].value());
    }
  }
  return out;
}

struct MessageResult {
  std::vector<std::vector<std::size_t>> neighbors;
  std::vector<std::vector<double>> alpha;  // empty row when no callers
  std::vector<Matrix> m;
};

inline MessageResult message_pass(std::span<const Matrix> h, const Adjacency& adj, const ModelParams& params) {
  Tape tape;
  ParamVars p = bind_params(tape, params);
  std::vector<Var> hv;
  for (const Matrix& x : h) {
    if (x.rows != params.d_h || x.cols != 1) throw ShapeError("message_pass: state is " + x.shape_str());
    hv.push_back(tape.leaf(x));
  }
  taped::StepMessages sm = taped::message_pass(tape, p, hv, adj);
  MessageResult out;
  out.neighbors = sm.neighbors;
  for (std::size_t i = 0; i < h.size(); ++i) {
    out.alpha.push_back(sm.alpha[i] ? sm.alpha[i]->value().data : std::vector<double>{});
    out.m.push_back(sm.m[i].value());
  }
  return out;
}

inline Matrix fuse(const Matrix& h, const Matrix& m, const ModelParams& params) {
  if (h.rows != params.d_h || m.rows != params.d_h || h.cols != 1 || m.cols != 1) {
    throw ShapeError("fuse: expected two " + std::to_string(params.d_h) + "x1 vectors");
  }
  Tape tape;
  ParamVars p = bind_params(tape, params);
  return taped::fuse(p, tape.leaf(h), tape.leaf(m)).value();
}

struct ReadoutResult {
  std::vector<Matrix> g_t;
  Matrix g;
};

inline ReadoutResult readout(const std::vector<std::vector<Matrix>>& z, const ModelParams& params) {
  Tape tape;
  ParamVars p = bind_params(tape, params);
  std::vector<std::vector<Var>> zv;
  for (const auto& step : z) {
    zv.emplace_back();
    for (const Matrix& v : step) zv.back().push_back(tape.leaf(v));
  }
  taped::Readout r = taped::readout(p, zv, params.pooling);
  ReadoutResult out;
  for (Var v : r.g_t) out.g_t.push_back(v.value());
  out.g = r.g.value();
  return out;
}

struct Prediction {
  std::vector<double> y_hat;
  double loss = 0.0;
};

inline Prediction classify_and_loss(const Matrix& g, std::size_t label, const ModelParams& params) {
  Tape tape;
  ParamVars p = bind_params(tape, params);
  taped::Head hd = taped::classify(tape, p, tape.leaf(g), label, params.num_classes);
  return {hd.y_hat.value().data, hd.loss.value()[0]};
}

/// Finite-difference check of the full window loss over every parameter entry.
inline GradCheckResult model_grad_check(const GraphWindow& w, const ModelParams& params, double step,
                                        const ForwardOptions& opt = {}) {
  params.check();
  std::vector<Matrix> flat;
  params.for_each([&](std::string_view, const Matrix& m) { flat.push_back(m); });
  const ModelParams hyper = params;
  ScalarFn fn = [&](Tape& tape, std::span<const Var> leaves) {
    (void)tape;
    ParamVars p;
    std::size_t k = 0;
#define TGFD_ASSIGN(name, r, c) p.name = leaves[k++];
    TGFD_MODEL_TENSORS(TGFD_ASSIGN)
#undef TGFD_ASSIGN
    return taped::forward(*leaves[0].tape, p, w, hyper, opt).head.loss;
  };
  return grad_check(fn, std::move(flat), step);
}

/// Name of the tensor at position `index` in ModelParams::for_each order.
inline std::string tensor_name(std::size_t index) {
  static const std::array<const char*, 21> names = {
#define TGFD_NAME(name, r, c) #name,
      TGFD_MODEL_TENSORS(TGFD_NAME)
#undef TGFD_NAME
  };
  return index < names.size() ? names[index] : "?";
}

}  // namespace tgfd
