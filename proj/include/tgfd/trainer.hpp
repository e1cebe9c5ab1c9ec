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

/** @file trainer.hpp Supervised training, checkpoints, evaluation.
 *
 * Training is deterministic for a fixed (dataset order, config): the
 * validation split, the per-epoch shuffle and the initialization all draw
 * from streams derived from config.seed, and the batch gradient is the
 * per-window gradients summed in batch order then divided by the batch size.
 *
 * Checkpoint layout (all integers and reals little-endian):
 *
 *   "TGFDCKPT"            8-byte magic
 *   u32                   format version
 *   u64 + bytes           JSON header (hyper fields, train config, epoch, history, tensor directory)
 *   u32                   section count
 *   per section:          u32 name length, name, u64 rows, u64 cols, rows*cols IEEE-754 f64
 */

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tgfd/error.hpp"
#include "tgfd/graphseq.hpp"
#include "tgfd/metrics.hpp"
#include "tgfd/random.hpp"
#include "tgfd/tgnn.hpp"

namespace tgfd {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 30;
  std::size_t patience = 5;
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;
  std::optional<double> gradient_clip_norm = 5.0;

  void check() const {
    if (!(learning_rate > 0)) throw ValidationError("learning_rate must be > 0");
    if (!(validation_fraction >= 0 && validation_fraction < 1)) {
      throw ValidationError("validation_fraction must be in [0, 1)");
    }
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (gradient_clip_norm && !(*gradient_clip_norm > 0)) throw ValidationError("gradient_clip_norm must be > 0");
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Architecture choices that are not learned.
struct ModelSpec {
  std::size_t d_h = 16;
  Pooling pooling = Pooling::kMean;
  bool ablate_structure = false;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  /// NaN when the validation split is empty.
  double val_loss = 0.0;
};

inline bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

inline bool operator==(const EpochRecord& a, const EpochRecord& b) {
  return a.epoch == b.epoch && same_bits(a.train_loss, b.train_loss) && same_bits(a.val_loss, b.val_loss);
}

struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::uint32_t format_version = kFormatVersion;
  ModelParams params;
  bool ablate_structure = false;
  TrainConfig config;
  /// Epoch whose parameters are stored; 0 means untrained initialization.
  std::size_t epoch = 0;
  std::vector<EpochRecord> history;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

// ---------------------------------------------------------------------------
// Optimizer

struct AdamState {
  ModelParams m;
  ModelParams v;
  std::uint64_t step = 0;

  static AdamState for_params(const ModelParams& p) { return {p.zeros_like(), p.zeros_like(), 0}; }
};

inline double global_grad_norm(const ModelParams& g) {
  double s = 0.0;
  g.for_each([&](std::string_view, const Matrix& m) {
    for (double x : m.data) s += x * x;
  });
  return std::sqrt(s);
}

/// Bias-corrected adaptive-moment update, with optional global-norm clipping first.
/// Mutates `grads` when clipping applies.
inline void adam_step(ModelParams& params, ModelParams& grads, AdamState& state, const TrainConfig& cfg) {
  grads.for_each([&](std::string_view name, const Matrix& g) {
    if (!all_finite(g.data)) throw NumericalError("non-finite gradient in '" + std::string(name) + "'");
  });
  if (cfg.gradient_clip_norm) {
    const double norm = global_grad_norm(grads);
    if (norm > *cfg.gradient_clip_norm) {
      const double k = *cfg.gradient_clip_norm / norm;
      grads.for_each([&](std::string_view, Matrix& g) {
        for (double& x : g.data) x *= k;
      });
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);

  std::vector<Matrix*> ps, gs, ms, vs;
  params.for_each([&](std::string_view, Matrix& m) { ps.push_back(&m); });
  grads.for_each([&](std::string_view, Matrix& m) { gs.push_back(&m); });
  state.m.for_each([&](std::string_view, Matrix& m) { ms.push_back(&m); });
  state.v.for_each([&](std::string_view, Matrix& m) { vs.push_back(&m); });
  for (std::size_t k = 0; k < ps.size(); ++k) {
    Matrix& p = *ps[k];
    const Matrix& g = *gs[k];
    Matrix& m = *ms[k];
    Matrix& v = *vs[k];
    if (!p.same_shape(g)) throw ShapeError("adam_step: gradient shape mismatch for '" + tensor_name(k) + "'");
    for (std::size_t e = 0; e < p.size(); ++e) {
      m[e] = cfg.beta1 * m[e] + (1.0 - cfg.beta1) * g[e];
      v[e] = cfg.beta2 * v[e] + (1.0 - cfg.beta2) * g[e] * g[e];
      const double mhat = m[e] / c1;
      const double vhat = v[e] / c2;
      p[e] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
  }
}

// ---------------------------------------------------------------------------
// Splitting and training

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Per label, floor(count * fraction) windows go to validation. Both index
/// lists come back ascending.
inline Split stratified_split(std::span<const GraphWindow> data, double fraction, std::uint64_t seed) {
  std::map<std::size_t, std::vector<std::size_t>> by_label;
  for (std::size_t n = 0; n < data.size(); ++n) by_label[data[n].label].push_back(n);
  Rng rng = Rng::derive(seed, 1);
  Split s;
  for (auto& [label, idx] : by_label) {
    rng.shuffle(idx);
    const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(idx.size()) * fraction));
    s.val.insert(s.val.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    s.train.insert(s.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  return s;
}

inline void check_dataset(std::span<const GraphWindow> data, std::size_t num_classes, std::optional<std::size_t> d_x) {
  if (data.empty()) throw ValidationError("dataset is empty");
  const std::size_t dx = d_x.value_or(data[0].feat_dim);
  for (const GraphWindow& w : data) {
    validate(w, num_classes);
    if (w.feat_dim != dx) {
      throw ShapeError("window '" + w.id + "' has feat_dim " + std::to_string(w.feat_dim) + ", expected " +
                       std::to_string(dx));
    }
  }
}

inline double mean_loss(std::span<const GraphWindow> data, std::span<const std::size_t> idx, const ModelParams& params,
                        const ForwardOptions& opt) {
  if (idx.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (std::size_t n : idx) total += forward(data[n], params, opt).loss;
  return total / static_cast<double>(idx.size());
}

using EpochCallback = std::function<void(const EpochRecord&)>;

inline Checkpoint train(std::span<const GraphWindow> data, std::size_t num_classes, const ModelSpec& spec,
                        const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
  cfg.check();
  check_dataset(data, num_classes, std::nullopt);

  Checkpoint ck;
  ck.config = cfg;
  ck.ablate_structure = spec.ablate_structure;
  ck.params = init_params(data[0].feat_dim, spec.d_h, num_classes, spec.pooling, Rng::derive(cfg.seed, 3).next());
  if (cfg.max_epochs == 0) return ck;

  const ForwardOptions opt{spec.ablate_structure};
  const Split split = stratified_split(data, cfg.validation_fraction, cfg.seed);
  if (split.train.empty()) throw ValidationError("training split is empty");

  ModelParams params = ck.params;
  AdamState state = AdamState::for_params(params);
  Rng order_rng = Rng::derive(cfg.seed, 2);
  std::vector<std::size_t> order = split.train;

  double best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      const std::size_t b1 = std::min(order.size(), b0 + cfg.batch_size);
      ModelParams batch_grad = params.zeros_like();
      std::vector<Matrix*> acc;
      batch_grad.for_each([&](std::string_view, Matrix& m) { acc.push_back(&m); });
      for (std::size_t k = b0; k < b1; ++k) {
        const GraphWindow& w = data[order[k]];
        LossGrad lg = loss_and_grad(w, params, opt);
        if (!std::isfinite(lg.loss)) {
          throw NumericalError("non-finite loss on window '" + w.id + "' at epoch " + std::to_string(epoch));
        }
        epoch_loss += lg.loss;
        std::size_t t = 0;
        lg.grad.for_each([&](std::string_view, const Matrix& g) {
          Matrix& dst = *acc[t++];
          for (std::size_t e = 0; e < g.size(); ++e) dst[e] += g[e];
        });
      }
      const double inv = 1.0 / static_cast<double>(b1 - b0);
      for (Matrix* m : acc) {
        for (double& x : m->data) x *= inv;
      }
      adam_step(params, batch_grad, state, cfg);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(order.size());
    rec.val_loss = mean_loss(data, split.val, params, opt);
    ck.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    const double score = split.val.empty() ? rec.train_loss : rec.val_loss;
    if (score < best) {
      best = score;
      stale = 0;
      ck.params = params;
      ck.epoch = epoch;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  return ck;
}

/// Row-major N x C class probabilities.
inline std::vector<double> predict_proba(std::span<const GraphWindow> data, const ModelParams& params,
                                         const ForwardOptions& opt = {}) {
  std::vector<double> probs;
  probs.reserve(data.size() * params.num_classes);
  for (const GraphWindow& w : data) {
    ForwardCache c = forward(w, params, opt);
    probs.insert(probs.end(), c.y_hat.begin(), c.y_hat.end());
  }
  return probs;
}

inline MetricReport evaluate(const Checkpoint& ck, std::span<const GraphWindow> data) {
  check_dataset(data, ck.params.num_classes, ck.params.d_x);
  const std::vector<double> probs = predict_proba(data, ck.params, ForwardOptions{ck.ablate_structure});
  std::vector<std::size_t> truth;
  truth.reserve(data.size());
  for (const GraphWindow& w : data) truth.push_back(w.label);
  return evaluate_predictions(truth, probs, ck.params.num_classes);
}

// ---------------------------------------------------------------------------
// Checkpoint I/O

namespace ckpt_detail {

inline constexpr char kMagic[8] = {'T', 'G', 'F', 'D', 'C', 'K', 'P', 'T'};

template <class T>
void put_le(std::string& out, T v) {
  for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * b)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::string& buf) : buf_(buf) {}
  template <class T>
  T get() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + b])) << (8 * b);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw ParseError("checkpoint: truncated file");
  }
  const std::string& buf_;
  std::size_t pos_ = 0;
};

inline nlohmann::ordered_json real_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json();
}

inline double real_from(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace ckpt_detail

inline nlohmann::ordered_json to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["learning_rate"] = c.learning_rate;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["epsilon"] = c.epsilon;
  j["batch_size"] = c.batch_size;
  j["max_epochs"] = c.max_epochs;
  j["patience"] = c.patience;
  j["seed"] = c.seed;
  j["validation_fraction"] = c.validation_fraction;
  j["gradient_clip_norm"] = c.gradient_clip_norm ? nlohmann::ordered_json(*c.gradient_clip_norm) : nlohmann::ordered_json();
  return j;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validation_fraction = j.at("validation_fraction").get<double>();
  const auto& clip = j.at("gradient_clip_norm");
  c.gradient_clip_norm = clip.is_null() ? std::nullopt : std::optional<double>(clip.get<double>());
  return c;
}

inline std::string serialize_checkpoint(const Checkpoint& ck) {
  using namespace ckpt_detail;
  nlohmann::ordered_json h;
  h["format_version"] = ck.format_version;
  h["hyper"] = {{"d_x", ck.params.d_x},
                {"d_h", ck.params.d_h},
                {"num_classes", ck.params.num_classes},
                {"pooling", std::string(pooling_name(ck.params.pooling))},
                {"ablate_structure", ck.ablate_structure}};
  h["train_config"] = to_json(ck.config);
  h["epoch"] = ck.epoch;
  auto hist = nlohmann::ordered_json::array();
  for (const EpochRecord& r : ck.history) {
    hist.push_back({{"epoch", r.epoch}, {"train_loss", real_or_null(r.train_loss)}, {"val_loss", real_or_null(r.val_loss)}});
  }
  h["history"] = std::move(hist);
  auto dir = nlohmann::ordered_json::array();
  ck.params.for_each([&](std::string_view name, const Matrix& m) {
    dir.push_back({{"name", std::string(name)}, {"rows", m.rows}, {"cols", m.cols}});
  });
  h["tensors"] = std::move(dir);
  const std::string header = h.dump();

  std::string out(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, ck.format_version);
  put_le<std::uint64_t>(out, header.size());
  out += header;
  std::uint32_t sections = 0;
  ck.params.for_each([&](std::string_view, const Matrix&) { ++sections; });
  put_le<std::uint32_t>(out, sections);
  ck.params.for_each([&](std::string_view name, const Matrix& m) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.append(name);
    put_le<std::uint64_t>(out, m.rows);
    put_le<std::uint64_t>(out, m.cols);
    for (double v : m.data) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  });
  return out;
}

inline Checkpoint parse_checkpoint(const std::string& buf) {
  using namespace ckpt_detail;
  Reader rd(buf);
  if (rd.bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) throw ParseError("checkpoint: bad magic");
  Checkpoint ck;
  ck.format_version = rd.get<std::uint32_t>();
  if (ck.format_version != Checkpoint::kFormatVersion) {
    throw ValidationError("checkpoint: unsupported format version " + std::to_string(ck.format_version));
  }
  const auto header_len = rd.get<std::uint64_t>();
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(rd.bytes(header_len));
    const auto& hy = h.at("hyper");
    ck.params = ModelParams::zeros(hy.at("d_x").get<std::size_t>(), hy.at("d_h").get<std::size_t>(),
                                   hy.at("num_classes").get<std::size_t>(),
                                   parse_pooling(hy.at("pooling").get<std::string>()));
    ck.ablate_structure = hy.at("ablate_structure").get<bool>();
    ck.config = train_config_from_json(h.at("train_config"));
    ck.epoch = h.at("epoch").get<std::size_t>();
    for (const auto& r : h.at("history")) {
      ck.history.push_back({r.at("epoch").get<std::size_t>(), real_from(r.at("train_loss")), real_from(r.at("val_loss"))});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint header: ") + e.what());
  }

  std::map<std::string, Matrix*> slots;
  ck.params.for_each([&](std::string_view name, Matrix& m) { slots[std::string(name)] = &m; });
  const auto sections = rd.get<std::uint32_t>();
  if (sections != slots.size()) throw ParseError("checkpoint: expected " + std::to_string(slots.size()) + " tensors");
  for (std::uint32_t s = 0; s < sections; ++s) {
    const std::string name = rd.bytes(rd.get<std::uint32_t>());
    auto it = slots.find(name);
    if (it == slots.end()) throw ParseError("checkpoint: unknown tensor '" + name + "'");
    const auto rows = rd.get<std::uint64_t>();
    const auto cols = rd.get<std::uint64_t>();
    Matrix& m = *it->second;
    if (rows != m.rows || cols != m.cols) {
      throw ValidationError("checkpoint: tensor '" + name + "' is " + std::to_string(rows) + "x" + std::to_string(cols) +
                            ", hyper fields say " + m.shape_str());
    }
    for (double& v : m.data) v = std::bit_cast<double>(rd.get<std::uint64_t>());
  }
  if (!rd.done()) throw ParseError("checkpoint: trailing bytes");
  ck.params.check();
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  const std::string buf = serialize_checkpoint(ck);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

inline std::string history_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_loss,val_loss\n";
  char buf[96];
  for (const EpochRecord& r : history) {
    if (std::isfinite(r.val_loss)) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", r.epoch, r.train_loss, r.val_loss);
    } else {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,\n", r.epoch, r.train_loss);
    }
    out += buf;
  }
  return out;
}

}  // namespace tgfd
