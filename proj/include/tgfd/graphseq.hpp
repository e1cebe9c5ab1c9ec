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

/** @file graphseq.hpp Dynamic graph sequences: one labeled window of
 * per-service feature series plus per-step invocation edges.
 *
 * Edges are (caller, callee). The adjacency of a step stores
 * A(callee, caller) = 1, so row i lists the services that call i and
 * messages flow from caller to callee.
 *
 * On disk a dataset is JSONL (one window per line) plus a sidecar manifest
 * carrying the class count and channel names.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tgfd/error.hpp"

namespace tgfd {

struct Edge {
  std::size_t caller = 0;
  std::size_t callee = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct GraphWindow {
  std::string id;
  std::size_t num_nodes = 0;
  std::size_t num_steps = 0;
  std::size_t feat_dim = 0;
  /// Flattened [t][i][k].
  std::vector<double> features;
  /// edges[t] is the invocation set of step t.
  std::vector<std::vector<Edge>> edges;
  std::size_t label = 0;
  std::vector<std::string> node_names;

  double& x(std::size_t t, std::size_t i, std::size_t k) {
    return features[(t * num_nodes + i) * feat_dim + k];
  }
  double x(std::size_t t, std::size_t i, std::size_t k) const {
    return features[(t * num_nodes + i) * feat_dim + k];
  }
  std::span<const double> feature(std::size_t t, std::size_t i) const {
    return {features.data() + (t * num_nodes + i) * feat_dim, feat_dim};
  }

  friend bool operator==(const GraphWindow&, const GraphWindow&) = default;
};

/// Dataset-level facts that individual windows do not carry.
struct DatasetManifest {
  std::size_t num_classes = 0;
  std::vector<std::string> class_names;
  std::vector<std::string> feat_names;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Binary adjacency of one step, A(i, j) = 1 iff j calls i.
class Adjacency {
 public:
  Adjacency() = default;
  explicit Adjacency(std::size_t n) : n_(n), entries_(n * n, 0) {}

  std::size_t n() const noexcept { return n_; }
  bool operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool on = true) { entries_[i * n_ + j] = on ? 1 : 0; }
  std::size_t edge_count() const {
    return static_cast<std::size_t>(std::count(entries_.begin(), entries_.end(), 1));
  }

  friend bool operator==(const Adjacency&, const Adjacency&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> entries_;
};

inline Adjacency build_adjacency(std::span<const Edge> edges, std::size_t n) {
  Adjacency a(n);
  for (const Edge& e : edges) {
    if (e.caller >= n || e.callee >= n) {
      throw ValidationError("edge (" + std::to_string(e.caller) + "," + std::to_string(e.callee) +
                            ") out of range for " + std::to_string(n) + " nodes");
    }
    a.set(e.callee, e.caller);
  }
  return a;
}

/// Ascending j with A(i, j) = 1.
inline std::vector<std::size_t> neighborhood(const Adjacency& a, std::size_t i) {
  if (i >= a.n()) {
    throw ValidationError("node " + std::to_string(i) + " out of range for " + std::to_string(a.n()) + " nodes");
  }
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < a.n(); ++j) {
    if (a(i, j)) out.push_back(j);
  }
  return out;
}

/// Throws ValidationError naming the window and the offending field.
inline void validate(const GraphWindow& w, std::optional<std::size_t> num_classes = std::nullopt) {
  auto fail = [&](const std::string& field, const std::string& why) {
    throw ValidationError("window '" + w.id + "': " + field + ": " + why);
  };
  if (w.num_nodes == 0) fail("num_nodes", "must be at least 1");
  if (w.num_steps == 0) fail("num_steps", "must be at least 1");
  if (w.feat_dim == 0) fail("feat_dim", "must be at least 1");
  if (w.features.size() != w.num_steps * w.num_nodes * w.feat_dim) {
    fail("features", "expected " + std::to_string(w.num_steps * w.num_nodes * w.feat_dim) +
                         " entries, got " + std::to_string(w.features.size()));
  }
  if (!std::all_of(w.features.begin(), w.features.end(), [](double v) { return std::isfinite(v); })) {
    fail("features", "non-finite value");
  }
  if (w.edges.size() != w.num_steps) {
    fail("edges", "expected " + std::to_string(w.num_steps) + " steps, got " + std::to_string(w.edges.size()));
  }
  for (std::size_t t = 0; t < w.edges.size(); ++t) {
    for (const Edge& e : w.edges[t]) {
      if (e.caller >= w.num_nodes || e.callee >= w.num_nodes) {
        fail("edges", "step " + std::to_string(t) + " pair (" + std::to_string(e.caller) + "," +
                          std::to_string(e.callee) + ") out of range");
      }
    }
  }
  if (!w.node_names.empty() && w.node_names.size() != w.num_nodes) {
    fail("node_names", "expected " + std::to_string(w.num_nodes) + " names");
  }
  if (num_classes && w.label >= *num_classes) {
    fail("label", std::to_string(w.label) + " >= num_classes " + std::to_string(*num_classes));
  }
}

/// perm[i] is the new index of old node i.
inline GraphWindow permute_window(const GraphWindow& w, std::span<const std::size_t> perm) {
  if (perm.size() != w.num_nodes) throw ValidationError("permute_window: permutation size mismatch");
  std::vector<bool> seen(w.num_nodes, false);
  for (std::size_t p : perm) {
    if (p >= w.num_nodes || seen[p]) throw ValidationError("permute_window: not a bijection");
    seen[p] = true;
  }
  GraphWindow out = w;
  for (std::size_t t = 0; t < w.num_steps; ++t) {
    for (std::size_t i = 0; i < w.num_nodes; ++i) {
      for (std::size_t k = 0; k < w.feat_dim; ++k) out.x(t, perm[i], k) = w.x(t, i, k);
    }
    for (Edge& e : out.edges[t]) e = Edge{perm[e.caller], perm[e.callee]};
  }
  if (!w.node_names.empty()) {
    for (std::size_t i = 0; i < w.num_nodes; ++i) out.node_names[perm[i]] = w.node_names[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::ordered_json to_json(const GraphWindow& w) {
  nlohmann::ordered_json j;
  j["id"] = w.id;
  j["num_nodes"] = w.num_nodes;
  j["num_steps"] = w.num_steps;
  j["feat_dim"] = w.feat_dim;
  j["label"] = w.label;
  auto features = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < w.num_steps; ++t) {
    auto step = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < w.num_nodes; ++i) {
      auto f = w.feature(t, i);
      step.push_back(std::vector<double>(f.begin(), f.end()));
    }
    features.push_back(std::move(step));
  }
  j["features"] = std::move(features);
  auto edges = nlohmann::ordered_json::array();
  for (const auto& step : w.edges) {
    auto s = nlohmann::ordered_json::array();
    for (const Edge& e : step) s.push_back({e.caller, e.callee});
    edges.push_back(std::move(s));
  }
  j["edges"] = std::move(edges);
  if (!w.node_names.empty()) j["node_names"] = w.node_names;
  return j;
}

inline GraphWindow window_from_json(const nlohmann::json& j) {
  GraphWindow w;
  try {
    w.id = j.at("id").get<std::string>();
    w.num_nodes = j.at("num_nodes").get<std::size_t>();
    w.num_steps = j.at("num_steps").get<std::size_t>();
    w.feat_dim = j.at("feat_dim").get<std::size_t>();
    w.label = j.at("label").get<std::size_t>();
    const auto& feats = j.at("features");
    if (feats.size() != w.num_steps) {
      throw ValidationError("window '" + w.id + "': features: expected " + std::to_string(w.num_steps) + " steps");
    }
    w.features.reserve(w.num_steps * w.num_nodes * w.feat_dim);
    for (const auto& step : feats) {
      if (step.size() != w.num_nodes) {
        throw ValidationError("window '" + w.id + "': features: expected " + std::to_string(w.num_nodes) + " nodes per step");
      }
      for (const auto& node : step) {
        if (node.size() != w.feat_dim) {
          throw ValidationError("window '" + w.id + "': features: expected " + std::to_string(w.feat_dim) + " channels");
        }
        for (const auto& v : node) w.features.push_back(v.get<double>());
      }
    }
    for (const auto& step : j.at("edges")) {
      std::vector<Edge> es;
      for (const auto& pair : step) {
        if (pair.size() != 2) throw ValidationError("window '" + w.id + "': edges: pair must have 2 entries");
        es.push_back(Edge{pair[0].get<std::size_t>(), pair[1].get<std::size_t>()});
      }
      w.edges.push_back(std::move(es));
    }
    if (j.contains("node_names")) w.node_names = j["node_names"].get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("window '" + w.id + "': " + e.what());
  }
  return w;
}

inline std::string serialize_window(const GraphWindow& w) { return to_json(w).dump(); }

inline void save_windows(std::span<const GraphWindow> windows, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const GraphWindow& w : windows) out << serialize_window(w) << '\n';
  out.flush();
  if (!out) throw IoError("write failed for '" + path + "'");
}

/// Windows in file order. Blank lines are ignored.
inline std::vector<GraphWindow> load_windows(const std::string& path,
                                             std::optional<std::size_t> num_classes = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<GraphWindow> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.what(), lineno);
    }
    GraphWindow w;
    try {
      w = window_from_json(j);
      validate(w, num_classes);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(std::move(w));
  }
  return out;
}

inline void save_manifest(const DatasetManifest& m, const std::string& path) {
  nlohmann::ordered_json j;
  j["num_classes"] = m.num_classes;
  j["class_names"] = m.class_names;
  j["feat_names"] = m.feat_names;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

inline DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  DatasetManifest m;
  try {
    const auto j = nlohmann::json::parse(in);
    m.num_classes = j.at("num_classes").get<std::size_t>();
    m.class_names = j.value("class_names", std::vector<std::string>{});
    m.feat_names = j.value("feat_names", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("manifest '" + path + "': " + e.what());
  }
  if (m.num_classes < 2) throw ValidationError("manifest '" + path + "': num_classes must be >= 2");
  if (!m.class_names.empty() && m.class_names.size() != m.num_classes) {
    throw ValidationError("manifest '" + path + "': class_names length differs from num_classes");
  }
  return m;
}

}  // namespace tgfd
