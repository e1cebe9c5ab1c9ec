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

/** @file simgen.hpp Synthetic microservice fault scenarios.
 *
 * A layered acyclic call graph with a single entry service (layer 0) is
 * generated, then each window gets smooth per-service baselines plus noise
 * and one of four fault patterns:
 *
 *   NORMAL        no injection
 *   SINGLE_POINT  one service degrades, nothing spreads
 *   CASCADE       one deep service degrades and the fault climbs to its
 *                 callers, hop by hop, attenuated per hop
 *   COMMON_CAUSE  several services with no call path between any two of
 *                 them degrade at the same time, independently
 *
 * COMMON_CAUSE windows copy the size and per-hop severity profile of a
 * cascade started from a randomly drawn root, so the two classes carry the
 * same multiset of per-service anomalies and differ in where those
 * anomalies sit on the call graph.
 *
 * Impact travels callee -> caller here, while the model aggregates
 * caller -> callee.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "tgfd/error.hpp"
#include "tgfd/graphseq.hpp"
#include "tgfd/random.hpp"

namespace tgfd {

enum class FaultClass : std::size_t { kNormal = 0, kSinglePoint = 1, kCascade = 2, kCommonCause = 3 };

inline constexpr std::size_t kNumFaultClasses = 4;
inline const std::array<std::string, kNumFaultClasses> kFaultClassNames = {"NORMAL", "SINGLE_POINT", "CASCADE",
                                                                           "COMMON_CAUSE"};

inline const std::string& fault_class_name(FaultClass c) { return kFaultClassNames[static_cast<std::size_t>(c)]; }

inline FaultClass parse_fault_class(const std::string& s) {
  for (std::size_t k = 0; k < kNumFaultClasses; ++k) {
    if (kFaultClassNames[k] == s) return static_cast<FaultClass>(k);
  }
  throw ValidationError("unknown fault class '" + s + "'");
}

struct Topology {
  std::size_t num_services = 0;
  std::size_t num_layers = 0;
  std::vector<std::size_t> layer;  // per service
  std::vector<Edge> base_edges;    // sorted, unique
  double edge_keep_prob = 0.9;

  /// callers[v] = services with an edge into v.
  std::vector<std::vector<std::size_t>> callers() const {
    std::vector<std::vector<std::size_t>> c(num_services);
    for (const Edge& e : base_edges) c[e.callee].push_back(e.caller);
    return c;
  }
};

struct TopologyConfig {
  std::size_t num_services = 12;
  std::size_t num_layers = 4;
  std::size_t branching = 2;
  double edge_keep_prob = 0.9;
};

/// Layer 0 is exactly service 0; each deeper service gets one caller from the
/// layer right above it, then callers are topped up to `branching` callees
/// from the next layer. Service indices are ordered by layer.
inline Topology gen_topology(std::size_t num_services, std::size_t num_layers, std::size_t branching,
                             std::uint64_t seed, double edge_keep_prob = 0.9) {
  if (num_layers < 2 || num_services < num_layers) {
    throw ValidationError("gen_topology: need num_services >= num_layers >= 2 (got " + std::to_string(num_services) +
                          ", " + std::to_string(num_layers) + ")");
  }
  if (!(edge_keep_prob > 0 && edge_keep_prob <= 1)) throw ValidationError("gen_topology: edge_keep_prob must be in (0, 1]");
  Rng rng(seed);
  Topology topo;
  topo.num_services = num_services;
  topo.num_layers = num_layers;
  topo.edge_keep_prob = edge_keep_prob;

  std::vector<std::size_t> layers = {0};
  for (std::size_t l = 1; l < num_layers; ++l) layers.push_back(l);
  while (layers.size() < num_services) layers.push_back(1 + rng.below(num_layers - 1));
  std::sort(layers.begin(), layers.end());
  topo.layer = layers;

  std::vector<std::vector<std::size_t>> by_layer(num_layers);
  for (std::size_t v = 0; v < num_services; ++v) by_layer[topo.layer[v]].push_back(v);

  std::set<Edge> edges;
  for (std::size_t v = 1; v < num_services; ++v) {
    const auto& above = by_layer[topo.layer[v] - 1];
    edges.insert(Edge{above[rng.below(above.size())], v});
  }
  for (std::size_t u = 0; u < num_services; ++u) {
    const std::size_t l = topo.layer[u];
    if (l + 1 >= num_layers) continue;
    std::vector<std::size_t> candidates;
    for (std::size_t v : by_layer[l + 1]) {
      if (!edges.count(Edge{u, v})) candidates.push_back(v);
    }
    rng.shuffle(candidates);
    std::size_t out = 0;
    for (const Edge& e : edges) out += e.caller == u ? 1 : 0;
    for (std::size_t c = 0; out < branching && c < candidates.size(); ++c, ++out) edges.insert(Edge{u, candidates[c]});
  }
  topo.base_edges.assign(edges.begin(), edges.end());
  return topo;
}

struct ScenarioConfig {
  std::size_t num_steps = 8;
  std::size_t feat_dim = 6;
  double noise_std = 0.3;
  double walk_std = 0.05;
  std::size_t fault_onset_step = 2;
  double fault_magnitude = 2.0;
  std::size_t propagation_delay_steps = 0;
  double propagation_attenuation = 0.7;

  void check() const {
    if (feat_dim < 3) throw ValidationError("feat_dim must be >= 3 (latency, error, utilization)");
    if (num_steps < 1) throw ValidationError("num_steps must be >= 1");
    if (fault_onset_step >= num_steps) throw ValidationError("fault_onset_step must be < num_steps");
    if (!(propagation_attenuation > 0 && propagation_attenuation < 1)) {
      throw ValidationError("propagation_attenuation must be in (0, 1)");
    }
    if (!(noise_std >= 0) || !(walk_std >= 0)) throw ValidationError("noise levels must be >= 0");
  }
};

inline std::vector<std::string> channel_names(std::size_t feat_dim) {
  std::vector<std::string> names = {"latency", "error_rate", "utilization"};
  for (std::size_t k = 3; k < feat_dim; ++k) names.push_back("noise_" + std::to_string(k - 3));
  names.resize(feat_dim);
  return names;
}

inline constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();

struct Propagation {
  /// Sorted affected services at each step.
  std::vector<std::vector<std::size_t>> affected_per_step;
  /// severity[t * num_services + v]; zero when unaffected.
  std::vector<double> severity;
  /// Hop distance from the nearest root along reversed call edges, kUnreached if none.
  std::vector<std::size_t> hops;
};

/// Breadth-first spread from `roots` towards callers. A service `d` hops out
/// is affected from step onset + d * delay onwards with severity
/// magnitude * attenuation^d; steps at or past num_steps are dropped.
inline Propagation propagation_oracle(const Topology& topo, const std::vector<std::size_t>& roots,
                                      const ScenarioConfig& cfg) {
  const std::size_t n = topo.num_services, steps = cfg.num_steps;
  Propagation p;
  p.hops.assign(n, kUnreached);
  p.affected_per_step.assign(steps, {});
  p.severity.assign(steps * n, 0.0);
  const auto callers = topo.callers();
  std::queue<std::size_t> q;
  for (std::size_t r : roots) {
    if (r >= n) throw ValidationError("propagation_oracle: root " + std::to_string(r) + " out of range");
    if (p.hops[r] != 0) {
      p.hops[r] = 0;
      q.push(r);
    }
  }
  while (!q.empty()) {
    const std::size_t v = q.front();
    q.pop();
    for (std::size_t u : callers[v]) {
      if (p.hops[u] == kUnreached) {
        p.hops[u] = p.hops[v] + 1;
        q.push(u);
      }
    }
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (p.hops[v] == kUnreached) continue;
    // Guard the multiply: delay * hops can be huge.
    const std::size_t d = p.hops[v];
    if (cfg.propagation_delay_steps != 0 && d > (steps - 1) / cfg.propagation_delay_steps) continue;
    const std::size_t first = cfg.fault_onset_step + d * cfg.propagation_delay_steps;
    const double sev = cfg.fault_magnitude * std::pow(cfg.propagation_attenuation, static_cast<double>(d));
    for (std::size_t t = first; t < steps; ++t) {
      p.affected_per_step[t].push_back(v);
      p.severity[t * n + v] = sev;
    }
  }
  return p;
}

struct GroundTruth {
  std::string id;
  FaultClass fault = FaultClass::kNormal;
  std::vector<std::size_t> roots;
  std::vector<std::vector<std::size_t>> affected_per_step;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct GeneratedWindow {
  GraphWindow window;
  GroundTruth truth;
  /// Noise-free baseline, [t][i][k].
  std::vector<double> trend;
  /// Severity added to the latency and error channels, [t][i].
  std::vector<double> injected;
};

namespace sim_detail {

enum Stream : std::uint64_t { kBaseline = 11, kEdges = 12, kRoot = 13, kCommon = 14 };

/// Candidates for a fault origin: services in the deeper half of the layers.
inline std::vector<std::size_t> deep_services(const Topology& topo) {
  const std::size_t min_layer = std::max<std::size_t>(1, topo.num_layers / 2);
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < topo.num_services; ++v) {
    if (topo.layer[v] >= min_layer) out.push_back(v);
  }
  return out;
}

/// ancestors[v][u] is true when u reaches v through call edges.
inline std::vector<std::vector<bool>> ancestor_matrix(const Topology& topo) {
  const std::size_t n = topo.num_services;
  std::vector<std::vector<bool>> anc(n, std::vector<bool>(n, false));
  const auto callers = topo.callers();
  // Services are ordered by layer, so callers come first.
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t u : callers[v]) {
      anc[v][u] = true;
      for (std::size_t w = 0; w < n; ++w) {
        if (anc[u][w]) anc[v][w] = true;
      }
    }
  }
  return anc;
}

}  // namespace sim_detail

inline GeneratedWindow gen_window(const Topology& topo, FaultClass fault, const ScenarioConfig& cfg, std::uint64_t seed,
                                  std::string id = "") {
  cfg.check();
  using namespace sim_detail;
  const std::size_t n = topo.num_services, steps = cfg.num_steps, dx = cfg.feat_dim;
  GeneratedWindow g;
  GraphWindow& w = g.window;
  w.id = id.empty() ? "sim-" + std::to_string(seed) : std::move(id);
  w.num_nodes = n;
  w.num_steps = steps;
  w.feat_dim = dx;
  w.label = static_cast<std::size_t>(fault);
  for (std::size_t v = 0; v < n; ++v) w.node_names.push_back("svc-" + std::to_string(v));

  // Baseline: per-service level plus a slow random walk, then observation noise.
  Rng base = Rng::derive(seed, kBaseline);
  g.trend.assign(steps * n * dx, 0.0);
  w.features.assign(steps * n * dx, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t k = 0; k < dx; ++k) {
      double level = base.normal(0.0, 0.5);
      for (std::size_t t = 0; t < steps; ++t) {
        if (t > 0) level += base.normal(0.0, cfg.walk_std);
        g.trend[(t * n + v) * dx + k] = level;
      }
    }
  }
  for (std::size_t e = 0; e < g.trend.size(); ++e) w.features[e] = g.trend[e] + base.normal(0.0, cfg.noise_std);

  Rng edge_rng = Rng::derive(seed, kEdges);
  w.edges.assign(steps, {});
  for (std::size_t t = 0; t < steps; ++t) {
    for (const Edge& e : topo.base_edges) {
      if (edge_rng.bernoulli(topo.edge_keep_prob)) w.edges[t].push_back(e);
    }
  }

  g.injected.assign(steps * n, 0.0);
  g.truth.id = w.id;
  g.truth.fault = fault;
  g.truth.affected_per_step.assign(steps, {});

  const auto deep = deep_services(topo);
  Rng root_rng = Rng::derive(seed, kRoot);
  const std::size_t root = deep[root_rng.below(deep.size())];

  auto inject_from = [&](std::size_t v, double severity) {
    for (std::size_t t = cfg.fault_onset_step; t < steps; ++t) {
      g.injected[t * n + v] = severity;
      g.truth.affected_per_step[t].push_back(v);
    }
  };

  switch (fault) {
    case FaultClass::kNormal:
      break;
    case FaultClass::kSinglePoint:
      g.truth.roots = {root};
      inject_from(root, cfg.fault_magnitude);
      break;
    case FaultClass::kCascade: {
      g.truth.roots = {root};
      const Propagation p = propagation_oracle(topo, g.truth.roots, cfg);
      g.injected = p.severity;
      g.truth.affected_per_step = p.affected_per_step;
      break;
    }
    case FaultClass::kCommonCause: {
      Rng cc = Rng::derive(seed, kCommon);
      // Severity profile of a cascade from a random deep service.
      const std::size_t phantom = deep[cc.below(deep.size())];
      const Propagation p = propagation_oracle(topo, {phantom}, cfg);
      std::vector<std::size_t> profile;
      for (std::size_t h : p.hops) {
        if (h != kUnreached) profile.push_back(h);
      }
      std::sort(profile.begin(), profile.end());

      // Greedy antichain: no chosen service may reach another through calls.
      const auto anc = ancestor_matrix(topo);
      std::vector<std::size_t> order;
      for (std::size_t v = 1; v < n; ++v) order.push_back(v);
      cc.shuffle(order);
      // A service comparable to every other one would block all later picks.
      std::erase_if(order, [&](std::size_t v) {
        for (std::size_t u = 1; u < n; ++u) {
          if (u != v && !anc[v][u] && !anc[u][v]) return false;
        }
        return true;
      });
      std::vector<std::size_t> chosen;
      for (std::size_t v : order) {
        if (chosen.size() == profile.size()) break;
        const bool independent = std::all_of(chosen.begin(), chosen.end(),
                                             [&](std::size_t u) { return !anc[v][u] && !anc[u][v]; });
        if (independent) chosen.push_back(v);
      }
      if (chosen.size() < 2) {
        throw ValidationError("gen_window: topology too small for a common-cause fault (need 2 independent services)");
      }
      profile.resize(chosen.size());
      cc.shuffle(profile);
      std::sort(chosen.begin(), chosen.end());
      g.truth.roots = chosen;
      for (std::size_t r = 0; r < chosen.size(); ++r) {
        inject_from(chosen[r], cfg.fault_magnitude * std::pow(cfg.propagation_attenuation, static_cast<double>(profile[r])));
      }
      for (auto& s : g.truth.affected_per_step) std::sort(s.begin(), s.end());
      break;
    }
  }

  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t v = 0; v < n; ++v) {
      const double s = g.injected[t * n + v];
      if (s == 0.0) continue;
      w.x(t, v, 0) += s;  // latency
      w.x(t, v, 1) += s;  // error rate
    }
  }
  return g;
}

struct SimDataset {
  std::vector<GraphWindow> windows;
  std::vector<GroundTruth> truths;
  DatasetManifest manifest;
};

/// per_class windows of each class, shuffled; window n uses seed derived from (seed, n).
/// The shared topology comes from topology_seed when given, else from seed, so
/// separately generated splits can share one call graph.
inline SimDataset gen_dataset(const TopologyConfig& tc, const ScenarioConfig& sc, std::size_t per_class,
                              std::uint64_t seed, bool shared_topology = true,
                              std::optional<std::uint64_t> topology_seed = std::nullopt) {
  if (per_class < 1) throw ValidationError("gen_dataset: per_class must be >= 1");
  sc.check();
  std::vector<FaultClass> labels;
  for (std::size_t c = 0; c < kNumFaultClasses; ++c) {
    labels.insert(labels.end(), per_class, static_cast<FaultClass>(c));
  }
  Rng shuffle_rng = Rng::derive(seed, 1);
  shuffle_rng.shuffle(labels);

  const Topology shared = gen_topology(tc.num_services, tc.num_layers, tc.branching,
                                       Rng::derive(topology_seed.value_or(seed), 2).next(),
                                       tc.edge_keep_prob);
  SimDataset ds;
  ds.manifest.num_classes = kNumFaultClasses;
  ds.manifest.class_names.assign(kFaultClassNames.begin(), kFaultClassNames.end());
  ds.manifest.feat_names = channel_names(sc.feat_dim);
  char id[32];
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const std::uint64_t wseed = Rng::derive(seed, 1000 + n).next();
    std::snprintf(id, sizeof id, "sim-%06zu", n);
    Topology own;
    if (!shared_topology) own = gen_topology(tc.num_services, tc.num_layers, tc.branching, wseed ^ 0x5eed, tc.edge_keep_prob);
    GeneratedWindow g = gen_window(shared_topology ? shared : own, labels[n], sc, wseed, id);
    ds.windows.push_back(std::move(g.window));
    ds.truths.push_back(std::move(g.truth));
  }
  return ds;
}

inline nlohmann::ordered_json to_json(const GroundTruth& t) {
  nlohmann::ordered_json j;
  j["id"] = t.id;
  j["class"] = fault_class_name(t.fault);
  j["roots"] = t.roots;
  j["affected_per_step"] = t.affected_per_step;
  return j;
}

inline GroundTruth truth_from_json(const nlohmann::json& j) {
  GroundTruth t;
  try {
    t.id = j.at("id").get<std::string>();
    t.fault = parse_fault_class(j.at("class").get<std::string>());
    t.roots = j.at("roots").get<std::vector<std::size_t>>();
    t.affected_per_step = j.at("affected_per_step").get<std::vector<std::vector<std::size_t>>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("ground truth: ") + e.what());
  }
  return t;
}

inline void save_truths(std::span<const GroundTruth> truths, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const GroundTruth& t : truths) out << to_json(t).dump() << '\n';
}

inline std::vector<GroundTruth> load_truths(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<GroundTruth> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(truth_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return out;
}

}  // namespace tgfd
