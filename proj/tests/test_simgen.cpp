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


#include <algorithm>
#include <map>
#include <queue>
#include <set>

#include "tgfd/simgen.hpp"
#include "test_util.hpp"

namespace tgfd {
namespace {

using testing::read_bytes;
using testing::scratch_dir;

Topology chain3() {
  Topology t;
  t.num_services = 3;
  t.num_layers = 3;
  t.layer = {0, 1, 2};
  t.base_edges = {{0, 1}, {1, 2}};
  t.edge_keep_prob = 1.0;
  return t;
}

bool acyclic(const Topology& t) {
  std::vector<std::size_t> indeg(t.num_services, 0);
  std::vector<std::vector<std::size_t>> out(t.num_services);
  for (const Edge& e : t.base_edges) {
    out[e.caller].push_back(e.callee);
    ++indeg[e.callee];
  }
  std::queue<std::size_t> q;
  for (std::size_t v = 0; v < t.num_services; ++v) {
    if (!indeg[v]) q.push(v);
  }
  std::size_t seen = 0;
  while (!q.empty()) {
    const std::size_t v = q.front();
    q.pop();
    ++seen;
    for (std::size_t w : out[v]) {
      if (--indeg[w] == 0) q.push(w);
    }
  }
  return seen == t.num_services;
}

TEST(Topology, TwoServicesSingleEdge) {
  const Topology t = gen_topology(2, 2, 1, 5);
  EXPECT_EQ(t.base_edges, (std::vector<Edge>{{0, 1}}));
}

TEST(Topology, AcyclicAndEveryDeepNodeCalled) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Topology t = gen_topology(12, 4, 2, s);
    EXPECT_TRUE(acyclic(t));
    // Reachability from service 0 by BFS over call edges.
    std::vector<bool> reached(12, false);
    reached[0] = true;
    std::queue<std::size_t> q;
    q.push(0);
    while (!q.empty()) {
      const std::size_t v = q.front();
      q.pop();
      for (const Edge& e : t.base_edges) {
        if (e.caller == v && !reached[e.callee]) {
          reached[e.callee] = true;
          q.push(e.callee);
        }
      }
    }
    const auto callers = t.callers();
    for (std::size_t v = 0; v < 12; ++v) {
      EXPECT_TRUE(reached[v]) << "seed " << s << " service " << v;
      if (t.layer[v] >= 1) EXPECT_GE(callers[v].size(), 1u);
      for (std::size_t u : callers[v]) EXPECT_EQ(t.layer[u] + 1, t.layer[v]);
    }
  }
}

TEST(Topology, RejectsDegenerateShapes) {
  EXPECT_THROW(gen_topology(3, 1, 2, 1), ValidationError);
  EXPECT_THROW(gen_topology(3, 4, 2, 1), ValidationError);
}

TEST(Oracle, NoRootsNothingAffected) {
  const Propagation p = propagation_oracle(chain3(), {}, ScenarioConfig{});
  for (const auto& s : p.affected_per_step) EXPECT_TRUE(s.empty());
}

TEST(Oracle, ChainHandWalk) {
  ScenarioConfig cfg;
  cfg.num_steps = 6;
  cfg.fault_onset_step = 1;
  cfg.propagation_delay_steps = 1;
  const Propagation p = propagation_oracle(chain3(), {2}, cfg);
  using S = std::vector<std::size_t>;
  EXPECT_EQ(p.affected_per_step[0], S{});
  EXPECT_EQ(p.affected_per_step[1], (S{2}));
  EXPECT_EQ(p.affected_per_step[2], (S{1, 2}));
  EXPECT_EQ(p.affected_per_step[3], (S{0, 1, 2}));
  EXPECT_EQ(p.affected_per_step[5], (S{0, 1, 2}));
  EXPECT_EQ(p.hops, (S{2, 1, 0}));
  EXPECT_DOUBLE_EQ(p.severity[3 * 3 + 0], cfg.fault_magnitude * 0.7 * 0.7);
}

TEST(Oracle, DelayBeyondWindowOnlyRoots) {
  ScenarioConfig cfg;
  cfg.num_steps = 4;
  cfg.fault_onset_step = 0;
  cfg.propagation_delay_steps = 10;
  const Propagation p = propagation_oracle(chain3(), {2}, cfg);
  for (const auto& s : p.affected_per_step) EXPECT_EQ(s, std::vector<std::size_t>{2});
}

TEST(Oracle, MonotoneOverSteps) {
  ScenarioConfig cfg;
  cfg.propagation_delay_steps = 1;
  for (std::uint64_t s = 0; s < 30; ++s) {
    const Topology t = gen_topology(12, 4, 2, s);
    const Propagation p = propagation_oracle(t, {11 - s % 4}, cfg);
    for (std::size_t k = 1; k < p.affected_per_step.size(); ++k) {
      const std::set<std::size_t> a(p.affected_per_step[k - 1].begin(), p.affected_per_step[k - 1].end());
      const std::set<std::size_t> b(p.affected_per_step[k].begin(), p.affected_per_step[k].end());
      EXPECT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
    }
  }
}

TEST(GenWindow, NormalDeviationsArePureNoise) {
  const Topology t = gen_topology(12, 4, 2, 1);
  const ScenarioConfig cfg;
  const std::size_t n = 12, size = cfg.num_steps * n * cfg.feat_dim;
  std::vector<double> mean_dev(size, 0.0);
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    const GeneratedWindow g = gen_window(t, FaultClass::kNormal, cfg, static_cast<std::uint64_t>(s));
    EXPECT_TRUE(std::all_of(g.injected.begin(), g.injected.end(), [](double x) { return x == 0.0; }));
    for (std::size_t e = 0; e < size; ++e) mean_dev[e] += (g.window.features[e] - g.trend[e]) / seeds;
  }
  // Mean of 100 N(0, sd) draws: 4 standard errors is 0.4 sd.
  for (double d : mean_dev) EXPECT_LE(std::abs(d), 4.0 * cfg.noise_std / std::sqrt(double(seeds)));
}

TEST(GenWindow, CascadeInjectionMatchesOracle) {
  const Topology t = gen_topology(12, 4, 2, 2);
  ScenarioConfig cfg;
  for (std::size_t delay : {0u, 1u}) {
    cfg.propagation_delay_steps = delay;
    for (std::uint64_t s = 0; s < 40; ++s) {
      const GeneratedWindow g = gen_window(t, FaultClass::kCascade, cfg, s);
      const Propagation p = propagation_oracle(t, g.truth.roots, cfg);
      for (std::size_t k = 0; k < cfg.num_steps; ++k) {
        std::vector<std::size_t> hit;
        for (std::size_t v = 0; v < 12; ++v) {
          if (g.injected[k * 12 + v] != 0.0) hit.push_back(v);
        }
        EXPECT_EQ(hit, p.affected_per_step[k]);
        EXPECT_EQ(g.truth.affected_per_step[k], p.affected_per_step[k]);
      }
    }
  }
}

TEST(GenWindow, CascadeAndSinglePointShareRootInjection) {
  const Topology t = gen_topology(12, 4, 2, 3);
  const ScenarioConfig cfg;
  for (std::uint64_t s = 0; s < 30; ++s) {
    const GeneratedWindow c = gen_window(t, FaultClass::kCascade, cfg, s);
    const GeneratedWindow p = gen_window(t, FaultClass::kSinglePoint, cfg, s);
    ASSERT_EQ(c.truth.roots, p.truth.roots);
    EXPECT_EQ(c.window.edges, p.window.edges);
    const std::size_t root = p.truth.roots[0];
    const Propagation prop = propagation_oracle(t, {root}, cfg);
    for (std::size_t k = 0; k < cfg.num_steps; ++k) {
      for (std::size_t v = 0; v < 12; ++v) {
        const bool propagated = v != root && prop.hops[v] != kUnreached && k >= cfg.fault_onset_step;
        for (std::size_t ch = 0; ch < cfg.feat_dim; ++ch) {
          const bool same = c.window.x(k, v, ch) == p.window.x(k, v, ch);
          EXPECT_EQ(same, !(propagated && ch < 2)) << "seed " << s << " t " << k << " v " << v << " ch " << ch;
        }
      }
    }
  }
}

TEST(GenWindow, CommonCauseRootsIndependentAndStatic) {
  const Topology t = gen_topology(12, 4, 2, 4);
  const ScenarioConfig cfg;
  const auto anc = sim_detail::ancestor_matrix(t);
  for (std::uint64_t s = 0; s < 30; ++s) {
    const GeneratedWindow g = gen_window(t, FaultClass::kCommonCause, cfg, s);
    ASSERT_GE(g.truth.roots.size(), 2u);
    for (std::size_t a : g.truth.roots) {
      for (std::size_t b : g.truth.roots) {
        if (a != b) EXPECT_FALSE(anc[a][b]) << a << " reaches " << b;
      }
    }
    for (std::size_t k = cfg.fault_onset_step; k < cfg.num_steps; ++k) EXPECT_EQ(g.truth.affected_per_step[k], g.truth.roots);
    for (std::size_t k = 0; k < cfg.fault_onset_step; ++k) EXPECT_TRUE(g.truth.affected_per_step[k].empty());
  }
}

TEST(GenWindow, SameSeedSameBytes) {
  const Topology t = gen_topology(12, 4, 2, 5);
  for (FaultClass f : {FaultClass::kNormal, FaultClass::kSinglePoint, FaultClass::kCascade, FaultClass::kCommonCause}) {
    EXPECT_EQ(serialize_window(gen_window(t, f, ScenarioConfig{}, 77, "x").window),
              serialize_window(gen_window(t, f, ScenarioConfig{}, 77, "x").window));
  }
}

TEST(GenDataset, CountsAndDeterminism) {
  const auto dir = scratch_dir();
  const SimDataset a = gen_dataset(TopologyConfig{}, ScenarioConfig{}, 5, 9);
  EXPECT_EQ(a.windows.size(), 20u);
  std::map<std::size_t, std::size_t> hist;
  for (const GraphWindow& w : a.windows) {
    ++hist[w.label];
    EXPECT_NO_THROW(validate(w, 4));
  }
  EXPECT_EQ(hist, (std::map<std::size_t, std::size_t>{{0, 5}, {1, 5}, {2, 5}, {3, 5}}));
  EXPECT_EQ(a.manifest.num_classes, 4u);
  EXPECT_EQ(a.manifest.feat_names.size(), 6u);

  const SimDataset b = gen_dataset(TopologyConfig{}, ScenarioConfig{}, 5, 9);
  save_windows(a.windows, (dir / "a.jsonl").string());
  save_windows(b.windows, (dir / "b.jsonl").string());
  EXPECT_EQ(read_bytes(dir / "a.jsonl"), read_bytes(dir / "b.jsonl"));
  EXPECT_THROW(gen_dataset(TopologyConfig{}, ScenarioConfig{}, 0, 9), ValidationError);
}

TEST(GenDataset, TopologySeedSharesCallGraph) {
  const SimDataset a = gen_dataset(TopologyConfig{}, ScenarioConfig{}, 2, 1, true, 42);
  const SimDataset b = gen_dataset(TopologyConfig{}, ScenarioConfig{}, 2, 2, true, 42);
  std::set<Edge> ea, eb;
  for (const auto& w : a.windows) {
    for (const auto& s : w.edges) ea.insert(s.begin(), s.end());
  }
  for (const auto& w : b.windows) {
    for (const auto& s : w.edges) eb.insert(s.begin(), s.end());
  }
  EXPECT_EQ(ea, eb);
}

TEST(Truth, JsonlRoundTrip) {
  const auto dir = scratch_dir();
  const SimDataset a = gen_dataset(TopologyConfig{}, ScenarioConfig{}, 3, 10);
  save_truths(a.truths, (dir / "t.jsonl").string());
  EXPECT_EQ(load_truths((dir / "t.jsonl").string()), a.truths);
  const auto j = to_json(a.truths[0]);
  EXPECT_EQ(j.begin().key(), "id");
  EXPECT_TRUE(j.contains("class"));
  EXPECT_TRUE(j.contains("roots"));
  EXPECT_TRUE(j.contains("affected_per_step"));
}

TEST(ScenarioConfig, Checks) {
  ScenarioConfig c;
  c.feat_dim = 2;
  EXPECT_THROW(c.check(), ValidationError);
  c = ScenarioConfig{};
  c.fault_onset_step = c.num_steps;
  EXPECT_THROW(c.check(), ValidationError);
  c = ScenarioConfig{};
  c.propagation_attenuation = 1.0;
  EXPECT_THROW(c.check(), ValidationError);
}

}  // namespace
}  // namespace tgfd
