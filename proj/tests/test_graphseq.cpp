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
#include <numeric>
#include <set>

#include "tgfd/graphseq.hpp"
#include "tgfd/random.hpp"
#include "tgfd/sample.hpp"
#include "test_util.hpp"

namespace tgfd {
namespace {

using testing::read_bytes;
using testing::scratch_dir;
using testing::write_bytes;

GraphWindow tiny_window() {
  GraphWindow w;
  w.id = "w0";
  w.num_nodes = 2;
  w.num_steps = 1;
  w.feat_dim = 2;
  w.features = {1.0, 2.0, 3.0, 4.0};
  w.edges = {{Edge{0, 1}}};
  w.label = 1;
  return w;
}

TEST(BuildAdjacency, EmptyEdgeSetGivesZeroMatrix) {
  const Adjacency a = build_adjacency({}, 3);
  EXPECT_EQ(a.n(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_FALSE(a(i, j));
  }
  EXPECT_EQ(a.edge_count(), 0u);
}

TEST(BuildAdjacency, CallerCalleeStoredInCalleeRow) {
  const std::vector<Edge> edges = {{0, 1}};
  const Adjacency a = build_adjacency(edges, 2);
  EXPECT_TRUE(a(1, 0));
  EXPECT_FALSE(a(0, 1));
  EXPECT_FALSE(a(0, 0));
  EXPECT_FALSE(a(1, 1));
}

TEST(BuildAdjacency, DuplicateEdgesCollapse) {
  const std::vector<Edge> edges = {{0, 1}, {0, 1}};
  const Adjacency a = build_adjacency(edges, 2);
  EXPECT_TRUE(a(1, 0));
  EXPECT_EQ(a.edge_count(), 1u);
}

TEST(BuildAdjacency, SelfCallKeptOnDiagonal) {
  const std::vector<Edge> edges = {{1, 1}};
  const Adjacency a = build_adjacency(edges, 2);
  EXPECT_TRUE(a(1, 1));
  EXPECT_EQ(neighborhood(a, 1), std::vector<std::size_t>{1});
}

TEST(BuildAdjacency, OutOfRangeNamesPair) {
  const std::vector<Edge> edges = {{0, 2}};
  try {
    build_adjacency(edges, 2);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("(0,2)"), std::string::npos) << e.what();
  }
}

TEST(Neighborhood, Examples) {
  EXPECT_TRUE(neighborhood(build_adjacency({}, 2), 0).empty());
  const std::vector<Edge> one = {{0, 1}};
  EXPECT_EQ(neighborhood(build_adjacency(one, 2), 1), (std::vector<std::size_t>{0}));
  const std::vector<Edge> two = {{0, 2}, {1, 2}};
  EXPECT_EQ(neighborhood(build_adjacency(two, 3), 2), (std::vector<std::size_t>{0, 1}));
}

TEST(Neighborhood, RowSupportsReproduceCalleeNeighborhoods) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    std::vector<Edge> edges;
    const std::size_t m = rng.below(20);
    for (std::size_t e = 0; e < m; ++e) edges.push_back(Edge{rng.below(n), rng.below(n)});
    std::map<std::size_t, std::set<std::size_t>> expected;
    for (const Edge& e : edges) expected[e.callee].insert(e.caller);
    const Adjacency a = build_adjacency(edges, n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto got = neighborhood(a, i);
      const auto& want = expected[i];
      EXPECT_EQ(std::set<std::size_t>(got.begin(), got.end()), want);
      EXPECT_TRUE(std::is_sorted(got.begin(), got.end()));
    }
  }
}

TEST(Validate, AcceptsGoodWindow) { EXPECT_NO_THROW(validate(tiny_window(), 2)); }

TEST(Validate, RejectsStructuralViolations) {
  GraphWindow w = tiny_window();
  w.features.pop_back();
  EXPECT_THROW(validate(w), ValidationError);

  w = tiny_window();
  w.features[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(validate(w), ValidationError);

  w = tiny_window();
  w.edges[0].push_back(Edge{0, 2});
  EXPECT_THROW(validate(w), ValidationError);

  w = tiny_window();
  w.edges.push_back({});
  EXPECT_THROW(validate(w), ValidationError);

  w = tiny_window();
  EXPECT_THROW(validate(w, 1), ValidationError);
}

TEST(Windows, SaveLoadRoundTrip) {
  const auto dir = scratch_dir();
  std::vector<GraphWindow> ws;
  for (std::uint64_t s = 0; s < 10; ++s) {
    RandomWindowConfig cfg;
    cfg.num_nodes = 1 + s % 5;
    ws.push_back(random_window(cfg, s, "r" + std::to_string(s)));
  }
  save_windows(ws, (dir / "a.jsonl").string());
  const auto back = load_windows((dir / "a.jsonl").string(), 3);
  ASSERT_EQ(back.size(), ws.size());
  for (std::size_t i = 0; i < ws.size(); ++i) EXPECT_EQ(back[i], ws[i]) << i;
  save_windows(back, (dir / "b.jsonl").string());
  EXPECT_EQ(read_bytes(dir / "a.jsonl"), read_bytes(dir / "b.jsonl"));
}

TEST(Windows, EmptyFileAndEmptyList) {
  const auto dir = scratch_dir();
  save_windows(std::vector<GraphWindow>{}, (dir / "e.jsonl").string());
  EXPECT_EQ(read_bytes(dir / "e.jsonl"), "");
  EXPECT_TRUE(load_windows((dir / "e.jsonl").string()).empty());
}

TEST(Windows, SameWindowSerializesIdentically) {
  const GraphWindow w = tiny_window();
  EXPECT_EQ(serialize_window(w), serialize_window(w));
  EXPECT_EQ(serialize_window(w), serialize_window(window_from_json(nlohmann::json::parse(serialize_window(w)))));
}

TEST(Windows, EdgeIndexAtBoundNamesWindow) {
  const auto dir = scratch_dir();
  GraphWindow w = tiny_window();
  w.id = "bad-window";
  std::string line = serialize_window(w);
  auto j = nlohmann::json::parse(line);
  j["edges"][0][0][1] = 2;  // == num_nodes
  write_bytes(dir / "bad.jsonl", j.dump() + "\n");
  try {
    load_windows((dir / "bad.jsonl").string());
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("bad-window"), std::string::npos) << e.what();
  }
}

TEST(Windows, MalformedJsonReportsLine) {
  const auto dir = scratch_dir();
  write_bytes(dir / "m.jsonl", serialize_window(tiny_window()) + "\n{not json\n");
  try {
    load_windows((dir / "m.jsonl").string());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Windows, MissingFileIsIoError) { EXPECT_THROW(load_windows("/nonexistent/x.jsonl"), IoError); }

TEST(Manifest, RoundTripAndChecks) {
  const auto dir = scratch_dir();
  DatasetManifest m{3, {"a", "b", "c"}, {"x"}};
  save_manifest(m, (dir / "m.json").string());
  const DatasetManifest back = load_manifest((dir / "m.json").string());
  EXPECT_EQ(back.num_classes, 3u);
  EXPECT_EQ(back.class_names, m.class_names);
  EXPECT_EQ(back.feat_names, m.feat_names);
  write_bytes(dir / "one.json", R"({"num_classes": 1})");
  EXPECT_THROW(load_manifest((dir / "one.json").string()), ValidationError);
}

TEST(PermuteWindow, IdentityAndInverse) {
  RandomWindowConfig cfg;
  const GraphWindow w = random_window(cfg, 5);
  std::vector<std::size_t> id(w.num_nodes);
  std::iota(id.begin(), id.end(), 0);
  EXPECT_EQ(permute_window(w, id), w);

  std::vector<std::size_t> perm = id;
  Rng rng(3);
  rng.shuffle(perm);
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
  EXPECT_EQ(permute_window(permute_window(w, perm), inv), w);
}

TEST(PermuteWindow, SwapRelabelsEdge) {
  const GraphWindow w = tiny_window();
  const std::vector<std::size_t> swap = {1, 0};
  const GraphWindow p = permute_window(w, swap);
  ASSERT_EQ(p.edges[0].size(), 1u);
  EXPECT_EQ(p.edges[0][0], (Edge{1, 0}));
  EXPECT_EQ(p.x(0, 0, 0), 3.0);
  EXPECT_EQ(p.x(0, 1, 1), 2.0);
}

TEST(PermuteWindow, RejectsNonBijection) {
  const GraphWindow w = tiny_window();
  const std::vector<std::size_t> bad = {0, 0};
  EXPECT_THROW(permute_window(w, bad), ValidationError);
}

TEST(PermuteWindow, PreservesEdgeCountsAndFeatureMultisets) {
  Rng rng(17);
  for (std::uint64_t s = 0; s < 30; ++s) {
    RandomWindowConfig cfg;
    cfg.num_nodes = 2 + s % 6;
    const GraphWindow w = random_window(cfg, s);
    std::vector<std::size_t> perm(w.num_nodes);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    const GraphWindow p = permute_window(w, perm);
    for (std::size_t t = 0; t < w.num_steps; ++t) {
      EXPECT_EQ(p.edges[t].size(), w.edges[t].size());
      std::multiset<double> a, b;
      for (std::size_t i = 0; i < w.num_nodes; ++i) {
        for (std::size_t k = 0; k < w.feat_dim; ++k) {
          a.insert(w.x(t, i, k));
          b.insert(p.x(t, i, k));
        }
      }
      EXPECT_EQ(a, b);
    }
  }
}

}  // namespace
}  // namespace tgfd
