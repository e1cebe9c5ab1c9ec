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

// Graphviz rendering of a window's call graph and, optionally, the fault
// propagation recorded in its ground-truth sidecar.

#pragma once

#include <fstream>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tgfd/error.hpp"
#include "tgfd/graphseq.hpp"
#include "tgfd/simgen.hpp"

namespace tgfd {

namespace dot_detail {

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace dot_detail

/// A propagation arrow from an affected callee to the caller it reached.
struct PropagationHop {
  std::size_t from = 0;  // callee
  std::size_t to = 0;    // caller
  std::size_t step = 0;  // first step the caller is affected
};

/// Hops are recovered by breadth-first search from the roots over the
/// observed call edges, restricted to services the sidecar marks affected.
inline std::vector<PropagationHop> propagation_hops(const GraphWindow& w, const GroundTruth& truth) {
  constexpr std::size_t kNever = std::numeric_limits<std::size_t>::max();
  const std::size_t n = w.num_nodes;
  std::vector<std::size_t> first(n, kNever);
  for (std::size_t t = 0; t < truth.affected_per_step.size(); ++t) {
    for (std::size_t v : truth.affected_per_step[t]) {
      if (v >= n) throw ValidationError("sidecar '" + truth.id + "': service " + std::to_string(v) + " out of range");
      first[v] = std::min(first[v], t);
    }
  }
  std::vector<std::set<std::size_t>> callers(n);
  for (const auto& step : w.edges) {
    for (const Edge& e : step) callers[e.callee].insert(e.caller);
  }
  std::vector<std::size_t> depth(n, kNever);
  std::queue<std::size_t> q;
  for (std::size_t r : truth.roots) {
    if (r < n && first[r] != kNever && depth[r] == kNever) {
      depth[r] = 0;
      q.push(r);
    }
  }
  std::vector<PropagationHop> hops;
  while (!q.empty()) {
    const std::size_t v = q.front();
    q.pop();
    for (std::size_t u : callers[v]) {
      if (first[u] == kNever) continue;
      if (depth[u] == kNever) {
        depth[u] = depth[v] + 1;
        q.push(u);
      }
      if (depth[u] == depth[v] + 1) hops.push_back({v, u, first[u]});
    }
  }
  return hops;
}

inline std::string export_dot(const GraphWindow& w, const GroundTruth* truth = nullptr) {
  validate(w);
  if (truth && truth->id != w.id) {
    throw ValidationError("sidecar id '" + truth->id + "' does not match window id '" + w.id + "'");
  }
  std::set<Edge> all;
  for (const auto& step : w.edges) all.insert(step.begin(), step.end());

  std::set<std::size_t> affected;
  std::vector<PropagationHop> hops;
  if (truth) {
    for (const auto& step : truth->affected_per_step) affected.insert(step.begin(), step.end());
    hops = propagation_hops(w, *truth);
  }

  std::ostringstream os;
  os << "digraph " << dot_detail::quote(w.id) << " {\n";
  os << "  node [shape=box];\n";
  for (std::size_t v = 0; v < w.num_nodes; ++v) {
    const std::string label = v < w.node_names.size() ? w.node_names[v] : std::to_string(v);
    os << "  n" << v << " [label=" << dot_detail::quote(label);
    if (affected.count(v)) os << ", color=red, fontcolor=red";
    os << "];\n";
  }
  for (const Edge& e : all) os << "  n" << e.caller << " -> n" << e.callee << " [color=gray];\n";
  for (const PropagationHop& h : hops) {
    os << "  n" << h.from << " -> n" << h.to << " [color=red, fontcolor=red, label=\"t=" << h.step << "\"];\n";
  }
  os << "}\n";
  return os.str();
}

inline void save_dot(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace tgfd
