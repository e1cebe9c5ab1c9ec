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


// Random windows and parameters for checks that need arbitrary inputs.

#pragma once

#include <cstdint>
#include <string>

#include "tgfd/graphseq.hpp"
#include "tgfd/random.hpp"
#include "tgfd/tgnn.hpp"

namespace tgfd {

struct RandomWindowConfig {
  std::size_t num_nodes = 6;
  std::size_t num_steps = 4;
  std::size_t feat_dim = 5;
  std::size_t num_classes = 3;
  double edge_prob = 0.3;
};

/// Standard-normal features; each ordered pair (caller != callee) is an edge
/// with probability edge_prob at every step; uniform label.
inline GraphWindow random_window(const RandomWindowConfig& cfg, std::uint64_t seed, const std::string& id = "rand") {
  Rng rng(seed);
  GraphWindow w;
  w.id = id;
  w.num_nodes = cfg.num_nodes;
  w.num_steps = cfg.num_steps;
  w.feat_dim = cfg.feat_dim;
  w.features.resize(cfg.num_steps * cfg.num_nodes * cfg.feat_dim);
  for (double& x : w.features) x = rng.normal();
  w.edges.resize(cfg.num_steps);
  for (auto& step : w.edges) {
    for (std::size_t a = 0; a < cfg.num_nodes; ++a) {
      for (std::size_t b = 0; b < cfg.num_nodes; ++b) {
        if (a != b && rng.bernoulli(cfg.edge_prob)) step.push_back(Edge{a, b});
      }
    }
  }
  w.label = rng.below(cfg.num_classes);
  for (std::size_t v = 0; v < cfg.num_nodes; ++v) w.node_names.push_back("svc" + std::to_string(v));
  return w;
}

/// Initialized parameters with every bias drawn from N(0, bias_sd) so no
/// tensor sits at an exact zero.
inline ModelParams random_params(std::size_t d_x, std::size_t d_h, std::size_t num_classes, Pooling pooling,
                                 std::uint64_t seed, double bias_sd = 0.1) {
  ModelParams p = init_params(d_x, d_h, num_classes, pooling, seed);
  Rng rng = Rng::derive(seed, 7);
  p.for_each([&](std::string_view name, Matrix& m) {
    if (is_bias_tensor(name)) {
      for (double& x : m.data) x = rng.normal(0.0, bias_sd);
    }
  });
  return p;
}

}  // namespace tgfd
