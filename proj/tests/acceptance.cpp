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


// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "metric_oracle.hpp"
#include "tgfd/metrics.hpp"
#include "tgfd/sample.hpp"
#include "tgfd/simgen.hpp"
#include "tgfd/tgnn.hpp"
#include "tgfd/trainer.hpp"

namespace {

using namespace tgfd;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + TGFD_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------

Outcome gradient_fidelity() {
  const auto t0 = Clock::now();
  const RandomWindowConfig wc{6, 4, 5, 3, 0.3};
  const GraphWindow w = random_window(wc, Rng::derive(1, 1).next(), "gradcheck");
  double worst = 0.0;
  std::size_t entries = 0;
  for (Pooling kind : {Pooling::kMean, Pooling::kAttention}) {
    const ModelParams p = random_params(wc.feat_dim, 8, wc.num_classes, kind, Rng::derive(1, 2).next());
    const GradCheckResult r = model_grad_check(w, p, 1e-5);
    worst = std::max(worst, r.max_rel_error);
    entries += r.entries_checked;
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 60.0 && entries > 0,
          "max_rel_error=" + fmt(worst) + " entries=" + std::to_string(entries) + " time=" + fmt(secs) + "s"};
}

Outcome structural_invariants() {
  double worst_alpha = 0.0, worst_yhat = 0.0, min_loss = 1e300;
  std::size_t rows = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    RandomWindowConfig wc{2 + s % 9, 1 + s % 5, 4, 2 + s % 4, 0.1 + 0.05 * static_cast<double>(s % 10)};
    const GraphWindow w = random_window(wc, 1000 + s);
    const Pooling kind = s % 2 ? Pooling::kAttention : Pooling::kMean;
    const ForwardCache f = forward(w, random_params(wc.feat_dim, 6, wc.num_classes, kind, 2000 + s));
    for (const auto& step : f.alpha) {
      for (const auto& row : step) {
        if (row.empty()) continue;
        worst_alpha = std::max(worst_alpha, std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0));
        ++rows;
      }
    }
    worst_yhat = std::max(worst_yhat, std::abs(std::accumulate(f.y_hat.begin(), f.y_hat.end(), 0.0) - 1.0));
    min_loss = std::min(min_loss, f.loss);
  }
  return {rows > 0 && worst_alpha <= 1e-9 && worst_yhat <= 1e-9 && min_loss >= 0.0,
          "attention_rows=" + std::to_string(rows) + " max|sum-1| alpha=" + fmt(worst_alpha) +
              " y_hat=" + fmt(worst_yhat) + " min_loss=" + fmt(min_loss)};
}

Outcome permutation_invariance() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    RandomWindowConfig wc{3 + s % 8, 2 + s % 4, 4, 3, 0.3};
    const GraphWindow w = random_window(wc, 3000 + s);
    const ModelParams p = random_params(wc.feat_dim, 6, wc.num_classes, Pooling::kMean, 4000 + s);
    std::vector<std::size_t> perm(wc.num_nodes);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(5000 + s);
    rng.shuffle(perm);
    worst = std::max(worst, std::abs(forward(w, p).loss - forward(permute_window(w, perm), p).loss));
  }
  return {worst <= 1e-9, "max|loss diff|=" + fmt(worst)};
}

Outcome metric_oracle() {
  Rng rng(4242);
  double worst = 0.0;
  bool micro_exact = true, auc_defined_agree = true;
  auto track = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t c = 2 + rng.below(4), n = 1 + rng.below(80);
    const bool coarse = rng.bernoulli(0.5);
    std::vector<std::size_t> truth, pred;
    std::vector<double> probs;
    for (std::size_t i = 0; i < n; ++i) {
      truth.push_back(rng.below(c));
      std::vector<double> row(c);
      double sum = 0;
      for (double& x : row) sum += (x = coarse ? static_cast<double>(1 + rng.below(3)) : rng.uniform(0.01, 1.0));
      for (double& x : row) x /= sum;
      pred.push_back(argmax(row));
      probs.insert(probs.end(), row.begin(), row.end());
    }
    const Confusion cm = confusion(truth, pred, c);
    const oracle::PrfAll o = oracle::prf(truth, pred, c);
    const PrfResult macro = prf1(cm, Averaging::kMacro), micro = prf1(cm, Averaging::kMicro),
                    weighted = prf1(cm, Averaging::kWeighted);
    track(macro.precision, o.macro.precision);
    track(macro.recall, o.macro.recall);
    track(macro.f1, o.macro.f1);
    track(micro.precision, o.micro.precision);
    track(micro.recall, o.micro.recall);
    track(micro.f1, o.micro.f1);
    track(weighted.precision, o.weighted.precision);
    track(weighted.recall, o.weighted.recall);
    track(weighted.f1, o.weighted.f1);
    std::vector<std::vector<double>> dense(c, std::vector<double>(c));
    for (std::size_t a = 0; a < c; ++a) {
      for (std::size_t b = 0; b < c; ++b) dense[a][b] = static_cast<double>(cm.at(a, b));
    }
    track(mcc(cm), oracle::mcc(dense));
    const AucResult auc = auc_ovr(truth, probs, c);
    for (std::size_t k = 0; k < c; ++k) {
      std::vector<double> col;
      std::vector<bool> pos;
      for (std::size_t i = 0; i < n; ++i) {
        col.push_back(probs[i * c + k]);
        pos.push_back(truth[i] == k);
      }
      const double want = oracle::pairwise_auc(col, pos);
      if ((want >= 0) != auc.per_class[k].has_value()) {
        auc_defined_agree = false;
      } else if (want >= 0) {
        track(*auc.per_class[k], want);
      }
    }
    const MetricReport rep = evaluate_predictions(truth, probs, c);
    double correct = 0;
    for (std::size_t i = 0; i < n; ++i) correct += truth[i] == pred[i];
    micro_exact = micro_exact && rep.micro_f1 == rep.accuracy && rep.accuracy == correct / static_cast<double>(n);
  }
  return {worst <= 1e-12 && micro_exact && auc_defined_agree,
          "max|diff|=" + fmt(worst) + " micro_f1==accuracy:" + (micro_exact ? "yes" : "no") +
              " auc_domain_agrees:" + (auc_defined_agree ? "yes" : "no")};
}

// Shared by criteria 5, 6 and 7.
struct Learned {
  SimDataset train_set, test_set;
  Checkpoint full, ablated;
  double full_secs = 0.0, ablated_secs = 0.0;
};

constexpr std::uint64_t kTrainSeed = 7, kTestSeed = 8, kModelSeed = 1;
constexpr std::size_t kHidden = 24;

TrainConfig learn_config() {
  TrainConfig cfg;
  cfg.learning_rate = 5e-3;
  cfg.max_epochs = 30;
  cfg.patience = 30;
  cfg.seed = kModelSeed;
  return cfg;
}

Learned learn() {
  Learned l;
  const TopologyConfig tc;   // 12 services
  const ScenarioConfig sc;   // T = 8, d_x = 6
  l.train_set = gen_dataset(tc, sc, 200, kTrainSeed);
  l.test_set = gen_dataset(tc, sc, 50, kTestSeed, true, kTrainSeed);
  for (bool ablate : {false, true}) {
    const auto t0 = Clock::now();
    Checkpoint ck = train(l.train_set.windows, kNumFaultClasses, ModelSpec{kHidden, Pooling::kMean, ablate},
                          learn_config());
    (ablate ? l.ablated_secs : l.full_secs) = seconds_since(t0);
    (ablate ? l.ablated : l.full) = std::move(ck);
  }
  return l;
}

Outcome learnability(const Learned& l) {
  const MetricReport rep = evaluate(l.full, l.test_set.windows);
  const std::size_t epochs = l.full.history.size();
  return {rep.accuracy >= 0.85 && rep.macro_f1 >= 0.80 && epochs <= 30 && l.full_secs < 600.0,
          "train=" + std::to_string(l.train_set.windows.size()) + " test=" + std::to_string(l.test_set.windows.size()) +
              " accuracy=" + fmt(rep.accuracy) + " macro_f1=" + fmt(rep.macro_f1) + " epochs=" +
              std::to_string(epochs) + " time=" + fmt(l.full_secs) + "s"};
}

/// Accuracy on CASCADE and COMMON_CAUSE test windows, predicting the larger of those two class scores.
double two_class_accuracy(const Checkpoint& ck, const std::vector<GraphWindow>& test) {
  const auto cascade = static_cast<std::size_t>(FaultClass::kCascade);
  const auto common = static_cast<std::size_t>(FaultClass::kCommonCause);
  const std::vector<double> probs = predict_proba(test, ck.params, ForwardOptions{ck.ablate_structure});
  std::size_t correct = 0, total = 0;
  for (std::size_t n = 0; n < test.size(); ++n) {
    const std::size_t y = test[n].label;
    if (y != cascade && y != common) continue;
    const double pc = probs[n * kNumFaultClasses + cascade], pm = probs[n * kNumFaultClasses + common];
    correct += (pc >= pm ? cascade : common) == y;
    ++total;
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

Outcome ablation_gap(const Learned& l) {
  const double full = two_class_accuracy(l.full, l.test_set.windows);
  const double ablated = two_class_accuracy(l.ablated, l.test_set.windows);
  const double gap = 100.0 * (full - ablated);
  return {gap >= 10.0, "full=" + fmt(full) + " ablated=" + fmt(ablated) + " gap=" + fmt(gap) + " points"};
}

Outcome determinism(const Learned& l, const fs::path& scratch) {
  // CLI: identical flags, bit-identical checkpoints.
  const fs::path data = scratch / "det-data";
  bool cli_ok = run_cli("simulate --per-class 25 --seed 11 --quiet --out \"" + data.string() + "\"") == 0;
  std::string ck_bytes[2];
  for (int k = 0; k < 2 && cli_ok; ++k) {
    const fs::path out = scratch / ("det-run" + std::to_string(k));
    cli_ok = run_cli("train --data \"" + (data / "windows.jsonl").string() +
                     "\" --epochs 3 --lr 5e-3 --seed 4 --quiet --out \"" + out.string() + "\"") == 0;
    ck_bytes[k] = read_bytes(out / "checkpoint.tgfd");
  }
  const bool cli_identical = cli_ok && !ck_bytes[0].empty() && ck_bytes[0] == ck_bytes[1];

  // Library: save, load, evaluate.
  const fs::path path = scratch / "full.tgfd";
  save_checkpoint(l.full, path.string());
  const Checkpoint loaded = load_checkpoint(path.string());
  const MetricReport in_memory = evaluate(l.full, l.test_set.windows);
  const MetricReport reloaded = evaluate(loaded, l.test_set.windows);
  const bool eval_identical =
      loaded == l.full && reloaded == in_memory && to_json(reloaded).dump() == to_json(in_memory).dump();

  // CLI eval of the saved checkpoint matches the in-memory report.
  save_windows(l.test_set.windows, (scratch / "test.jsonl").string());
  save_manifest(l.test_set.manifest, (scratch / "manifest.json").string());
  const bool cli_eval_ok = run_cli("eval --checkpoint \"" + path.string() + "\" --data \"" +
                                   (scratch / "test.jsonl").string() + "\" --quiet --out \"" +
                                   (scratch / "eval").string() + "\"") == 0;
  const bool cli_eval_identical =
      cli_eval_ok && nlohmann::json::parse(read_bytes(scratch / "eval" / "report.json")) ==
                         nlohmann::json::parse(to_json(in_memory, l.test_set.manifest.class_names).dump());

  return {cli_identical && eval_identical && cli_eval_identical,
          std::string("train_checkpoints_identical:") + (cli_identical ? "yes" : "no") +
              " reload_eval_identical:" + (eval_identical ? "yes" : "no") +
              " cli_eval_identical:" + (cli_eval_identical ? "yes" : "no")};
}

Outcome simulator_oracle() {
  std::size_t mismatches = 0, non_monotone = 0, checked = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Topology topo = gen_topology(8 + s % 9, 3 + s % 3, 1 + s % 3, 6000 + s, 0.6 + 0.04 * static_cast<double>(s % 10));
    ScenarioConfig cfg;
    cfg.noise_std = 0.0;
    cfg.num_steps = 6 + s % 5;
    cfg.fault_onset_step = s % 3;
    cfg.propagation_delay_steps = s % 3;
    const GeneratedWindow g = gen_window(topo, FaultClass::kCascade, cfg, 7000 + s);
    const Propagation p = propagation_oracle(topo, g.truth.roots, cfg);
    const std::size_t n = topo.num_services;
    std::set<std::size_t> previous;
    for (std::size_t t = 0; t < cfg.num_steps; ++t) {
      // Services whose latency departs from the noise-free baseline.
      std::set<std::size_t> observed;
      for (std::size_t v = 0; v < n; ++v) {
        if (g.window.x(t, v, 0) != g.trend[(t * n + v) * cfg.feat_dim]) observed.insert(v);
      }
      const std::set<std::size_t> expected(p.affected_per_step[t].begin(), p.affected_per_step[t].end());
      const std::set<std::size_t> reported(g.truth.affected_per_step[t].begin(), g.truth.affected_per_step[t].end());
      mismatches += observed != expected || reported != expected;
      for (std::size_t v = 0; v < n; ++v) mismatches += g.injected[t * n + v] != p.severity[t * n + v];
      non_monotone += !std::includes(observed.begin(), observed.end(), previous.begin(), previous.end());
      previous = observed;
      ++checked;
    }
  }
  return {mismatches == 0 && non_monotone == 0,
          "steps_checked=" + std::to_string(checked) + " mismatches=" + std::to_string(mismatches) +
              " non_monotone=" + std::to_string(non_monotone)};
}

Outcome round_trips(const fs::path& scratch) {
  std::size_t jsonl_bad = 0, ckpt_bad = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng rng(8000 + s);
    std::vector<GraphWindow> windows;
    const std::size_t count = 1 + rng.below(5);
    for (std::size_t k = 0; k < count; ++k) {
      const RandomWindowConfig wc{1 + rng.below(7), 1 + rng.below(5), 1 + rng.below(4), 2 + rng.below(3),
                                  rng.uniform(0.0, 0.6)};
      windows.push_back(random_window(wc, rng.next(), "rt-" + std::to_string(s) + "-" + std::to_string(k)));
    }
    const fs::path a = scratch / "rt-a.jsonl", b = scratch / "rt-b.jsonl";
    save_windows(windows, a.string());
    save_windows(load_windows(a.string()), b.string());
    jsonl_bad += read_bytes(a) != read_bytes(b) || read_bytes(a).empty();

    Checkpoint ck;
    const Pooling kind = rng.bernoulli(0.5) ? Pooling::kAttention : Pooling::kMean;
    ck.params = random_params(1 + rng.below(6), 1 + rng.below(8), 2 + rng.below(3), kind, rng.next());
    ck.ablate_structure = rng.bernoulli(0.5);
    ck.config.learning_rate = rng.uniform(1e-4, 1e-1);
    ck.config.seed = rng.next();
    ck.config.validation_fraction = rng.bernoulli(0.3) ? 0.0 : rng.uniform(0.05, 0.5);
    if (rng.bernoulli(0.3)) ck.config.gradient_clip_norm.reset();
    const std::size_t epochs = rng.below(6);
    for (std::size_t e = 1; e <= epochs; ++e) {
      ck.history.push_back({e, rng.uniform(0.0, 2.0), rng.bernoulli(0.3) ? std::nan("") : rng.uniform(0.0, 2.0)});
    }
    ck.epoch = epochs;
    const fs::path c1 = scratch / "rt-a.tgfd", c2 = scratch / "rt-b.tgfd";
    save_checkpoint(ck, c1.string());
    save_checkpoint(load_checkpoint(c1.string()), c2.string());
    ckpt_bad += read_bytes(c1) != read_bytes(c2) || read_bytes(c1).empty();
  }
  return {jsonl_bad == 0 && ckpt_bad == 0,
          "artifacts=50 jsonl_mismatches=" + std::to_string(jsonl_bad) + " checkpoint_mismatches=" +
              std::to_string(ckpt_bad)};
}

}  // namespace

int main() {
  const fs::path scratch = fs::temp_directory_path() / "tgfd-acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  int failures = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << o.detail << std::endl;
  };

  report(1, "gradient fidelity", gradient_fidelity);
  report(2, "structural invariants", structural_invariants);
  report(3, "permutation invariance", permutation_invariance);
  report(4, "metric oracle equivalence", metric_oracle);

  std::optional<Learned> learned;
  std::string learn_error;
  try {
    learned = learn();
  } catch (const std::exception& e) {
    learn_error = e.what();
  }
  auto needs_model = [&](const std::function<Outcome(const Learned&)>& f) {
    return [&, f]() -> Outcome {
      if (!learned) return {false, "training failed: " + learn_error};
      return f(*learned);
    };
  };
  report(5, "synthetic learnability", needs_model(learnability));
  report(6, "structure ablation gap", needs_model(ablation_gap));
  report(7, "determinism", needs_model([&](const Learned& l) { return determinism(l, scratch); }));
  report(8, "simulator-oracle consistency", simulator_oracle);
  report(9, "format round-trips", [&] { return round_trips(scratch); });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
