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


// tgfd command-line entry point.
//
// Exit codes: 0 success, 1 usage error, 2 data or validation error,
// 3 numerical failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tgfd/dot.hpp"
#include "tgfd/ingest.hpp"
#include "tgfd/metrics.hpp"
#include "tgfd/sample.hpp"
#include "tgfd/simgen.hpp"
#include "tgfd/trainer.hpp"
#include "tgfd/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct Common {
  std::uint64_t seed = 0;
  std::string out;
  bool quiet = false;
};

void add_common(CLI::App* app, Common& c, bool out_required, const std::string& out_help) {
  app->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  auto* out = app->add_option("--out", c.out, out_help);
  if (out_required) out->required();
  app->add_flag("--quiet", c.quiet, "Suppress progress output");
}

/// One per run, written next to the outputs.
struct RunManifest {
  std::string subcommand;
  json config = json::object();
  json inputs = json::object();
  json outputs = json::object();
  std::uint64_t seed = 0;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  void write(const fs::path& path) const {
    json j;
    j["subcommand"] = subcommand;
    j["tool_version"] = tgfd::kVersion;
    j["seed"] = seed;
    j["config"] = config;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["duration_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw tgfd::IoError("cannot write '" + path.string() + "'");
    f << j.dump(2) << "\n";
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw tgfd::IoError("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw tgfd::IoError("write failed for '" + path.string() + "'");
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw tgfd::IoError("cannot create directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

std::string default_manifest(const std::string& data, const std::string& given) {
  if (!given.empty()) return given;
  return (fs::path(data).parent_path() / "manifest.json").string();
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  Common common;
  tgfd::TopologyConfig topo;
  tgfd::ScenarioConfig scen;
  std::size_t per_class = 0;
  std::optional<std::uint64_t> topology_seed;
  bool per_window_topology = false;
};

int run_simulate(const SimulateArgs& a) {
  RunManifest rm;
  rm.subcommand = "simulate";
  rm.seed = a.common.seed;
  const auto ds = tgfd::gen_dataset(a.topo, a.scen, a.per_class, a.common.seed, !a.per_window_topology, a.topology_seed);
  const fs::path dir = ensure_dir(a.common.out);
  tgfd::save_windows(ds.windows, (dir / "windows.jsonl").string());
  tgfd::save_manifest(ds.manifest, (dir / "manifest.json").string());
  tgfd::save_truths(ds.truths, (dir / "truth.jsonl").string());
  rm.config = {{"services", a.topo.num_services},
               {"layers", a.topo.num_layers},
               {"branching", a.topo.branching},
               {"edge_keep_prob", a.topo.edge_keep_prob},
               {"steps", a.scen.num_steps},
               {"features", a.scen.feat_dim},
               {"noise", a.scen.noise_std},
               {"walk", a.scen.walk_std},
               {"onset", a.scen.fault_onset_step},
               {"magnitude", a.scen.fault_magnitude},
               {"delay", a.scen.propagation_delay_steps},
               {"attenuation", a.scen.propagation_attenuation},
               {"per_class", a.per_class},
               {"topology_seed", a.topology_seed ? json(*a.topology_seed) : json()},
               {"per_window_topology", a.per_window_topology}};
  rm.outputs = {{"windows", (dir / "windows.jsonl").string()},
                {"manifest", (dir / "manifest.json").string()},
                {"truth", (dir / "truth.jsonl").string()}};
  rm.write(dir / "run_manifest.json");
  if (!a.common.quiet) std::cout << "wrote " << ds.windows.size() << " windows to " << dir.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  Common common;
  std::string config;
  std::string spans;
  std::vector<std::string> metrics;
  std::vector<std::string> logs;
  std::string injections;
  std::string stats;
  tgfd::IngestOptions opt;
};

json skips_json(const tgfd::SkipReport& r) {
  json reasons = json::object();
  for (const auto& [k, v] : r.reasons) reasons[k] = v;
  return {{"skipped", r.skipped}, {"reasons", reasons}};
}

int run_ingest(IngestArgs a) {
  RunManifest rm;
  rm.subcommand = "ingest";
  rm.seed = a.common.seed;
  std::ifstream cf(a.config);
  if (!cf) throw tgfd::IoError("cannot open '" + a.config + "'");
  nlohmann::json cj;
  try {
    cj = nlohmann::json::parse(cf);
  } catch (const nlohmann::json::exception& e) {
    throw tgfd::ParseError(std::string("column map: ") + e.what());
  }
  const tgfd::ColumnMap map = tgfd::column_map_from_json(cj);

  tgfd::IngestInputs in;
  in.spans = tgfd::read_table(a.spans, map.delimiter);
  for (const auto& p : a.metrics) in.metrics.push_back(tgfd::read_table(p, map.delimiter));
  for (const auto& p : a.logs) in.logs.push_back(tgfd::read_table(p, map.delimiter));
  if (!a.injections.empty()) in.injections = tgfd::read_table(a.injections, map.delimiter);
  if (!a.stats.empty()) {
    std::ifstream sf(a.stats);
    if (!sf) throw tgfd::IoError("cannot open '" + a.stats + "'");
    try {
      a.opt.stats = tgfd::norm_stats_from_json(nlohmann::json::parse(sf));
    } catch (const nlohmann::json::exception& e) {
      throw tgfd::ParseError(std::string("normalization stats: ") + e.what());
    }
  }

  const tgfd::IngestResult res = tgfd::ingest(in, map, a.opt);
  const fs::path dir = ensure_dir(a.common.out);
  tgfd::save_windows(res.train, (dir / "train.jsonl").string());
  tgfd::save_windows(res.test, (dir / "test.jsonl").string());
  tgfd::save_manifest(res.manifest, (dir / "manifest.json").string());
  write_text(dir / "norm_stats.json", tgfd::to_json(res.stats).dump(2) + "\n");
  json report = {{"services", res.services},
                 {"train_windows", res.train.size()},
                 {"test_windows", res.test.size()},
                 {"orphan_spans", res.orphan_spans},
                 {"dropped_ambiguous", res.labels.dropped_ambiguous},
                 {"span_rows", skips_json(res.span_skips)},
                 {"metric_rows", skips_json(res.metric_skips)},
                 {"log_rows", skips_json(res.log_skips)},
                 {"injection_rows", skips_json(res.injection_skips)}};
  write_text(dir / "ingest_report.json", report.dump(2) + "\n");

  rm.config = {{"bin_width", a.opt.bin_width},
               {"window", a.opt.window_length},
               {"stride", a.opt.stride},
               {"train_fraction", a.opt.train_fraction}};
  rm.inputs = {{"config", a.config}, {"spans", a.spans}, {"metrics", a.metrics},
               {"logs", a.logs},     {"injections", a.injections}, {"stats", a.stats}};
  rm.outputs = {{"train", (dir / "train.jsonl").string()},
                {"test", (dir / "test.jsonl").string()},
                {"manifest", (dir / "manifest.json").string()},
                {"stats", (dir / "norm_stats.json").string()},
                {"report", (dir / "ingest_report.json").string()}};
  rm.write(dir / "run_manifest.json");
  if (!a.common.quiet) {
    std::cout << "services " << res.services.size() << ", train windows " << res.train.size() << ", test windows "
              << res.test.size() << ", dropped ambiguous " << res.labels.dropped_ambiguous.size() << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::string data;
  std::string manifest;
  tgfd::ModelSpec spec;
  std::string pooling = "mean";
  tgfd::TrainConfig cfg;
  double clip = 5.0;
};

int run_train(TrainArgs a) {
  RunManifest rm;
  rm.subcommand = "train";
  rm.seed = a.common.seed;
  a.cfg.seed = a.common.seed;
  a.cfg.gradient_clip_norm = a.clip > 0 ? std::optional<double>(a.clip) : std::nullopt;
  a.spec.pooling = tgfd::parse_pooling(a.pooling);
  const std::string manifest_path = default_manifest(a.data, a.manifest);
  const tgfd::DatasetManifest manifest = tgfd::load_manifest(manifest_path);
  const auto data = tgfd::load_windows(a.data, manifest.num_classes);

  const tgfd::Checkpoint ck = tgfd::train(data, manifest.num_classes, a.spec, a.cfg, [&](const tgfd::EpochRecord& r) {
    if (a.common.quiet) return;
    std::printf("epoch %3zu  train_loss %.6f  val_loss %.6f\n", r.epoch, r.train_loss, r.val_loss);
    std::fflush(stdout);
  });
  const fs::path dir = ensure_dir(a.common.out);
  tgfd::save_checkpoint(ck, (dir / "checkpoint.tgfd").string());
  write_text(dir / "history.csv", tgfd::history_csv(ck.history));

  rm.config = tgfd::to_json(a.cfg);
  rm.config["hidden"] = a.spec.d_h;
  rm.config["pooling"] = std::string(tgfd::pooling_name(a.spec.pooling));
  rm.config["ablate_structure"] = a.spec.ablate_structure;
  rm.inputs = {{"data", a.data}, {"manifest", manifest_path}};
  rm.outputs = {{"checkpoint", (dir / "checkpoint.tgfd").string()}, {"history", (dir / "history.csv").string()}};
  rm.write(dir / "run_manifest.json");
  if (!a.common.quiet) std::cout << "selected epoch " << ck.epoch << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::string checkpoint;
  std::string data;
  std::string manifest;
};

int run_eval(const EvalArgs& a) {
  RunManifest rm;
  rm.subcommand = "eval";
  rm.seed = a.common.seed;
  const tgfd::Checkpoint ck = tgfd::load_checkpoint(a.checkpoint);
  const std::string manifest_path = default_manifest(a.data, a.manifest);
  std::vector<std::string> class_names;
  std::optional<std::size_t> num_classes;
  if (fs::exists(manifest_path)) {
    const tgfd::DatasetManifest m = tgfd::load_manifest(manifest_path);
    if (m.num_classes != ck.params.num_classes) {
      throw tgfd::ValidationError("checkpoint has " + std::to_string(ck.params.num_classes) +
                                  " classes but the dataset manifest has " + std::to_string(m.num_classes));
    }
    class_names = m.class_names;
    num_classes = m.num_classes;
  }
  const auto data = tgfd::load_windows(a.data, num_classes);
  const tgfd::MetricReport report = tgfd::evaluate(ck, data);
  const std::string table = tgfd::format_table(report);
  const fs::path dir = ensure_dir(a.common.out);
  write_text(dir / "report.json", tgfd::to_json(report, class_names).dump(2) + "\n");
  write_text(dir / "report.txt", table);
  rm.inputs = {{"checkpoint", a.checkpoint}, {"data", a.data}, {"manifest", manifest_path}};
  rm.outputs = {{"report", (dir / "report.json").string()}, {"table", (dir / "report.txt").string()}};
  rm.write(dir / "run_manifest.json");
  if (!a.common.quiet) std::cout << table;
  return kOk;
}

// ---------------------------------------------------------------------------

struct GradcheckArgs {
  Common common;
  tgfd::RandomWindowConfig win;
  std::size_t hidden = 8;
  std::string pooling = "both";
  double threshold = 1e-4;
  double step = 1e-5;
};

int run_gradcheck(const GradcheckArgs& a) {
  RunManifest rm;
  rm.subcommand = "gradcheck";
  rm.seed = a.common.seed;
  std::vector<tgfd::Pooling> kinds;
  if (a.pooling == "both") {
    kinds = {tgfd::Pooling::kMean, tgfd::Pooling::kAttention};
  } else {
    kinds = {tgfd::parse_pooling(a.pooling)};
  }
  const tgfd::GraphWindow w = tgfd::random_window(a.win, tgfd::Rng::derive(a.common.seed, 1).next(), "gradcheck");
  bool ok = true;
  json results = json::array();
  for (tgfd::Pooling kind : kinds) {
    const tgfd::ModelParams params = tgfd::random_params(a.win.feat_dim, a.hidden, a.win.num_classes, kind,
                                                         tgfd::Rng::derive(a.common.seed, 2).next());
    const tgfd::GradCheckResult r = tgfd::model_grad_check(w, params, a.step);
    const bool pass = r.max_rel_error <= a.threshold;
    ok = ok && pass;
    std::printf("pooling=%s max_rel_error=%.6e worst=%s[%zu] entries=%zu %s\n", std::string(tgfd::pooling_name(kind)).c_str(),
                r.max_rel_error, tgfd::tensor_name(r.worst_param).c_str(), r.worst_entry, r.entries_checked,
                pass ? "PASS" : "FAIL");
    results.push_back({{"pooling", tgfd::pooling_name(kind)},
                       {"max_rel_error", r.max_rel_error},
                       {"worst_tensor", tgfd::tensor_name(r.worst_param)},
                       {"worst_entry", r.worst_entry},
                       {"entries_checked", r.entries_checked}});
  }
  if (!a.common.out.empty()) {
    const fs::path dir = ensure_dir(a.common.out);
    rm.config = {{"nodes", a.win.num_nodes}, {"steps", a.win.num_steps},   {"features", a.win.feat_dim},
                 {"hidden", a.hidden},       {"classes", a.win.num_classes}, {"pooling", a.pooling},
                 {"threshold", a.threshold}, {"step", a.step}};
    rm.outputs = {{"results", results}};
    rm.write(dir / "run_manifest.json");
  }
  return ok ? kOk : kNumerical;
}

// ---------------------------------------------------------------------------

struct DotArgs {
  Common common;
  std::string data;
  std::string id;
  std::string truth;
};

int run_export_dot(const DotArgs& a) {
  RunManifest rm;
  rm.subcommand = "export-dot";
  rm.seed = a.common.seed;
  const auto windows = tgfd::load_windows(a.data);
  if (windows.empty()) throw tgfd::ValidationError("'" + a.data + "' holds no windows");
  const tgfd::GraphWindow* w = &windows.front();
  if (!a.id.empty()) {
    auto it = std::find_if(windows.begin(), windows.end(), [&](const tgfd::GraphWindow& x) { return x.id == a.id; });
    if (it == windows.end()) throw tgfd::ValidationError("no window with id '" + a.id + "'");
    w = &*it;
  }
  std::optional<tgfd::GroundTruth> truth;
  if (!a.truth.empty()) {
    const auto truths = tgfd::load_truths(a.truth);
    auto it = std::find_if(truths.begin(), truths.end(), [&](const tgfd::GroundTruth& t) { return t.id == w->id; });
    // Fall back to the first record so a mismatched sidecar is reported, not ignored.
    if (it != truths.end()) {
      truth = *it;
    } else if (!truths.empty()) {
      truth = truths.front();
    } else {
      throw tgfd::ValidationError("sidecar '" + a.truth + "' is empty");
    }
  }
  const std::string text = tgfd::export_dot(*w, truth ? &*truth : nullptr);
  const fs::path out(a.common.out);
  if (out.has_parent_path()) ensure_dir(out.parent_path().string());
  tgfd::save_dot(text, out.string());
  rm.inputs = {{"data", a.data}, {"id", w->id}, {"truth", a.truth}};
  rm.outputs = {{"dot", out.string()}};
  rm.write(fs::path(out.string() + ".run.json"));
  if (!a.common.quiet) std::cout << "wrote " << out.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal graph fault discrimination toolkit"};
  app.set_version_flag("--version", std::string(tgfd::kVersion));
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Generate a labeled synthetic dataset");
  add_common(s, sim.common, true, "Output directory");
  s->add_option("--services", sim.topo.num_services, "Number of services")->capture_default_str()->check(CLI::Range(2, 100000));
  s->add_option("--layers", sim.topo.num_layers, "Call-graph depth")->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--branching", sim.topo.branching, "Callees per caller")->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--edge-keep", sim.topo.edge_keep_prob, "Per-step edge keep probability")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  s->add_option("--steps", sim.scen.num_steps, "Time steps per window")->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--features", sim.scen.feat_dim, "Feature channels (>= 3)")->capture_default_str()->check(CLI::Range(3, 1000));
  s->add_option("--noise", sim.scen.noise_std, "Observation noise sd")->capture_default_str()->check(CLI::NonNegativeNumber);
  s->add_option("--walk", sim.scen.walk_std, "Random-walk step sd")->capture_default_str()->check(CLI::NonNegativeNumber);
  s->add_option("--onset", sim.scen.fault_onset_step, "Fault onset step")->capture_default_str();
  s->add_option("--magnitude", sim.scen.fault_magnitude, "Root fault magnitude")->capture_default_str()->check(CLI::PositiveNumber);
  s->add_option("--delay", sim.scen.propagation_delay_steps, "Steps per propagation hop")->capture_default_str();
  s->add_option("--attenuation", sim.scen.propagation_attenuation, "Severity factor per hop")->capture_default_str();
  s->add_option("--per-class", sim.per_class, "Windows per class")->required()->check(CLI::PositiveNumber);
  s->add_option("--topology-seed", sim.topology_seed, "Seed for the shared call graph (default: --seed)");
  s->add_flag("--per-window-topology", sim.per_window_topology, "Draw a fresh call graph for every window");

  IngestArgs ing;
  auto* i = app.add_subcommand("ingest", "Convert span/metric/log/injection tables into windows");
  add_common(i, ing.common, true, "Output directory");
  i->add_option("--config", ing.config, "Column-map JSON")->required()->check(CLI::ExistingFile);
  i->add_option("--spans", ing.spans, "Span table")->required()->check(CLI::ExistingFile);
  i->add_option("--metrics", ing.metrics, "Metric tables")->check(CLI::ExistingFile);
  i->add_option("--logs", ing.logs, "Log tables (counted per bin)")->check(CLI::ExistingFile);
  i->add_option("--injections", ing.injections, "Injection table")->check(CLI::ExistingFile);
  i->add_option("--stats", ing.stats, "Reuse normalization statistics")->check(CLI::ExistingFile);
  i->add_option("--bin-width", ing.opt.bin_width, "Bin width in seconds")->capture_default_str()->check(CLI::PositiveNumber);
  i->add_option("--window", ing.opt.window_length, "Bins per window")->capture_default_str()->check(CLI::PositiveNumber);
  i->add_option("--stride", ing.opt.stride, "Bins between window starts")->capture_default_str()->check(CLI::PositiveNumber);
  i->add_option("--train-fraction", ing.opt.train_fraction, "Leading fraction of windows used for training")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model on a dataset");
  add_common(t, tr.common, true, "Output directory");
  t->add_option("--data", tr.data, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  t->add_option("--manifest", tr.manifest, "Dataset manifest (default: manifest.json beside --data)");
  t->add_option("--hidden", tr.spec.d_h, "Hidden width")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--pooling", tr.pooling, "Readout pooling")->capture_default_str()->check(CLI::IsMember({"mean", "attention"}));
  t->add_flag("--ablate-structure", tr.spec.ablate_structure, "Drop all call edges (temporal-only model)");
  t->add_option("--lr", tr.cfg.learning_rate, "Adam learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--batch", tr.cfg.batch_size, "Mini-batch size")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--epochs", tr.cfg.max_epochs, "Maximum epochs")->capture_default_str();
  t->add_option("--patience", tr.cfg.patience, "Early-stopping patience")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--val-frac", tr.cfg.validation_fraction, "Validation fraction per class")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 0.99));
  t->add_option("--clip", tr.clip, "Global gradient-norm clip (0 disables)")->capture_default_str()->check(CLI::NonNegativeNumber);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a checkpoint on a dataset");
  add_common(e, ev.common, true, "Output directory");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  e->add_option("--data", ev.data, "Dataset JSONL")->required();
  e->add_option("--manifest", ev.manifest, "Dataset manifest (default: manifest.json beside --data)");

  GradcheckArgs gc;
  auto* g = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  add_common(g, gc.common, false, "Directory for the run manifest");
  g->add_option("--nodes", gc.win.num_nodes, "Services")->capture_default_str()->check(CLI::PositiveNumber);
  g->add_option("--steps", gc.win.num_steps, "Time steps")->capture_default_str()->check(CLI::PositiveNumber);
  g->add_option("--features", gc.win.feat_dim, "Feature channels")->capture_default_str()->check(CLI::PositiveNumber);
  g->add_option("--hidden", gc.hidden, "Hidden width")->capture_default_str()->check(CLI::PositiveNumber);
  g->add_option("--classes", gc.win.num_classes, "Classes")->capture_default_str()->check(CLI::Range(2, 1000));
  g->add_option("--pooling", gc.pooling, "mean, attention or both")
      ->capture_default_str()
      ->check(CLI::IsMember({"mean", "attention", "both"}));
  g->add_option("--threshold", gc.threshold, "Maximum accepted relative error")->capture_default_str()->check(CLI::NonNegativeNumber);
  g->add_option("--step", gc.step, "Central-difference step")->capture_default_str()->check(CLI::PositiveNumber);

  DotArgs dot;
  auto* d = app.add_subcommand("export-dot", "Render a window as Graphviz DOT");
  add_common(d, dot.common, true, "Output .dot file");
  d->add_option("--data", dot.data, "Dataset JSONL")->required();
  d->add_option("--id", dot.id, "Window id (default: first window)");
  d->add_option("--truth", dot.truth, "Ground-truth sidecar JSONL");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& ok) {
    return app.exit(ok);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kUsage;
  }

  try {
    if (*s) return run_simulate(sim);
    if (*i) return run_ingest(ing);
    if (*t) return run_train(tr);
    if (*e) return run_eval(ev);
    if (*g) return run_gradcheck(gc);
    if (*d) return run_export_dot(dot);
  } catch (const tgfd::NumericalError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kNumerical;
  } catch (const tgfd::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kData;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kData;
  }
  return kUsage;
}
