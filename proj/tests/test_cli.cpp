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


#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include <nlohmann/json.hpp>

#include "tgfd/graphseq.hpp"
#include "test_util.hpp"

namespace tgfd {
namespace {

namespace fs = std::filesystem;
using testing::read_bytes;
using testing::scratch_dir;

/// Runs the CLI, capturing stdout and stderr into `log`. Returns the exit code.
int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + TGFD_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

TEST(Cli, SimulateCountsAndDeterminism) {
  const fs::path dir = scratch_dir();
  const std::string args = "simulate --services 12 --steps 8 --per-class 200 --seed 7 --quiet --out ";
  ASSERT_EQ(run(args + q(dir / "a"), dir / "a.log"), 0) << read_bytes(dir / "a.log");
  ASSERT_EQ(run(args + q(dir / "b"), dir / "b.log"), 0);
  const auto windows = load_windows((dir / "a" / "windows.jsonl").string());
  EXPECT_EQ(windows.size(), 800u);
  const DatasetManifest m = load_manifest((dir / "a" / "manifest.json").string());
  EXPECT_EQ(m.num_classes, 4u);
  std::vector<std::size_t> per_class(4, 0);
  for (const auto& w : windows) {
    EXPECT_EQ(w.num_nodes, 12u);
    EXPECT_EQ(w.num_steps, 8u);
    ++per_class.at(w.label);
  }
  EXPECT_EQ(per_class, (std::vector<std::size_t>{200, 200, 200, 200}));
  for (const char* f : {"windows.jsonl", "manifest.json", "truth.jsonl"}) {
    EXPECT_EQ(read_bytes(dir / "a" / f), read_bytes(dir / "b" / f)) << f;
  }
  const auto rm = nlohmann::json::parse(read_bytes(dir / "a" / "run_manifest.json"));
  EXPECT_EQ(rm.at("subcommand"), "simulate");
  EXPECT_EQ(rm.at("seed"), 7);
}

TEST(Cli, SimulateRejectsZeroPerClass) {
  const fs::path dir = scratch_dir();
  EXPECT_EQ(run("simulate --per-class 0 --out " + q(dir / "x"), dir / "log"), 1);
  EXPECT_FALSE(fs::exists(dir / "x" / "windows.jsonl"));
}

TEST(Cli, MissingSubcommandIsUsageError) {
  const fs::path dir = scratch_dir();
  EXPECT_EQ(run("", dir / "log"), 1);
  EXPECT_EQ(run("frobnicate", dir / "log"), 1);
}

TEST(Cli, GradcheckPassesAndIsDeterministic) {
  const fs::path dir = scratch_dir();
  ASSERT_EQ(run("gradcheck", dir / "a.log"), 0) << read_bytes(dir / "a.log");
  ASSERT_EQ(run("gradcheck", dir / "b.log"), 0);
  const std::string out = read_bytes(dir / "a.log");
  EXPECT_EQ(out, read_bytes(dir / "b.log"));
  EXPECT_NE(out.find("pooling=mean"), std::string::npos);
  EXPECT_NE(out.find("pooling=attention"), std::string::npos);
  EXPECT_EQ(out.find("FAIL"), std::string::npos);
}

TEST(Cli, GradcheckZeroThresholdFails) {
  const fs::path dir = scratch_dir();
  EXPECT_NE(run("gradcheck --threshold 0", dir / "log"), 0);
}

TEST(Cli, TrainEvalMemorizes) {
  const fs::path dir = scratch_dir();
  ASSERT_EQ(run("simulate --services 6 --layers 3 --steps 4 --features 3 --per-class 1 --seed 3 --quiet --out " +
                    q(dir / "data"),
                dir / "sim.log"),
            0);
  const fs::path data = dir / "data" / "windows.jsonl";
  ASSERT_EQ(run("train --data " + q(data) + " --hidden 8 --lr 0.05 --epochs 150 --patience 150 --val-frac 0 " +
                    "--quiet --out " + q(dir / "model"),
                dir / "train.log"),
            0)
      << read_bytes(dir / "train.log");
  EXPECT_TRUE(fs::exists(dir / "model" / "history.csv"));
  ASSERT_EQ(run("eval --checkpoint " + q(dir / "model" / "checkpoint.tgfd") + " --data " + q(data) + " --out " +
                    q(dir / "eval"),
                dir / "eval.log"),
            0)
      << read_bytes(dir / "eval.log");
  const auto report = nlohmann::json::parse(read_bytes(dir / "eval" / "report.json"));
  for (const char* key : {"accuracy", "precision", "recall", "f1", "auc_roc", "macro_f1", "micro_f1", "mcc",
                          "per_class"}) {
    EXPECT_TRUE(report.contains(key)) << key;
  }
  EXPECT_EQ(report.at("accuracy").get<double>(), 1.0);
  EXPECT_EQ(report.at("per_class").at("classes").size(), 4u);
  EXPECT_FALSE(read_bytes(dir / "eval" / "report.txt").empty());
}

TEST(Cli, EvalMissingCheckpointFails) {
  const fs::path dir = scratch_dir();
  ASSERT_EQ(run("simulate --per-class 1 --quiet --out " + q(dir / "data"), dir / "sim.log"), 0);
  EXPECT_EQ(run("eval --checkpoint " + q(dir / "nope.tgfd") + " --data " + q(dir / "data" / "windows.jsonl") +
                    " --out " + q(dir / "eval"),
                dir / "log"),
            2);
}

TEST(Cli, ExportDot) {
  const fs::path dir = scratch_dir();
  ASSERT_EQ(run("simulate --services 8 --per-class 2 --seed 5 --quiet --out " + q(dir / "data"), dir / "sim.log"),
            0);
  const auto windows = load_windows((dir / "data" / "windows.jsonl").string());
  const GraphWindow* cascade = nullptr;
  for (const auto& w : windows) {
    if (w.label == 2) cascade = &w;
  }
  ASSERT_NE(cascade, nullptr);
  const fs::path out = dir / "g.dot";
  ASSERT_EQ(run("export-dot --data " + q(dir / "data" / "windows.jsonl") + " --id " + cascade->id + " --truth " +
                    q(dir / "data" / "truth.jsonl") + " --out " + q(out),
                dir / "dot.log"),
            0)
      << read_bytes(dir / "dot.log");
  const std::string text = read_bytes(out);
  EXPECT_EQ(text.rfind("digraph \"" + cascade->id + "\" {", 0), 0u);
  EXPECT_NE(text.find("color=red"), std::string::npos);
  EXPECT_NE(run("export-dot --data " + q(dir / "data" / "windows.jsonl") + " --id no-such-window --out " +
                    q(dir / "h.dot"),
                dir / "bad.log"),
            0);
}

}  // namespace
}  // namespace tgfd
