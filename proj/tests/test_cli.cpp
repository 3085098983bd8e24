// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <string>
#include <vector>

#include "risnet/app.hpp"
#include "risnet/dataset_io.hpp"
#include "risnet/experiments.hpp"
#include "test_support.hpp"

using namespace risnet;
namespace fs = std::filesystem;

namespace {

int cli(std::vector<std::string> args) { return app::run(args); }

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

/// Config for fast end-to-end runs.
void write_small_config(const fs::path& path) {
  std::ofstream(path) << R"({
    "dataset": {"elements": 2, "length": 200},
    "model": {"variant": "dnn", "dnn_hidden": [8, 8, 8, 8]},
    "train": {"epochs": 2},
    "scenario": {"elements": [2, 4], "powers_dbm": [20, 40], "power_sweep_elements": 2,
                 "iterations": 20, "segment_length": 10, "seeds": [1, 2],
                 "schemes": ["optimal-csi", "dnn", "fixed-phase", "no-ris"]}
  })";
}

}  // namespace

TEST_CASE("generate writes the dataset and its metadata") {
  testing::TempDir dir("gen");
  REQUIRE(cli({"generate", "--n", "8", "--seed", "5", "--out", (dir / "a").string()}) == app::kExitOk);
  const auto m = channel::read_feature_csv(dir / "a" / "dataset.csv");
  CHECK(m.rows() == 2550);
  CHECK(m.cols() == 32);
  const auto meta = channel::read_dataset_meta(dir / "a" / "dataset.json");
  CHECK(meta.seed == 5);
  CHECK(meta.elements == 8);
  CHECK(meta.stats.features() == 32);
  CHECK(fs::exists(dir / "a" / "manifest.json"));

  SUBCASE("same seed gives identical bytes") {
    REQUIRE(cli({"generate", "--n", "8", "--seed", "5", "--out", (dir / "b").string()}) == app::kExitOk);
    CHECK(testing::slurp(dir / "a" / "dataset.csv") == testing::slurp(dir / "b" / "dataset.csv"));
    CHECK(testing::slurp(dir / "a" / "dataset.json") == testing::slurp(dir / "b" / "dataset.json"));
  }
  SUBCASE("other seed differs") {
    REQUIRE(cli({"generate", "--n", "8", "--seed", "6", "--out", (dir / "c").string()}) == app::kExitOk);
    CHECK(testing::slurp(dir / "a" / "dataset.csv") != testing::slurp(dir / "c" / "dataset.csv"));
  }
}

TEST_CASE("generate at N = 20 has 80 feature columns") {
  testing::TempDir dir("gen20");
  REQUIRE(cli({"generate", "--n", "20", "--out", dir.path().string()}) == app::kExitOk);
  const auto m = channel::read_feature_csv(dir / "dataset.csv");
  CHECK(m.rows() == 2550);
  CHECK(m.cols() == 80);
}

TEST_CASE("train writes a checkpoint, history and summary") {
  testing::TempDir dir("train");
  std::ofstream(dir / "cfg.json") << R"({"train": {"epochs": 2}})";
  REQUIRE(cli({"generate", "--n", "4", "--seed", "3", "--out", (dir / "data").string()}) == app::kExitOk);
  REQUIRE(cli({"train", "--variant", "dnn", "--n", "4", "--seed", "3", "--config", (dir / "cfg.json").string(),
               "--dataset", (dir / "data").string(), "--out", (dir / "run").string()}) == app::kExitOk);
  CHECK(fs::exists(dir / "run" / app::checkpoint_name(predict::Variant::Dnn, 4, 3)));
  CHECK(count_lines(testing::slurp(dir / "run" / "history.csv")) == 3);
  const std::string summary = testing::slurp(dir / "run" / "summary.csv");
  CHECK(summary.rfind("variant,N,seed,train_rmse,test_rmse,params\n", 0) == 0);
  CHECK(summary.find("dnn,4,3,") != std::string::npos);
  CHECK(summary.find(",2280\n") != std::string::npos);

  SUBCASE("dataset with the wrong N is a runtime error") {
    CHECK(cli({"train", "--variant", "dnn", "--n", "8", "--config", (dir / "cfg.json").string(), "--dataset",
               (dir / "data").string(), "--out", (dir / "bad").string()}) == app::kExitRuntime);
  }
}

TEST_CASE("configuration and usage errors exit with 2") {
  testing::TempDir dir("err");
  std::ofstream(dir / "bad.json") << R"({"dataset": {"elemnts": 4}})";
  CHECK(cli({"generate", "--config", (dir / "bad.json").string(), "--out", dir.path().string()}) ==
        app::kExitConfig);
  CHECK(cli({"generate", "--config", (dir / "nope.json").string()}) == app::kExitConfig);
  CHECK(cli({"train", "--variant", "gru"}) == app::kExitConfig);
  CHECK(cli({"frobnicate"}) == app::kExitConfig);
  CHECK(cli({}) == app::kExitConfig);
  CHECK(cli({"sweep", "--kind", "sideways"}) == app::kExitConfig);
  // N = 5 has no tuned sizes
  CHECK(cli({"train", "--variant", "lstm", "--n", "5", "--out", dir.path().string()}) == app::kExitConfig);
}

TEST_CASE("report without sweep CSVs is a runtime error") {
  testing::TempDir dir("rep");
  CHECK(cli({"report", "--in", dir.path().string()}) == app::kExitRuntime);
}

TEST_CASE("sweep without checkpoints names the missing pair") {
  testing::TempDir dir("miss");
  write_small_config(dir / "cfg.json");
  CHECK(cli({"sweep", "--config", (dir / "cfg.json").string(), "--kind", "power", "--out",
             (dir / "out").string()}) == app::kExitRuntime);
  CHECK_FALSE(fs::exists(dir / "out" / "power_sweep.csv"));
}

TEST_CASE("sweep, report and manifest replay") {
  testing::TempDir dir("sweep");
  write_small_config(dir / "cfg.json");
  REQUIRE(cli({"sweep", "--config", (dir / "cfg.json").string(), "--train-missing", "--jobs", "2", "--out",
               (dir / "a").string()}) == app::kExitOk);
  for (const char* f : {"power_sweep.csv", "element_sweep.csv", "outage_vs_power.svg", "rate_vs_power.svg",
                        "outage_vs_n.svg", "rate_vs_n.svg", "manifest.json"}) {
    CHECK_MESSAGE(fs::exists(dir / "a" / f), f);
  }
  // one checkpoint per (N, seed)
  CHECK(fs::exists(dir / "a" / app::checkpoint_name(predict::Variant::Dnn, 2, 1)));
  CHECK(fs::exists(dir / "a" / app::checkpoint_name(predict::Variant::Dnn, 4, 2)));

  const auto power = experiments::read_report_csv(dir / "a" / "power_sweep.csv");
  CHECK(power.size() == 4 * 2);
  CHECK(experiments::read_report_csv(dir / "a" / "element_sweep.csv").size() == 4 * 2);
  for (const auto& r : power) CHECK(r.seeds == std::vector<std::uint64_t>{1, 2});

  SUBCASE("report re-renders identical plots") {
    REQUIRE(cli({"report", "--in", (dir / "a").string(), "--out", (dir / "r").string()}) == app::kExitOk);
    CHECK(testing::slurp(dir / "a" / "outage_vs_power.svg") == testing::slurp(dir / "r" / "outage_vs_power.svg"));
    CHECK(testing::slurp(dir / "a" / "rate_vs_n.svg") == testing::slurp(dir / "r" / "rate_vs_n.svg"));
  }
  SUBCASE("manifest replay reuses checkpoints and reproduces the CSVs") {
    REQUIRE(cli({"sweep", "--config", (dir / "a" / "manifest.json").string(), "--checkpoints",
                 (dir / "a").string(), "--jobs", "1", "--out", (dir / "b").string()}) == app::kExitOk);
    CHECK(testing::slurp(dir / "a" / "power_sweep.csv") == testing::slurp(dir / "b" / "power_sweep.csv"));
    CHECK(testing::slurp(dir / "a" / "element_sweep.csv") == testing::slurp(dir / "b" / "element_sweep.csv"));
    // nothing was retrained
    CHECK_FALSE(fs::exists(dir / "b" / app::checkpoint_name(predict::Variant::Dnn, 2, 1)));
  }
  SUBCASE("iterations override") {
    REQUIRE(cli({"sweep", "--config", (dir / "cfg.json").string(), "--checkpoints", (dir / "a").string(),
                 "--kind", "power", "--iterations", "5", "--out", (dir / "c").string()}) == app::kExitOk);
    const auto rows = experiments::read_report_csv(dir / "c" / "power_sweep.csv");
    CHECK(rows.front().samples == 2 * 5 * 10);
    CHECK_FALSE(fs::exists(dir / "c" / "element_sweep.csv"));
  }
}

TEST_CASE("installed binary maps exit codes") {
  const std::string exe = RISNET_CLI_PATH;
  CHECK(std::system((exe + " --help > /dev/null").c_str()) == 0);
  const int rc = std::system((exe + " train --variant gru > /dev/null 2>&1").c_str());
  REQUIRE(WIFEXITED(rc));
  CHECK(WEXITSTATUS(rc) == app::kExitConfig);
}
