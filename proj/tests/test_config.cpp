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

#include <string>

#include "risnet/config.hpp"
#include "risnet/error.hpp"
#include "test_support.hpp"

using namespace risnet;
using namespace risnet::config;

namespace {

std::string error_of(std::string_view text) {
  try {
    parse_config(text, "cfg.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("empty object gives the defaults") {
  const auto c = parse_config("{}");
  CHECK(c.dataset.elements == 8);
  CHECK(c.dataset.length == 2550);
  CHECK(c.dataset.window == 10);
  CHECK(c.train.epochs == 100);
  CHECK(c.train.batch_size == 32);
  CHECK(c.train.adam.learning_rate == 1e-3);
  CHECK(c.scenario.iterations == 2000);
  CHECK(c.scenario.powers_dbm.size() == 11);
  CHECK(c.scenario.schemes.size() == 6);
  CHECK(c.scenario.window == c.dataset.window);
  CHECK(c.model.variant == predict::Variant::Transformer);
}

TEST_CASE("sections are read") {
  const auto c = parse_config(R"({
    "dataset": {"elements": 4, "window": 6, "seed": 9},
    "model": {"variant": "lstm", "lstm_hidden": 12},
    "train": {"epochs": 3, "learning_rate": 0.01},
    "scenario": {"powers_dbm": [0, 10.5], "schemes": ["no-ris", "lstm"],
                 "geometry": {"d_ris_ue": 7}},
    "run": {"jobs": 4, "sweeps": ["power"], "train_missing": true}
  })");
  CHECK(c.dataset.elements == 4);
  CHECK(c.scenario.window == 6);
  CHECK(c.train.epochs == 3);
  CHECK(c.train.adam.learning_rate == 0.01);
  CHECK(c.scenario.powers_dbm == std::vector<double>{0, 10.5});
  CHECK(c.scenario.schemes == std::vector{experiments::SchemeId::NoRis, experiments::SchemeId::Lstm});
  CHECK(c.scenario.geometry.d_ris_ue == 7);
  CHECK(c.scenario.geometry.d_bs_ue == 40);
  CHECK(c.run.jobs == 4);
  CHECK(c.run.train_missing);

  const auto m = c.model_config();
  CHECK(m.variant == predict::Variant::Lstm);
  CHECK(m.elements == 4);
  CHECK(m.window == 6);
  CHECK(m.lstm_hidden == 12);
  // untouched sizes come from the table
  CHECK(m.lstm_fc == predict::table_config(predict::Variant::Lstm, 4).lstm_fc);
}

TEST_CASE("syntax errors carry line and column") {
  const auto e = error_of("{\n  \"dataset\": {\n    \"elements\": 4,\n  }\n}");
  CHECK(e.rfind("cfg.json:4:3:", 0) == 0);
  CHECK(e.find("invalid JSON") != std::string::npos);
}

TEST_CASE("unknown keys are rejected with their location") {
  const auto e = error_of("{\n  \"dataset\": {\n    \"elemnts\": 4\n  }\n}");
  CHECK(e.rfind("cfg.json:3:5:", 0) == 0);
  CHECK(e.find("dataset.elemnts") != std::string::npos);
  CHECK(e.find("unknown key") != std::string::npos);

  CHECK(error_of(R"({"datasets": {}})").find("unknown section") != std::string::npos);
  CHECK(error_of(R"({"scenario": {"geometry": {"height": 3}}})").find("scenario.geometry.height") !=
        std::string::npos);
}

TEST_CASE("type and value errors") {
  CHECK(error_of(R"({"dataset": {"elements": "eight"}})").find("non-negative integer") != std::string::npos);
  CHECK(error_of(R"({"dataset": {"elements": -1}})").find("non-negative integer") != std::string::npos);
  CHECK(error_of(R"({"train": {"learning_rate": "fast"}})").find("expected a number") != std::string::npos);
  CHECK(error_of(R"({"scenario": {"powers_dbm": 5}})").find("expected a list") != std::string::npos);
  CHECK(error_of(R"({"scenario": {"schemes": ["magic"]}})").find("unknown scheme") != std::string::npos);
  CHECK(error_of(R"({"model": {"variant": "gru"}})").find("model.variant") != std::string::npos);
  CHECK(error_of(R"({"run": {"train_missing": 1}})").find("true or false") != std::string::npos);
  CHECK(error_of(R"({"dataset": {"elements": 0}})").find("dataset.elements") != std::string::npos);
  CHECK(error_of(R"({"run": {"sweeps": ["both"]}})").find("run.sweeps") != std::string::npos);
  CHECK(error_of("[]").find("top level") != std::string::npos);
}

TEST_CASE("model sizes must exist for N outside the table") {
  auto c = parse_config(R"({"dataset": {"elements": 5}, "model": {"variant": "dnn"}})");
  CHECK_THROWS_AS(c.model_config(), ConfigError);
  c = parse_config(R"({"dataset": {"elements": 5}, "model": {"variant": "dnn", "dnn_hidden": [8, 8, 8, 8]}})");
  CHECK(c.model_config().dnn_hidden == std::vector<std::size_t>{8, 8, 8, 8});
}

TEST_CASE("resolved JSON roundtrips") {
  const auto c = parse_config(R"({"dataset": {"elements": 12}, "model": {"heads": 4},
                                 "scenario": {"seeds": [3, 4], "confidence": 0.9}})");
  const std::string text = to_json_text(c);
  const auto back = parse_config(text);
  CHECK(to_json_text(back) == text);
  CHECK(back.scenario.seeds == std::vector<std::uint64_t>{3, 4});
  CHECK(back.model.heads == 4u);
}

TEST_CASE("a run manifest is accepted as a config") {
  const auto c = parse_config(R"({"dataset": {"elements": 2}})");
  const std::string manifest =
      R"({"format": "risnet-manifest", "version": 1, "subcommand": "generate", "config": )" + to_json_text(c) +
      R"(, "seeds": {}, "artifacts": []})";
  CHECK(parse_config(manifest).dataset.elements == 2);
}

TEST_CASE("load_config") {
  testing::TempDir dir("cfg");
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
  std::ofstream(dir / "c.json") << R"({"train": {"epochs": 7}})";
  CHECK(load_config(dir / "c.json").train.epochs == 7);
  std::ofstream(dir / "bad.json") << "{\"train\": {\"epoch\": 7}}";
  try {
    load_config(dir / "bad.json");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("bad.json:1:12:") != std::string::npos);
  }
}
