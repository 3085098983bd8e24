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

#include <cmath>
#include <map>

#include "risnet/error.hpp"
#include "risnet/experiments.hpp"
#include "test_support.hpp"

using namespace risnet;
using namespace risnet::experiments;

namespace {

ScenarioConfig small_scenario() {
  ScenarioConfig s;
  s.iterations = 40;
  s.segment_length = 20;
  s.schemes = {SchemeId::OptimalCsi, SchemeId::FixedPhase, SchemeId::NoRis};
  return s;
}

/// A briefly trained DNN for N elements; good enough to exercise the pipeline.
predict::TrainedModel quick_model(std::size_t n, const ScenarioConfig& s) {
  const auto filter = channel::build_correlation_filter(s.normalized_doppler, s.filter_length);
  const auto series = channel::generate_channel_series(s.geometry, n, 300, filter, 77);
  const auto data = channel::prepare_dataset(channel::to_feature_matrix(series), s.window);
  auto cfg = predict::table_config(predict::Variant::Dnn, 4);
  cfg.elements = n;
  predict::TrainConfig t;
  t.epochs = 3;
  return predict::fit(cfg, data.dataset, data.stats, t);
}

}  // namespace

TEST_CASE("scheme ids") {
  CHECK(kAllSchemes.size() == 6);
  for (auto id : kAllSchemes) CHECK(parse_scheme_id(scheme_id_name(id)) == id);
  CHECK(scheme_variant(SchemeId::Lstm) == predict::Variant::Lstm);
  CHECK_FALSE(scheme_variant(SchemeId::NoRis).has_value());
  CHECK_THROWS_AS(parse_scheme_id("ideal"), InvalidArgument);
}

TEST_CASE("wilson interval") {
  const auto ci = wilson_interval(50, 100, 0.95);
  CHECK(ci.lo == doctest::Approx(0.404).epsilon(1e-3));
  CHECK(ci.hi == doctest::Approx(0.596).epsilon(1e-3));

  const auto zero = wilson_interval(0, 1000, 0.95);
  CHECK(zero.lo == 0.0);
  CHECK(zero.hi > 0.0);
  CHECK(wilson_interval(10, 10, 0.95).hi == 1.0);

  // independent evaluation at 90% with z = 1.6448536269514722
  const double z = 1.6448536269514722;
  const double n = 40;
  const double p = 3.0 / 40.0;
  const double c = (p + z * z / (2 * n)) / (1 + z * z / n);
  const double h = z / (1 + z * z / n) * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n));
  const auto w = wilson_interval(3, 40, 0.90);
  CHECK(w.lo == doctest::Approx(c - h).epsilon(1e-12));
  CHECK(w.hi == doctest::Approx(c + h).epsilon(1e-12));

  // width shrinks like 1 / sqrt(n)
  const auto a = wilson_interval(200, 1000, 0.95);
  const auto b = wilson_interval(400, 2000, 0.95);
  CHECK((b.hi - b.lo) / (a.hi - a.lo) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(0.02));

  CHECK_THROWS_AS(wilson_interval(0, 0, 0.95), InsufficientData);
  CHECK_THROWS_AS(wilson_interval(5, 4, 0.95), InvalidArgument);
}

TEST_CASE("tally uses the strict threshold") {
  ScenarioConfig s;
  GainSamples g;
  g.elements = 1;
  g.seed = 3;
  g.schemes = {SchemeId::NoRis};
  // at 30 dBm and -100 dBW, SNR = gain * 1e10; threshold gain = 1e-10
  g.gain = {{0.5e-10, 1e-10, 2e-10, 0.99e-10}};
  const double powers[] = {30.0, 60.0};
  const auto rows = tally(g, s, powers);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].outages == 2);
  CHECK(rows[0].samples == 4);
  CHECK(rows[1].outages == 0);
  CHECK(rows[0].seeds == std::vector<std::uint64_t>{3});
}

TEST_CASE("required power") {
  std::vector<double> gains(1000);
  for (std::size_t i = 0; i < gains.size(); ++i) gains[i] = static_cast<double>(i + 1) * 1e-12;
  // 1% of 1000: the 10 smallest may fail, threshold at the 11th value
  const double p = required_power_dbm(gains, 0.01, -100.0, 1.0);
  CHECK(p == doctest::Approx(10 * std::log10(1e-10 / 11e-12) + 30).epsilon(1e-12));
  CHECK_THROWS_AS(required_power_dbm(std::vector<double>{}, 0.01, -100, 1), InsufficientData);
  CHECK_THROWS_AS(required_power_dbm(gains, 0.0, -100, 1), InvalidArgument);
}

TEST_CASE("no-RIS required power matches the Rayleigh closed form") {
  channel::LinkGeometry geom;
  const auto states = channel::sample_independent_states(geom, 1, 100000, 5);
  std::vector<double> gains;
  for (const auto& s : states) gains.push_back(std::norm(s.f));
  const double var = channel::path_loss_linear(geom, channel::Link::BsUe);
  const double closed = 10 * std::log10(1e-10 / (var * -std::log(0.99))) + 30;
  CHECK(closed == doctest::Approx(47.3).epsilon(1e-3));
  CHECK(std::abs(required_power_dbm(gains, 0.01, -100, 1) - closed) < 0.2);
}

TEST_CASE("simulate_gains") {
  auto s = small_scenario();
  SUBCASE("shape and scheme sanity") {
    const auto g = simulate_gains(s, 4, 1, nullptr);
    CHECK(g.gain.size() == 3);
    CHECK(g.of(SchemeId::OptimalCsi).size() == 800);
    CHECK_THROWS_AS(g.of(SchemeId::Lstm), InvalidArgument);
    double opt = 0;
    double fixed = 0;
    for (std::size_t i = 0; i < 800; ++i) {
      opt += g.of(SchemeId::OptimalCsi)[i];
      fixed += g.of(SchemeId::FixedPhase)[i];
    }
    CHECK(opt > fixed);
  }
  SUBCASE("missing model is named") {
    s.schemes = {SchemeId::OptimalCsi, SchemeId::Lstm};
    CHECK_THROWS_WITH_AS(simulate_gains(s, 4, 1, nullptr), doctest::Contains("lstm model for N = 4"),
                         InvalidArgument);
  }
  SUBCASE("model for the wrong N") {
    s.schemes = {SchemeId::Dnn};
    const auto m = quick_model(2, s);
    const ModelProvider p = [&](predict::Variant, std::size_t, std::uint64_t) { return &m; };
    CHECK_THROWS_AS(simulate_gains(s, 3, 1, p), DimensionError);
  }
  SUBCASE("thread count does not change results") {
    s.schemes = {SchemeId::OptimalCsi, SchemeId::Dnn, SchemeId::NoRis};
    const auto m = quick_model(2, s);
    const ModelProvider p = [&](predict::Variant, std::size_t, std::uint64_t) { return &m; };
    const auto a = simulate_gains(s, 2, 9, p, 1);
    const auto b = simulate_gains(s, 2, 9, p, 3);
    CHECK(a.gain == b.gain);
    // forecasts actually steer the surface
    CHECK(a.gain[1] != a.gain[0]);
  }
}

TEST_CASE("power sweep") {
  auto s = small_scenario();
  s.powers_dbm = {20, 30, 40, 50};
  s.power_sweep_elements = 4;
  s.seeds = {1, 2};
  const auto r = run_power_sweep(s, nullptr);
  REQUIRE(r.rows.size() == 3 * 4);
  std::map<SchemeId, std::vector<double>> curves;
  for (const auto& row : r.rows) {
    CHECK(row.samples == 2 * 40 * 20);
    CHECK(row.seeds == std::vector<std::uint64_t>{1, 2});
    curves[row.scheme].push_back(row.outage());
  }
  for (const auto& [id, c] : curves) {
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i] <= c[i - 1]);
  }
  for (std::size_t i = 0; i < 4; ++i) CHECK(curves[SchemeId::OptimalCsi][i] <= curves[SchemeId::NoRis][i]);

  const auto rep = aggregate(r, 0.95, 1.0);
  for (const auto& row : rep) {
    CHECK(row.rate == doctest::Approx(1.0 - row.outage));
    CHECK(row.ci.lo <= row.outage);
    CHECK(row.ci.hi >= row.outage);
  }
  CHECK_THROWS_AS(aggregate(SweepResult{}, 0.95, 1.0), InsufficientData);

  // bitwise reproducible
  const auto again = run_power_sweep(s, nullptr);
  for (std::size_t i = 0; i < r.rows.size(); ++i) CHECK(again.rows[i].outages == r.rows[i].outages);
}

TEST_CASE("element sweep") {
  auto s = small_scenario();
  s.iterations = 100;
  s.elements = {2, 4, 8};
  s.element_sweep_power_dbm = 35;
  const auto r = run_element_sweep(s, nullptr);
  REQUIRE(r.rows.size() == 9);
  std::vector<double> optimal;
  for (const auto& row : r.rows) {
    CHECK(row.power_dbm == 35);
    if (row.scheme == SchemeId::OptimalCsi) optimal.push_back(row.outage());
  }
  REQUIRE(optimal.size() == 3);
  CHECK(optimal[1] <= optimal[0]);
  CHECK(optimal[2] <= optimal[1]);
  CHECK(r.rows.front().scheme == SchemeId::OptimalCsi);
  CHECK(r.rows.back().scheme == SchemeId::NoRis);
}

TEST_CASE("confidence interval shrinks with more iterations") {
  auto s = small_scenario();
  s.schemes = {SchemeId::NoRis};
  s.powers_dbm = {45};
  s.power_sweep_elements = 1;
  s.iterations = 1000;
  const auto a = aggregate(run_power_sweep(s, nullptr), 0.95, 1.0)[0];
  s.iterations = 2000;
  const auto b = aggregate(run_power_sweep(s, nullptr), 0.95, 1.0)[0];
  const double ratio = (b.ci.hi - b.ci.lo) / (a.ci.hi - a.ci.lo);
  CHECK(ratio == doctest::Approx(1 / std::sqrt(2.0)).epsilon(0.10));
}

TEST_CASE("scenario validation") {
  ScenarioConfig s;
  s.iterations = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = ScenarioConfig{};
  s.seeds.clear();
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = ScenarioConfig{};
  s.geometry.d_bs_ue = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("sweep CSV roundtrip") {
  testing::TempDir dir("csv");
  auto s = small_scenario();
  s.powers_dbm = {10, 40};
  s.seeds = {4, 5};
  const auto rows = aggregate(run_power_sweep(s, nullptr), 0.95, 1.0);
  write_report_csv(dir / "p.csv", rows);
  const auto back = read_report_csv(dir / "p.csv");
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].scheme == rows[i].scheme);
    CHECK(back[i].outage == rows[i].outage);
    CHECK(back[i].ci.lo == rows[i].ci.lo);
    CHECK(back[i].seeds == rows[i].seeds);
  }
  CHECK(testing::slurp(dir / "p.csv").rfind(std::string(kSweepCsvHeader), 0) == 0);

  std::ofstream(dir / "bad.csv") << kSweepCsvHeader << "\nno-ris,1,2,x,0,0,0,1,1\n";
  CHECK_THROWS_AS(read_report_csv(dir / "bad.csv"), InvalidArgument);
}
