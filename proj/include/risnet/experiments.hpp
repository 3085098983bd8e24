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

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "risnet/channel_sim.hpp"
#include "risnet/predictors.hpp"
#include "risnet/ris_link.hpp"

namespace risnet::experiments {

enum class SchemeId { OptimalCsi, Transformer, Lstm, Dnn, FixedPhase, NoRis };

inline constexpr std::array<SchemeId, 6> kAllSchemes{SchemeId::OptimalCsi, SchemeId::Transformer, SchemeId::Lstm,
                                                     SchemeId::Dnn,        SchemeId::FixedPhase,  SchemeId::NoRis};

/// "optimal-csi", "transformer", "lstm", "dnn", "fixed-phase", "no-ris"
std::string_view scheme_id_name(SchemeId id);
SchemeId parse_scheme_id(std::string_view name);
/// The forecaster behind a prediction-based scheme; nullopt for the others.
std::optional<predict::Variant> scheme_variant(SchemeId id);

struct ScenarioConfig {
  std::vector<std::size_t> elements{4, 8, 12, 16, 20};
  std::vector<double> powers_dbm{0, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50};
  std::size_t power_sweep_elements = 8;
  double element_sweep_power_dbm = 30.0;
  channel::LinkGeometry geometry;
  double noise_power_dbw = -100.0;
  double gamma_th = 1.0;
  std::size_t iterations = 2000;
  std::size_t segment_length = 50;
  std::size_t window = predict::kDefaultWindow;
  double normalized_doppler = 0.01;
  std::size_t filter_length = 64;
  std::vector<std::uint64_t> seeds{1};
  std::vector<SchemeId> schemes{kAllSchemes.begin(), kAllSchemes.end()};
  double confidence = 0.95;

  link::RadioConfig radio(double power_dbm) const { return {power_dbm, noise_power_dbw, gamma_th}; }
  /// Throws ConfigError.
  void validate() const;
};

/// Supplies the trained forecaster for (variant, N, seed); returns nullptr
/// when none is available.
using ModelProvider = std::function<const predict::TrainedModel*(predict::Variant, std::size_t, std::uint64_t)>;

/// |effective gain|^2 per scheme over every test sample of one (N, seed)
/// run, in a fixed order: iteration-major, then time step.
struct GainSamples {
  std::size_t elements = 0;
  std::uint64_t seed = 0;
  std::vector<SchemeId> schemes;
  std::vector<std::vector<double>> gain;  // indexed like `schemes`

  const std::vector<double>& of(SchemeId id) const;
};

/// Draws `iterations` fresh segments of window + segment_length correlated
/// samples, forecasts the last segment_length steps with each model and
/// evaluates every scheme over the ground-truth channels. Threads split the
/// iterations; the result does not depend on `jobs`.
/// Throws InvalidArgument naming the (variant, N) pair of a missing model.
GainSamples simulate_gains(const ScenarioConfig& scenario, std::size_t elements, std::uint64_t seed,
                           const ModelProvider& models, unsigned jobs = 1);

/// Seed of Monte Carlo iteration `iteration` of a run seeded with `seed`.
std::uint64_t segment_seed(std::uint64_t seed, std::size_t elements, std::size_t iteration);

/// Outage tally of one operating point.
struct SweepRow {
  SchemeId scheme = SchemeId::OptimalCsi;
  std::size_t elements = 0;
  double power_dbm = 0.0;
  std::size_t outages = 0;
  std::size_t samples = 0;
  std::vector<std::uint64_t> seeds;

  double outage() const { return samples == 0 ? 0.0 : static_cast<double>(outages) / static_cast<double>(samples); }
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

/// Counts gain samples with SNR strictly below gamma_th at each power.
std::vector<SweepRow> tally(const GainSamples& samples, const ScenarioConfig& scenario,
                            std::span<const double> powers_dbm);

/// Powers in scenario.powers_dbm at N = scenario.power_sweep_elements, one
/// run per seed, counts pooled over seeds.
SweepResult run_power_sweep(const ScenarioConfig& scenario, const ModelProvider& models, unsigned jobs = 1);
/// N over scenario.elements at scenario.element_sweep_power_dbm.
SweepResult run_element_sweep(const ScenarioConfig& scenario, const ModelProvider& models, unsigned jobs = 1);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson score interval for `successes` out of `trials`.
Interval wilson_interval(std::size_t successes, std::size_t trials, double confidence);

struct ReportRow {
  SchemeId scheme = SchemeId::OptimalCsi;
  std::size_t elements = 0;
  double power_dbm = 0.0;
  double outage = 0.0;
  Interval ci;
  double rate = 0.0;
  std::size_t samples = 0;
  std::vector<std::uint64_t> seeds;
};

/// Throws InsufficientData on an empty result.
std::vector<ReportRow> aggregate(const SweepResult& result, double confidence, double gamma_th);

/// Transmit power (dBm) at which the empirical outage of `gain` drops to
/// `target`: gamma_th N0 / q with q the target-quantile of |gain|^2.
double required_power_dbm(std::span<const double> gain, double target, double noise_power_dbw, double gamma_th);

inline constexpr std::string_view kSweepCsvHeader =
    "scheme,N,power_dbm,outage,outage_ci_lo,outage_ci_hi,rate,samples,seeds";

void write_report_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows);
std::vector<ReportRow> read_report_csv(const std::filesystem::path& path);

}  // namespace risnet::experiments
