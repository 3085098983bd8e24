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

#include "risnet/experiments.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "risnet/error.hpp"

namespace risnet::experiments {

std::string_view scheme_id_name(SchemeId id) {
  switch (id) {
    case SchemeId::OptimalCsi: return "optimal-csi";
    case SchemeId::Transformer: return "transformer";
    case SchemeId::Lstm: return "lstm";
    case SchemeId::Dnn: return "dnn";
    case SchemeId::FixedPhase: return "fixed-phase";
    case SchemeId::NoRis: return "no-ris";
  }
  throw InvalidArgument("unknown scheme");
}

SchemeId parse_scheme_id(std::string_view name) {
  for (SchemeId id : kAllSchemes) {
    if (scheme_id_name(id) == name) return id;
  }
  throw InvalidArgument("unknown scheme '" + std::string(name) + "'");
}

std::optional<predict::Variant> scheme_variant(SchemeId id) {
  switch (id) {
    case SchemeId::Transformer: return predict::Variant::Transformer;
    case SchemeId::Lstm: return predict::Variant::Lstm;
    case SchemeId::Dnn: return predict::Variant::Dnn;
    default: return std::nullopt;
  }
}

void ScenarioConfig::validate() const {
  try {
    geometry.validate();
  } catch (const InvalidGeometry& e) {
    throw ConfigError(e.what());
  }
  if (elements.empty()) throw ConfigError("scenario needs at least one element count");
  if (std::find(elements.begin(), elements.end(), 0u) != elements.end()) {
    throw ConfigError("element counts must be positive");
  }
  if (power_sweep_elements == 0) throw ConfigError("power sweep element count must be positive");
  if (powers_dbm.empty()) throw ConfigError("scenario needs at least one transmit power");
  for (double p : powers_dbm) {
    if (!std::isfinite(p)) throw ConfigError("transmit powers must be finite");
  }
  if (!std::isfinite(element_sweep_power_dbm) || !std::isfinite(noise_power_dbw)) {
    throw ConfigError("powers must be finite");
  }
  if (!(gamma_th > 0.0) || !std::isfinite(gamma_th)) throw ConfigError("gamma_th must be positive");
  if (iterations < 1) throw ConfigError("iteration count must be at least 1");
  if (segment_length < 1) throw ConfigError("test segment length must be at least 1");
  if (window < 1) throw ConfigError("window must be at least 1");
  if (!(normalized_doppler > 0.0 && normalized_doppler < 0.5)) {
    throw ConfigError("normalized Doppler must lie in (0, 0.5)");
  }
  if (filter_length < 1) throw ConfigError("filter length must be at least 1");
  if (seeds.empty()) throw ConfigError("scenario needs at least one seed");
  if (schemes.empty()) throw ConfigError("scenario needs at least one scheme");
  if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("confidence must lie in (0, 1)");
}

const std::vector<double>& GainSamples::of(SchemeId id) const {
  const auto it = std::find(schemes.begin(), schemes.end(), id);
  if (it == schemes.end()) throw InvalidArgument("scheme " + std::string(scheme_id_name(id)) + " was not simulated");
  return gain[static_cast<std::size_t>(it - schemes.begin())];
}

std::uint64_t segment_seed(std::uint64_t seed, std::size_t elements, std::size_t iteration) {
  // 0x7e57: a stream the training data never draws from
  return channel::derive_seed(channel::derive_seed(channel::derive_seed(seed, 0x7e57), elements), iteration);
}

GainSamples simulate_gains(const ScenarioConfig& scenario, std::size_t elements, std::uint64_t seed,
                           const ModelProvider& models, unsigned jobs) {
  scenario.validate();
  if (elements == 0) throw InvalidArgument("element count must be positive");

  const std::size_t ns = scenario.schemes.size();
  std::vector<const predict::TrainedModel*> forecaster(ns, nullptr);
  for (std::size_t s = 0; s < ns; ++s) {
    const auto variant = scheme_variant(scenario.schemes[s]);
    if (!variant) continue;
    const predict::TrainedModel* m = models ? models(*variant, elements, seed) : nullptr;
    if (m == nullptr) {
      throw InvalidArgument(fmt::format("no trained {} model for N = {} (seed {})", predict::variant_name(*variant),
                                        elements, seed));
    }
    const auto& c = m->model.config();
    if (c.elements != elements || c.window != scenario.window) {
      throw DimensionError(fmt::format("{} model was built for N = {}, W = {}; the sweep needs N = {}, W = {}",
                                       predict::variant_name(*variant), c.elements, c.window, elements,
                                       scenario.window));
    }
    forecaster[s] = m;
  }

  const auto filter = channel::build_correlation_filter(scenario.normalized_doppler, scenario.filter_length);
  const std::size_t w = scenario.window;
  const std::size_t seg = scenario.segment_length;

  GainSamples out;
  out.elements = elements;
  out.seed = seed;
  out.schemes = scenario.schemes;
  out.gain.assign(ns, std::vector<double>(scenario.iterations * seg));

  auto run_iteration = [&](std::size_t it) {
    const auto series =
        channel::generate_channel_series(scenario.geometry, elements, w + seg, filter, segment_seed(seed, elements, it));
    const Matrix features = channel::to_feature_matrix(series);

    std::vector<std::vector<link::ChannelState>> predicted(ns);
    for (std::size_t s = 0; s < ns; ++s) {
      if (forecaster[s] == nullptr) continue;
      const Matrix pred = predict::forecast_series(*forecaster[s], channel::normalize(features, forecaster[s]->stats));
      predicted[s].reserve(seg);
      for (Eigen::Index r = 0; r < pred.rows(); ++r) {
        predicted[s].push_back(channel::state_from_features({pred.row(r).data(), static_cast<std::size_t>(pred.cols())}));
      }
    }

    for (std::size_t t = 0; t < seg; ++t) {
      const auto& truth = series.steps[w + t];
      const std::size_t at = it * seg + t;
      for (std::size_t s = 0; s < ns; ++s) {
        std::optional<link::PhaseShiftVector> phases;
        switch (scenario.schemes[s]) {
          case SchemeId::OptimalCsi: phases = link::optimal_phases(truth.h, truth.g); break;
          case SchemeId::FixedPhase: phases = link::PhaseShiftVector::zeros(elements); break;
          case SchemeId::NoRis: break;
          default: phases = link::optimal_phases(predicted[s][t].h, predicted[s][t].g); break;
        }
        out.gain[s][at] = std::norm(link::scheme_gain(truth, phases));
      }
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, scenario.iterations);
  if (workers == 1) {
    for (std::size_t it = 0; it < scenario.iterations; ++it) run_iteration(it);
    return out;
  }
  // each iteration writes only its own slots, so scheduling cannot change the result
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t k = 0; k < workers; ++k) {
    pool.emplace_back([&, k] {
      try {
        for (std::size_t it = k; it < scenario.iterations; it += workers) run_iteration(it);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<SweepRow> tally(const GainSamples& samples, const ScenarioConfig& scenario,
                            std::span<const double> powers_dbm) {
  std::vector<SweepRow> rows;
  for (std::size_t s = 0; s < samples.schemes.size(); ++s) {
    for (double p : powers_dbm) {
      const auto radio = scenario.radio(p);
      const double scale = radio.transmit_power_watts() / radio.noise_power_watts();
      SweepRow row;
      row.scheme = samples.schemes[s];
      row.elements = samples.elements;
      row.power_dbm = p;
      row.samples = samples.gain[s].size();
      row.outages = static_cast<std::size_t>(std::count_if(samples.gain[s].begin(), samples.gain[s].end(),
                                                           [&](double g) { return g * scale < radio.gamma_th; }));
      row.seeds = {samples.seed};
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

namespace {

void pool_into(std::vector<SweepRow>& acc, const std::vector<SweepRow>& add) {
  if (acc.empty()) {
    acc = add;
    return;
  }
  for (std::size_t i = 0; i < acc.size(); ++i) {
    acc[i].outages += add[i].outages;
    acc[i].samples += add[i].samples;
    acc[i].seeds.insert(acc[i].seeds.end(), add[i].seeds.begin(), add[i].seeds.end());
  }
}

}  // namespace

SweepResult run_power_sweep(const ScenarioConfig& scenario, const ModelProvider& models, unsigned jobs) {
  std::vector<SweepRow> rows;
  for (std::uint64_t seed : scenario.seeds) {
    const auto gains = simulate_gains(scenario, scenario.power_sweep_elements, seed, models, jobs);
    pool_into(rows, tally(gains, scenario, scenario.powers_dbm));
  }
  return {std::move(rows)};
}

SweepResult run_element_sweep(const ScenarioConfig& scenario, const ModelProvider& models, unsigned jobs) {
  SweepResult result;
  const double power[] = {scenario.element_sweep_power_dbm};
  for (std::size_t n : scenario.elements) {
    std::vector<SweepRow> rows;
    for (std::uint64_t seed : scenario.seeds) {
      pool_into(rows, tally(simulate_gains(scenario, n, seed, models, jobs), scenario, power));
    }
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
  // scheme-major like the power sweep
  std::stable_sort(result.rows.begin(), result.rows.end(), [&](const SweepRow& a, const SweepRow& b) {
    const auto pos = [&](SchemeId id) { return std::find(scenario.schemes.begin(), scenario.schemes.end(), id); };
    return pos(a.scheme) < pos(b.scheme);
  });
  return result;
}

Interval wilson_interval(std::size_t successes, std::size_t trials, double confidence) {
  if (trials == 0) throw InsufficientData("wilson_interval: no trials");
  if (successes > trials) throw InvalidArgument("wilson_interval: more successes than trials");
  if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidArgument("confidence must lie in (0, 1)");
  const boost::math::normal_distribution<double> normal;
  const double z = boost::math::quantile(normal, 0.5 + 0.5 * confidence);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  Interval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
  if (successes == 0) ci.lo = 0.0;
  if (successes == trials) ci.hi = 1.0;
  return ci;
}

std::vector<ReportRow> aggregate(const SweepResult& result, double confidence, double gamma_th) {
  if (result.rows.empty()) throw InsufficientData("aggregate: sweep result has no rows");
  std::vector<ReportRow> out;
  out.reserve(result.rows.size());
  for (const auto& r : result.rows) {
    ReportRow row;
    row.scheme = r.scheme;
    row.elements = r.elements;
    row.power_dbm = r.power_dbm;
    row.outage = r.outage();
    row.ci = wilson_interval(r.outages, r.samples, confidence);
    row.rate = link::achievable_rate(row.outage, gamma_th);
    row.samples = r.samples;
    row.seeds = r.seeds;
    out.push_back(std::move(row));
  }
  return out;
}

double required_power_dbm(std::span<const double> gain, double target, double noise_power_dbw, double gamma_th) {
  if (gain.empty()) throw InsufficientData("required_power_dbm: no samples");
  if (!(target > 0.0 && target < 1.0)) throw InvalidArgument("target outage must lie in (0, 1)");
  std::vector<double> sorted(gain.begin(), gain.end());
  // at most floor(target n) samples may fall strictly below the threshold
  const auto k = static_cast<std::size_t>(std::floor(target * static_cast<double>(sorted.size())));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  const double q = sorted[k];
  if (!(q > 0.0)) throw InvalidArgument("required_power_dbm: quantile gain is zero");
  const double watts = gamma_th * link::dbw_to_watts(noise_power_dbw) / q;
  return 10.0 * std::log10(watts) + 30.0;
}

void write_report_csv(const std::filesystem::path& path, const std::vector<ReportRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    std::string seeds;
    for (std::size_t i = 0; i < r.seeds.size(); ++i) seeds += (i ? ";" : "") + std::to_string(r.seeds[i]);
    out << fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{}\n", scheme_id_name(r.scheme), r.elements,
                       r.power_dbm, r.outage, r.ci.lo, r.ci.hi, r.rate, r.samples, seeds);
  }
  if (!out) throw Error("failed writing " + path.string());
}

namespace {

template <typename T>
T parse_cell(const std::string& cell, const std::filesystem::path& path, std::size_t line) {
  T v{};
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
    throw InvalidArgument(fmt::format("{}:{}: malformed value '{}'", path.string(), line, cell));
  }
  return v;
}

}  // namespace

std::vector<ReportRow> read_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kSweepCsvHeader) {
    throw InvalidArgument(path.string() + ": not a sweep CSV (unexpected header)");
  }
  std::vector<ReportRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 9) {
      throw InvalidArgument(fmt::format("{}:{}: expected 9 columns, found {}", path.string(), lineno, cells.size()));
    }
    ReportRow r;
    try {
      r.scheme = parse_scheme_id(cells[0]);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
    r.elements = parse_cell<std::size_t>(cells[1], path, lineno);
    r.power_dbm = parse_cell<double>(cells[2], path, lineno);
    r.outage = parse_cell<double>(cells[3], path, lineno);
    r.ci.lo = parse_cell<double>(cells[4], path, lineno);
    r.ci.hi = parse_cell<double>(cells[5], path, lineno);
    r.rate = parse_cell<double>(cells[6], path, lineno);
    r.samples = parse_cell<std::size_t>(cells[7], path, lineno);
    std::stringstream seeds(cells[8]);
    while (std::getline(seeds, cell, ';')) {
      if (!cell.empty()) r.seeds.push_back(parse_cell<std::uint64_t>(cell, path, lineno));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace risnet::experiments
