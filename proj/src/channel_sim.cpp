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

#include "risnet/channel_sim.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "risnet/error.hpp"

namespace risnet::channel {

void LinkGeometry::validate() const {
  if (!(d_bs_ue > 0.0 && d_bs_ris > 0.0 && d_ris_ue > 0.0)) {
    throw InvalidGeometry("link distances must be positive");
  }
  if (!(d0 > 0.0)) throw InvalidGeometry("reference distance must be positive");
  if (!(eta_bs_ue > 0.0 && eta_bs_ris > 0.0 && eta_ris_ue > 0.0)) {
    throw InvalidGeometry("path-loss exponents must be positive");
  }
  if (!std::isfinite(l0_db)) throw InvalidGeometry("reference loss must be finite");
}

double path_loss_db(const LinkGeometry& geometry, Link link) {
  geometry.validate();
  double d = 0.0;
  double eta = 0.0;
  switch (link) {
    case Link::BsUe: d = geometry.d_bs_ue; eta = geometry.eta_bs_ue; break;
    case Link::BsRis: d = geometry.d_bs_ris; eta = geometry.eta_bs_ris; break;
    case Link::RisUe: d = geometry.d_ris_ue; eta = geometry.eta_ris_ue; break;
  }
  return geometry.l0_db - 10.0 * eta * std::log10(d / geometry.d0);
}

double path_loss_linear(const LinkGeometry& geometry, Link link) {
  return std::pow(10.0, path_loss_db(geometry, link) / 10.0);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined state
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<Complex> sample_uncorrelated(std::uint64_t seed, std::size_t count) {
  if (count == 0) throw InvalidArgument("sample_uncorrelated: count must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  std::vector<Complex> out(count);
  for (auto& s : out) {
    const double re = normal(rng);
    const double im = normal(rng);
    s = {re, im};
  }
  return out;
}

CorrelationFilter build_correlation_filter(double normalized_doppler, std::size_t length) {
  if (!(normalized_doppler > 0.0 && normalized_doppler < 0.5)) {
    throw InvalidArgument("normalized Doppler must lie in (0, 0.5)");
  }
  if (length == 0) throw InvalidArgument("filter length must be at least 1");

  CorrelationFilter filter;
  filter.normalized_doppler = normalized_doppler;
  filter.taps.resize(length);
  const double center = 0.5 * static_cast<double>(length - 1);
  for (std::size_t n = 0; n < length; ++n) {
    const double lag = static_cast<double>(n) - center;
    const double window =
        length == 1 ? 1.0
                    : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                             static_cast<double>(length - 1));
    // J0 is even; libstdc++ rejects negative arguments
    filter.taps[n] = std::cyl_bessel_j(0.0, 2.0 * std::numbers::pi * normalized_doppler * std::abs(lag)) * window;
  }
  double energy = 0.0;
  for (double t : filter.taps) energy += t * t;
  if (!(energy > 0.0)) throw InvalidArgument("correlation filter has zero energy");
  const double scale = 1.0 / std::sqrt(energy);
  for (double& t : filter.taps) t *= scale;
  return filter;
}

std::vector<Complex> correlate(std::span<const Complex> samples, const CorrelationFilter& filter) {
  if (samples.empty()) throw InvalidArgument("correlate: empty input");
  const std::size_t taps = filter.taps.size();
  std::vector<Complex> out(samples.size());
  for (std::size_t n = 0; n < samples.size(); ++n) {
    double re = 0.0;
    double im = 0.0;
    const std::size_t kmax = std::min(taps, n + 1);
    for (std::size_t k = 0; k < kmax; ++k) {
      re += filter.taps[k] * samples[n - k].real();
      im += filter.taps[k] * samples[n - k].imag();
    }
    out[n] = {re, im};
  }
  return out;
}

namespace {

std::vector<Complex> correlated_process(std::uint64_t seed, std::size_t length,
                                        const CorrelationFilter& filter, double variance) {
  const std::size_t warmup = filter.length();
  const auto white = sample_uncorrelated(seed, length + warmup);
  const auto filtered = correlate(white, filter);
  const double scale = std::sqrt(variance);
  std::vector<Complex> out(length);
  for (std::size_t t = 0; t < length; ++t) out[t] = filtered[warmup + t] * scale;
  return out;
}

}  // namespace

ChannelSeries generate_channel_series(const LinkGeometry& geometry, std::size_t elements,
                                      std::size_t length, const CorrelationFilter& filter,
                                      std::uint64_t seed) {
  if (elements == 0) throw InvalidArgument("RIS element count must be at least 1");
  if (length < 11) throw InsufficientData("channel series needs at least 11 time steps");
  if (filter.taps.empty()) throw InvalidArgument("correlation filter has no taps");

  const double var_f = path_loss_linear(geometry, Link::BsUe);
  const double var_h = path_loss_linear(geometry, Link::BsRis);
  const double var_g = path_loss_linear(geometry, Link::RisUe);

  ChannelSeries series;
  series.elements = elements;
  series.steps.resize(length);
  for (auto& s : series.steps) {
    s.h.resize(elements);
    s.g.resize(elements);
  }

  const auto f = correlated_process(derive_seed(seed, 0), length, filter, var_f);
  for (std::size_t t = 0; t < length; ++t) series.steps[t].f = f[t];
  for (std::size_t i = 0; i < elements; ++i) {
    const auto h = correlated_process(derive_seed(seed, 1 + i), length, filter, var_h);
    const auto g = correlated_process(derive_seed(seed, 1 + elements + i), length, filter, var_g);
    for (std::size_t t = 0; t < length; ++t) {
      series.steps[t].h[i] = h[t];
      series.steps[t].g[i] = g[t];
    }
  }
  return series;
}

std::vector<link::ChannelState> sample_independent_states(const LinkGeometry& geometry,
                                                          std::size_t elements,
                                                          std::size_t count, std::uint64_t seed) {
  if (elements == 0) throw InvalidArgument("RIS element count must be at least 1");
  const double sf = std::sqrt(path_loss_linear(geometry, Link::BsUe));
  const double sh = std::sqrt(path_loss_linear(geometry, Link::BsRis));
  const double sg = std::sqrt(path_loss_linear(geometry, Link::RisUe));

  const auto white = sample_uncorrelated(seed, count * (2 * elements + 1));
  std::vector<link::ChannelState> states(count);
  std::size_t k = 0;
  for (auto& s : states) {
    s.f = white[k++] * sf;
    s.h.resize(elements);
    s.g.resize(elements);
    for (auto& v : s.h) v = white[k++] * sh;
    for (auto& v : s.g) v = white[k++] * sg;
  }
  return states;
}

Matrix to_feature_matrix(const ChannelSeries& series) {
  const std::size_t n = series.elements;
  Matrix m(static_cast<Eigen::Index>(series.length()), static_cast<Eigen::Index>(feature_count(n)));
  for (std::size_t t = 0; t < series.length(); ++t) {
    const auto& s = series.steps[t];
    if (s.h.size() != n || s.g.size() != n) {
      throw DimensionError("channel series step " + std::to_string(t) + " has the wrong element count");
    }
    auto row = m.row(static_cast<Eigen::Index>(t));
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<Eigen::Index>(i);
      const auto nn = static_cast<Eigen::Index>(n);
      row(c) = s.h[i].real();
      row(nn + c) = s.h[i].imag();
      row(2 * nn + c) = s.g[i].real();
      row(3 * nn + c) = s.g[i].imag();
    }
  }
  return m;
}

link::ChannelState state_from_features(std::span<const double> row) {
  if (row.empty() || row.size() % 4 != 0) {
    throw DimensionError("feature row length " + std::to_string(row.size()) + " is not a positive multiple of 4");
  }
  const std::size_t n = row.size() / 4;
  link::ChannelState s;
  s.h.resize(n);
  s.g.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.h[i] = {row[i], row[n + i]};
    s.g[i] = {row[2 * n + i], row[3 * n + i]};
  }
  return s;
}

ChannelSeries series_from_feature_matrix(const Matrix& features) {
  ChannelSeries series;
  if (features.cols() == 0 || features.cols() % 4 != 0) {
    throw DimensionError("feature matrix needs a positive multiple of 4 columns");
  }
  series.elements = static_cast<std::size_t>(features.cols()) / 4;
  series.steps.reserve(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index t = 0; t < features.rows(); ++t) {
    series.steps.push_back(state_from_features({features.row(t).data(), static_cast<std::size_t>(features.cols())}));
  }
  return series;
}

void NormStats::validate() const {
  if (mean.size() != std.size()) throw DimensionError("norm stats: mean/std length mismatch");
  for (std::size_t j = 0; j < std.size(); ++j) {
    if (!(std[j] > 0.0) || !std::isfinite(std[j]) || !std::isfinite(mean[j])) {
      throw DegenerateFeature("feature " + std::to_string(j) + " has zero or non-finite spread");
    }
  }
}

NormStats compute_norm_stats(const Matrix& matrix, std::size_t rows) {
  if (rows == 0 || rows > static_cast<std::size_t>(matrix.rows())) {
    throw InsufficientData("normalization needs between 1 and " + std::to_string(matrix.rows()) + " rows");
  }
  const auto block = matrix.topRows(static_cast<Eigen::Index>(rows));
  NormStats stats;
  stats.mean.resize(static_cast<std::size_t>(matrix.cols()));
  stats.std.resize(static_cast<std::size_t>(matrix.cols()));
  for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
    const double mu = block.col(j).mean();
    const double var = (block.col(j).array() - mu).square().mean();
    stats.mean[static_cast<std::size_t>(j)] = mu;
    stats.std[static_cast<std::size_t>(j)] = std::sqrt(var);
  }
  stats.validate();
  return stats;
}

Matrix normalize(const Matrix& matrix, const NormStats& stats) {
  stats.validate();
  if (static_cast<std::size_t>(matrix.cols()) != stats.features()) {
    throw DimensionError("normalize: matrix has " + std::to_string(matrix.cols()) +
                         " columns, stats cover " + std::to_string(stats.features()));
  }
  Matrix out(matrix.rows(), matrix.cols());
  for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    out.col(j) = (matrix.col(j).array() - stats.mean[k]) / stats.std[k];
  }
  return out;
}

Matrix denormalize(const Matrix& matrix, const NormStats& stats) {
  stats.validate();
  if (static_cast<std::size_t>(matrix.cols()) != stats.features()) {
    throw DimensionError("denormalize: matrix has " + std::to_string(matrix.cols()) +
                         " columns, stats cover " + std::to_string(stats.features()));
  }
  Matrix out(matrix.rows(), matrix.cols());
  for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    out.col(j) = matrix.col(j).array() * stats.std[k] + stats.mean[k];
  }
  return out;
}

WindowedDataset::WindowedDataset(Matrix series, std::size_t window)
    : series_(std::move(series)), window_(window) {
  if (window == 0) throw InvalidArgument("window size must be at least 1");
  const auto length = static_cast<std::size_t>(series_.rows());
  if (length <= window) {
    throw InsufficientData("series of length " + std::to_string(length) +
                           " is too short for window " + std::to_string(window));
  }
  const std::size_t n = length - window;
  const auto n_train = static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(n)));
  train_ = {0, n_train};
  validation_ = {n_train, n};
}

WindowedDataset windowize(const Matrix& matrix, std::size_t window) {
  return WindowedDataset(matrix, window);
}

std::size_t training_rows(std::size_t length, std::size_t window) {
  if (window == 0) throw InvalidArgument("window size must be at least 1");
  if (length <= window) throw InsufficientData("series too short for window");
  const auto n_train = static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(length - window)));
  return n_train + window;
}

PreparedData prepare_dataset(const Matrix& features, std::size_t window) {
  const auto rows = training_rows(static_cast<std::size_t>(features.rows()), window);
  NormStats stats = compute_norm_stats(features, rows);
  return PreparedData{stats, WindowedDataset(normalize(features, stats), window)};
}

}  // namespace risnet::channel
