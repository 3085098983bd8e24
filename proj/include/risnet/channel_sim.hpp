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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "risnet/matrix.hpp"
#include "risnet/ris_link.hpp"

namespace risnet::channel {

enum class Link { BsUe, BsRis, RisUe };

/// Distances in meters, dimensionless path-loss exponents, reference loss in dB.
struct LinkGeometry {
  double d_bs_ue = 40.0;
  double d_bs_ris = 38.0;
  double d_ris_ue = 5.0;
  double eta_bs_ue = 4.2;
  double eta_bs_ris = 2.2;
  double eta_ris_ue = 2.2;
  double l0_db = -30.0;
  double d0 = 1.0;

  void validate() const;
};

/// Log-distance large-scale power gain of one link in dB:
/// L0_dB - 10 eta log10(d / d0). With L0 = -30 dB this is -30 dB at d0
/// and decreases with distance.
double path_loss_db(const LinkGeometry& geometry, Link link);

/// 10^(path_loss_db / 10); the variance of the link's Rayleigh coefficients.
double path_loss_linear(const LinkGeometry& geometry, Link link);

/// Mixes a base seed with a stream index into an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// i.i.d. CN(0, 1) samples. Throws InvalidArgument for count == 0.
std::vector<Complex> sample_uncorrelated(std::uint64_t seed, std::size_t count);

/// FIR impulse response with unit energy (sum of squared taps is 1).
struct CorrelationFilter {
  std::vector<double> taps;
  double normalized_doppler = 0.0;

  std::size_t length() const noexcept { return taps.size(); }
};

/// Clarke-shaped taps J0(2 pi fD k), with the lag k measured from the
/// filter midpoint, Hamming-windowed and scaled to unit energy.
/// Requires 0 < fD < 0.5 and length >= 1.
CorrelationFilter build_correlation_filter(double normalized_doppler, std::size_t length);

/// Causal convolution y[n] = sum_k taps[k] x[n-k] with zero initial state,
/// applied to the real and imaginary streams independently. The output has
/// the input's length; callers discard the first `filter.length()` samples
/// when they need the stationary part.
std::vector<Complex> correlate(std::span<const Complex> samples, const CorrelationFilter& filter);

/// Time series of channel states, all with the same element count.
struct ChannelSeries {
  std::size_t elements = 0;
  std::vector<link::ChannelState> steps;

  std::size_t length() const noexcept { return steps.size(); }
};

/// 2N+1 independent time-correlated Rayleigh processes scaled by the link
/// path losses. Process 0 is f, processes 1..N are h and N+1..2N are g; each
/// draws from derive_seed(seed, process index).
ChannelSeries generate_channel_series(const LinkGeometry& geometry, std::size_t elements,
                                      std::size_t length, const CorrelationFilter& filter,
                                      std::uint64_t seed);

/// Independent (uncorrelated in time) channel realizations with the same
/// marginal statistics as generate_channel_series.
std::vector<link::ChannelState> sample_independent_states(const LinkGeometry& geometry,
                                                          std::size_t elements,
                                                          std::size_t count, std::uint64_t seed);

// --- feature layout ---------------------------------------------------------
//
// Columns: [Re h_1..h_N, Im h_1..h_N, Re g_1..g_N, Im g_1..g_N]. The direct
// link f is not a feature.

inline std::size_t feature_count(std::size_t elements) { return 4 * elements; }

Matrix to_feature_matrix(const ChannelSeries& series);

/// Inverse of one feature row; f is left at zero.
link::ChannelState state_from_features(std::span<const double> row);

ChannelSeries series_from_feature_matrix(const Matrix& features);

// --- normalization ----------------------------------------------------------

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;

  std::size_t features() const noexcept { return mean.size(); }
  void validate() const;
};

/// Per-column mean and population standard deviation over rows
/// [0, rows). Throws DegenerateFeature for a zero-spread column.
NormStats compute_norm_stats(const Matrix& matrix, std::size_t rows);

Matrix normalize(const Matrix& matrix, const NormStats& stats);
Matrix denormalize(const Matrix& matrix, const NormStats& stats);

// --- windowing --------------------------------------------------------------

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
};

/// (input, target) pairs over a T x F matrix: pair k has input rows
/// [k, k + W) and target row k + W. The first floor(0.8 (T - W)) pairs form
/// the training split, the rest the validation split.
class WindowedDataset {
 public:
  WindowedDataset(Matrix series, std::size_t window);

  std::size_t features() const noexcept { return static_cast<std::size_t>(series_.cols()); }
  std::size_t window() const noexcept { return window_; }
  std::size_t pairs() const noexcept { return static_cast<std::size_t>(series_.rows()) - window_; }

  IndexRange train() const noexcept { return train_; }
  IndexRange validation() const noexcept { return validation_; }

  /// W x F view of the input of pair k.
  auto input(std::size_t k) const {
    return series_.middleRows(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(window_));
  }
  auto target(std::size_t k) const { return series_.row(static_cast<Eigen::Index>(k + window_)); }

  /// Time index of the target row of pair k.
  std::size_t target_index(std::size_t k) const noexcept { return k + window_; }

  const Matrix& series() const noexcept { return series_; }

 private:
  Matrix series_;
  std::size_t window_;
  IndexRange train_;
  IndexRange validation_;
};

WindowedDataset windowize(const Matrix& matrix, std::size_t window);

/// Number of leading rows touched by the training pairs of a T-row series
/// (inputs and targets); normalization statistics come from these rows only.
std::size_t training_rows(std::size_t length, std::size_t window);

struct PreparedData {
  NormStats stats;
  WindowedDataset dataset;
};

/// Feature matrix -> training-split statistics -> z-score -> windows.
PreparedData prepare_dataset(const Matrix& features, std::size_t window);

}  // namespace risnet::channel
