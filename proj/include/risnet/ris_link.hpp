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

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace risnet {

using Complex = std::complex<double>;

namespace link {

/// One realization of the three channels of an RIS-assisted SISO link:
/// direct BS->UE coefficient `f`, BS->RIS coefficients `h` and RIS->UE
/// coefficients `g` (one per reflecting element).
struct ChannelState {
  Complex f{0.0, 0.0};
  std::vector<Complex> h;
  std::vector<Complex> g;

  std::size_t elements() const noexcept { return h.size(); }
  /// Throws DimensionError unless |h| == |g| >= 1 and all entries finite.
  void validate() const;
};

/// Unit-amplitude reflection coefficients, stored as phases in [-pi, pi).
struct PhaseShiftVector {
  std::vector<double> phases;

  std::size_t size() const noexcept { return phases.size(); }
  static PhaseShiftVector zeros(std::size_t n) { return {std::vector<double>(n, 0.0)}; }
};

struct RadioConfig {
  double transmit_power_dbm = 30.0;
  double noise_power_dbw = -100.0;
  double gamma_th = 1.0;  // linear SNR threshold

  double transmit_power_watts() const;
  double noise_power_watts() const;
  void validate() const;
};

double dbm_to_watts(double dbm);
double dbw_to_watts(double dbw);

/// Wraps an angle into [-pi, pi).
double wrap_phase(double radians);

/// Co-phasing solution phi_i = -arg(h_i g_i). Elements with h_i g_i == 0
/// get phase 0.
PhaseShiftVector optimal_phases(std::span<const Complex> h, std::span<const Complex> g);

/// sum_i h_i g_i exp(j phi_i) + f
Complex effective_gain(const ChannelState& state, const PhaseShiftVector& phases);

/// Gain with the RIS contribution suppressed.
inline Complex direct_gain(const ChannelState& state) { return state.f; }

/// Upper bound sum_i |h_i g_i| on the magnitude of the reflected term.
double cascaded_magnitude_sum(const ChannelState& state);

/// Instantaneous SNR |gain|^2 P / N0 (linear).
double snr(Complex gain, const RadioConfig& radio);

/// Fraction of samples strictly below `gamma_th`.
double outage_probability(std::span<const double> snr_samples, double gamma_th);

/// (1 - p_out) log2(1 + gamma_th) in bits/s/Hz.
double achievable_rate(double p_out, double gamma_th);

/// Rayleigh closed form for a single CN(0, variance) coefficient:
/// P(|f|^2 P / N0 < gamma_th) = 1 - exp(-gamma_th N0 / (P variance)).
double rayleigh_outage(double variance, const RadioConfig& radio);

enum class Scheme { OptimalCsi, PredictedCsi, FixedPhase, NoRis };

Scheme parse_scheme(std::string_view id);
std::string_view scheme_name(Scheme scheme);

/// Phase configuration used by a scheme. `csi` is the ground-truth state for
/// OptimalCsi and the forecast state for PredictedCsi; FixedPhase ignores it.
/// NoRis returns nullopt, meaning the reflected term is dropped.
std::optional<PhaseShiftVector> scheme_phase(Scheme scheme, const ChannelState& csi);

/// Gain seen over `truth` when the RIS is configured with `phases`
/// (nullopt: RIS absent).
Complex scheme_gain(const ChannelState& truth, const std::optional<PhaseShiftVector>& phases);

}  // namespace link
}  // namespace risnet
