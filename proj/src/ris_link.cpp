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

#include "risnet/ris_link.hpp"

#include <cmath>
#include <numbers>

#include "risnet/error.hpp"

namespace risnet::link {

void ChannelState::validate() const {
  if (h.empty() || h.size() != g.size()) {
    throw DimensionError("channel state needs |h| == |g| >= 1, got " + std::to_string(h.size()) +
                         " and " + std::to_string(g.size()));
  }
  auto finite = [](Complex c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); };
  bool ok = finite(f);
  for (std::size_t i = 0; i < h.size(); ++i) ok = ok && finite(h[i]) && finite(g[i]);
  if (!ok) throw InvalidArgument("channel state contains non-finite coefficients");
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double dbw_to_watts(double dbw) { return std::pow(10.0, dbw / 10.0); }

double RadioConfig::transmit_power_watts() const { return dbm_to_watts(transmit_power_dbm); }
double RadioConfig::noise_power_watts() const { return dbw_to_watts(noise_power_dbw); }

void RadioConfig::validate() const {
  if (!std::isfinite(transmit_power_dbm)) throw InvalidArgument("transmit power must be finite");
  if (!(noise_power_watts() > 0.0) || !std::isfinite(noise_power_dbw)) {
    throw InvalidArgument("noise power must be positive");
  }
  if (!(gamma_th > 0.0)) throw InvalidArgument("SNR threshold must be positive");
}

double wrap_phase(double radians) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(radians + std::numbers::pi, two_pi);
  if (w < 0.0) w += two_pi;
  w -= std::numbers::pi;
  // fmod can land exactly on +pi after the shift back
  if (w >= std::numbers::pi) w -= two_pi;
  return w;
}

PhaseShiftVector optimal_phases(std::span<const Complex> h, std::span<const Complex> g) {
  if (h.size() != g.size()) {
    throw DimensionError("optimal_phases: |h| = " + std::to_string(h.size()) +
                         " but |g| = " + std::to_string(g.size()));
  }
  PhaseShiftVector out;
  out.phases.resize(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const Complex c = h[i] * g[i];
    out.phases[i] = (c == Complex{0.0, 0.0}) ? 0.0 : wrap_phase(-std::arg(c));
  }
  return out;
}

Complex effective_gain(const ChannelState& state, const PhaseShiftVector& phases) {
  if (state.h.size() != state.g.size() || phases.size() != state.h.size()) {
    throw DimensionError("effective_gain: " + std::to_string(phases.size()) + " phases for " +
                         std::to_string(state.h.size()) + " elements");
  }
  Complex sum = state.f;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    sum += state.h[i] * state.g[i] * std::polar(1.0, phases.phases[i]);
  }
  return sum;
}

double cascaded_magnitude_sum(const ChannelState& state) {
  double s = 0.0;
  for (std::size_t i = 0; i < state.h.size(); ++i) s += std::abs(state.h[i] * state.g[i]);
  return s;
}

double snr(Complex gain, const RadioConfig& radio) {
  return std::norm(gain) * radio.transmit_power_watts() / radio.noise_power_watts();
}

double outage_probability(std::span<const double> snr_samples, double gamma_th) {
  if (snr_samples.empty()) throw InsufficientData("outage_probability: no SNR samples");
  std::size_t below = 0;
  for (double s : snr_samples) below += (s < gamma_th) ? 1 : 0;
  return static_cast<double>(below) / static_cast<double>(snr_samples.size());
}

double achievable_rate(double p_out, double gamma_th) {
  if (!(p_out >= 0.0 && p_out <= 1.0)) {
    throw InvalidArgument("achievable_rate: outage probability must lie in [0, 1]");
  }
  return (1.0 - p_out) * std::log2(1.0 + gamma_th);
}

double rayleigh_outage(double variance, const RadioConfig& radio) {
  return 1.0 - std::exp(-radio.gamma_th * radio.noise_power_watts() /
                        (radio.transmit_power_watts() * variance));
}

Scheme parse_scheme(std::string_view id) {
  if (id == "optimal-csi") return Scheme::OptimalCsi;
  if (id == "predicted-csi") return Scheme::PredictedCsi;
  if (id == "fixed-phase") return Scheme::FixedPhase;
  if (id == "no-ris") return Scheme::NoRis;
  throw InvalidArgument("unknown scheme id '" + std::string(id) + "'");
}

std::string_view scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::OptimalCsi: return "optimal-csi";
    case Scheme::PredictedCsi: return "predicted-csi";
    case Scheme::FixedPhase: return "fixed-phase";
    case Scheme::NoRis: return "no-ris";
  }
  throw InvalidArgument("unknown scheme");
}

std::optional<PhaseShiftVector> scheme_phase(Scheme scheme, const ChannelState& csi) {
  switch (scheme) {
    case Scheme::OptimalCsi:
    case Scheme::PredictedCsi: return optimal_phases(csi.h, csi.g);
    case Scheme::FixedPhase: return PhaseShiftVector::zeros(csi.elements());
    case Scheme::NoRis: return std::nullopt;
  }
  throw InvalidArgument("unknown scheme");
}

Complex scheme_gain(const ChannelState& truth, const std::optional<PhaseShiftVector>& phases) {
  return phases ? effective_gain(truth, *phases) : direct_gain(truth);
}

}  // namespace risnet::link
