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

#include <cstdint>
#include <string>
#include <vector>

#include "risnet/nn/tensor.hpp"

namespace risnet::nn {

struct GradCheckEntry {
  std::string tensor;  // parameter name, or "input"
  std::size_t count = 0;
  double relative_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_relative_error = 0.0;
  double tolerance = 0.0;

  bool passed() const noexcept { return max_relative_error < tolerance; }
};

inline constexpr double kFiniteDifferenceStep = 1e-6;
/// Tensors whose analytic and numeric gradient norms sum below this count as
/// matching zero gradients.
inline constexpr double kZeroGradientNorm = 1e-7;

/// Compares reverse-mode gradients of the scalar sum(R .* module(input)),
/// R a fixed random projection, against central differences with step 1e-6
/// for every parameter entry and every input entry. The error of a tensor is
/// ||analytic - numeric|| / (||analytic|| + ||numeric||), taken as 0 when
/// that denominator is below kZeroGradientNorm.
GradCheckReport finite_difference_check(Module& module, const SeqBatch& input, double tolerance,
                                        std::uint64_t seed = 7);

}  // namespace risnet::nn
