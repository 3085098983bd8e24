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

#include "risnet/nn/optim.hpp"

#include <cmath>

#include "risnet/error.hpp"

namespace risnet::nn {

OptimizerState OptimizerState::for_parameters(std::span<Tensor* const> params, AdamConfig config) {
  OptimizerState state;
  state.config = config;
  for (const Tensor* p : params) {
    state.first_moment.emplace_back(p->size(), 0.0);
    state.second_moment.emplace_back(p->size(), 0.0);
  }
  return state;
}

void adam_step(std::span<Tensor* const> params, OptimizerState& state) {
  if (params.size() != state.first_moment.size()) {
    throw DimensionError("adam_step: optimizer tracks " + std::to_string(state.first_moment.size()) +
                         " tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k]->size() != state.first_moment[k].size()) {
      throw DimensionError("adam_step: shape mismatch for tensor '" + params[k]->name() + "'");
    }
  }

  const auto& cfg = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k]->values();
    const auto grad = params[k]->grad();
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

}  // namespace risnet::nn
