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

#include "risnet/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace risnet::nn {

namespace {

double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double diff = 0.0;
  double na = 0.0;
  double nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double denom = std::sqrt(na) + std::sqrt(nn);
  // a gradient that is exactly zero (e.g. the key bias under softmax) only
  // shows finite-difference noise; comparing noise to noise is meaningless
  if (denom < kZeroGradientNorm) return 0.0;
  return std::sqrt(diff) / denom;
}

}  // namespace

GradCheckReport finite_difference_check(Module& module, const SeqBatch& input, double tolerance,
                                        std::uint64_t seed) {
  GradCheckReport report;
  report.tolerance = tolerance;

  // analytic pass
  module.zero_grad();
  const SeqBatch y0 = module.forward(input);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix projection(y0.data.rows(), y0.data.cols());
  for (Eigen::Index i = 0; i < projection.size(); ++i) projection.data()[i] = dist(rng);

  const SeqBatch dx = module.backward({projection, y0.steps});

  auto objective = [&](const SeqBatch& x) {
    return (module.forward(x).data.array() * projection.array()).sum();
  };

  const double h = kFiniteDifferenceStep;
  for (Tensor* p : module.parameters()) {
    std::vector<double> analytic(p->grad().begin(), p->grad().end());
    std::vector<double> numeric(p->size());
    auto values = p->values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = objective(input);
      values[i] = saved - h;
      const double down = objective(input);
      values[i] = saved;
      numeric[i] = (up - down) / (2.0 * h);
    }
    report.entries.push_back({p->name(), p->size(), relative_error(analytic, numeric)});
  }

  {
    SeqBatch x = input;
    std::vector<double> analytic(dx.data.data(), dx.data.data() + dx.data.size());
    std::vector<double> numeric(static_cast<std::size_t>(x.data.size()));
    for (Eigen::Index i = 0; i < x.data.size(); ++i) {
      const double saved = x.data.data()[i];
      x.data.data()[i] = saved + h;
      const double up = objective(x);
      x.data.data()[i] = saved - h;
      const double down = objective(x);
      x.data.data()[i] = saved;
      numeric[static_cast<std::size_t>(i)] = (up - down) / (2.0 * h);
    }
    report.entries.push_back({"input", numeric.size(), relative_error(analytic, numeric)});
  }

  for (const auto& e : report.entries) {
    report.max_relative_error = std::max(report.max_relative_error, e.relative_error);
  }
  // leave the module's caches consistent with the unperturbed input
  module.forward(input);
  return report;
}

}  // namespace risnet::nn
