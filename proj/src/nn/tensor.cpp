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

#include "risnet/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "risnet/error.hpp"

namespace risnet::nn {

Tensor::Tensor(std::string name, std::vector<std::size_t> shape)
    : name_(std::move(name)), shape_(std::move(shape)) {
  if (shape_.empty()) throw InvalidArgument("tensor '" + name_ + "' needs at least one extent");
  const std::size_t n = std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
  values_.assign(n, 0.0);
  grad_.assign(n, 0.0);
}

Eigen::Index Tensor::rows() const noexcept {
  return shape_.size() == 1 ? 1 : static_cast<Eigen::Index>(shape_.front());
}

Eigen::Index Tensor::cols() const noexcept {
  return shape_.size() == 1 ? static_cast<Eigen::Index>(shape_.front())
                            : static_cast<Eigen::Index>(values_.size() / shape_.front());
}

Tensor::MatrixMap Tensor::matrix() { return {values_.data(), rows(), cols()}; }
Tensor::ConstMatrixMap Tensor::matrix() const { return {values_.data(), rows(), cols()}; }
Tensor::MatrixMap Tensor::grad_matrix() { return {grad_.data(), rows(), cols()}; }
Tensor::VectorMap Tensor::vector() { return {values_.data(), static_cast<Eigen::Index>(values_.size())}; }
Tensor::ConstVectorMap Tensor::vector() const {
  return {values_.data(), static_cast<Eigen::Index>(values_.size())};
}
Tensor::VectorMap Tensor::grad_vector() { return {grad_.data(), static_cast<Eigen::Index>(grad_.size())}; }

void Tensor::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }
void Tensor::fill(double value) { std::fill(values_.begin(), values_.end(), value); }

std::vector<const Tensor*> Module::parameters() const {
  auto params = const_cast<Module*>(this)->parameters();
  return {params.begin(), params.end()};
}

std::size_t Module::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* t : parameters()) n += t->size();
  return n;
}

void Module::zero_grad() {
  for (Tensor* t : parameters()) t->zero_grad();
}

void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : t.values()) v = dist(rng);
}

}  // namespace risnet::nn
