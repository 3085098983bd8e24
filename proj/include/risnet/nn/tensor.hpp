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
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "risnet/matrix.hpp"

namespace risnet::nn {

/// Named parameter array with a gradient accumulator of the same shape.
/// Storage is row-major; 2-D tensors can be viewed as Eigen matrices.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::string name, std::vector<std::size_t> shape);

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> grad() noexcept { return grad_; }
  std::span<const double> grad() const noexcept { return grad_; }

  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using VectorMap = Eigen::Map<Eigen::RowVectorXd>;
  using ConstVectorMap = Eigen::Map<const Eigen::RowVectorXd>;

  /// rows x cols view; rank-1 tensors are viewed as a single row.
  MatrixMap matrix();
  ConstMatrixMap matrix() const;
  MatrixMap grad_matrix();
  VectorMap vector();
  ConstVectorMap vector() const;
  VectorMap grad_vector();

  void zero_grad();
  void fill(double value);

 private:
  Eigen::Index rows() const noexcept;
  Eigen::Index cols() const noexcept;

  std::string name_;
  std::vector<std::size_t> shape_;
  // aligned so vectorized reductions do not depend on where the heap put us
  std::vector<double, Eigen::aligned_allocator<double>> values_;
  std::vector<double, Eigen::aligned_allocator<double>> grad_;
};

/// A batch of sequences: row b * steps + t holds time step t of sample b.
struct SeqBatch {
  Matrix data;
  std::size_t steps = 1;

  std::size_t batch() const noexcept {
    return steps == 0 ? 0 : static_cast<std::size_t>(data.rows()) / steps;
  }
  std::size_t width() const noexcept { return static_cast<std::size_t>(data.cols()); }
};

/// A differentiable block. forward() caches what backward() needs;
/// infer() computes the same output without touching any state, so a
/// trained module can serve concurrent readers.
class Module {
 public:
  virtual ~Module() = default;

  virtual SeqBatch forward(const SeqBatch& x) = 0;
  /// Accumulates parameter gradients and returns dLoss/dx for the most
  /// recent forward().
  virtual SeqBatch backward(const SeqBatch& dy) = 0;
  virtual SeqBatch infer(const SeqBatch& x) const = 0;

  virtual std::vector<Tensor*> parameters() { return {}; }
  virtual std::string kind() const = 0;

  std::vector<const Tensor*> parameters() const;
  std::size_t parameter_count() const;
  void zero_grad();
};

/// Glorot/Xavier uniform initialization with the given fans.
void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

}  // namespace risnet::nn
