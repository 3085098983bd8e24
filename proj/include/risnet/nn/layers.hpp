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

#include <memory>
#include <vector>

#include "risnet/nn/tensor.hpp"

namespace risnet::nn {

// --- stateless kernels --------------------------------------------------------

/// y = W x + b, W is out x in.
Vector dense(const Vector& x, const Matrix& weight, const Vector& bias);

/// Same-padded 1-D cross-correlation over time. `x` is time x channels_in,
/// `weight` is channels_out x (kernel * channels_in) with column
/// k * channels_in + c holding the tap applied to x[t + k - kernel / 2][c].
Matrix conv1d(const Matrix& x, const Matrix& weight, const Vector& bias, std::size_t kernel);

inline constexpr double kLayerNormEpsilon = 1e-5;

/// gain * (x - mean) / sqrt(var + 1e-5) + offset with the population variance.
Vector layer_norm(const Vector& x, const Vector& gain, const Vector& offset);

/// Sinusoidal table: PE(pos, 2i) = sin(pos / 10000^(2i/d)), PE(pos, 2i+1) =
/// cos(same). Throws ConfigError for odd d_model.
Matrix positional_encoding(std::size_t steps, std::size_t d_model);

inline constexpr double kRmseEpsilon = 1e-12;

struct LossResult {
  double value = 0.0;
  Matrix gradient;  // dLoss/dpred
};

/// sqrt(mean((pred - target)^2) + 1e-12) over every entry.
LossResult rmse_loss(const Matrix& pred, const Matrix& target);

// --- modules -------------------------------------------------------------------

class Dense final : public Module {
 public:
  Dense(std::size_t in, std::size_t out);

  SeqBatch forward(const SeqBatch& x) override;
  SeqBatch backward(const SeqBatch& dy) override;
  SeqBatch infer(const SeqBatch& x) const override;
  using Module::parameters;
  std::vector<Tensor*> parameters() override { return {&weight_, &bias_}; }
  std::string kind() const override { return "dense"; }

  void initialize(std::mt19937_64& rng);
  Tensor& weight() noexcept { return weight_; }
  Tensor& bias() noexcept { return bias_; }
  std::size_t in() const noexcept { return weight_.shape()[1]; }
  std::size_t out() const noexcept { return weight_.shape()[0]; }

 private:
  Tensor weight_;
  Tensor bias_;
  SeqBatch input_;
};

class Relu final : public Module {
 public:
  SeqBatch forward(const SeqBatch& x) override;
  SeqBatch backward(const SeqBatch& dy) override;
  SeqBatch infer(const SeqBatch& x) const override;
  std::string kind() const override { return "relu"; }

 private:
  SeqBatch output_;
};

class Tanh final : public Module {
 public:
  SeqBatch forward(const SeqBatch& x) override;
  SeqBatch backward(const SeqBatch& dy) override;
  SeqBatch infer(const SeqBatch& x) const override;
  std::string kind() const override { return "tanh"; }

 private:
  SeqBatch output_;
};

class Conv1d final : public Module {
 public:
  /// Throws ConfigError for an even kernel.
  Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel);

  SeqBatch forward(const SeqBatch& x) override;
  SeqBatch backward(const SeqBatch& dy) override;
  SeqBatch infer(const SeqBatch& x) const override;
  using Module::parameters;
  std::vector<Tensor*> parameters() override { return {&weight_, &bias_}; }
  std::string kind() const override { return "conv1d"; }

  void initialize(std::mt19937_64& rng);
  Tensor& weight() noexcept { return weight_; }
  Tensor& bias() noexcept { return bias_; }
  std::size_t kernel() const noexcept { return kernel_; }

 private:
  Matrix unfold(const SeqBatch& x) const;

  std::size_t in_channels_;
  std::size_t out_channels_;
  std::size_t kernel_;
  Tensor weight_;
  Tensor bias_;
  Matrix columns_;
  std::size_t steps_ = 0;
};

class LayerNorm final : public Module {
 public:
  explicit LayerNorm(std::size_t width);

  SeqBatch forward(const SeqBatch& x) override;
  SeqBatch backward(const SeqBatch& dy) override;
  SeqBatch infer(const SeqBatch& x) const override;
  using Module::parameters;
  std::vector<Tensor*> parameters() override { return {&gain_, &offset_}; }
  std::string kind() const override { return "layer_norm"; }

  Tensor& gain() noexcept { return gain_; }
  Tensor& offset() noexcept { return offset_; }

 private:
  SeqBatch compute(const SeqBatch& x, Matrix* normalized, Vector* inv_std) const;

  Tensor gain_;
  Tensor offset_;
  Matrix normalized_;
  Vector inv_std_;
  std::size_t steps_ = 0;
};

/// Adds the fixed sinusoidal table to every sequence in the batch.
class PositionalEncoding final : public Module {
 public:
  explicit PositionalEncoding(std::size_t d_model);

  SeqBatch forward(const SeqBatch& x) override { return infer(x); }
  SeqBatch backward(const SeqBatch& dy) override { return dy; }
  SeqBatch infer(const SeqBatch& x) const override;
  std::string kind() const override { return "positional_encoding"; }

 private:
  std::size_t d_model_;
};

/// Keeps only the final time step of every sequence (sequence-to-one).
class LastStep final : public Module {
 public:
  SeqBatch forward(const SeqBatch& x) override;
  SeqBatch backward(const SeqBatch& dy) override;
  SeqBatch infer(const SeqBatch& x) const override;
  std::string kind() const override { return "last_step"; }

 private:
  std::size_t steps_ = 0;
  std::size_t width_ = 0;
};

class Sequential final : public Module {
 public:
  Sequential() = default;

  template <typename M, typename... Args>
  M& add(Args&&... args) {
    auto m = std::make_unique<M>(std::forward<Args>(args)...);
    M& ref = *m;
    layers_.push_back(std::move(m));
    return ref;
  }

  SeqBatch forward(const SeqBatch& x) override;
  SeqBatch backward(const SeqBatch& dy) override;
  SeqBatch infer(const SeqBatch& x) const override;
  using Module::parameters;
  std::vector<Tensor*> parameters() override;
  std::string kind() const override { return "sequential"; }

  std::size_t size() const noexcept { return layers_.size(); }
  Module& at(std::size_t i) { return *layers_.at(i); }
  const Module& at(std::size_t i) const { return *layers_.at(i); }

 private:
  std::vector<std::unique_ptr<Module>> layers_;
};

}  // namespace risnet::nn
