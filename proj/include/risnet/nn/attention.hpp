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

#include <vector>

#include "risnet/nn/layers.hpp"

namespace risnet::nn {

/// Scaled dot-product self-attention with `heads` heads of width
/// d_model / heads. Q, K, V and the output projection are d_model x d_model
/// dense maps with biases.
class MultiHeadAttention final : public Module {
 public:
  /// Throws ConfigError unless heads divides d_model.
  MultiHeadAttention(std::size_t d_model, std::size_t heads);

  SeqBatch forward(const SeqBatch& x) override;
  SeqBatch backward(const SeqBatch& dy) override;
  SeqBatch infer(const SeqBatch& x) const override;
  using Module::parameters;
  std::vector<Tensor*> parameters() override;
  std::string kind() const override { return "multi_head_attention"; }

  void initialize(std::mt19937_64& rng);

  std::size_t d_model() const noexcept { return d_model_; }
  std::size_t heads() const noexcept { return heads_; }
  Dense& query() noexcept { return query_; }
  Dense& key() noexcept { return key_; }
  Dense& value() noexcept { return value_; }
  Dense& output() noexcept { return output_; }

  /// Attention weights of the last forward(), indexed [sample * heads + head],
  /// each steps x steps and row-stochastic.
  const std::vector<Matrix>& last_weights() const noexcept { return weights_; }

 private:
  struct Cache {
    Matrix q, k, v, mixed;
    std::vector<Matrix> weights;
  };
  SeqBatch compute(const SeqBatch& x, Cache* cache) const;

  std::size_t d_model_;
  std::size_t heads_;
  Dense query_;
  Dense key_;
  Dense value_;
  Dense output_;

  SeqBatch input_;
  Matrix q_, k_, v_, mixed_;
  std::vector<Matrix> weights_;
};

/// Single-sequence convenience wrapper: x is steps x d_model.
Matrix multi_head_attention(const Matrix& x, const MultiHeadAttention& layer);

/// One post-norm encoder layer:
///   z = LayerNorm(x + MHA(x)); out = LayerNorm(z + Conv(Tanh(Conv(z)))).
/// The feedforward block is two same-padded 1-D convolutions
/// d_model -> ff_width -> d_model.
class EncoderLayer final : public Module {
 public:
  EncoderLayer(std::size_t d_model, std::size_t heads, std::size_t ff_width, std::size_t kernel);

  SeqBatch forward(const SeqBatch& x) override;
  SeqBatch backward(const SeqBatch& dy) override;
  SeqBatch infer(const SeqBatch& x) const override;
  using Module::parameters;
  std::vector<Tensor*> parameters() override;
  std::string kind() const override { return "encoder_layer"; }

  void initialize(std::mt19937_64& rng);
  MultiHeadAttention& attention() noexcept { return attention_; }

 private:
  MultiHeadAttention attention_;
  LayerNorm norm1_;
  Conv1d ff_in_;
  Tanh ff_act_;
  Conv1d ff_out_;
  LayerNorm norm2_;
};

}  // namespace risnet::nn
