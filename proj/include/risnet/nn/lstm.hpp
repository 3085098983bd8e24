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

#include "risnet/nn/tensor.hpp"

namespace risnet::nn {

struct LstmStep {
  RowVector h;
  RowVector c;
};

/// One step of the classical LSTM cell. Weights are stacked by gate in the
/// order [input, forget, candidate, output]: w_input is 4H x in,
/// w_recurrent is 4H x H, bias has 4H entries.
///   i, f, o = sigmoid(affine), candidate = tanh(affine)
///   c = f * c_prev + i * candidate, h = o * tanh(c)
LstmStep lstm_cell(const RowVector& x, const RowVector& h_prev, const RowVector& c_prev,
                   const Matrix& w_input, const Matrix& w_recurrent, const RowVector& bias);

/// Runs the cell over every time step (same weights at each step, zero
/// initial state) and emits the hidden state of every step.
class LstmLayer final : public Module {
 public:
  LstmLayer(std::size_t in, std::size_t hidden);

  SeqBatch forward(const SeqBatch& x) override;
  SeqBatch backward(const SeqBatch& dy) override;
  SeqBatch infer(const SeqBatch& x) const override;
  using Module::parameters;
  std::vector<Tensor*> parameters() override { return {&w_input_, &w_recurrent_, &bias_}; }
  std::string kind() const override { return "lstm"; }

  /// Glorot-uniform weights, zero biases except the forget gate (1).
  void initialize(std::mt19937_64& rng);

  std::size_t in() const noexcept { return in_; }
  std::size_t hidden() const noexcept { return hidden_; }
  Tensor& w_input() noexcept { return w_input_; }
  Tensor& w_recurrent() noexcept { return w_recurrent_; }
  Tensor& bias() noexcept { return bias_; }

 private:
  struct Cache {
    std::vector<Matrix> x;       // per step, batch x in
    std::vector<Matrix> gates;   // per step, batch x 4H (activated)
    std::vector<Matrix> c;       // per step, batch x H
    std::vector<Matrix> tanh_c;  // per step
    std::vector<Matrix> h;       // per step
  };
  SeqBatch compute(const SeqBatch& x, Cache* cache) const;

  std::size_t in_;
  std::size_t hidden_;
  Tensor w_input_;
  Tensor w_recurrent_;
  Tensor bias_;
  Cache cache_;
  std::size_t steps_ = 0;
};

}  // namespace risnet::nn
