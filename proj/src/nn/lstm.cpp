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

#include "risnet/nn/lstm.hpp"

#include <cmath>

#include "risnet/error.hpp"

namespace risnet::nn {

namespace {

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& z) {
  return 1.0 / (1.0 + (-z).exp());
}

/// Applies the gate nonlinearities in place to a batch x 4H block.
void activate_gates(Matrix& z, Eigen::Index hidden) {
  z.leftCols(2 * hidden) = sigmoid(z.leftCols(2 * hidden).array()).matrix();
  z.middleCols(2 * hidden, hidden) = z.middleCols(2 * hidden, hidden).array().tanh().matrix();
  z.rightCols(hidden) = sigmoid(z.rightCols(hidden).array()).matrix();
}

}  // namespace

LstmStep lstm_cell(const RowVector& x, const RowVector& h_prev, const RowVector& c_prev,
                   const Matrix& w_input, const Matrix& w_recurrent, const RowVector& bias) {
  const auto hidden = h_prev.size();
  if (w_input.rows() != 4 * hidden || w_input.cols() != x.size() || w_recurrent.rows() != 4 * hidden ||
      w_recurrent.cols() != hidden || bias.size() != 4 * hidden || c_prev.size() != hidden) {
    throw DimensionError("lstm_cell: inconsistent shapes");
  }
  Matrix z = x * w_input.transpose() + h_prev * w_recurrent.transpose() + bias;
  activate_gates(z, hidden);
  const auto i = z.leftCols(hidden).array();
  const auto f = z.middleCols(hidden, hidden).array();
  const auto g = z.middleCols(2 * hidden, hidden).array();
  const auto o = z.rightCols(hidden).array();
  LstmStep out;
  out.c = (f * c_prev.array() + i * g).matrix();
  out.h = (o * out.c.array().tanh()).matrix();
  return out;
}

LstmLayer::LstmLayer(std::size_t in, std::size_t hidden)
    : in_(in),
      hidden_(hidden),
      w_input_("w_input", {4 * hidden, in}),
      w_recurrent_("w_recurrent", {4 * hidden, hidden}),
      bias_("bias", {4 * hidden}) {
  if (in == 0 || hidden == 0) throw ConfigError("lstm layer needs positive sizes");
}

void LstmLayer::initialize(std::mt19937_64& rng) {
  glorot_uniform(w_input_, in_, 4 * hidden_, rng);
  glorot_uniform(w_recurrent_, hidden_, 4 * hidden_, rng);
  bias_.fill(0.0);
  for (std::size_t j = hidden_; j < 2 * hidden_; ++j) bias_.values()[j] = 1.0;
}

SeqBatch LstmLayer::compute(const SeqBatch& x, Cache* cache) const {
  if (x.width() != in_) {
    throw DimensionError("lstm: expected width " + std::to_string(in_) + ", got " + std::to_string(x.width()));
  }
  const auto steps = static_cast<Eigen::Index>(x.steps);
  const auto batch = static_cast<Eigen::Index>(x.batch());
  const auto hid = static_cast<Eigen::Index>(hidden_);

  // input contribution for every (sample, step) row at once
  Matrix zx = x.data * w_input_.matrix().transpose();
  zx.rowwise() += bias_.vector();

  if (cache) {
    for (auto* v : {&cache->x, &cache->gates, &cache->c, &cache->tanh_c, &cache->h}) {
      v->assign(static_cast<std::size_t>(steps), Matrix());
    }
  }

  Matrix h = Matrix::Zero(batch, hid);
  Matrix c = Matrix::Zero(batch, hid);
  SeqBatch out{Matrix(x.data.rows(), hid), x.steps};
  Matrix z(batch, 4 * hid);
  for (Eigen::Index t = 0; t < steps; ++t) {
    for (Eigen::Index b = 0; b < batch; ++b) z.row(b) = zx.row(b * steps + t);
    z.noalias() += h * w_recurrent_.matrix().transpose();
    activate_gates(z, hid);
    c = (z.middleCols(hid, hid).array() * c.array() +
         z.leftCols(hid).array() * z.middleCols(2 * hid, hid).array())
            .matrix();
    Matrix tc = c.array().tanh().matrix();
    h = (z.rightCols(hid).array() * tc.array()).matrix();
    for (Eigen::Index b = 0; b < batch; ++b) out.data.row(b * steps + t) = h.row(b);
    if (cache) {
      const auto k = static_cast<std::size_t>(t);
      Matrix xt(batch, x.data.cols());
      for (Eigen::Index b = 0; b < batch; ++b) xt.row(b) = x.data.row(b * steps + t);
      cache->x[k] = std::move(xt);
      cache->gates[k] = z;
      cache->c[k] = c;
      cache->tanh_c[k] = std::move(tc);
      cache->h[k] = h;
    }
  }
  return out;
}

SeqBatch LstmLayer::infer(const SeqBatch& x) const { return compute(x, nullptr); }

SeqBatch LstmLayer::forward(const SeqBatch& x) {
  steps_ = x.steps;
  return compute(x, &cache_);
}

SeqBatch LstmLayer::backward(const SeqBatch& dy) {
  const auto steps = static_cast<Eigen::Index>(steps_);
  const auto hid = static_cast<Eigen::Index>(hidden_);
  const auto batch = dy.data.rows() / steps;

  Matrix dh_next = Matrix::Zero(batch, hid);
  Matrix dc_next = Matrix::Zero(batch, hid);
  Matrix dz(batch, 4 * hid);
  SeqBatch dx{Matrix(dy.data.rows(), static_cast<Eigen::Index>(in_)), steps_};
  auto w_in_grad = w_input_.grad_matrix();
  auto w_rec_grad = w_recurrent_.grad_matrix();
  auto b_grad = bias_.grad_vector();

  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const auto k = static_cast<std::size_t>(t);
    const Matrix& gates = cache_.gates[k];
    const auto i = gates.leftCols(hid).array();
    const auto f = gates.middleCols(hid, hid).array();
    const auto g = gates.middleCols(2 * hid, hid).array();
    const auto o = gates.rightCols(hid).array();
    const auto tc = cache_.tanh_c[k].array();

    Matrix dh = dh_next;
    for (Eigen::Index b = 0; b < batch; ++b) dh.row(b) += dy.data.row(b * steps + t);

    const Matrix dc = (dh.array() * o * (1.0 - tc.square()) + dc_next.array()).matrix();
    const Matrix c_prev = t > 0 ? cache_.c[k - 1] : Matrix::Zero(batch, hid);

    dz.leftCols(hid) = (dc.array() * g * i * (1.0 - i)).matrix();
    dz.middleCols(hid, hid) = (dc.array() * c_prev.array() * f * (1.0 - f)).matrix();
    dz.middleCols(2 * hid, hid) = (dc.array() * i * (1.0 - g.square())).matrix();
    dz.rightCols(hid) = (dh.array() * tc * o * (1.0 - o)).matrix();

    dc_next = (dc.array() * f).matrix();
    w_in_grad.noalias() += dz.transpose() * cache_.x[k];
    b_grad += dz.colwise().sum();
    if (t > 0) w_rec_grad.noalias() += dz.transpose() * cache_.h[k - 1];
    dh_next.noalias() = dz * w_recurrent_.matrix();

    const Matrix dxt = dz * w_input_.matrix();
    for (Eigen::Index b = 0; b < batch; ++b) dx.data.row(b * steps + t) = dxt.row(b);
  }
  return dx;
}

}  // namespace risnet::nn
