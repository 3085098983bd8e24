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

#include "risnet/nn/layers.hpp"

#include <cmath>
#include <string>

#include "risnet/error.hpp"

namespace risnet::nn {

namespace {

void require_width(const SeqBatch& x, std::size_t width, const char* what) {
  if (x.width() != width) {
    throw DimensionError(std::string(what) + ": expected width " + std::to_string(width) + ", got " +
                         std::to_string(x.width()));
  }
  if (x.steps == 0 || static_cast<std::size_t>(x.data.rows()) % x.steps != 0) {
    throw DimensionError(std::string(what) + ": row count is not a multiple of the sequence length");
  }
}

}  // namespace

// --- kernels ---------------------------------------------------------------------

Vector dense(const Vector& x, const Matrix& weight, const Vector& bias) {
  if (x.size() != weight.cols() || bias.size() != weight.rows()) {
    throw DimensionError("dense: input " + std::to_string(x.size()) + " vs weight " +
                         std::to_string(weight.rows()) + "x" + std::to_string(weight.cols()));
  }
  return weight * x + bias;
}

Matrix conv1d(const Matrix& x, const Matrix& weight, const Vector& bias, std::size_t kernel) {
  if (kernel % 2 == 0) throw ConfigError("conv1d: kernel size must be odd");
  const auto cin = x.cols();
  if (weight.cols() != static_cast<Eigen::Index>(kernel) * cin || bias.size() != weight.rows()) {
    throw DimensionError("conv1d: weight shape does not match input channels and kernel");
  }
  const auto steps = x.rows();
  const auto pad = static_cast<Eigen::Index>(kernel / 2);
  Matrix out(steps, weight.rows());
  for (Eigen::Index t = 0; t < steps; ++t) {
    Vector acc = bias;
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(kernel); ++k) {
      const Eigen::Index src = t + k - pad;
      if (src < 0 || src >= steps) continue;
      acc += weight.middleCols(k * cin, cin) * x.row(src).transpose();
    }
    out.row(t) = acc.transpose();
  }
  return out;
}

Vector layer_norm(const Vector& x, const Vector& gain, const Vector& offset) {
  if (x.size() != gain.size() || x.size() != offset.size()) throw DimensionError("layer_norm: size mismatch");
  const double mu = x.mean();
  const double var = (x.array() - mu).square().mean();
  const double inv = 1.0 / std::sqrt(var + kLayerNormEpsilon);
  return ((x.array() - mu) * inv * gain.array() + offset.array()).matrix();
}

Matrix positional_encoding(std::size_t steps, std::size_t d_model) {
  if (d_model == 0 || d_model % 2 != 0) throw ConfigError("positional encoding needs an even model width");
  Matrix pe(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(d_model));
  for (std::size_t pos = 0; pos < steps; ++pos) {
    for (std::size_t i = 0; i < d_model; i += 2) {
      const double angle = static_cast<double>(pos) /
                           std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d_model));
      pe(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(i)) = std::sin(angle);
      pe(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(i + 1)) = std::cos(angle);
    }
  }
  return pe;
}

LossResult rmse_loss(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw DimensionError("rmse_loss: prediction and target shapes differ");
  }
  if (pred.size() == 0) throw DimensionError("rmse_loss: empty input");
  const Matrix diff = pred - target;
  const double n = static_cast<double>(diff.size());
  const double value = std::sqrt(diff.squaredNorm() / n + kRmseEpsilon);
  return {value, diff / (n * value)};
}

// --- Dense -----------------------------------------------------------------------

Dense::Dense(std::size_t in, std::size_t out) : weight_("weight", {out, in}), bias_("bias", {out}) {
  if (in == 0 || out == 0) throw ConfigError("dense layer needs positive sizes");
}

void Dense::initialize(std::mt19937_64& rng) {
  glorot_uniform(weight_, in(), out(), rng);
  bias_.fill(0.0);
}

SeqBatch Dense::infer(const SeqBatch& x) const {
  require_width(x, in(), "dense");
  SeqBatch y{x.data * weight_.matrix().transpose(), x.steps};
  y.data.rowwise() += bias_.vector();
  return y;
}

SeqBatch Dense::forward(const SeqBatch& x) {
  input_ = x;
  return infer(x);
}

SeqBatch Dense::backward(const SeqBatch& dy) {
  weight_.grad_matrix().noalias() += dy.data.transpose() * input_.data;
  bias_.grad_vector() += dy.data.colwise().sum();
  return {dy.data * weight_.matrix(), dy.steps};
}

// --- activations -------------------------------------------------------------------

SeqBatch Relu::infer(const SeqBatch& x) const { return {x.data.cwiseMax(0.0), x.steps}; }

SeqBatch Relu::forward(const SeqBatch& x) {
  output_ = infer(x);
  return output_;
}

SeqBatch Relu::backward(const SeqBatch& dy) {
  return {(output_.data.array() > 0.0).select(dy.data, 0.0), dy.steps};
}

SeqBatch Tanh::infer(const SeqBatch& x) const { return {x.data.array().tanh().matrix(), x.steps}; }

SeqBatch Tanh::forward(const SeqBatch& x) {
  output_ = infer(x);
  return output_;
}

SeqBatch Tanh::backward(const SeqBatch& dy) {
  return {(dy.data.array() * (1.0 - output_.data.array().square())).matrix(), dy.steps};
}

// --- Conv1d ------------------------------------------------------------------------

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      weight_("weight", {out_channels, kernel, in_channels}),
      bias_("bias", {out_channels}) {
  if (kernel % 2 == 0) throw ConfigError("conv1d: kernel size must be odd");
  if (in_channels == 0 || out_channels == 0) throw ConfigError("conv1d needs positive channel counts");
}

void Conv1d::initialize(std::mt19937_64& rng) {
  glorot_uniform(weight_, kernel_ * in_channels_, kernel_ * out_channels_, rng);
  bias_.fill(0.0);
}

Matrix Conv1d::unfold(const SeqBatch& x) const {
  const auto steps = static_cast<Eigen::Index>(x.steps);
  const auto cin = static_cast<Eigen::Index>(in_channels_);
  const auto pad = static_cast<Eigen::Index>(kernel_ / 2);
  Matrix cols = Matrix::Zero(x.data.rows(), static_cast<Eigen::Index>(kernel_) * cin);
  for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(x.batch()); ++b) {
    for (Eigen::Index t = 0; t < steps; ++t) {
      for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(kernel_); ++k) {
        const Eigen::Index src = t + k - pad;
        if (src < 0 || src >= steps) continue;
        cols.block(b * steps + t, k * cin, 1, cin) = x.data.row(b * steps + src);
      }
    }
  }
  return cols;
}

SeqBatch Conv1d::infer(const SeqBatch& x) const {
  require_width(x, in_channels_, "conv1d");
  SeqBatch y{unfold(x) * weight_.matrix().transpose(), x.steps};
  y.data.rowwise() += bias_.vector();
  return y;
}

SeqBatch Conv1d::forward(const SeqBatch& x) {
  require_width(x, in_channels_, "conv1d");
  columns_ = unfold(x);
  steps_ = x.steps;
  SeqBatch y{columns_ * weight_.matrix().transpose(), x.steps};
  y.data.rowwise() += bias_.vector();
  return y;
}

SeqBatch Conv1d::backward(const SeqBatch& dy) {
  weight_.grad_matrix().noalias() += dy.data.transpose() * columns_;
  bias_.grad_vector() += dy.data.colwise().sum();
  const Matrix dcols = dy.data * weight_.matrix();

  const auto steps = static_cast<Eigen::Index>(steps_);
  const auto cin = static_cast<Eigen::Index>(in_channels_);
  const auto pad = static_cast<Eigen::Index>(kernel_ / 2);
  SeqBatch dx{Matrix::Zero(dy.data.rows(), cin), steps_};
  const auto batch = dy.data.rows() / steps;
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (Eigen::Index t = 0; t < steps; ++t) {
      for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(kernel_); ++k) {
        const Eigen::Index src = t + k - pad;
        if (src < 0 || src >= steps) continue;
        dx.data.row(b * steps + src) += dcols.block(b * steps + t, k * cin, 1, cin);
      }
    }
  }
  return dx;
}

// --- LayerNorm ----------------------------------------------------------------------

LayerNorm::LayerNorm(std::size_t width) : gain_("gain", {width}), offset_("offset", {width}) {
  if (width < 2) throw ConfigError("layer norm needs width >= 2");
  gain_.fill(1.0);
}

SeqBatch LayerNorm::compute(const SeqBatch& x, Matrix* normalized, Vector* inv_std) const {
  require_width(x, gain_.size(), "layer_norm");
  const Eigen::VectorXd mean = x.data.rowwise().mean();
  Matrix centered = x.data.colwise() - mean;
  const Eigen::VectorXd inv =
      ((centered.array().square().rowwise().sum() / static_cast<double>(x.width())) + kLayerNormEpsilon)
          .rsqrt();
  Matrix xhat = centered.array().colwise() * inv.array();
  SeqBatch y{(xhat.array().rowwise() * gain_.vector().array()).matrix(), x.steps};
  y.data.rowwise() += offset_.vector();
  if (normalized) *normalized = std::move(xhat);
  if (inv_std) *inv_std = inv;
  return y;
}

SeqBatch LayerNorm::infer(const SeqBatch& x) const { return compute(x, nullptr, nullptr); }

SeqBatch LayerNorm::forward(const SeqBatch& x) {
  steps_ = x.steps;
  return compute(x, &normalized_, &inv_std_);
}

SeqBatch LayerNorm::backward(const SeqBatch& dy) {
  gain_.grad_vector() += (dy.data.array() * normalized_.array()).colwise().sum().matrix();
  offset_.grad_vector() += dy.data.colwise().sum();
  const Matrix dxhat = dy.data.array().rowwise() * gain_.vector().array();
  const double d = static_cast<double>(dy.data.cols());
  const Eigen::VectorXd mean_dxhat = dxhat.rowwise().sum() / d;
  const Eigen::VectorXd mean_dxhat_xhat = (dxhat.array() * normalized_.array()).rowwise().sum() / d;
  Matrix dx = dxhat.colwise() - mean_dxhat;
  dx -= (normalized_.array().colwise() * mean_dxhat_xhat.array()).matrix();
  dx = dx.array().colwise() * inv_std_.array();
  return {std::move(dx), steps_};
}

// --- PositionalEncoding -------------------------------------------------------------

PositionalEncoding::PositionalEncoding(std::size_t d_model) : d_model_(d_model) {
  if (d_model == 0 || d_model % 2 != 0) throw ConfigError("positional encoding needs an even model width");
}

SeqBatch PositionalEncoding::infer(const SeqBatch& x) const {
  require_width(x, d_model_, "positional_encoding");
  const Matrix table = positional_encoding(x.steps, d_model_);
  SeqBatch y = x;
  const auto steps = static_cast<Eigen::Index>(x.steps);
  for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(x.batch()); ++b) {
    y.data.middleRows(b * steps, steps) += table;
  }
  return y;
}

// --- LastStep -----------------------------------------------------------------------

SeqBatch LastStep::infer(const SeqBatch& x) const {
  if (x.steps == 0) throw DimensionError("last_step: empty sequence");
  const auto steps = static_cast<Eigen::Index>(x.steps);
  const auto batch = static_cast<Eigen::Index>(x.batch());
  SeqBatch y{Matrix(batch, x.data.cols()), 1};
  for (Eigen::Index b = 0; b < batch; ++b) y.data.row(b) = x.data.row(b * steps + steps - 1);
  return y;
}

SeqBatch LastStep::forward(const SeqBatch& x) {
  steps_ = x.steps;
  width_ = x.width();
  return infer(x);
}

SeqBatch LastStep::backward(const SeqBatch& dy) {
  const auto steps = static_cast<Eigen::Index>(steps_);
  SeqBatch dx{Matrix::Zero(dy.data.rows() * steps, static_cast<Eigen::Index>(width_)), steps_};
  for (Eigen::Index b = 0; b < dy.data.rows(); ++b) dx.data.row(b * steps + steps - 1) = dy.data.row(b);
  return dx;
}

// --- Sequential ---------------------------------------------------------------------

SeqBatch Sequential::forward(const SeqBatch& x) {
  SeqBatch h = x;
  for (auto& layer : layers_) h = layer->forward(h);
  return h;
}

SeqBatch Sequential::backward(const SeqBatch& dy) {
  SeqBatch g = dy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

SeqBatch Sequential::infer(const SeqBatch& x) const {
  SeqBatch h = x;
  for (const auto& layer : layers_) h = layer->infer(h);
  return h;
}

std::vector<Tensor*> Sequential::parameters() {
  std::vector<Tensor*> all;
  for (auto& layer : layers_) {
    auto p = layer->parameters();
    all.insert(all.end(), p.begin(), p.end());
  }
  return all;
}

}  // namespace risnet::nn
