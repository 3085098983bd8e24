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

#include "risnet/nn/attention.hpp"

#include <cmath>

#include "risnet/error.hpp"

namespace risnet::nn {

namespace {

std::size_t checked_head_count(std::size_t d_model, std::size_t heads) {
  if (heads == 0 || d_model % heads != 0) {
    throw ConfigError("attention: d_model " + std::to_string(d_model) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  return heads;
}

void softmax_rows(Matrix& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    auto row = s.row(r);
    const double m = row.maxCoeff();
    row = (row.array() - m).exp();
    row /= row.sum();
  }
}

}  // namespace

MultiHeadAttention::MultiHeadAttention(std::size_t d_model, std::size_t heads)
    : d_model_(d_model),
      heads_(checked_head_count(d_model, heads)),
      query_(d_model, d_model),
      key_(d_model, d_model),
      value_(d_model, d_model),
      output_(d_model, d_model) {}

void MultiHeadAttention::initialize(std::mt19937_64& rng) {
  query_.initialize(rng);
  key_.initialize(rng);
  value_.initialize(rng);
  output_.initialize(rng);
}

std::vector<Tensor*> MultiHeadAttention::parameters() {
  return {&query_.weight(), &query_.bias(), &key_.weight(),    &key_.bias(),
          &value_.weight(), &value_.bias(), &output_.weight(), &output_.bias()};
}

SeqBatch MultiHeadAttention::compute(const SeqBatch& x, Cache* cache) const {
  const SeqBatch q = query_.infer(x);
  const SeqBatch k = key_.infer(x);
  const SeqBatch v = value_.infer(x);

  const auto steps = static_cast<Eigen::Index>(x.steps);
  const auto batch = static_cast<Eigen::Index>(x.batch());
  const auto dh = static_cast<Eigen::Index>(d_model_ / heads_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  SeqBatch mixed{Matrix(x.data.rows(), x.data.cols()), x.steps};
  if (cache) cache->weights.resize(static_cast<std::size_t>(batch) * heads_);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (Eigen::Index h = 0; h < static_cast<Eigen::Index>(heads_); ++h) {
      const auto qh = q.data.block(b * steps, h * dh, steps, dh);
      const auto kh = k.data.block(b * steps, h * dh, steps, dh);
      const auto vh = v.data.block(b * steps, h * dh, steps, dh);
      Matrix s = (qh * kh.transpose()) * scale;
      softmax_rows(s);
      mixed.data.block(b * steps, h * dh, steps, dh).noalias() = s * vh;
      if (cache) cache->weights[static_cast<std::size_t>(b) * heads_ + static_cast<std::size_t>(h)] = std::move(s);
    }
  }
  if (cache) {
    cache->q = q.data;
    cache->k = k.data;
    cache->v = v.data;
    cache->mixed = mixed.data;
  }
  return output_.infer(mixed);
}

SeqBatch MultiHeadAttention::infer(const SeqBatch& x) const { return compute(x, nullptr); }

SeqBatch MultiHeadAttention::forward(const SeqBatch& x) {
  Cache cache;
  SeqBatch y = compute(x, &cache);
  input_ = x;
  q_ = std::move(cache.q);
  k_ = std::move(cache.k);
  v_ = std::move(cache.v);
  mixed_ = std::move(cache.mixed);
  weights_ = std::move(cache.weights);
  return y;
}

SeqBatch MultiHeadAttention::backward(const SeqBatch& dy) {
  // output projection
  output_.weight().grad_matrix().noalias() += dy.data.transpose() * mixed_;
  output_.bias().grad_vector() += dy.data.colwise().sum();
  const Matrix dmixed = dy.data * output_.weight().matrix();

  const auto steps = static_cast<Eigen::Index>(input_.steps);
  const auto batch = static_cast<Eigen::Index>(input_.batch());
  const auto dh = static_cast<Eigen::Index>(d_model_ / heads_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix dq(q_.rows(), q_.cols());
  Matrix dk(k_.rows(), k_.cols());
  Matrix dv(v_.rows(), v_.cols());
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (Eigen::Index h = 0; h < static_cast<Eigen::Index>(heads_); ++h) {
      const Matrix& a = weights_[static_cast<std::size_t>(b) * heads_ + static_cast<std::size_t>(h)];
      const auto qh = q_.block(b * steps, h * dh, steps, dh);
      const auto kh = k_.block(b * steps, h * dh, steps, dh);
      const auto vh = v_.block(b * steps, h * dh, steps, dh);
      const auto doh = dmixed.block(b * steps, h * dh, steps, dh);

      const Matrix da = doh * vh.transpose();
      dv.block(b * steps, h * dh, steps, dh).noalias() = a.transpose() * doh;
      // softmax Jacobian, row by row
      const Eigen::VectorXd row_dot = (da.array() * a.array()).rowwise().sum();
      Matrix ds = (a.array() * (da.colwise() - row_dot).array()).matrix() * scale;
      dq.block(b * steps, h * dh, steps, dh).noalias() = ds * kh;
      dk.block(b * steps, h * dh, steps, dh).noalias() = ds.transpose() * qh;
    }
  }

  auto project_back = [&](Dense& proj, const Matrix& d) {
    proj.weight().grad_matrix().noalias() += d.transpose() * input_.data;
    proj.bias().grad_vector() += d.colwise().sum();
  };
  project_back(query_, dq);
  project_back(key_, dk);
  project_back(value_, dv);

  SeqBatch dx{dq * query_.weight().matrix(), input_.steps};
  dx.data.noalias() += dk * key_.weight().matrix();
  dx.data.noalias() += dv * value_.weight().matrix();
  return dx;
}

Matrix multi_head_attention(const Matrix& x, const MultiHeadAttention& layer) {
  return layer.infer(SeqBatch{x, static_cast<std::size_t>(x.rows())}).data;
}

// --- EncoderLayer ---------------------------------------------------------------------

EncoderLayer::EncoderLayer(std::size_t d_model, std::size_t heads, std::size_t ff_width, std::size_t kernel)
    : attention_(d_model, heads),
      norm1_(d_model),
      ff_in_(d_model, ff_width, kernel),
      ff_out_(ff_width, d_model, kernel),
      norm2_(d_model) {}

void EncoderLayer::initialize(std::mt19937_64& rng) {
  attention_.initialize(rng);
  ff_in_.initialize(rng);
  ff_out_.initialize(rng);
}

std::vector<Tensor*> EncoderLayer::parameters() {
  std::vector<Tensor*> all = attention_.parameters();
  for (Module* m : std::initializer_list<Module*>{&norm1_, &ff_in_, &ff_out_, &norm2_}) {
    auto p = m->parameters();
    all.insert(all.end(), p.begin(), p.end());
  }
  return all;
}

SeqBatch EncoderLayer::infer(const SeqBatch& x) const {
  SeqBatch a = attention_.infer(x);
  a.data += x.data;
  const SeqBatch z = norm1_.infer(a);
  SeqBatch f = ff_out_.infer(ff_act_.infer(ff_in_.infer(z)));
  f.data += z.data;
  return norm2_.infer(f);
}

SeqBatch EncoderLayer::forward(const SeqBatch& x) {
  SeqBatch a = attention_.forward(x);
  a.data += x.data;
  const SeqBatch z = norm1_.forward(a);
  SeqBatch f = ff_out_.forward(ff_act_.forward(ff_in_.forward(z)));
  f.data += z.data;
  return norm2_.forward(f);
}

SeqBatch EncoderLayer::backward(const SeqBatch& dy) {
  const SeqBatch ds2 = norm2_.backward(dy);
  SeqBatch dz = ff_in_.backward(ff_act_.backward(ff_out_.backward(ds2)));
  dz.data += ds2.data;
  const SeqBatch ds1 = norm1_.backward(dz);
  SeqBatch dx = attention_.backward(ds1);
  dx.data += ds1.data;
  return dx;
}

}  // namespace risnet::nn
