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

#include "risnet/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "risnet/error.hpp"

namespace risnet::predict {

std::string_view variant_name(Variant variant) {
  switch (variant) {
    case Variant::Dnn: return "dnn";
    case Variant::Lstm: return "lstm";
    case Variant::Transformer: return "transformer";
  }
  throw InvalidArgument("unknown model variant");
}

Variant parse_variant(std::string_view name) {
  if (name == "dnn") return Variant::Dnn;
  if (name == "lstm") return Variant::Lstm;
  if (name == "transformer") return Variant::Transformer;
  throw InvalidArgument("unknown model variant '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  if (elements == 0) throw ConfigError("model needs at least one RIS element");
  if (window == 0) throw ConfigError("model window must be at least 1");
  switch (variant) {
    case Variant::Dnn:
      if (dnn_hidden.size() != 4) throw ConfigError("dnn needs exactly four hidden widths");
      if (std::find(dnn_hidden.begin(), dnn_hidden.end(), 0u) != dnn_hidden.end()) {
        throw ConfigError("dnn hidden widths must be positive");
      }
      break;
    case Variant::Lstm:
      if (lstm_hidden == 0 || lstm_fc == 0) throw ConfigError("lstm needs positive cell and FC widths");
      break;
    case Variant::Transformer:
      if (d_model == 0 || d_model % 2 != 0) throw ConfigError("transformer d_model must be positive and even");
      if (heads == 0 || d_model % heads != 0) {
        throw ConfigError("transformer d_model " + std::to_string(d_model) + " is not divisible by " +
                          std::to_string(heads) + " heads");
      }
      if (ff_width == 0 || encoder_layers == 0) throw ConfigError("transformer sizes must be positive");
      if (ff_kernel % 2 == 0) throw ConfigError("feedforward kernel must be odd");
      break;
  }
}

ModelConfig table_config(Variant variant, std::size_t elements) {
  static constexpr std::array<std::size_t, 5> kElements{4, 8, 12, 16, 20};
  const auto it = std::find(kElements.begin(), kElements.end(), elements);
  if (it == kElements.end()) {
    throw ConfigError("no tuned configuration for N = " + std::to_string(elements) +
                      " (available: 4, 8, 12, 16, 20)");
  }
  const auto k = static_cast<std::size_t>(it - kElements.begin());

  // N = 8 uses (36, 40, 40, 36) and N = 16 uses (68, 72, 72, 68): these are
  // the widths that reproduce the reported parameter counts.
  static const std::array<std::array<std::size_t, 4>, 5> kDnn{{
      {20, 24, 24, 20}, {36, 40, 40, 36}, {52, 56, 56, 52}, {68, 72, 72, 68}, {88, 92, 94, 88}}};
  static constexpr std::array<std::size_t, 5> kLstmCell{22, 44, 60, 76, 100};
  static constexpr std::array<std::size_t, 5> kLstmFc{18, 36, 56, 68, 90};
  static constexpr std::array<std::size_t, 5> kModelDim{24, 48, 60, 80, 120};

  ModelConfig c;
  c.variant = variant;
  c.elements = elements;
  switch (variant) {
    case Variant::Dnn: c.dnn_hidden.assign(kDnn[k].begin(), kDnn[k].end()); break;
    case Variant::Lstm:
      c.lstm_hidden = kLstmCell[k];
      c.lstm_fc = kLstmFc[k];
      break;
    case Variant::Transformer: c.d_model = kModelDim[k]; break;
  }
  return c;
}

std::size_t analytic_param_count(const ModelConfig& c) {
  c.validate();
  const std::size_t f = c.features();
  auto dense = [](std::size_t in, std::size_t out) { return in * out + out; };
  switch (c.variant) {
    case Variant::Dnn: {
      std::size_t total = 0;
      std::size_t prev = f;
      for (std::size_t w : c.dnn_hidden) {
        total += dense(prev, w);
        prev = w;
      }
      return total + dense(prev, f);
    }
    case Variant::Lstm: {
      const std::size_t h = c.lstm_hidden;
      return 4 * ((f + h) * h + h) + dense(h, c.lstm_fc) + dense(c.lstm_fc, f);
    }
    case Variant::Transformer: {
      const std::size_t d = c.d_model;
      const std::size_t k = c.ff_kernel;
      const std::size_t encoder = 4 * dense(d, d) + 2 * (2 * d) + dense(k * d, c.ff_width) + dense(k * c.ff_width, d);
      return dense(f, d) + c.encoder_layers * encoder + dense(d, f);
    }
  }
  return 0;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("training needs at least one epoch");
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (!(adam.learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam.epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

// --- model assembly --------------------------------------------------------------

namespace {

void assemble_dnn(nn::Sequential& net, const ModelConfig& c, std::mt19937_64& rng) {
  net.add<nn::LastStep>();
  std::size_t prev = c.features();
  for (std::size_t w : c.dnn_hidden) {
    net.add<nn::Dense>(prev, w).initialize(rng);
    net.add<nn::Relu>();
    prev = w;
  }
  net.add<nn::Dense>(prev, c.features()).initialize(rng);
}

void assemble_lstm(nn::Sequential& net, const ModelConfig& c, std::mt19937_64& rng) {
  net.add<nn::LstmLayer>(c.features(), c.lstm_hidden).initialize(rng);
  net.add<nn::LastStep>();
  net.add<nn::Dense>(c.lstm_hidden, c.lstm_fc).initialize(rng);
  net.add<nn::Relu>();
  net.add<nn::Dense>(c.lstm_fc, c.features()).initialize(rng);
}

void assemble_transformer(nn::Sequential& net, const ModelConfig& c, std::mt19937_64& rng) {
  net.add<nn::Dense>(c.features(), c.d_model).initialize(rng);
  net.add<nn::PositionalEncoding>(c.d_model);
  for (std::size_t l = 0; l < c.encoder_layers; ++l) {
    net.add<nn::EncoderLayer>(c.d_model, c.heads, c.ff_width, c.ff_kernel).initialize(rng);
  }
  net.add<nn::LastStep>();
  net.add<nn::Dense>(c.d_model, c.features()).initialize(rng);
}

}  // namespace

Model::Model(ModelConfig config, std::uint64_t init_seed) : config_(std::move(config)), init_seed_(init_seed) {
  config_.validate();
  std::mt19937_64 rng(init_seed);
  switch (config_.variant) {
    case Variant::Dnn: assemble_dnn(network_, config_, rng); break;
    case Variant::Lstm: assemble_lstm(network_, config_, rng); break;
    case Variant::Transformer: assemble_transformer(network_, config_, rng); break;
  }
}

Matrix Model::infer(const Matrix& windows, std::size_t steps) const {
  if (static_cast<std::size_t>(windows.cols()) != config_.features()) {
    throw DimensionError("model expects " + std::to_string(config_.features()) + " features, got " +
                         std::to_string(windows.cols()));
  }
  return network_.infer({windows, steps}).data;
}

namespace {

Model build_checked(const ModelConfig& config, Variant expected, std::uint64_t seed) {
  if (config.variant != expected) {
    throw ConfigError("config variant is " + std::string(variant_name(config.variant)) + ", expected " +
                      std::string(variant_name(expected)));
  }
  return Model(config, seed);
}

}  // namespace

Model build_dnn(const ModelConfig& config, std::uint64_t seed) { return build_checked(config, Variant::Dnn, seed); }
Model build_lstm(const ModelConfig& config, std::uint64_t seed) { return build_checked(config, Variant::Lstm, seed); }
Model build_transformer(const ModelConfig& config, std::uint64_t seed) {
  return build_checked(config, Variant::Transformer, seed);
}
Model build_model(const ModelConfig& config, std::uint64_t seed) { return Model(config, seed); }

std::size_t param_count(const Model& model) { return model.network().parameter_count(); }

// --- training ---------------------------------------------------------------------

namespace {

/// Stacks the inputs of pairs[first, first + count) into one batch.
void gather(const channel::WindowedDataset& data, std::span<const std::size_t> pairs, Matrix& inputs,
            Matrix& targets) {
  const auto w = static_cast<Eigen::Index>(data.window());
  const auto f = static_cast<Eigen::Index>(data.features());
  const auto b = static_cast<Eigen::Index>(pairs.size());
  inputs.resize(b * w, f);
  targets.resize(b, f);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto k = pairs[static_cast<std::size_t>(i)];
    inputs.middleRows(i * w, w) = data.input(k);
    targets.row(i) = data.target(k);
  }
}

void require_width(const Model& model, std::size_t features) {
  if (features != model.config().features()) {
    throw DimensionError("dataset has " + std::to_string(features) + " features but the model expects " +
                         std::to_string(model.config().features()) + " (N = " +
                         std::to_string(model.config().elements) + ")");
  }
}

}  // namespace

double evaluate_rmse(const Model& model, const channel::WindowedDataset& dataset, channel::IndexRange range) {
  require_width(model, dataset.features());
  if (range.size() == 0) throw InsufficientData("evaluate_rmse: empty range");
  constexpr std::size_t kChunk = 256;
  double sum_sq = 0.0;
  Matrix inputs;
  Matrix targets;
  std::vector<std::size_t> idx;
  for (std::size_t start = range.begin; start < range.end; start += kChunk) {
    const std::size_t stop = std::min(range.end, start + kChunk);
    idx.resize(stop - start);
    std::iota(idx.begin(), idx.end(), start);
    gather(dataset, idx, inputs, targets);
    sum_sq += (model.infer(inputs, dataset.window()) - targets).squaredNorm();
  }
  return std::sqrt(sum_sq / static_cast<double>(range.size() * dataset.features()));
}

TrainedModel train(Model model, const channel::WindowedDataset& dataset, const channel::NormStats& stats,
                   const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  require_width(model, dataset.features());
  if (stats.features() != dataset.features()) throw DimensionError("norm stats do not match the dataset width");
  const auto split = dataset.train();
  if (split.size() == 0) throw InsufficientData("training split is empty");

  auto params = model.network().parameters();
  auto optimizer = nn::OptimizerState::for_parameters(params, config.adam);
  std::mt19937_64 shuffle_rng(channel::derive_seed(config.seed, 1));

  std::vector<std::size_t> order(split.size());
  std::iota(order.begin(), order.end(), split.begin);

  TrainedModel out{std::move(model), config, stats, {}, {}};
  auto& net = out.model.network();
  Matrix inputs;
  Matrix targets;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double sum_sq = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - start);
      gather(dataset, std::span<const std::size_t>(order).subspan(start, count), inputs, targets);

      net.zero_grad();
      const nn::SeqBatch pred = net.forward({inputs, dataset.window()});
      const auto loss = nn::rmse_loss(pred.data, targets);
      if (!std::isfinite(loss.value)) throw DivergenceError(epoch, loss.value);
      sum_sq += (pred.data - targets).squaredNorm();
      net.backward({loss.gradient, 1});
      nn::adam_step(params, optimizer);
    }
    const double train_rmse = std::sqrt(sum_sq / static_cast<double>(order.size() * dataset.features()));
    if (!std::isfinite(train_rmse)) throw DivergenceError(epoch, train_rmse);
    out.train_history.push_back(train_rmse);
    out.validation_history.push_back(dataset.validation().size() > 0
                                         ? evaluate_rmse(out.model, dataset, dataset.validation())
                                         : std::nan(""));
    if (on_epoch) on_epoch(epoch, out.train_history.back(), out.validation_history.back());
  }
  return out;
}

TrainedModel fit(const ModelConfig& config, const channel::WindowedDataset& dataset,
                 const channel::NormStats& stats, const TrainConfig& train_config, const EpochCallback& on_epoch) {
  return train(build_model(config, channel::derive_seed(train_config.seed, 0)), dataset, stats, train_config,
               on_epoch);
}

// --- inference ----------------------------------------------------------------------

Vector predict_next(const TrainedModel& model, const Matrix& normalized_window) {
  const auto& c = model.model.config();
  if (static_cast<std::size_t>(normalized_window.cols()) != c.features()) {
    throw DimensionError("window has " + std::to_string(normalized_window.cols()) + " features, model expects " +
                         std::to_string(c.features()));
  }
  if (model.stats.features() != c.features()) throw DimensionError("model carries no matching norm stats");
  const Matrix out = model.model.infer(normalized_window, static_cast<std::size_t>(normalized_window.rows()));
  return channel::denormalize(out, model.stats).row(0).transpose();
}

namespace {

Matrix sliding_forecast_normalized(const TrainedModel& model, const Matrix& normalized_series) {
  const auto& c = model.model.config();
  if (static_cast<std::size_t>(normalized_series.cols()) != c.features()) {
    throw DimensionError("series has " + std::to_string(normalized_series.cols()) + " features, model expects " +
                         std::to_string(c.features()));
  }
  const auto w = static_cast<Eigen::Index>(c.window);
  if (normalized_series.rows() <= w) throw InsufficientData("series shorter than window + 1");
  const auto count = normalized_series.rows() - w;
  Matrix windows(count * w, normalized_series.cols());
  for (Eigen::Index k = 0; k < count; ++k) windows.middleRows(k * w, w) = normalized_series.middleRows(k, w);
  return model.model.infer(windows, c.window);
}

}  // namespace

Matrix forecast_series(const TrainedModel& model, const Matrix& normalized_series) {
  return channel::denormalize(sliding_forecast_normalized(model, normalized_series), model.stats);
}

double forecast_rmse(const TrainedModel& model, const Matrix& normalized_series) {
  const Matrix pred = sliding_forecast_normalized(model, normalized_series);
  const auto w = static_cast<Eigen::Index>(model.model.config().window);
  const auto truth = normalized_series.bottomRows(normalized_series.rows() - w);
  return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

}  // namespace risnet::predict
