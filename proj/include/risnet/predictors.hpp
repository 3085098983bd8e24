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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "risnet/channel_sim.hpp"
#include "risnet/nn/attention.hpp"
#include "risnet/nn/layers.hpp"
#include "risnet/nn/lstm.hpp"
#include "risnet/nn/optim.hpp"

namespace risnet::predict {

enum class Variant { Dnn, Lstm, Transformer };

std::string_view variant_name(Variant variant);
/// Accepts "dnn", "lstm", "transformer"; throws InvalidArgument otherwise.
Variant parse_variant(std::string_view name);

inline constexpr std::size_t kDefaultWindow = 10;

struct ModelConfig {
  Variant variant = Variant::Transformer;
  std::size_t elements = 8;
  std::size_t window = kDefaultWindow;

  std::vector<std::size_t> dnn_hidden;  // four widths
  std::size_t lstm_hidden = 0;
  std::size_t lstm_fc = 0;
  std::size_t d_model = 0;
  std::size_t heads = 4;
  std::size_t ff_width = 20;
  std::size_t ff_kernel = 3;
  std::size_t encoder_layers = 1;

  std::size_t features() const noexcept { return channel::feature_count(elements); }
  /// Throws ConfigError on non-positive sizes, an even kernel, odd d_model or
  /// d_model not divisible by heads.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

/// Tuned sizes for N in {4, 8, 12, 16, 20}. Throws ConfigError for other N.
ModelConfig table_config(Variant variant, std::size_t elements);

/// Closed-form weight + bias count (layer-norm gain/offset included).
std::size_t analytic_param_count(const ModelConfig& config);

struct TrainConfig {
  int epochs = 100;
  nn::AdamConfig adam;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;

  void validate() const;
};

/// A configured network mapping a batch of W x F windows to F outputs.
class Model {
 public:
  Model(ModelConfig config, std::uint64_t init_seed);

  const ModelConfig& config() const noexcept { return config_; }
  std::uint64_t init_seed() const noexcept { return init_seed_; }
  nn::Sequential& network() noexcept { return network_; }
  const nn::Sequential& network() const noexcept { return network_; }

  /// `windows` stacks B windows of W rows each; returns B x F.
  Matrix infer(const Matrix& windows, std::size_t steps) const;

 private:
  ModelConfig config_;
  std::uint64_t init_seed_;
  nn::Sequential network_;
};

/// Most recent time step -> 4 ReLU hidden layers -> linear F outputs.
Model build_dnn(const ModelConfig& config, std::uint64_t init_seed);
/// LSTM over the window -> final hidden state -> ReLU FC -> linear F outputs.
Model build_lstm(const ModelConfig& config, std::uint64_t init_seed);
/// Embedding -> positional encoding -> encoder layer(s) -> final step -> dense F.
Model build_transformer(const ModelConfig& config, std::uint64_t init_seed);
Model build_model(const ModelConfig& config, std::uint64_t init_seed);

std::size_t param_count(const Model& model);

struct TrainedModel {
  Model model;
  TrainConfig train;
  channel::NormStats stats;
  std::vector<double> train_history;       // per-epoch training RMSE
  std::vector<double> validation_history;  // per-epoch validation RMSE
};

/// Called after every epoch with (epoch, train RMSE, validation RMSE).
using EpochCallback = std::function<void(int, double, double)>;

/// Adam on the RMSE loss over the training split, fixed epoch count, no early
/// stopping. Throws DimensionError when the dataset width differs from the
/// model's, DivergenceError on a non-finite loss.
TrainedModel train(Model model, const channel::WindowedDataset& dataset, const channel::NormStats& stats,
                   const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Builds the model from (config, seed) and trains it.
TrainedModel fit(const ModelConfig& config, const channel::WindowedDataset& dataset,
                 const channel::NormStats& stats, const TrainConfig& train_config,
                 const EpochCallback& on_epoch = {});

/// Normalized-space RMSE of one-step forecasts over pairs [range.begin, range.end).
double evaluate_rmse(const Model& model, const channel::WindowedDataset& dataset, channel::IndexRange range);

/// One-step forecast for a normalized W x F window, mapped back to physical
/// units with the model's statistics.
Vector predict_next(const TrainedModel& model, const Matrix& normalized_window);

/// Sliding one-step forecasts over a normalized T x F series: row k is the
/// denormalized forecast of time step k + W.
Matrix forecast_series(const TrainedModel& model, const Matrix& normalized_series);

/// Normalized-space RMSE of sliding forecasts over a normalized series.
double forecast_rmse(const TrainedModel& model, const Matrix& normalized_series);

// --- checkpoints -----------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

/// Writes a text header line "RISNET-CHECKPOINT <version> <json bytes>", the
/// JSON header, then every parameter tensor as little-endian float64.
void save(const TrainedModel& model, const std::filesystem::path& path);

/// Throws CheckpointError on a version mismatch, truncated or corrupt file,
/// or tensors that disagree with the recorded config.
TrainedModel load(const std::filesystem::path& path);

}  // namespace risnet::predict
