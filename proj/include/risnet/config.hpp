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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "risnet/experiments.hpp"
#include "risnet/predictors.hpp"

namespace risnet::config {

struct DatasetConfig {
  std::size_t elements = 8;
  std::size_t length = 2550;
  std::size_t window = predict::kDefaultWindow;
  double normalized_doppler = 0.01;
  std::size_t filter_length = 64;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Model sizes left unset fall back to the tuned table for the dataset's N.
struct ModelSection {
  predict::Variant variant = predict::Variant::Transformer;
  std::optional<std::vector<std::size_t>> dnn_hidden;
  std::optional<std::size_t> lstm_hidden;
  std::optional<std::size_t> lstm_fc;
  std::optional<std::size_t> d_model;
  std::optional<std::size_t> heads;
  std::optional<std::size_t> ff_width;
  std::optional<std::size_t> ff_kernel;
  std::optional<std::size_t> encoder_layers;
};

/// Run-level knobs; kept in the config so a manifest replays the same run.
struct RunSection {
  unsigned jobs = 1;
  std::string dataset;      // dataset directory for `train`; empty: generate in memory
  std::string checkpoints;  // checkpoint directory for `sweep`; empty: the output directory
  std::vector<std::string> sweeps{"power", "element"};
  bool train_missing = false;
};

struct AppConfig {
  DatasetConfig dataset;
  ModelSection model;
  predict::TrainConfig train;
  experiments::ScenarioConfig scenario;
  RunSection run;

  /// Resolved model config for `variant` at N = `elements`.
  predict::ModelConfig model_config(predict::Variant variant, std::size_t elements) const;
  predict::ModelConfig model_config() const { return model_config(model.variant, dataset.elements); }
  /// Copies dataset-level channel settings into the scenario and validates
  /// every section. Throws ConfigError.
  void finalize();
};

/// Parses JSON text. Errors are ConfigError with "source:line:col: message".
/// A run manifest is accepted too; its "config" object is used.
AppConfig parse_config(std::string_view text, std::string_view source = "<config>");
AppConfig load_config(const std::filesystem::path& path);

/// Fully resolved JSON (every field explicit), pretty-printed.
std::string to_json_text(const AppConfig& config);

}  // namespace risnet::config
