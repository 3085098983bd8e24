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

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "risnet/error.hpp"
#include "risnet/predictors.hpp"

namespace risnet::predict {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "RISNET-CHECKPOINT";

void put_le(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  out.write(bytes, 8);
}

bool get_le(std::istream& in, double& v) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) return false;
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  v = std::bit_cast<double>(bits);
  return true;
}

json config_to_json(const ModelConfig& c) {
  return {{"variant", variant_name(c.variant)},
          {"elements", c.elements},
          {"window", c.window},
          {"dnn_hidden", c.dnn_hidden},
          {"lstm_hidden", c.lstm_hidden},
          {"lstm_fc", c.lstm_fc},
          {"d_model", c.d_model},
          {"heads", c.heads},
          {"ff_width", c.ff_width},
          {"ff_kernel", c.ff_kernel},
          {"encoder_layers", c.encoder_layers}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.variant = parse_variant(j.at("variant").get<std::string>());
  c.elements = j.at("elements").get<std::size_t>();
  c.window = j.at("window").get<std::size_t>();
  c.dnn_hidden = j.at("dnn_hidden").get<std::vector<std::size_t>>();
  c.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
  c.lstm_fc = j.at("lstm_fc").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.ff_width = j.at("ff_width").get<std::size_t>();
  c.ff_kernel = j.at("ff_kernel").get<std::size_t>();
  c.encoder_layers = j.at("encoder_layers").get<std::size_t>();
  return c;
}

}  // namespace

void save(const TrainedModel& trained, const std::filesystem::path& path) {
  const auto& model = trained.model;
  json tensors = json::array();
  for (const nn::Tensor* t : model.network().parameters()) {
    tensors.push_back({{"name", t->name()}, {"shape", t->shape()}});
  }
  const json header = {
      {"config", config_to_json(model.config())},
      {"init_seed", model.init_seed()},
      {"train",
       {{"epochs", trained.train.epochs},
        {"batch_size", trained.train.batch_size},
        {"seed", trained.train.seed},
        {"learning_rate", trained.train.adam.learning_rate},
        {"beta1", trained.train.adam.beta1},
        {"beta2", trained.train.adam.beta2},
        {"epsilon", trained.train.adam.epsilon}}},
      {"norm_stats", {{"mean", trained.stats.mean}, {"std", trained.stats.std}}},
      {"train_history", trained.train_history},
      {"validation_history", trained.validation_history},
      {"tensors", tensors},
  };
  const std::string text = header.dump();

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open '" + tmp.string() + "' for writing");
    out << kMagic << ' ' << kCheckpointVersion << ' ' << text.size() << '\n' << text;
    for (const nn::Tensor* t : model.network().parameters()) {
      for (double v : t->values()) put_le(out, v);
    }
    out.flush();
    if (!out) throw CheckpointError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

TrainedModel load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");

  std::string first;
  if (!std::getline(in, first)) throw CheckpointError(path.string() + ": empty checkpoint");
  std::istringstream line(first);
  std::string magic;
  int version = -1;
  std::size_t bytes = 0;
  line >> magic >> version >> bytes;
  if (!line || magic != kMagic) throw CheckpointError(path.string() + ": not a risnet checkpoint");
  if (version != kCheckpointVersion) {
    throw CheckpointError(path.string() + ": checkpoint version " + std::to_string(version) +
                          " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }

  std::string text(bytes, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(bytes))) {
    throw CheckpointError(path.string() + ": truncated header");
  }

  ModelConfig config;
  std::uint64_t init_seed = 0;
  TrainConfig train_cfg;
  channel::NormStats stats;
  std::vector<double> train_history;
  std::vector<double> validation_history;
  json tensors;
  try {
    const json header = json::parse(text);
    config = config_from_json(header.at("config"));
    init_seed = header.at("init_seed").get<std::uint64_t>();
    const auto& t = header.at("train");
    train_cfg.epochs = t.at("epochs").get<int>();
    train_cfg.batch_size = t.at("batch_size").get<std::size_t>();
    train_cfg.seed = t.at("seed").get<std::uint64_t>();
    train_cfg.adam.learning_rate = t.at("learning_rate").get<double>();
    train_cfg.adam.beta1 = t.at("beta1").get<double>();
    train_cfg.adam.beta2 = t.at("beta2").get<double>();
    train_cfg.adam.epsilon = t.at("epsilon").get<double>();
    stats.mean = header.at("norm_stats").at("mean").get<std::vector<double>>();
    stats.std = header.at("norm_stats").at("std").get<std::vector<double>>();
    train_history = header.at("train_history").get<std::vector<double>>();
    validation_history = header.at("validation_history").get<std::vector<double>>();
    tensors = header.at("tensors");
  } catch (const json::exception& e) {
    throw CheckpointError(path.string() + ": corrupt header: " + e.what());
  } catch (const InvalidArgument& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }

  Model model = [&] {
    try {
      return Model(config, init_seed);
    } catch (const ConfigError& e) {
      throw CheckpointError(path.string() + ": invalid model config: " + e.what());
    }
  }();
  if (stats.features() != config.features() || stats.std.size() != config.features()) {
    throw CheckpointError(path.string() + ": norm stats width does not match the model");
  }

  auto params = model.network().parameters();
  if (tensors.size() != params.size()) {
    throw CheckpointError(path.string() + ": expected " + std::to_string(params.size()) + " tensors, found " +
                          std::to_string(tensors.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    nn::Tensor& p = *params[k];
    std::vector<std::size_t> shape;
    try {
      shape = tensors[k].at("shape").get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
      throw CheckpointError(path.string() + ": corrupt tensor entry: " + e.what());
    }
    if (shape != p.shape()) throw CheckpointError(path.string() + ": shape mismatch for tensor '" + p.name() + "'");
    for (double& v : p.values()) {
      if (!get_le(in, v)) throw CheckpointError(path.string() + ": truncated tensor data");
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError(path.string() + ": trailing bytes");

  return TrainedModel{std::move(model), train_cfg, std::move(stats), std::move(train_history),
                      std::move(validation_history)};
}

}  // namespace risnet::predict
