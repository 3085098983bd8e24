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

#include "risnet/config.hpp"

#include <fmt/format.h>

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "risnet/error.hpp"

namespace risnet::config {

using nlohmann::json;

void DatasetConfig::validate() const {
  if (elements == 0) throw ConfigError("dataset.elements must be at least 1");
  if (window == 0) throw ConfigError("dataset.window must be at least 1");
  if (length <= window + 1) throw ConfigError("dataset.length must exceed window + 1");
  if (length < 11) throw ConfigError("dataset.length must be at least 11");
  if (!(normalized_doppler > 0.0 && normalized_doppler < 0.5)) {
    throw ConfigError("dataset.normalized_doppler must lie in (0, 0.5)");
  }
  if (filter_length == 0) throw ConfigError("dataset.filter_length must be at least 1");
}

predict::ModelConfig AppConfig::model_config(predict::Variant variant, std::size_t elements) const {
  predict::ModelConfig c;
  try {
    c = predict::table_config(variant, elements);
  } catch (const ConfigError&) {
    // no tuned sizes for this N: the config has to supply them
    c.variant = variant;
    c.elements = elements;
  }
  c.window = dataset.window;
  if (model.dnn_hidden) c.dnn_hidden = *model.dnn_hidden;
  if (model.lstm_hidden) c.lstm_hidden = *model.lstm_hidden;
  if (model.lstm_fc) c.lstm_fc = *model.lstm_fc;
  if (model.d_model) c.d_model = *model.d_model;
  if (model.heads) c.heads = *model.heads;
  if (model.ff_width) c.ff_width = *model.ff_width;
  if (model.ff_kernel) c.ff_kernel = *model.ff_kernel;
  if (model.encoder_layers) c.encoder_layers = *model.encoder_layers;
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("model ({} at N = {}): {}", predict::variant_name(variant), elements, e.what()));
  }
  return c;
}

void AppConfig::finalize() {
  dataset.validate();
  train.validate();
  scenario.window = dataset.window;
  scenario.normalized_doppler = dataset.normalized_doppler;
  scenario.filter_length = dataset.filter_length;
  scenario.validate();
  if (run.jobs == 0) throw ConfigError("run.jobs must be at least 1");
  for (const auto& s : run.sweeps) {
    if (s != "power" && s != "element") throw ConfigError("run.sweeps entries must be \"power\" or \"element\"");
  }
}

namespace {

/// Line/column of the key at `path`, found by scanning for each quoted key
/// in turn. Good enough for hand-written configs.
std::pair<std::size_t, std::size_t> locate(std::string_view text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  for (const auto& key : path) {
    const std::string quoted = "\"" + key + "\"";
    std::size_t at = pos;
    while (true) {
      at = text.find(quoted, at);
      if (at == std::string_view::npos) break;
      std::size_t after = at + quoted.size();
      while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
      if (after < text.size() && text[after] == ':') break;
      at += quoted.size();
    }
    if (at == std::string_view::npos) break;
    pos = at;
  }
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < pos && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

class Reader {
 public:
  Reader(std::string_view text, std::string_view source) : text_(text), source_(source) {}

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& message) const {
    const auto [line, col] = locate(text_, path);
    std::string dotted;
    for (const auto& p : path) dotted += (dotted.empty() ? "" : ".") + p;
    throw ConfigError(fmt::format("{}:{}:{}: {}: {}", source_, line, col, dotted, message));
  }

  const json& object(const json& parent, std::vector<std::string> path, std::initializer_list<std::string_view> keys) {
    const json& node = parent.at(path.back());
    if (!node.is_object()) fail(path, "expected an object");
    for (const auto& [k, v] : node.items()) {
      (void)v;
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
        auto child = path;
        child.push_back(k);
        std::string known;
        for (auto key : keys) known += (known.empty() ? "" : ", ") + std::string(key);
        fail(child, "unknown key (expected one of: " + known + ")");
      }
    }
    return node;
  }

  template <typename T>
  void read(const json& obj, std::vector<std::string> path, const std::string& key, T& out) {
    if (!obj.contains(key)) return;
    path.push_back(key);
    const json& v = obj.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) fail(path, "expected true or false");
      } else if constexpr (std::is_unsigned_v<T>) {
        if (!v.is_number_unsigned()) fail(path, "expected a non-negative integer");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) fail(path, "expected an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) fail(path, "expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) fail(path, "expected a string");
      }
      out = v.get<T>();
    } catch (const json::exception& e) {
      fail(path, std::string("wrong type (") + e.what() + ")");
    }
  }

  template <typename T>
  void read_list(const json& obj, std::vector<std::string> path, const std::string& key, std::vector<T>& out) {
    if (!obj.contains(key)) return;
    path.push_back(key);
    const json& v = obj.at(key);
    if (!v.is_array()) fail(path, "expected a list");
    std::vector<T> values;
    for (const auto& item : v) {
      bool ok = false;
      if constexpr (std::is_unsigned_v<T>) {
        ok = item.is_number_unsigned();
      } else if constexpr (std::is_floating_point_v<T>) {
        ok = item.is_number();
      } else {
        ok = item.is_string();
      }
      if (!ok) fail(path, "list has an entry of the wrong type");
      values.push_back(item.get<T>());
    }
    out = std::move(values);
  }

  template <typename T>
  void read_opt(const json& obj, const std::vector<std::string>& path, const std::string& key,
                std::optional<T>& out) {
    if (!obj.contains(key)) return;
    T v{};
    if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
      read_list(obj, path, key, v);
    } else {
      read(obj, path, key, v);
    }
    out = std::move(v);
  }

  std::string_view text() const { return text_; }

 private:
  std::string_view text_;
  std::string_view source_;
};

AppConfig from_json(const json& root, Reader& r) {
  AppConfig c;
  if (!root.is_object()) r.fail({}, "top level must be an object");
  for (const auto& [k, v] : root.items()) {
    (void)v;
    static const std::set<std::string> sections{"dataset", "model", "train", "scenario", "run"};
    if (!sections.contains(k)) r.fail({k}, "unknown section (expected dataset, model, train, scenario, run)");
  }

  if (root.contains("dataset")) {
    const auto& d = r.object(root, {"dataset"},
                             {"elements", "length", "window", "normalized_doppler", "filter_length", "seed"});
    const std::vector<std::string> p{"dataset"};
    r.read(d, p, "elements", c.dataset.elements);
    r.read(d, p, "length", c.dataset.length);
    r.read(d, p, "window", c.dataset.window);
    r.read(d, p, "normalized_doppler", c.dataset.normalized_doppler);
    r.read(d, p, "filter_length", c.dataset.filter_length);
    r.read(d, p, "seed", c.dataset.seed);
  }

  if (root.contains("model")) {
    const auto& m = r.object(root, {"model"},
                             {"variant", "dnn_hidden", "lstm_hidden", "lstm_fc", "d_model", "heads", "ff_width",
                              "ff_kernel", "encoder_layers"});
    const std::vector<std::string> p{"model"};
    std::string variant(predict::variant_name(c.model.variant));
    r.read(m, p, "variant", variant);
    try {
      c.model.variant = predict::parse_variant(variant);
    } catch (const InvalidArgument&) {
      r.fail({"model", "variant"}, "expected dnn, lstm or transformer");
    }
    r.read_opt(m, p, "dnn_hidden", c.model.dnn_hidden);
    r.read_opt(m, p, "lstm_hidden", c.model.lstm_hidden);
    r.read_opt(m, p, "lstm_fc", c.model.lstm_fc);
    r.read_opt(m, p, "d_model", c.model.d_model);
    r.read_opt(m, p, "heads", c.model.heads);
    r.read_opt(m, p, "ff_width", c.model.ff_width);
    r.read_opt(m, p, "ff_kernel", c.model.ff_kernel);
    r.read_opt(m, p, "encoder_layers", c.model.encoder_layers);
  }

  if (root.contains("train")) {
    const auto& t = r.object(root, {"train"},
                             {"epochs", "batch_size", "seed", "learning_rate", "beta1", "beta2", "epsilon"});
    const std::vector<std::string> p{"train"};
    r.read(t, p, "epochs", c.train.epochs);
    r.read(t, p, "batch_size", c.train.batch_size);
    r.read(t, p, "seed", c.train.seed);
    r.read(t, p, "learning_rate", c.train.adam.learning_rate);
    r.read(t, p, "beta1", c.train.adam.beta1);
    r.read(t, p, "beta2", c.train.adam.beta2);
    r.read(t, p, "epsilon", c.train.adam.epsilon);
  }

  if (root.contains("scenario")) {
    const auto& s = r.object(root, {"scenario"},
                             {"elements", "powers_dbm", "power_sweep_elements", "element_sweep_power_dbm", "geometry",
                              "noise_power_dbw", "gamma_th", "iterations", "segment_length", "seeds", "schemes",
                              "confidence"});
    const std::vector<std::string> p{"scenario"};
    auto& sc = c.scenario;
    r.read_list(s, p, "elements", sc.elements);
    r.read_list(s, p, "powers_dbm", sc.powers_dbm);
    r.read(s, p, "power_sweep_elements", sc.power_sweep_elements);
    r.read(s, p, "element_sweep_power_dbm", sc.element_sweep_power_dbm);
    r.read(s, p, "noise_power_dbw", sc.noise_power_dbw);
    r.read(s, p, "gamma_th", sc.gamma_th);
    r.read(s, p, "iterations", sc.iterations);
    r.read(s, p, "segment_length", sc.segment_length);
    r.read_list(s, p, "seeds", sc.seeds);
    r.read(s, p, "confidence", sc.confidence);
    if (s.contains("schemes")) {
      std::vector<std::string> names;
      r.read_list(s, p, "schemes", names);
      sc.schemes.clear();
      for (const auto& n : names) {
        try {
          sc.schemes.push_back(experiments::parse_scheme_id(n));
        } catch (const InvalidArgument&) {
          r.fail({"scenario", "schemes"}, "unknown scheme '" + n + "'");
        }
      }
    }
    if (s.contains("geometry")) {
      const auto& g = r.object(s, {"scenario", "geometry"},
                               {"d_bs_ue", "d_bs_ris", "d_ris_ue", "eta_bs_ue", "eta_bs_ris", "eta_ris_ue", "l0_db",
                                "d0"});
      const std::vector<std::string> gp{"scenario", "geometry"};
      r.read(g, gp, "d_bs_ue", sc.geometry.d_bs_ue);
      r.read(g, gp, "d_bs_ris", sc.geometry.d_bs_ris);
      r.read(g, gp, "d_ris_ue", sc.geometry.d_ris_ue);
      r.read(g, gp, "eta_bs_ue", sc.geometry.eta_bs_ue);
      r.read(g, gp, "eta_bs_ris", sc.geometry.eta_bs_ris);
      r.read(g, gp, "eta_ris_ue", sc.geometry.eta_ris_ue);
      r.read(g, gp, "l0_db", sc.geometry.l0_db);
      r.read(g, gp, "d0", sc.geometry.d0);
    }
  }

  if (root.contains("run")) {
    const auto& u = r.object(root, {"run"}, {"jobs", "dataset", "checkpoints", "sweeps", "train_missing"});
    const std::vector<std::string> p{"run"};
    r.read(u, p, "jobs", c.run.jobs);
    r.read(u, p, "dataset", c.run.dataset);
    r.read(u, p, "checkpoints", c.run.checkpoints);
    r.read_list(u, p, "sweeps", c.run.sweeps);
    r.read(u, p, "train_missing", c.run.train_missing);
  }
  return c;
}

}  // namespace

AppConfig parse_config(std::string_view text, std::string_view source) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // e.byte is 1-based and points just past the offending character
    const std::size_t byte = e.byte == 0 ? 0 : e.byte - 1;
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    if (const auto at = what.find("syntax error"); at != std::string::npos) what = what.substr(at);
    throw ConfigError(fmt::format("{}:{}:{}: invalid JSON: {}", source, line, col, what));
  }

  Reader reader(text, source);
  AppConfig c;
  if (root.is_object() && root.contains("format") && root["format"] == "risnet-manifest") {
    if (!root.contains("config")) reader.fail({"config"}, "manifest has no config object");
    c = from_json(root.at("config"), reader);
  } else {
    c = from_json(root, reader);
  }
  try {
    c.finalize();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", source, e.what()));
  }
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string());
}

std::string to_json_text(const AppConfig& c) {
  json model = {{"variant", predict::variant_name(c.model.variant)}};
  if (c.model.dnn_hidden) model["dnn_hidden"] = *c.model.dnn_hidden;
  if (c.model.lstm_hidden) model["lstm_hidden"] = *c.model.lstm_hidden;
  if (c.model.lstm_fc) model["lstm_fc"] = *c.model.lstm_fc;
  if (c.model.d_model) model["d_model"] = *c.model.d_model;
  if (c.model.heads) model["heads"] = *c.model.heads;
  if (c.model.ff_width) model["ff_width"] = *c.model.ff_width;
  if (c.model.ff_kernel) model["ff_kernel"] = *c.model.ff_kernel;
  if (c.model.encoder_layers) model["encoder_layers"] = *c.model.encoder_layers;

  const auto& sc = c.scenario;
  std::vector<std::string> schemes;
  for (auto s : sc.schemes) schemes.emplace_back(experiments::scheme_id_name(s));
  const auto& g = sc.geometry;

  const json j = {
      {"dataset",
       {{"elements", c.dataset.elements},
        {"length", c.dataset.length},
        {"window", c.dataset.window},
        {"normalized_doppler", c.dataset.normalized_doppler},
        {"filter_length", c.dataset.filter_length},
        {"seed", c.dataset.seed}}},
      {"model", model},
      {"train",
       {{"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"seed", c.train.seed},
        {"learning_rate", c.train.adam.learning_rate},
        {"beta1", c.train.adam.beta1},
        {"beta2", c.train.adam.beta2},
        {"epsilon", c.train.adam.epsilon}}},
      {"scenario",
       {{"elements", sc.elements},
        {"powers_dbm", sc.powers_dbm},
        {"power_sweep_elements", sc.power_sweep_elements},
        {"element_sweep_power_dbm", sc.element_sweep_power_dbm},
        {"geometry",
         {{"d_bs_ue", g.d_bs_ue},
          {"d_bs_ris", g.d_bs_ris},
          {"d_ris_ue", g.d_ris_ue},
          {"eta_bs_ue", g.eta_bs_ue},
          {"eta_bs_ris", g.eta_bs_ris},
          {"eta_ris_ue", g.eta_ris_ue},
          {"l0_db", g.l0_db},
          {"d0", g.d0}}},
        {"noise_power_dbw", sc.noise_power_dbw},
        {"gamma_th", sc.gamma_th},
        {"iterations", sc.iterations},
        {"segment_length", sc.segment_length},
        {"seeds", sc.seeds},
        {"schemes", schemes},
        {"confidence", sc.confidence}}},
      {"run",
       {{"jobs", c.run.jobs},
        {"dataset", c.run.dataset},
        {"checkpoints", c.run.checkpoints},
        {"sweeps", c.run.sweeps},
        {"train_missing", c.run.train_missing}}},
  };
  return j.dump(2);
}

}  // namespace risnet::config
