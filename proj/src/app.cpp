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

#include "risnet/app.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <memory>
#include <optional>

#include "risnet/config.hpp"
#include "risnet/dataset_io.hpp"
#include "risnet/error.hpp"
#include "risnet/experiments.hpp"
#include "risnet/plot.hpp"

namespace risnet::app {

namespace fs = std::filesystem;
using nlohmann::json;

std::string checkpoint_name(predict::Variant variant, std::size_t elements, std::uint64_t seed) {
  return fmt::format("{}_n{}_s{}.ckpt", predict::variant_name(variant), elements, seed);
}

namespace {

struct Options {
  std::string command;
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> variant;
  std::optional<std::size_t> n;
  std::optional<unsigned> jobs;
  // subcommand specific
  std::optional<std::string> dataset;
  std::optional<std::string> checkpoints;
  std::optional<std::string> kind;
  std::optional<std::size_t> iterations;
  bool train_missing = false;
  std::optional<std::string> in;
};

config::AppConfig resolve_config(const Options& o) {
  config::AppConfig c = o.config ? config::load_config(*o.config) : config::AppConfig{};
  if (o.seed) {
    c.dataset.seed = *o.seed;
    c.train.seed = *o.seed;
    c.scenario.seeds = {*o.seed};
  }
  if (o.n) c.dataset.elements = *o.n;
  if (o.variant) {
    try {
      c.model.variant = predict::parse_variant(*o.variant);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("--variant: ") + e.what());
    }
  }
  if (o.jobs) c.run.jobs = *o.jobs;
  if (o.dataset) c.run.dataset = *o.dataset;
  if (o.checkpoints) c.run.checkpoints = *o.checkpoints;
  if (o.kind) {
    if (*o.kind == "both") {
      c.run.sweeps = {"power", "element"};
    } else {
      c.run.sweeps = {*o.kind};
    }
  }
  if (o.iterations) c.scenario.iterations = *o.iterations;
  if (o.train_missing) c.run.train_missing = true;
  c.finalize();
  return c;
}

fs::path output_dir(const Options& o) {
  if (o.out) return *o.out;
  const char* root = std::getenv(kOutputRootEnv);
  return fs::path(root != nullptr && *root != '\0' ? root : "risnet-out") / o.command;
}

void write_atomically(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out) throw Error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_manifest(const fs::path& dir, const std::string& command, const config::AppConfig& c,
                    const std::vector<std::string>& artifacts) {
  const json manifest = {
      {"format", "risnet-manifest"},
      {"version", kManifestVersion},
      {"subcommand", command},
      {"config", json::parse(config::to_json_text(c))},
      {"seeds",
       {{"dataset", c.dataset.seed}, {"train", c.train.seed}, {"scenario", c.scenario.seeds}}},
      {"artifacts", artifacts},
  };
  write_atomically(dir / "manifest.json", manifest.dump(2) + "\n");
}

Matrix generate_features(const config::AppConfig& c, std::size_t elements, std::uint64_t seed) {
  const auto filter = channel::build_correlation_filter(c.dataset.normalized_doppler, c.dataset.filter_length);
  const auto series = channel::generate_channel_series(c.scenario.geometry, elements, c.dataset.length, filter, seed);
  return channel::to_feature_matrix(series);
}

fs::path dataset_csv(const fs::path& where) {
  return fs::is_directory(where) ? where / "dataset.csv" : where;
}

// --- generate ----------------------------------------------------------------

int cmd_generate(const Options& o) {
  const auto c = resolve_config(o);
  const fs::path dir = output_dir(o);
  fs::create_directories(dir);
  write_manifest(dir, o.command, c, {"dataset.csv", "dataset.json"});

  const Matrix features = generate_features(c, c.dataset.elements, c.dataset.seed);
  const auto prepared = channel::prepare_dataset(features, c.dataset.window);

  channel::write_feature_csv(dir / "dataset.csv", features);
  channel::DatasetMeta meta;
  meta.seed = c.dataset.seed;
  meta.elements = c.dataset.elements;
  meta.length = c.dataset.length;
  meta.window = c.dataset.window;
  meta.normalized_doppler = c.dataset.normalized_doppler;
  meta.filter_length = c.dataset.filter_length;
  meta.geometry = c.scenario.geometry;
  meta.stats = prepared.stats;
  channel::write_dataset_meta(dir / "dataset.json", meta);

  fmt::print("wrote {} rows x {} features to {}\n", features.rows(), features.cols(), (dir / "dataset.csv").string());
  return kExitOk;
}

// --- train -------------------------------------------------------------------

int cmd_train(const Options& o) {
  const auto c = resolve_config(o);
  const auto model_cfg = c.model_config();
  const fs::path dir = output_dir(o);
  fs::create_directories(dir);
  const std::string ckpt = checkpoint_name(model_cfg.variant, model_cfg.elements, c.train.seed);
  write_manifest(dir, o.command, c, {ckpt, "history.csv", "summary.csv"});

  const Matrix features = c.run.dataset.empty() ? generate_features(c, c.dataset.elements, c.dataset.seed)
                                                : channel::read_feature_csv(dataset_csv(c.run.dataset));
  if (static_cast<std::size_t>(features.cols()) != model_cfg.features()) {
    throw DimensionError(fmt::format("dataset has {} feature columns (N = {}) but the model expects {} (N = {})",
                                     features.cols(), features.cols() / 4, model_cfg.features(), model_cfg.elements));
  }
  const auto prepared = channel::prepare_dataset(features, model_cfg.window);

  fmt::print(stderr, "training {} (N = {}, {} parameters) for {} epochs\n", predict::variant_name(model_cfg.variant),
             model_cfg.elements, predict::analytic_param_count(model_cfg), c.train.epochs);
  const auto trained = predict::fit(model_cfg, prepared.dataset, prepared.stats, c.train,
                                    [&](int epoch, double tr, double va) {
                                      if (epoch % 10 == 0 || epoch == 1 || epoch == c.train.epochs) {
                                        fmt::print(stderr, "  epoch {:>4}  train {:.5f}  validation {:.5f}\n", epoch,
                                                   tr, va);
                                      }
                                    });
  predict::save(trained, dir / ckpt);

  {
    std::ofstream out(dir / "history.csv", std::ios::binary | std::ios::trunc);
    out << "epoch,train_rmse,validation_rmse\n";
    for (std::size_t e = 0; e < trained.train_history.size(); ++e) {
      out << fmt::format("{},{:.17g},{:.17g}\n", e + 1, trained.train_history[e], trained.validation_history[e]);
    }
    if (!out) throw Error("failed writing history.csv");
  }
  const double train_rmse = predict::evaluate_rmse(trained.model, prepared.dataset, prepared.dataset.train());
  const double test_rmse = predict::evaluate_rmse(trained.model, prepared.dataset, prepared.dataset.validation());
  const std::size_t params = predict::param_count(trained.model);
  {
    std::ofstream out(dir / "summary.csv", std::ios::binary | std::ios::trunc);
    out << "variant,N,seed,train_rmse,test_rmse,params\n";
    out << fmt::format("{},{},{},{:.17g},{:.17g},{}\n", predict::variant_name(model_cfg.variant), model_cfg.elements,
                       c.train.seed, train_rmse, test_rmse, params);
    if (!out) throw Error("failed writing summary.csv");
  }
  fmt::print("{:<12} {:>3} {:>12} {:>12} {:>8}\n", "variant", "N", "train RMSE", "test RMSE", "P");
  fmt::print("{:<12} {:>3} {:>12.5f} {:>12.5f} {:>8}\n", predict::variant_name(model_cfg.variant), model_cfg.elements,
             train_rmse, test_rmse, params);
  return kExitOk;
}

// --- sweep -------------------------------------------------------------------

class CheckpointStore {
 public:
  CheckpointStore(const config::AppConfig& c, fs::path search, fs::path out)
      : config_(c), search_(std::move(search)), out_(std::move(out)) {}

  const predict::TrainedModel* get(predict::Variant v, std::size_t n, std::uint64_t seed) {
    const std::string name = checkpoint_name(v, n, seed);
    if (auto it = cache_.find(name); it != cache_.end()) return it->second.get();
    for (const auto& dir : {search_, out_}) {
      if (fs::exists(dir / name)) {
        auto m = std::make_unique<predict::TrainedModel>(predict::load(dir / name));
        return cache_.emplace(name, std::move(m)).first->second.get();
      }
    }
    if (!config_.run.train_missing) {
      throw CheckpointError(fmt::format("missing checkpoint for ({}, N = {}, seed {}): expected {}",
                                        predict::variant_name(v), n, seed, (search_ / name).string()));
    }
    const auto cfg = config_.model_config(v, n);
    auto train_cfg = config_.train;
    train_cfg.seed = seed;
    fmt::print(stderr, "training {} for N = {} (seed {})\n", predict::variant_name(v), n, seed);
    const auto prepared = channel::prepare_dataset(generate_features(config_, n, seed), cfg.window);
    auto m = std::make_unique<predict::TrainedModel>(predict::fit(cfg, prepared.dataset, prepared.stats, train_cfg));
    predict::save(*m, out_ / name);
    return cache_.emplace(name, std::move(m)).first->second.get();
  }

 private:
  const config::AppConfig& config_;
  fs::path search_;
  fs::path out_;
  std::map<std::string, std::unique_ptr<predict::TrainedModel>> cache_;
};

void print_report(const std::vector<experiments::ReportRow>& rows) {
  fmt::print("{:<12} {:>3} {:>9} {:>10} {:>21} {:>8}\n", "scheme", "N", "P (dBm)", "outage", "95% CI", "rate");
  for (const auto& r : rows) {
    fmt::print("{:<12} {:>3} {:>9.2f} {:>10.5f}   [{:.5f}, {:.5f}] {:>8.4f}\n", experiments::scheme_id_name(r.scheme),
               r.elements, r.power_dbm, r.outage, r.ci.lo, r.ci.hi, r.rate);
  }
}

int cmd_sweep(const Options& o) {
  const auto c = resolve_config(o);
  const fs::path dir = output_dir(o);
  fs::create_directories(dir);
  const bool power = std::find(c.run.sweeps.begin(), c.run.sweeps.end(), "power") != c.run.sweeps.end();
  const bool element = std::find(c.run.sweeps.begin(), c.run.sweeps.end(), "element") != c.run.sweeps.end();
  std::vector<std::string> artifacts;
  if (power) artifacts.insert(artifacts.end(), {"power_sweep.csv", "outage_vs_power.svg", "rate_vs_power.svg"});
  if (element) artifacts.insert(artifacts.end(), {"element_sweep.csv", "outage_vs_n.svg", "rate_vs_n.svg"});
  write_manifest(dir, o.command, c, artifacts);

  CheckpointStore store(c, c.run.checkpoints.empty() ? dir : fs::path(c.run.checkpoints), dir);
  const experiments::ModelProvider provider = [&](predict::Variant v, std::size_t n, std::uint64_t seed) {
    return store.get(v, n, seed);
  };

  auto finish = [&](const experiments::SweepResult& result, const std::string& csv, bool by_n) {
    const auto rows = experiments::aggregate(result, c.scenario.confidence, c.scenario.gamma_th);
    experiments::write_report_csv(dir / csv, rows);
    plot::render_sweep(rows, by_n, dir);
    print_report(rows);
  };
  if (power) finish(experiments::run_power_sweep(c.scenario, provider, c.run.jobs), "power_sweep.csv", false);
  if (element) finish(experiments::run_element_sweep(c.scenario, provider, c.run.jobs), "element_sweep.csv", true);
  return kExitOk;
}

// --- report ------------------------------------------------------------------

int cmd_report(const Options& o) {
  Options sweep_defaults;
  sweep_defaults.command = "sweep";
  sweep_defaults.out = o.out;
  const fs::path in = o.in ? fs::path(*o.in) : output_dir(sweep_defaults);
  const fs::path dir = o.out ? fs::path(*o.out) : in;
  fs::create_directories(dir);
  bool any = false;
  for (const auto& [csv, by_n] : {std::pair{"power_sweep.csv", false}, std::pair{"element_sweep.csv", true}}) {
    if (!fs::exists(in / csv)) continue;
    any = true;
    const auto rows = experiments::read_report_csv(in / csv);
    fmt::print("{}\n", (in / csv).string());
    print_report(rows);
    for (const auto& p : plot::render_sweep(rows, by_n, dir)) fmt::print("  plot: {}\n", p.string());
  }
  if (!any) throw Error("no sweep CSVs found in " + in.string());
  return kExitOk;
}

void add_common(CLI::App& sub, Options& o) {
  sub.add_option("--config", o.config, "JSON config file or a run manifest");
  sub.add_option("--seed", o.seed, "Seed for data, training and Monte Carlo runs");
  sub.add_option("--out", o.out, "Output directory (default $RISNET_OUT/<subcommand>)");
  sub.add_option("--variant", o.variant, "Model variant")->check(CLI::IsMember({"dnn", "lstm", "transformer"}));
  sub.add_option("--n", o.n, "Number of RIS elements")->check(CLI::PositiveNumber);
  sub.add_option("--jobs", o.jobs, "Worker threads for Monte Carlo sweeps")->check(CLI::PositiveNumber);
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App cli{"RIS-assisted link simulator and CSI forecasting toolkit", "risnet"};
  cli.require_subcommand(1);
  Options o;

  auto* gen = cli.add_subcommand("generate", "Generate a time-correlated channel dataset");
  add_common(*gen, o);

  auto* tr = cli.add_subcommand("train", "Train one forecaster and write a checkpoint");
  add_common(*tr, o);
  tr->add_option("--dataset", o.dataset, "Dataset directory or CSV (default: generate from the config)");

  auto* sw = cli.add_subcommand("sweep", "Monte Carlo outage/rate sweeps over power and element count");
  add_common(*sw, o);
  sw->add_option("--checkpoints", o.checkpoints, "Directory holding <variant>_n<N>_s<seed>.ckpt files");
  sw->add_option("--kind", o.kind, "Which sweep to run")->check(CLI::IsMember({"power", "element", "both"}));
  sw->add_option("--iterations", o.iterations, "Monte Carlo segments per point")->check(CLI::PositiveNumber);
  sw->add_flag("--train-missing", o.train_missing, "Train and save any checkpoint that is not found");

  auto* rep = cli.add_subcommand("report", "Print sweep tables and re-render plots from CSVs");
  add_common(*rep, o);
  rep->add_option("--in", o.in, "Directory holding power_sweep.csv / element_sweep.csv");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    cli.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return kExitConfig;
  }

  try {
    if (gen->parsed()) {
      o.command = "generate";
      return cmd_generate(o);
    }
    if (tr->parsed()) {
      o.command = "train";
      return cmd_train(o);
    }
    if (sw->parsed()) {
      o.command = "sweep";
      return cmd_sweep(o);
    }
    o.command = "report";
    return cmd_report(o);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitRuntime;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace risnet::app
