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

#include "risnet/dataset_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "risnet/error.hpp"

namespace risnet::channel {

using nlohmann::json;

std::vector<std::string> feature_names(std::size_t elements) {
  std::vector<std::string> names;
  names.reserve(4 * elements);
  for (const char* prefix : {"h_re_", "h_im_", "g_re_", "g_im_"}) {
    for (std::size_t i = 1; i <= elements; ++i) names.push_back(prefix + std::to_string(i));
  }
  return names;
}

void write_feature_csv(const std::filesystem::path& path, const Matrix& features) {
  if (features.cols() % 4 != 0) throw DimensionError("feature matrix needs a multiple of 4 columns");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  const auto names = feature_names(static_cast<std::size_t>(features.cols()) / 4);
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
  out << '\n';
  std::string line;
  for (Eigen::Index t = 0; t < features.rows(); ++t) {
    line.clear();
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
      if (j) line += ',';
      line += fmt::format("{:.17g}", features(t, j));
    }
    line += '\n';
    out << line;
  }
  if (!out) throw Error("failed writing " + path.string());
}

Matrix read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument(path.string() + ": empty dataset file");

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.empty() || header.size() % 4 != 0 || header != feature_names(header.size() / 4)) {
    throw InvalidArgument(path.string() + ": unexpected header (expected h_re_1.., h_im_1.., g_re_1.., g_im_1..)");
  }
  const std::size_t cols = header.size();

  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    std::size_t count = 0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p <= end) {
      const char* comma = std::find(p, end, ',');
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(p, comma, v);
      if (ec != std::errc{} || ptr != comma) {
        throw InvalidArgument(fmt::format("{}:{}: malformed number in column {}", path.string(), rows + 1, count + 1));
      }
      values.push_back(v);
      ++count;
      p = comma + 1;
    }
    if (count != cols) {
      throw InvalidArgument(fmt::format("{}:{}: expected {} values, found {}", path.string(), rows + 1, cols, count));
    }
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

void write_dataset_meta(const std::filesystem::path& path, const DatasetMeta& meta) {
  const auto& g = meta.geometry;
  json j = {
      {"format", "risnet-dataset"},
      {"format_version", 1},
      {"seed", meta.seed},
      {"elements", meta.elements},
      {"length", meta.length},
      {"window", meta.window},
      {"feature_order", "h_re, h_im, g_re, g_im"},
      {"filter", {{"kind", "clarke-j0-hamming"}, {"normalized_doppler", meta.normalized_doppler}, {"length", meta.filter_length}}},
      {"geometry",
       {{"d_bs_ue", g.d_bs_ue}, {"d_bs_ris", g.d_bs_ris}, {"d_ris_ue", g.d_ris_ue},
        {"eta_bs_ue", g.eta_bs_ue}, {"eta_bs_ris", g.eta_bs_ris}, {"eta_ris_ue", g.eta_ris_ue},
        {"l0_db", g.l0_db}, {"d0", g.d0}}},
      {"norm_stats", {{"mean", meta.stats.mean}, {"std", meta.stats.std}}},
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

DatasetMeta read_dataset_meta(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset metadata " + path.string());
  try {
    const json j = json::parse(in);
    if (j.at("format") != "risnet-dataset" || j.at("format_version") != 1) {
      throw InvalidArgument(path.string() + ": not a version-1 dataset metadata file");
    }
    DatasetMeta meta;
    meta.seed = j.at("seed").get<std::uint64_t>();
    meta.elements = j.at("elements").get<std::size_t>();
    meta.length = j.at("length").get<std::size_t>();
    meta.window = j.at("window").get<std::size_t>();
    meta.normalized_doppler = j.at("filter").at("normalized_doppler").get<double>();
    meta.filter_length = j.at("filter").at("length").get<std::size_t>();
    const auto& g = j.at("geometry");
    meta.geometry = {g.at("d_bs_ue").get<double>(),   g.at("d_bs_ris").get<double>(),
                     g.at("d_ris_ue").get<double>(),  g.at("eta_bs_ue").get<double>(),
                     g.at("eta_bs_ris").get<double>(), g.at("eta_ris_ue").get<double>(),
                     g.at("l0_db").get<double>(),     g.at("d0").get<double>()};
    meta.stats.mean = j.at("norm_stats").at("mean").get<std::vector<double>>();
    meta.stats.std = j.at("norm_stats").at("std").get<std::vector<double>>();
    return meta;
  } catch (const json::exception& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

}  // namespace risnet::channel
