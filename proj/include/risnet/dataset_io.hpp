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
#include <string>
#include <vector>

#include "risnet/channel_sim.hpp"

namespace risnet::channel {

/// Everything needed to regenerate a dataset file bit for bit.
struct DatasetMeta {
  std::uint64_t seed = 0;
  std::size_t elements = 0;
  std::size_t length = 0;
  std::size_t window = 10;
  double normalized_doppler = 0.0;
  std::size_t filter_length = 0;
  LinkGeometry geometry;
  NormStats stats;
};

/// Header names in feature order: h_re_1.., h_im_1.., g_re_1.., g_im_1..
std::vector<std::string> feature_names(std::size_t elements);

/// Raw (physical-unit) feature matrix as CSV, one time step per row, doubles
/// printed with round-trip precision.
void write_feature_csv(const std::filesystem::path& path, const Matrix& features);
Matrix read_feature_csv(const std::filesystem::path& path);

void write_dataset_meta(const std::filesystem::path& path, const DatasetMeta& meta);
DatasetMeta read_dataset_meta(const std::filesystem::path& path);

}  // namespace risnet::channel
