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

#include <filesystem>
#include <string>
#include <vector>

#include "risnet/experiments.hpp"

namespace risnet::plot {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<Series> series;
};

/// Self-contained SVG line chart. Output depends only on the chart data.
std::string render_svg(const Chart& chart);

/// Outage and rate charts for one sweep CSV. `by_elements` selects N on the
/// x axis instead of transmit power. Returns the files written.
std::vector<std::filesystem::path> render_sweep(const std::vector<experiments::ReportRow>& rows, bool by_elements,
                                                const std::filesystem::path& dir);

}  // namespace risnet::plot
