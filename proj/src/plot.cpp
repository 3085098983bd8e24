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

#include "risnet/plot.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "risnet/error.hpp"

namespace risnet::plot {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 420;
constexpr double kLeft = 70;
constexpr double kRight = 150;
constexpr double kTop = 40;
constexpr double kBottom = 55;
constexpr double kLogFloor = 1e-5;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  double lo = 0;
  double hi = 1;
  bool log = false;

  double t(double v) const {
    if (log) {
      v = std::log10(std::max(v, kLogFloor));
      return (v - std::log10(lo)) / (std::log10(hi) - std::log10(lo));
    }
    return (v - lo) / (hi - lo);
  }
};

std::vector<double> linear_ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> ticks;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) ticks.push_back(v);
  return ticks;
}

}  // namespace

std::string render_svg(const Chart& chart) {
  double xlo = std::numeric_limits<double>::infinity();
  double xhi = -xlo;
  double ylo = xlo;
  double yhi = -xlo;
  for (const auto& s : chart.series) {
    for (double v : s.x) {
      xlo = std::min(xlo, v);
      xhi = std::max(xhi, v);
    }
    for (double v : s.y) {
      const double y = chart.log_y ? std::max(v, kLogFloor) : v;
      ylo = std::min(ylo, y);
      yhi = std::max(yhi, y);
    }
  }
  if (!std::isfinite(xlo)) {
    xlo = 0;
    xhi = 1;
  }
  if (!std::isfinite(ylo)) {
    ylo = chart.log_y ? kLogFloor : 0;
    yhi = 1;
  }
  if (xhi == xlo) xhi = xlo + 1;
  Axis xa{xlo, xhi, false};
  Axis ya;
  ya.log = chart.log_y;
  if (chart.log_y) {
    ya.lo = std::pow(10.0, std::floor(std::log10(ylo)));
    ya.hi = std::pow(10.0, std::ceil(std::log10(yhi)));
    if (ya.hi <= ya.lo) ya.hi = ya.lo * 10;
  } else {
    const double pad = yhi > ylo ? 0.05 * (yhi - ylo) : 0.5;
    ya.lo = ylo - pad;
    ya.hi = yhi + pad;
  }

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + xa.t(x) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - ya.t(y)) * ph; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{3}</text>\n",
      kWidth, kHeight, kLeft + pw / 2, escape(chart.title));

  // grid and ticks
  std::vector<double> yticks;
  if (chart.log_y) {
    for (double v = ya.lo; v <= ya.hi * 1.0001; v *= 10) yticks.push_back(v);
  } else {
    yticks = linear_ticks(ya.lo, ya.hi);
  }
  for (double v : yticks) {
    const double y = py(v);
    svg += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#ddd\"/>\n", kLeft, y,
                       kLeft + pw, y);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", kLeft - 6, y + 4,
                       chart.log_y ? fmt::format("1e{}", static_cast<int>(std::lround(std::log10(v))))
                                   : fmt::format("{:.3g}", v));
  }
  for (double v : linear_ticks(xa.lo, xa.hi)) {
    const double x = px(v);
    svg += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#ddd\"/>\n", x, kTop, x,
                       kTop + ph);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.3g}</text>\n", x, kTop + ph + 18, v);
  }
  svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", kLeft,
                     kTop, pw, ph);
  svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", kLeft + pw / 2,
                     kHeight - 12, escape(chart.x_label));
  svg += fmt::format(
      "<text x=\"16\" y=\"{:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2f})\">{}</text>\n",
      kTop + ph / 2, kTop + ph / 2, escape(chart.y_label));

  std::size_t k = 0;
  for (const auto& s : chart.series) {
    const char* color = kPalette[k % std::size(kPalette)];
    std::string points;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      points += fmt::format("{}{:.2f},{:.2f}", points.empty() ? "" : " ", px(s.x[i]), py(s.y[i]));
    }
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\" points=\"{}\"/>\n", color, points);
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"{}\"/>\n", px(s.x[i]), py(s.y[i]),
                         color);
    }
    const double ly = kTop + 14 + 18 * static_cast<double>(k);
    svg += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                       kLeft + pw + 12, ly, kLeft + pw + 34, ly, color);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", kLeft + pw + 40, ly + 4, escape(s.name));
    ++k;
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<std::filesystem::path> render_sweep(const std::vector<experiments::ReportRow>& rows, bool by_elements,
                                                const std::filesystem::path& dir) {
  if (rows.empty()) throw InsufficientData("render_sweep: no rows to plot");
  Chart outage{by_elements ? "Outage probability vs. RIS elements" : "Outage probability vs. transmit power",
               by_elements ? "N (RIS elements)" : "Transmit power (dBm)", "Outage probability", true, {}};
  Chart rate{by_elements ? "Average rate vs. RIS elements" : "Average rate vs. transmit power", outage.x_label,
             "Rate (bits/s/Hz)", false, {}};

  std::vector<experiments::SchemeId> order;
  for (const auto& r : rows) {
    if (std::find(order.begin(), order.end(), r.scheme) == order.end()) order.push_back(r.scheme);
  }
  for (auto id : order) {
    Series so{std::string(experiments::scheme_id_name(id)), {}, {}};
    Series sr = so;
    for (const auto& r : rows) {
      if (r.scheme != id) continue;
      const double x = by_elements ? static_cast<double>(r.elements) : r.power_dbm;
      so.x.push_back(x);
      so.y.push_back(r.outage);
      sr.x.push_back(x);
      sr.y.push_back(r.rate);
    }
    outage.series.push_back(std::move(so));
    rate.series.push_back(std::move(sr));
  }

  const std::string stem = by_elements ? "_vs_n.svg" : "_vs_power.svg";
  std::vector<std::filesystem::path> written;
  for (const auto& [name, chart] : {std::pair{"outage", &outage}, std::pair{"rate", &rate}}) {
    const auto path = dir / (std::string(name) + stem);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << render_svg(*chart);
    if (!out) throw Error("failed writing " + path.string());
    written.push_back(path);
  }
  return written;
}

}  // namespace risnet::plot
