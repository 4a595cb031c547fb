// Copyright 2026 The QuadMech Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// SVG curves of metric against ε (log axis) from result CSVs, plus a plain
// text summary table. Output bytes depend only on the input rows.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "quadmech/error.hpp"
#include "quadmech/experiment.hpp"

namespace quadmech {

namespace detail {

inline std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                           "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

}  // namespace detail

struct Series {
  std::string label;
  std::vector<const ResultRow*> points;  // sorted by ε
};

inline std::string series_label(const ResultRow& r) {
  if (r.method == "expm_quad") {
    std::string s = "ExpM-Quad R=" + format_number(r.radius);
    s += r.p_tilde == 0 ? " full" : " p~=" + std::to_string(r.p_tilde);
    return s;
  }
  if (r.method == "dpsgd") return "DP-SGD";
  return r.method;
}

// Checks the rows share one metric; returns it.
inline std::string common_metric(const std::vector<ResultRow>& rows) {
  require(!rows.empty(), ErrorCode::SchemaMismatch, "no result rows");
  for (const auto& r : rows)
    require(r.metric == rows.front().metric, ErrorCode::SchemaMismatch,
            "mixed metrics '" + rows.front().metric + "' and '" + r.metric + "'");
  return rows.front().metric;
}

inline std::string render_svg(const std::vector<ResultRow>& rows, const std::string& title) {
  const std::string metric = common_metric(rows);
  std::vector<Series> series;
  std::vector<const ResultRow*> references;
  {
    std::map<std::tuple<int, double, std::size_t, std::string>, std::size_t> index;
    for (const auto& r : rows) {
      if (std::isinf(r.epsilon)) {
        references.push_back(&r);
        continue;
      }
      const int order = r.method == "expm_quad" ? 0 : 1;
      const auto key = std::make_tuple(order, r.radius, r.p_tilde, r.method);
      auto it = index.find(key);
      if (it == index.end()) {
        it = index.emplace(key, series.size()).first;
        series.push_back({series_label(r), {}});
      }
      series[it->second].points.push_back(&r);
    }
    // Series in key order, not first-appearance order.
    std::vector<Series> ordered;
    for (const auto& [key, idx] : index) ordered.push_back(std::move(series[idx]));
    series = std::move(ordered);
    for (auto& s : series)
      std::stable_sort(s.points.begin(), s.points.end(),
                       [](const ResultRow* a, const ResultRow* b) { return a->epsilon < b->epsilon; });
  }

  double x_lo = 0.1, x_hi = 100.0;
  double y_lo = std::numeric_limits<double>::infinity();
  double y_hi = -y_lo;
  std::set<double> eps_values;
  for (const auto& s : series)
    for (const ResultRow* p : s.points) {
      eps_values.insert(p->epsilon);
      y_lo = std::min(y_lo, p->mean - p->std);
      y_hi = std::max(y_hi, p->mean + p->std);
    }
  for (const ResultRow* r : references) {
    y_lo = std::min(y_lo, r->mean);
    y_hi = std::max(y_hi, r->mean);
  }
  if (!eps_values.empty()) {
    x_lo = *eps_values.begin() / 2.0;
    x_hi = *eps_values.rbegin() * 2.0;
  }
  if (!(y_hi > y_lo)) {
    const double pad = std::max(std::abs(y_lo) * 0.01, 0.5e-3);
    y_lo -= pad;
    y_hi += pad;
  }
  {
    const double pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;
  }

  constexpr double kW = 720, kH = 480, kLeft = 80, kRight = 220, kTop = 40, kBottom = 60;
  const double plot_w = kW - kLeft - kRight;
  const double plot_h = kH - kTop - kBottom;
  auto px = [&](double eps) {
    return kLeft + plot_w * (std::log10(eps) - std::log10(x_lo)) /
                       (std::log10(x_hi) - std::log10(x_lo));
  };
  auto py = [&](double v) { return kTop + plot_h * (1.0 - (v - y_lo) / (y_hi - y_lo)); };
  auto f2 = [](double v) { return detail::fmt("%.2f", v); };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + f2(kW) +
         "\" height=\"" + f2(kH) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + f2(kLeft) + "\" y=\"24\" font-size=\"14\">" + detail::xml_escape(title) +
         "</text>\n";
  // Axes.
  svg += "<rect x=\"" + f2(kLeft) + "\" y=\"" + f2(kTop) + "\" width=\"" + f2(plot_w) +
         "\" height=\"" + f2(plot_h) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double e : eps_values) {
    svg += "<line x1=\"" + f2(px(e)) + "\" y1=\"" + f2(kTop + plot_h) + "\" x2=\"" + f2(px(e)) +
           "\" y2=\"" + f2(kTop + plot_h + 5) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + f2(px(e)) + "\" y=\"" + f2(kTop + plot_h + 18) +
           "\" text-anchor=\"middle\">" + format_number(e) + "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double v = y_lo + (y_hi - y_lo) * k / 4.0;
    svg += "<line x1=\"" + f2(kLeft - 5) + "\" y1=\"" + f2(py(v)) + "\" x2=\"" + f2(kLeft) +
           "\" y2=\"" + f2(py(v)) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + f2(kLeft - 8) + "\" y=\"" + f2(py(v) + 4) +
           "\" text-anchor=\"end\">" + detail::fmt("%.4g", v) + "</text>\n";
  }
  svg += "<text x=\"" + f2(kLeft + plot_w / 2) + "\" y=\"" + f2(kH - 15) +
         "\" text-anchor=\"middle\">epsilon (log scale)</text>\n";
  svg += "<text x=\"20\" y=\"" + f2(kTop + plot_h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " +
         f2(kTop + plot_h / 2) + ")\">" + detail::xml_escape(metric) + "</text>\n";

  double legend_y = kTop + 10;
  auto legend = [&](const std::string& color, const std::string& label, bool dashed) {
    const double lx = kLeft + plot_w + 15;
    svg += "<line x1=\"" + f2(lx) + "\" y1=\"" + f2(legend_y) + "\" x2=\"" + f2(lx + 25) +
           "\" y2=\"" + f2(legend_y) + "\" stroke=\"" + color + "\" stroke-width=\"2\"" +
           (dashed ? " stroke-dasharray=\"6 4\"" : "") + "/>\n";
    svg += "<text x=\"" + f2(lx + 32) + "\" y=\"" + f2(legend_y + 4) + "\">" +
           detail::xml_escape(label) + "</text>\n";
    legend_y += 18;
  };

  // Reference lines.
  for (std::size_t i = 0; i < references.size(); ++i) {
    const ResultRow& r = *references[i];
    const std::string color = r.method == "zero_shot" ? "#555555" : "#000000";
    svg += "<line x1=\"" + f2(kLeft) + "\" y1=\"" + f2(py(r.mean)) + "\" x2=\"" +
           f2(kLeft + plot_w) + "\" y2=\"" + f2(py(r.mean)) + "\" stroke=\"" + color +
           "\" stroke-dasharray=\"6 4\"/>\n";
    legend(color, r.method, true);
  }
  // Bands, then curves.
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::string color = detail::kPalette[i % std::size(detail::kPalette)];
    const auto& pts = series[i].points;
    std::string upper, lower;
    for (const ResultRow* p : pts) upper += f2(px(p->epsilon)) + "," + f2(py(p->mean + p->std)) + " ";
    for (auto it = pts.rbegin(); it != pts.rend(); ++it)
      lower += f2(px((*it)->epsilon)) + "," + f2(py((*it)->mean - (*it)->std)) + " ";
    svg += "<polygon points=\"" + upper + lower + "\" fill=\"" + color +
           "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::string color = detail::kPalette[i % std::size(detail::kPalette)];
    std::string line;
    for (const ResultRow* p : series[i].points)
      line += f2(px(p->epsilon)) + "," + f2(py(p->mean)) + " ";
    svg += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    for (const ResultRow* p : series[i].points)
      svg += "<circle cx=\"" + f2(px(p->epsilon)) + "\" cy=\"" + f2(py(p->mean)) +
             "\" r=\"3\" fill=\"" + color + "\"/>\n";
    legend(color, series[i].label, false);
  }
  svg += "</svg>\n";
  return svg;
}

inline std::string summary_table(const std::vector<ResultRow>& rows) {
  std::string s = "| method | epsilon | R | p_tilde | " + common_metric(rows) + " mean | std | n |\n";
  s += "|---|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    s += "| " + r.method + " | " + format_number(r.epsilon) + " | " + format_number(r.radius) +
         " | " + std::to_string(r.p_tilde) + " | " + detail::fmt("%.6g", r.mean) + " | " +
         detail::fmt("%.3g", r.std) + " | " + std::to_string(r.n_models) + " |\n";
  }
  return s;
}

// One SVG per CSV (named after the CSV stem) and summary.md with all tables.
inline std::vector<std::filesystem::path> cmd_report(
    const std::vector<std::filesystem::path>& csvs, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  std::string summary;
  for (const auto& csv : csvs) {
    const auto rows = read_results_csv(csv);
    const std::string stem = csv.stem().string();
    const auto svg_path = out_dir / (stem + ".svg");
    write_text(svg_path, render_svg(rows, stem));
    written.push_back(svg_path);
    summary += "## " + stem + "\n\n" + summary_table(rows) + "\n";
  }
  write_text(out_dir / "summary.md", summary);
  written.push_back(out_dir / "summary.md");
  return written;
}

}  // namespace quadmech
