#pragma once

// Standalone SVG of mean cumulative payoff vs. round, one polyline and one
// shaded +-1 std band per curve.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "linbet/errors.hpp"
#include "linbet/harness.hpp"

namespace linbet {

struct PlotOptions {
  std::string title = "Cumulative payoff";
  double width = 720.0;
  double height = 480.0;
  std::size_t max_points = 800;  ///< per series, after uniform thinning
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::vector<std::size_t> thin_indices(std::size_t n, std::size_t max_points) {
  std::vector<std::size_t> idx;
  if (n == 0) return idx;
  const std::size_t step = std::max<std::size_t>(1, (n + max_points - 1) / max_points);
  for (std::size_t i = 0; i < n; i += step) idx.push_back(i);
  if (idx.back() != n - 1) idx.push_back(n - 1);
  return idx;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

}  // namespace detail

inline std::string render_svg(const std::vector<AggregateCurve>& curves, const PlotOptions& opt = {}) {
  if (curves.empty()) throw InvalidInput("emit_plot: need at least one curve");
  static constexpr std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c",
                                                         "#9467bd", "#ff7f0e", "#8c564b"};
  const double left = 70, right = 20, top = 40, bottom = 50;
  const double pw = opt.width - left - right, ph = opt.height - top - bottom;

  double xmax = 1.0, ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  for (const auto& c : curves) {
    xmax = std::max(xmax, static_cast<double>(c.rounds()));
    for (std::size_t t = 0; t < c.rounds(); ++t) {
      ymin = std::min(ymin, c.mean_cum_payoff[t] - c.std_cum_payoff[t]);
      ymax = std::max(ymax, c.mean_cum_payoff[t] + c.std_cum_payoff[t]);
    }
  }
  if (!std::isfinite(ymin)) ymin = 0.0, ymax = 1.0;
  ymin = std::min(ymin, 0.0);
  if (ymax <= ymin) ymax = ymin + 1.0;
  const auto sx = [&](double t) { return left + pw * t / xmax; };
  const auto sy = [&](double y) { return top + ph * (1.0 - (y - ymin) / (ymax - ymin)); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
      << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text class=\"title\" x=\"" << opt.width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << detail::svg_escape(opt.title) << "</text>\n";
  // axes
  svg << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmax * i / 4.0, yv = ymin + (ymax - ymin) * i / 4.0;
    svg << "<text x=\"" << detail::fmt(sx(xv)) << "\" y=\"" << top + ph + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << detail::fmt(xv) << "</text>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << detail::fmt(sy(yv) + 4)
        << "\" text-anchor=\"end\" font-size=\"11\">" << detail::fmt(yv) << "</text>\n";
  }
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << opt.height - 10
      << "\" text-anchor=\"middle\" font-size=\"12\">round</text>\n";
  svg << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
      << top + ph / 2 << ")\">mean cumulative payoff</text>\n";

  for (std::size_t s = 0; s < curves.size(); ++s) {
    const auto& c = curves[s];
    const char* color = kColors[s % kColors.size()];
    const auto idx = detail::thin_indices(c.rounds(), opt.max_points);
    if (idx.empty()) continue;
    std::ostringstream band, line;
    for (std::size_t i : idx)
      band << detail::fmt(sx(static_cast<double>(i + 1))) << ','
           << detail::fmt(sy(c.mean_cum_payoff[i] + c.std_cum_payoff[i])) << ' ';
    for (auto it = idx.rbegin(); it != idx.rend(); ++it)
      band << detail::fmt(sx(static_cast<double>(*it + 1))) << ','
           << detail::fmt(sy(c.mean_cum_payoff[*it] - c.std_cum_payoff[*it])) << ' ';
    for (std::size_t i : idx)
      line << detail::fmt(sx(static_cast<double>(i + 1))) << ',' << detail::fmt(sy(c.mean_cum_payoff[i])) << ' ';
    svg << "<polygon class=\"band\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\""
        << band.str() << "\"/>\n";
    svg << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
        << line.str() << "\"/>\n";
  }

  for (std::size_t s = 0; s < curves.size(); ++s) {
    const double y = top + 14 + 18.0 * static_cast<double>(s);
    const char* color = kColors[s % kColors.size()];
    svg << "<g class=\"legend\"><rect x=\"" << left + 12 << "\" y=\"" << y - 9 << "\" width=\"14\" height=\"10\" fill=\""
        << color << "\"/><text x=\"" << left + 32 << "\" y=\"" << y << "\" font-size=\"12\">"
        << detail::svg_escape(curves[s].dataset + " " + curves[s].algo) << "</text></g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

inline void emit_plot(const std::vector<AggregateCurve>& curves, const std::filesystem::path& path,
                      const PlotOptions& opt = {}) {
  const std::string body = render_svg(curves, opt);
  auto out = detail::open_for_write(path);
  out << body;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace linbet
