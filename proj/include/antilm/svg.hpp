#pragma once

// minimal static SVG plotting: line charts (one polyline per series) and
// labeled scatter plots. coordinates are printed with fixed precision so
// regenerated files are byte-stable.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "antilm/util.hpp"

namespace antilm {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

struct PlotPoint {
  std::string label;
  double x = 0.0;
  double y = 0.0;
};

namespace plotdetail {

inline constexpr int kWidth = 720, kHeight = 480;
inline constexpr int kLeft = 70, kRight = 24, kTop = 40, kBottom = 52;
inline const char* kPalette[8] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

struct Range {
  double lo = 0.0, hi = 1.0;
  bool log_scale = false;
  double map(double v, double pix_lo, double pix_hi) const {
    double t = log_scale ? (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo))
                         : (v - lo) / (hi - lo);
    return pix_lo + t * (pix_hi - pix_lo);
  }
};

inline Range nice_range(double lo, double hi, bool want_log) {
  Range r;
  r.log_scale = want_log && lo > 0.0;
  if (lo > hi) std::swap(lo, hi);
  if (r.log_scale) {
    r.lo = std::pow(10.0, std::floor(std::log10(lo)));
    r.hi = std::pow(10.0, std::ceil(std::log10(hi)));
    if (r.lo == r.hi) r.hi *= 10.0;
  } else {
    double pad = (hi - lo) * 0.05;
    if (pad == 0.0) pad = (hi == 0.0 ? 1.0 : std::abs(hi) * 0.1);
    r.lo = lo - pad;
    r.hi = hi + pad;
  }
  return r;
}

inline std::string tick_label(double v) {
  if (std::abs(v) >= 1e5 || (std::abs(v) < 1e-3 && v != 0.0)) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.1e", v);
    return buf;
  }
  return format_compact(std::round(v * 1000.0) / 1000.0);
}

inline void draw_frame(std::ostringstream& svg, const std::string& title, const std::string& xlabel,
                       const std::string& ylabel, const Range& xr, const Range& yr) {
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\""
      << " font-size=\"16\">" << title << "</text>\n";
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  svg << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
      << "\" stroke=\"black\"/>\n";

  const int nticks = 5;
  for (int i = 0; i <= nticks; ++i) {
    double fx = xr.log_scale
                    ? std::pow(10.0, std::log10(xr.lo) + (std::log10(xr.hi) - std::log10(xr.lo)) * i / nticks)
                    : xr.lo + (xr.hi - xr.lo) * i / nticks;
    double px = xr.map(fx, x0, x1);
    svg << "<line x1=\"" << format_double(px, 2) << "\" y1=\"" << y0 << "\" x2=\""
        << format_double(px, 2) << "\" y2=\"" << y0 + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << format_double(px, 2) << "\" y=\"" << y0 + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << tick_label(fx)
        << "</text>\n";
    double fy = yr.log_scale
                    ? std::pow(10.0, std::log10(yr.lo) + (std::log10(yr.hi) - std::log10(yr.lo)) * i / nticks)
                    : yr.lo + (yr.hi - yr.lo) * i / nticks;
    double py = yr.map(fy, y0, y1);
    svg << "<line x1=\"" << x0 - 5 << "\" y1=\"" << format_double(py, 2) << "\" x2=\"" << x0
        << "\" y2=\"" << format_double(py, 2) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << x0 - 8 << "\" y=\"" << format_double(py + 4, 2)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << tick_label(fy)
        << "</text>\n";
  }
  svg << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xlabel
      << "</text>\n";
  svg << "<text x=\"18\" y=\"" << (y0 + y1) / 2 << "\" text-anchor=\"middle\""
      << " font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 " << (y0 + y1) / 2
      << ")\">" << ylabel << "</text>\n";
}

}  // namespace plotdetail

inline std::string line_chart_svg(const std::string& title, const std::string& xlabel,
                                  const std::string& ylabel,
                                  const std::vector<PlotSeries>& series, bool log_y = false) {
  using namespace plotdetail;
  double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  bool first = true;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      if (first) {
        xlo = xhi = x;
        ylo = yhi = y;
        first = false;
      }
      xlo = std::min(xlo, x); xhi = std::max(xhi, x);
      ylo = std::min(ylo, y); yhi = std::max(yhi, y);
    }
  Range xr = nice_range(xlo, xhi, false);
  Range yr = nice_range(ylo, yhi, log_y);

  std::ostringstream svg;
  draw_frame(svg, title, xlabel, ylabel + (yr.log_scale ? " (log scale)" : ""), xr, yr);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % 8];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (auto [x, y] : series[si].points)
      svg << format_double(xr.map(x, x0, x1), 2) << "," << format_double(yr.map(y, y0, y1), 2) << " ";
    svg << "\"/>\n";
    double ly = kTop + 16.0 * static_cast<double>(si) + 4.0;
    svg << "<rect x=\"" << x1 - 140 << "\" y=\"" << format_double(ly - 9, 2)
        << "\" width=\"18\" height=\"4\" fill=\"" << color << "\"/>\n";
    svg << "<text x=\"" << x1 - 116 << "\" y=\"" << format_double(ly, 2)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[si].label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

inline std::string scatter_svg(const std::string& title, const std::string& xlabel,
                               const std::string& ylabel, const std::vector<PlotPoint>& points,
                               bool log_y = false) {
  using namespace plotdetail;
  double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  bool first = true;
  for (const auto& p : points) {
    if (first) {
      xlo = xhi = p.x;
      ylo = yhi = p.y;
      first = false;
    }
    xlo = std::min(xlo, p.x); xhi = std::max(xhi, p.x);
    ylo = std::min(ylo, p.y); yhi = std::max(yhi, p.y);
  }
  Range xr = nice_range(xlo, xhi, false);
  Range yr = nice_range(ylo, yhi, log_y);

  std::ostringstream svg;
  draw_frame(svg, title, xlabel, ylabel + (yr.log_scale ? " (log scale)" : ""), xr, yr);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const char* color = kPalette[i % 8];
    double px = xr.map(points[i].x, x0, x1);
    double py = yr.map(points[i].y, y0, y1);
    svg << "<circle cx=\"" << format_double(px, 2) << "\" cy=\"" << format_double(py, 2)
        << "\" r=\"5\" fill=\"" << color << "\"/>\n";
    svg << "<text x=\"" << format_double(px + 8, 2) << "\" y=\"" << format_double(py + 4, 2)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << points[i].label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace antilm
