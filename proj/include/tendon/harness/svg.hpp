#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tendon/core/csv.hpp"

namespace tendon::harness {

/// Bars of one series over shared categories. `sd` may be empty; whiskers
/// span one standard deviation end to end (mean +- sd/2).
struct BarSeries {
  std::string label;
  std::vector<double> values;
  std::vector<double> sd;
};

struct BarChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> categories;
  std::vector<BarSeries> series;
};

/// A curve with an optional shaded band of one standard deviation end to end.
struct LineSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> sd;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<LineSeries> series;
};

namespace svg {

inline constexpr double kWidth = 720, kHeight = 420;
inline constexpr double kLeft = 80, kRight = 170, kTop = 40, kBottom = 60;
inline constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

inline std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

inline std::string escape(const std::string& s) {
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

inline const char* color(std::size_t i) { return kPalette[i % (sizeof kPalette / sizeof *kPalette)]; }

/// Maps data values to pixels along one axis.
struct Axis {
  double lo = 0.0, hi = 1.0;
  double px_lo = 0.0, px_hi = 1.0;  // pixel positions of lo and hi

  double scale() const { return (px_hi - px_lo) / (hi - lo); }
  double map(double v) const { return px_lo + (v - lo) * scale(); }
};

inline std::pair<double, double> padded_range(double lo, double hi, bool include_zero) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) return {0.0, 1.0};
  if (include_zero) {
    lo = std::min(lo, 0.0);
    hi = std::max(hi, 0.0);
  }
  if (hi - lo < 1e-12) {
    const double pad = std::max(1e-3, std::abs(hi) * 0.1);
    return {lo - (include_zero && lo == 0.0 ? 0.0 : pad), hi + pad};
  }
  const double pad = 0.05 * (hi - lo);
  return {include_zero && lo == 0.0 ? 0.0 : lo - pad, include_zero && hi == 0.0 ? 0.0 : hi + pad};
}

inline void open(std::ostringstream& o, const std::string& title) {
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text class=\"title\" x=\"" << px(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << escape(title) << "</text>\n";
}

inline void axes(std::ostringstream& o, const Axis& y, const std::string& x_label,
                 const std::string& y_label) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  o << "<g class=\"axes\" stroke=\"black\">\n"
    << "<line x1=\"" << px(x0) << "\" y1=\"" << px(y0) << "\" x2=\"" << px(x1) << "\" y2=\"" << px(y0) << "\"/>\n"
    << "<line x1=\"" << px(x0) << "\" y1=\"" << px(y0) << "\" x2=\"" << px(x0) << "\" y2=\"" << px(y1) << "\"/>\n"
    << "</g>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = y.lo + (y.hi - y.lo) * i / 5.0;
    const double p = y.map(v);
    o << "<line class=\"y-tick\" x1=\"" << px(x0 - 4) << "\" y1=\"" << px(p) << "\" x2=\"" << px(x0)
      << "\" y2=\"" << px(p) << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << px(x0 - 6) << "\" y=\"" << px(p + 4) << "\" text-anchor=\"end\">" << tick(v)
      << "</text>\n";
  }
  o << "<text class=\"x-label\" x=\"" << px((x0 + x1) / 2) << "\" y=\"" << px(kHeight - 15)
    << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n"
    << "<text class=\"y-label\" transform=\"translate(18," << px((y0 + y1) / 2)
    << ") rotate(-90)\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n";
}

inline void legend(std::ostringstream& o, const std::vector<std::string>& labels) {
  const double x = kWidth - kRight + 15;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double y = kTop + 10 + 18.0 * static_cast<double>(i);
    o << "<rect x=\"" << px(x) << "\" y=\"" << px(y - 9) << "\" width=\"12\" height=\"10\" fill=\""
      << color(i) << "\"/>\n"
      << "<text x=\"" << px(x + 18) << "\" y=\"" << px(y) << "\">" << escape(labels[i]) << "</text>\n";
  }
}

inline void no_data(std::ostringstream& o) {
  o << "<text class=\"no-data\" x=\"" << px((kLeft + kWidth - kRight) / 2) << "\" y=\""
    << px((kTop + kHeight - kBottom) / 2) << "\" text-anchor=\"middle\" fill=\"#777\">no data</text>\n";
}

inline double sd_at(const std::vector<double>& sd, std::size_t i) {
  return i < sd.size() && std::isfinite(sd[i]) ? sd[i] : 0.0;
}

}  // namespace svg

/// Standalone SVG bar chart. Every bar is a <rect class="bar"> carrying its
/// value in data-value; the plot-area group records the value-to-pixel map so
/// the drawing can be checked against the data.
inline std::string render_bar_chart(const BarChart& chart) {
  std::ostringstream o;
  svg::open(o, chart.title);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : chart.series) {
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      if (!std::isfinite(s.values[i])) continue;
      const double h = 0.5 * svg::sd_at(s.sd, i);
      lo = std::min(lo, s.values[i] - h);
      hi = std::max(hi, s.values[i] + h);
    }
  }
  const bool empty = !std::isfinite(lo);
  const auto [ylo, yhi] = svg::padded_range(empty ? 0.0 : lo, empty ? 1.0 : hi, true);
  const svg::Axis y{ylo, yhi, svg::kHeight - svg::kBottom, svg::kTop};
  const double base = y.map(std::clamp(0.0, ylo, yhi));
  o << "<g class=\"plot-area\" data-y-min=\"" << format_double(ylo) << "\" data-y-max=\""
    << format_double(yhi) << "\" data-px-per-unit=\"" << format_double(-y.scale())
    << "\" data-baseline-px=\"" << format_double(base) << "\">\n";
  svg::axes(o, y, chart.x_label, chart.y_label);
  if (empty || chart.categories.empty()) {
    svg::no_data(o);
  } else {
    const double width = svg::kWidth - svg::kLeft - svg::kRight;
    const double slot = width / static_cast<double>(chart.categories.size());
    const double ns = static_cast<double>(std::max<std::size_t>(1, chart.series.size()));
    const double bar_w = 0.8 * slot / ns;
    for (std::size_t c = 0; c < chart.categories.size(); ++c) {
      const double cx = svg::kLeft + slot * (static_cast<double>(c) + 0.5);
      o << "<text class=\"x-tick\" x=\"" << svg::px(cx) << "\" y=\"" << svg::px(svg::kHeight - svg::kBottom + 16)
        << "\" text-anchor=\"middle\">" << svg::escape(chart.categories[c]) << "</text>\n";
      for (std::size_t s = 0; s < chart.series.size(); ++s) {
        const auto& ser = chart.series[s];
        if (c >= ser.values.size() || !std::isfinite(ser.values[c])) continue;
        const double v = ser.values[c];
        const double x = svg::kLeft + slot * static_cast<double>(c) + 0.1 * slot + bar_w * static_cast<double>(s);
        const double top = std::min(base, y.map(v));
        const double h = std::abs(y.map(v) - base);
        o << "<rect class=\"bar\" data-series=\"" << svg::escape(ser.label) << "\" data-category=\""
          << svg::escape(chart.categories[c]) << "\" data-value=\"" << format_double(v)
          << "\" data-sd=\"" << format_double(svg::sd_at(ser.sd, c)) << "\" x=\"" << svg::px(x)
          << "\" y=\"" << format_double(top) << "\" width=\"" << svg::px(bar_w) << "\" height=\""
          << format_double(h) << "\" fill=\"" << svg::color(s) << "\"/>\n";
        const double half = 0.5 * svg::sd_at(ser.sd, c);
        if (half > 0) {
          const double mid = x + 0.5 * bar_w;
          o << "<line class=\"whisker\" x1=\"" << svg::px(mid) << "\" y1=\"" << format_double(y.map(v - half))
            << "\" x2=\"" << svg::px(mid) << "\" y2=\"" << format_double(y.map(v + half))
            << "\" stroke=\"black\"/>\n";
        }
      }
    }
    std::vector<std::string> labels;
    for (const auto& s : chart.series) labels.push_back(s.label);
    svg::legend(o, labels);
  }
  o << "</g>\n</svg>\n";
  return o.str();
}

/// Standalone SVG line chart with shaded +-sd/2 bands.
inline std::string render_line_chart(const LineChart& chart) {
  std::ostringstream o;
  svg::open(o, chart.title);
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& s : chart.series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      const double h = 0.5 * svg::sd_at(s.sd, i);
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i] - h);
      yhi = std::max(yhi, s.y[i] + h);
    }
  }
  const bool empty = !std::isfinite(xlo);
  const auto [y0, y1] = svg::padded_range(empty ? 0.0 : ylo, empty ? 1.0 : yhi, false);
  const auto [x0, x1] = empty ? std::pair{0.0, 1.0}
                              : (xhi > xlo ? std::pair{xlo, xhi} : std::pair{xlo - 0.5, xhi + 0.5});
  const svg::Axis ya{y0, y1, svg::kHeight - svg::kBottom, svg::kTop};
  const svg::Axis xa{x0, x1, svg::kLeft, svg::kWidth - svg::kRight};
  o << "<g class=\"plot-area\" data-y-min=\"" << format_double(y0) << "\" data-y-max=\"" << format_double(y1)
    << "\" data-x-min=\"" << format_double(x0) << "\" data-x-max=\"" << format_double(x1) << "\">\n";
  svg::axes(o, ya, chart.x_label, chart.y_label);
  for (int i = 0; i <= 5; ++i) {
    const double v = x0 + (x1 - x0) * i / 5.0;
    o << "<text class=\"x-tick\" x=\"" << svg::px(xa.map(v)) << "\" y=\""
      << svg::px(svg::kHeight - svg::kBottom + 16) << "\" text-anchor=\"middle\">" << svg::tick(v)
      << "</text>\n";
  }
  if (empty) {
    svg::no_data(o);
  } else {
    for (std::size_t s = 0; s < chart.series.size(); ++s) {
      const auto& ser = chart.series[s];
      std::string upper, lower, line;
      for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
        if (!std::isfinite(ser.y[i])) continue;
        const double h = 0.5 * svg::sd_at(ser.sd, i);
        const std::string xp = svg::px(xa.map(ser.x[i]));
        line += xp + "," + svg::px(ya.map(ser.y[i])) + " ";
        upper += xp + "," + svg::px(ya.map(ser.y[i] + h)) + " ";
        lower = xp + "," + svg::px(ya.map(ser.y[i] - h)) + " " + lower;
      }
      if (!ser.sd.empty()) {
        o << "<polygon class=\"band\" data-series=\"" << svg::escape(ser.label) << "\" points=\"" << upper
          << lower << "\" fill=\"" << svg::color(s) << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
      }
      o << "<polyline class=\"series-line\" data-series=\"" << svg::escape(ser.label) << "\" points=\""
        << line << "\" fill=\"none\" stroke=\"" << svg::color(s) << "\" stroke-width=\"1.5\"/>\n";
      if (ser.x.size() <= 60) {
        for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
          if (!std::isfinite(ser.y[i])) continue;
          o << "<circle class=\"point\" data-series=\"" << svg::escape(ser.label) << "\" data-x=\""
            << format_double(ser.x[i]) << "\" data-value=\"" << format_double(ser.y[i]) << "\" cx=\""
            << svg::px(xa.map(ser.x[i])) << "\" cy=\"" << svg::px(ya.map(ser.y[i]))
            << "\" r=\"2.5\" fill=\"" << svg::color(s) << "\"/>\n";
        }
      }
    }
    std::vector<std::string> labels;
    for (const auto& s : chart.series) labels.push_back(s.label);
    svg::legend(o, labels);
  }
  o << "</g>\n</svg>\n";
  return o.str();
}

}  // namespace tendon::harness
