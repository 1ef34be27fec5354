#include "posred/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace posred::svg {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

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
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  double map(double v) const {
    const double t = log ? std::log10(std::max(v, 1e-300)) : v;
    return (t - lo) / (hi - lo);
  }
};

Axis fit_axis(const std::vector<Series>& series, bool use_x, bool log) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Series& s : series) {
    for (double v : use_x ? s.x : s.y) {
      if (!std::isfinite(v) || (log && v <= 0.0)) continue;
      const double t = log ? std::log10(v) : v;
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  if (!use_x && !log) {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  return {lo, hi, log};
}

}  // namespace

std::string line_chart(const std::vector<Series>& series, const ChartOptions& o) {
  const double left = 70, right = 150, top = 40, bottom = 50;
  const double pw = o.width - left - right;
  const double ph = o.height - top - bottom;
  const Axis ax = fit_axis(series, true, o.log_x);
  const Axis ay = fit_axis(series, false, o.log_y);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << o.width << "\" height=\""
      << o.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(o.title) << "</text>\n";
  svg << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw)
      << "\" height=\"" << fmt(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int k = 0; k <= 4; ++k) {
    const double f = k / 4.0;
    const double xv = ax.lo + f * (ax.hi - ax.lo);
    const double yv = ay.lo + f * (ay.hi - ay.lo);
    const double px = left + f * pw;
    const double py = top + ph - f * ph;
    svg << "<line x1=\"" << fmt(px) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(px)
        << "\" y2=\"" << fmt(top + ph + 5) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(top + ph + 18)
        << "\" text-anchor=\"middle\">" << tick_label(ax.log ? std::pow(10.0, xv) : xv)
        << "</text>\n";
    svg << "<line x1=\"" << fmt(left - 5) << "\" y1=\"" << fmt(py) << "\" x2=\"" << fmt(left)
        << "\" y2=\"" << fmt(py) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(py + 4)
        << "\" text-anchor=\"end\">" << tick_label(ay.log ? std::pow(10.0, yv) : yv)
        << "</text>\n";
  }
  svg << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(o.height - 10.0)
      << "\" text-anchor=\"middle\">" << escape(o.x_label) << "</text>\n";
  svg << "<text x=\"16\" y=\"" << fmt(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << fmt(top + ph / 2) << ")\">" << escape(o.y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const Series& ser = series[s];
    svg << "<polyline fill=\"none\" stroke=\"" << ser.color << "\" stroke-width=\"1.2\" points=\"";
    const std::size_t n = std::min(ser.x.size(), ser.y.size());
    for (std::size_t i = 0; i < n; ++i) {
      const double px = left + ax.map(ser.x[i]) * pw;
      const double py = top + ph - ay.map(ser.y[i]) * ph;
      svg << fmt(px) << ',' << fmt(py) << (i + 1 < n ? " " : "");
    }
    svg << "\"/>\n";
    const double ly = top + 16.0 + 18.0 * static_cast<double>(s);
    svg << "<line x1=\"" << fmt(left + pw + 10) << "\" y1=\"" << fmt(ly) << "\" x2=\""
        << fmt(left + pw + 30) << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << ser.color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << fmt(left + pw + 35) << "\" y=\"" << fmt(ly + 4) << "\">"
        << escape(ser.label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace posred::svg
