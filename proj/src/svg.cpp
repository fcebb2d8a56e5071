#include "adaptlqr/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace adaptlqr {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
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

}  // namespace

std::string render_svg(const SvgPlot& plot, int width, int height) {
  const double left = 70, right = 160, top = 40, bottom = 50;
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  auto tx = [&](double v) { return plot.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return plot.log_y ? std::log10(v) : v; };
  auto usable_x = [&](double v) { return std::isfinite(v) && (!plot.log_x || v > 0); };
  auto usable_y = [&](double v) { return std::isfinite(v) && (!plot.log_y || v > 0); };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : plot.series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable_x(s.x[i]) || !usable_y(s.y[i])) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  for (const auto& h : plot.hlines)
    if (usable_y(h.y)) {
      y0 = std::min(y0, ty(h.y));
      y1 = std::max(y1, ty(h.y));
    }
  if (plot.y_max > plot.y_min) {
    y0 = ty(plot.y_min);
    y1 = ty(plot.y_max);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1;
  if (!std::isfinite(y0)) y0 = 0, y1 = 1;
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double v) { return left + (tx(v) - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return top + (1.0 - (std::clamp(ty(v), y0, y1) - y0) / (y1 - y0)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(plot.title)
    << "</text>\n";
  o << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int t = 0; t <= 4; ++t) {
    const double fx = x0 + (x1 - x0) * t / 4.0;
    const double fy = y0 + (y1 - y0) * t / 4.0;
    const double vx = plot.log_x ? std::pow(10.0, fx) : fx;
    const double vy = plot.log_y ? std::pow(10.0, fy) : fy;
    const double sx = left + pw * t / 4.0;
    const double sy = top + ph * (1.0 - t / 4.0);
    o << "<line x1=\"" << num(sx) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(sx) << "\" y2=\"" << num(top + ph + 5)
      << "\" stroke=\"black\"/><text x=\"" << num(sx) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">"
      << tick_label(vx) << "</text>\n";
    o << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(sy) << "\" x2=\"" << num(left) << "\" y2=\"" << num(sy)
      << "\" stroke=\"black\"/><text x=\"" << num(left - 8) << "\" y=\"" << num(sy + 4) << "\" text-anchor=\"end\">"
      << tick_label(vy) << "</text>\n";
  }
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(height - 10.0) << "\" text-anchor=\"middle\">"
    << escape(plot.x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << num(top + ph / 2) << ")\">" << escape(plot.y_label) << "</text>\n";

  for (const auto& h : plot.hlines) {
    if (!usable_y(h.y)) continue;
    o << "<line x1=\"" << num(left) << "\" y1=\"" << num(py(h.y)) << "\" x2=\"" << num(left + pw) << "\" y2=\"" << num(py(h.y))
      << "\" stroke=\"gray\" stroke-width=\"1\"/>\n";
  }

  int legend = 0;
  auto legend_entry = [&](const std::string& name, const std::string& color, const std::string& dash) {
    const double ly = top + 10 + 18.0 * legend++;
    o << "<line x1=\"" << num(left + pw + 10) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(left + pw + 35) << "\" y2=\""
      << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"";
    if (!dash.empty()) o << " stroke-dasharray=\"" << dash << "\"";
    o << "/><text x=\"" << num(left + pw + 40) << "\" y=\"" << num(ly + 4) << "\">" << escape(name) << "</text>\n";
  };

  for (const auto& s : plot.series) {
    o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
    if (!s.dash.empty()) o << " stroke-dasharray=\"" << s.dash << "\"";
    o << " points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable_x(s.x[i]) || !usable_y(s.y[i])) continue;
      o << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
    }
    o << "\"/>\n";
    legend_entry(s.name, s.color, s.dash);
  }
  for (const auto& h : plot.hlines)
    if (!h.label.empty()) legend_entry(h.label, "gray", "");
  o << "</svg>\n";
  return o.str();
}

}  // namespace adaptlqr
