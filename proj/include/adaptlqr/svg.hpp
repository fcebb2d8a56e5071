#pragma once

// Minimal line-chart renderer: polylines, axes with a few ticks, legend.

#include <string>
#include <vector>

namespace adaptlqr {

struct SvgSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  std::string dash;  // SVG stroke-dasharray, empty for solid
};

struct SvgHLine {
  double y = 0.0;
  std::string label;
};

struct SvgPlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<SvgSeries> series;
  std::vector<SvgHLine> hlines;
  /// Optional fixed y range; ignored unless y_max > y_min.
  double y_min = 0.0;
  double y_max = 0.0;
};

std::string render_svg(const SvgPlot& plot, int width = 720, int height = 440);

}  // namespace adaptlqr
