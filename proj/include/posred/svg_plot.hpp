#pragma once

#include <string>
#include <vector>

namespace posred::svg {

struct Series {
  std::string label;
  std::string color;  // any SVG color
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  int width = 800;
  int height = 360;
};

// Self-contained SVG line chart. Output depends only on the inputs.
std::string line_chart(const std::vector<Series>& series, const ChartOptions& options);

}  // namespace posred::svg
