#pragma once

#include "optima/common.hpp"

#include <string>
#include <vector>

namespace optima {

std::string xml_escape(const std::string& text);

struct HeatmapSpec {
  std::string title;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::string row_axis;
  std::string col_axis;
  /// Color range; when vmin == vmax the data range is used.
  double vmin = 0.0;
  double vmax = 0.0;
};

std::string heatmap_svg(const Matrix& values, const HeatmapSpec& spec);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

std::string line_chart_svg(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                           const std::string& y_label);

struct ScatterPoint {
  double x = 0.0;
  double y = 0.0;
  int label = 0;
  bool target = false;
};

/// `regions` is grid x grid class ids, row 0 at y = +extent, column 0 at
/// x = -extent. Source points are drawn as circles, target points as squares.
std::string decision_boundary_svg(const std::vector<std::vector<int>>& regions, double extent,
                                  const std::vector<ScatterPoint>& points, int classes, const std::string& title);

}  // namespace optima
