#include "optima/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace optima {

namespace {

const char* const kPalette[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1", "#76b7b2", "#edc948", "#9c755f"};
const char* const kRegionPalette[] = {"#c6d6e8", "#fbd8b5", "#cbe5c6", "#f5c4c5", "#e2d1df", "#d2e8e6", "#f8ecb9", "#e0d3c8"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string header(int width, int height) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(width) + "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
         std::to_string(width) + " " + std::to_string(height) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "middle", int size = 12,
                 const std::string& extra = "") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-family=\"sans-serif\" font-size=\"" +
         std::to_string(size) + "\" text-anchor=\"" + anchor + "\"" + extra + ">" + xml_escape(s) + "</text>\n";
}

/// White to dark blue.
std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(247 - t * (247 - 8)));
  const int g = static_cast<int>(std::lround(251 - t * (251 - 48)));
  const int b = static_cast<int>(std::lround(255 - t * (255 - 107)));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string heatmap_svg(const Matrix& values, const HeatmapSpec& spec) {
  const int rows = static_cast<int>(values.rows());
  const int cols = static_cast<int>(values.cols());
  const int cell = 56;
  const int left = 110;
  const int top = 60;
  const int width = left + cols * cell + 30;
  const int height = top + rows * cell + 60;
  double lo = spec.vmin;
  double hi = spec.vmax;
  if (lo == hi && values.size() > 0) {
    lo = values.minCoeff();
    hi = values.maxCoeff();
  }
  const double span = hi > lo ? hi - lo : 1.0;

  std::ostringstream out;
  out << header(width, height);
  out << text(width / 2.0, 24, spec.title, "middle", 14);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double v = values(i, j);
      const double t = (v - lo) / span;
      const int x = left + j * cell;
      const int y = top + i * cell;
      out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
          << ramp(t) << "\" stroke=\"#888\" stroke-width=\"0.5\"/>\n";
      // integer counts (confusion matrices) print without decimals
      char buf[32];
      if (std::abs(v - std::round(v)) < 1e-12 && std::abs(v) >= 1.0) {
        std::snprintf(buf, sizeof buf, "%.0f", v);
      } else {
        std::snprintf(buf, sizeof buf, "%.3f", v);
      }
      out << text(x + cell / 2.0, y + cell / 2.0 + 4, buf, "middle", 11, t > 0.6 ? " fill=\"white\"" : "");
    }
  }
  for (int i = 0; i < rows; ++i) {
    const std::string label = i < static_cast<int>(spec.row_labels.size()) ? spec.row_labels[static_cast<std::size_t>(i)] : std::to_string(i);
    out << text(left - 8, top + i * cell + cell / 2.0 + 4, label, "end");
  }
  for (int j = 0; j < cols; ++j) {
    const std::string label = j < static_cast<int>(spec.col_labels.size()) ? spec.col_labels[static_cast<std::size_t>(j)] : std::to_string(j);
    out << text(left + j * cell + cell / 2.0, top + rows * cell + 18, label);
  }
  if (!spec.col_axis.empty()) out << text(left + cols * cell / 2.0, top + rows * cell + 40, spec.col_axis);
  if (!spec.row_axis.empty()) {
    const double cy = top + rows * cell / 2.0;
    out << text(16, cy, spec.row_axis, "middle", 12, " transform=\"rotate(-90 16 " + num(cy) + ")\"");
  }
  out << "</svg>\n";
  return out.str();
}

std::string line_chart_svg(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                           const std::string& y_label) {
  const int width = 640;
  const int height = 400;
  const double left = 70, right = 150, top = 40, bottom = 50;
  const double pw = width - left - right;
  const double ph = height - top - bottom;

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (first) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        first = false;
      }
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::ostringstream out;
  out << header(width, height);
  out << text(left + pw / 2, 22, title, "middle", 14);
  out << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmin + (xmax - xmin) * k / 4.0;
    const double yv = ymin + (ymax - ymin) * k / 4.0;
    out << text(sx(xv), top + ph + 18, num(xv), "middle", 10);
    out << text(left - 6, sy(yv) + 4, num(yv), "end", 10);
  }
  out << text(left + pw / 2, height - 10, x_label);
  out << text(16, top + ph / 2, y_label, "middle", 12, " transform=\"rotate(-90 16 " + num(top + ph / 2) + ")\"");
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % 8];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      pts += num(sx(s.x[i])) + "," + num(sy(s.y[i])) + " ";
    }
    if (!pts.empty()) pts.pop_back();
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << pts << "\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    out << "<line x1=\"" << num(left + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(left + pw + 32)
        << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << text(left + pw + 38, ly + 4, s.name, "start", 11);
  }
  out << "</svg>\n";
  return out.str();
}

std::string decision_boundary_svg(const std::vector<std::vector<int>>& regions, double extent,
                                  const std::vector<ScatterPoint>& points, int classes, const std::string& title) {
  const int size = 480;
  const int margin = 40;
  const int width = size + 2 * margin + 120;
  const int height = size + 2 * margin;
  const std::size_t n = regions.size();
  const double cell = n > 0 ? static_cast<double>(size) / static_cast<double>(n) : 1.0;
  auto px = [&](double x) { return margin + (x + extent) / (2 * extent) * size; };
  auto py = [&](double y) { return margin + (extent - y) / (2 * extent) * size; };

  std::ostringstream out;
  out << header(width, height);
  out << text(margin + size / 2.0, 24, title, "middle", 14);
  out << "<g shape-rendering=\"crispEdges\">\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = regions[i];
    std::size_t j = 0;
    while (j < row.size()) {
      std::size_t k = j;
      while (k < row.size() && row[k] == row[j]) ++k;
      out << "<rect x=\"" << num(margin + static_cast<double>(j) * cell) << "\" y=\""
          << num(margin + static_cast<double>(i) * cell) << "\" width=\"" << num(static_cast<double>(k - j) * cell + 0.01)
          << "\" height=\"" << num(cell + 0.01) << "\" fill=\"" << kRegionPalette[static_cast<std::size_t>(row[j]) % 8]
          << "\"/>\n";
      j = k;
    }
  }
  out << "</g>\n";
  out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << size << "\" height=\"" << size
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (const auto& p : points) {
    if (std::abs(p.x) > extent || std::abs(p.y) > extent) continue;
    const char* color = kPalette[static_cast<std::size_t>(p.label) % 8];
    if (p.target) {
      out << "<rect x=\"" << num(px(p.x) - 3) << "\" y=\"" << num(py(p.y) - 3)
          << "\" width=\"6\" height=\"6\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\"/>\n";
    } else {
      out << "<circle cx=\"" << num(px(p.x)) << "\" cy=\"" << num(py(p.y)) << "\" r=\"3\" fill=\"" << color
          << "\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
    }
  }
  out << text(margin + size / 2.0, height - 10, "x1 in [" + num(-extent) + ", " + num(extent) + "]", "middle", 11);
  const double lx = margin + size + 16;
  out << "<circle cx=\"" << num(lx + 5) << "\" cy=\"" << margin + 10 << "\" r=\"3\" fill=\"#444\"/>\n";
  out << text(lx + 14, margin + 14, "source", "start", 11);
  out << "<rect x=\"" << num(lx + 2) << "\" y=\"" << margin + 25 << "\" width=\"6\" height=\"6\" fill=\"none\" stroke=\"#444\"/>\n";
  out << text(lx + 14, margin + 32, "target", "start", 11);
  for (int c = 0; c < classes; ++c) {
    const double y = margin + 56 + 18.0 * c;
    out << "<rect x=\"" << num(lx) << "\" y=\"" << num(y - 9) << "\" width=\"10\" height=\"10\" fill=\""
        << kRegionPalette[static_cast<std::size_t>(c) % 8] << "\" stroke=\"" << kPalette[static_cast<std::size_t>(c) % 8]
        << "\"/>\n";
    out << text(lx + 14, y, "class " + std::to_string(c), "start", 11);
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace optima
