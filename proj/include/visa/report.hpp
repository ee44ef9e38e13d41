#pragma once

// Minimal static SVG charts for search traces and per-dimension results.

#include <string>
#include <vector>

namespace visa {

struct Series {
  std::string name;
  std::vector<double> y;  // x is the index
};

/// One polyline per series on shared axes. Non-finite points are skipped.
std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::vector<Series>& series,
                           int width = 640, int height = 360);

/// Vertical bars; the y axis spans [min(0, min v), max v] unless both
/// limits are given.
std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values, double y_min = 0.0, double y_max = 0.0);

}  // namespace visa
