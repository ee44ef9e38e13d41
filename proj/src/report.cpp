#include "visa/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "visa/errors.hpp"

namespace visa {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
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

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Frame {
  double left = 64, right = 16, top = 36, bottom = 48;
  int width, height;
  double x0, x1, y0, y1;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

std::string open_svg(const Frame& f, const std::string& title) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(f.width) + "\" height=\"" +
                  std::to_string(f.height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(f.width / 2.0) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) +
       "</text>\n";
  return s;
}

std::string y_axis(const Frame& f) {
  std::string s;
  for (int i = 0; i <= 4; ++i) {
    const double v = f.y0 + (f.y1 - f.y0) * i / 4.0;
    const double y = f.py(v);
    s += "<line x1=\"" + num(f.left) + "\" x2=\"" + num(f.width - f.right) + "\" y1=\"" + num(y) + "\" y2=\"" +
         num(y) + "\" stroke=\"#ddd\"/>\n";
    s += "<text x=\"" + num(f.left - 6) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + tick_label(v) +
         "</text>\n";
  }
  s += "<line x1=\"" + num(f.left) + "\" x2=\"" + num(f.left) + "\" y1=\"" + num(f.top) + "\" y2=\"" +
       num(f.height - f.bottom) + "\" stroke=\"black\"/>\n";
  return s;
}

void widen(double& lo, double& hi) {
  if (!(hi > lo)) {
    const double pad = std::max(1e-9, std::abs(lo) * 0.05 + 0.5);
    lo -= pad;
    hi += pad;
  }
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::vector<Series>& series,
                           int width, int height) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t n = 0;
  for (const auto& s : series) {
    n = std::max(n, s.y.size());
    for (double v : s.y)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  widen(lo, hi);
  Frame f{64, 16, 36, 48, width, height, 0.0, std::max<double>(1.0, static_cast<double>(n) - 1.0), lo, hi};
  std::string s = open_svg(f, title) + y_axis(f);
  s += "<line x1=\"" + num(f.left) + "\" x2=\"" + num(width - f.right) + "\" y1=\"" + num(height - f.bottom) +
       "\" y2=\"" + num(height - f.bottom) + "\" stroke=\"black\"/>\n";
  s += "<text x=\"" + num(f.left) + "\" y=\"" + num(height - f.bottom + 14) + "\">0</text>\n";
  s += "<text x=\"" + num(width - f.right) + "\" y=\"" + num(height - f.bottom + 14) + "\" text-anchor=\"end\">" +
       std::to_string(n == 0 ? 0 : n - 1) + "</text>\n";
  s += "<text x=\"" + num(width / 2.0) + "\" y=\"" + num(height - 12.0) + "\" text-anchor=\"middle\">" +
       escape(x_label) + "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % std::size(kPalette)];
    std::string pts;
    for (std::size_t i = 0; i < series[k].y.size(); ++i) {
      const double v = series[k].y[i];
      if (!std::isfinite(v)) continue;
      pts += num(f.px(static_cast<double>(i))) + "," + num(f.py(v)) + " ";
    }
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    s += "<text x=\"" + num(width - f.right - 4) + "\" y=\"" + num(f.top + 14.0 * (k + 1)) + "\" text-anchor=\"end\" fill=\"" +
         color + "\">" + escape(series[k].name) + "</text>\n";
  }
  return s + "</svg>\n";
}

std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values, double y_min, double y_max) {
  if (labels.size() != values.size()) throw ValidationError("bar chart: labels and values differ in length");
  double lo = y_min, hi = y_max;
  if (!(y_max > y_min)) {
    lo = 0.0;
    hi = 0.0;
    for (double v : values)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    widen(lo, hi);
  }
  const int width = std::max(320, 72 * static_cast<int>(values.size()) + 80);
  const int height = 360;
  Frame f{64, 16, 36, 80, width, height, 0.0, std::max<double>(1.0, static_cast<double>(values.size())), lo, hi};
  std::string s = open_svg(f, title) + y_axis(f);
  const double slot = (width - f.left - f.right) / std::max<double>(1.0, static_cast<double>(values.size()));
  const double base = f.py(std::clamp(0.0, lo, hi));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = f.left + slot * i + slot * 0.15;
    if (std::isfinite(values[i])) {
      const double y = f.py(std::clamp(values[i], lo, hi));
      s += "<rect class=\"bar\" x=\"" + num(x) + "\" y=\"" + num(std::min(y, base)) + "\" width=\"" + num(slot * 0.7) +
           "\" height=\"" + num(std::abs(base - y)) + "\" fill=\"" + kPalette[0] + "\"/>\n";
      s += "<text x=\"" + num(x + slot * 0.35) + "\" y=\"" + num(std::min(y, base) - 3) +
           "\" text-anchor=\"middle\">" + tick_label(values[i]) + "</text>\n";
    }
    const double lx = x + slot * 0.35, ly = height - f.bottom + 12;
    s += "<text x=\"" + num(lx) + "\" y=\"" + num(ly) + "\" text-anchor=\"end\" transform=\"rotate(-35 " + num(lx) +
         " " + num(ly) + ")\">" + escape(labels[i]) + "</text>\n";
  }
  s += "<line x1=\"" + num(f.left) + "\" x2=\"" + num(width - f.right) + "\" y1=\"" + num(base) + "\" y2=\"" + num(base) +
       "\" stroke=\"black\"/>\n";
  return s + "</svg>\n";
}

}  // namespace visa
