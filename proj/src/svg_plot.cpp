#include "lghand/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lghand/common.hpp"

namespace lghand {

namespace {

constexpr double kWidth = 640, kHeight = 440;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 55;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

struct SvgCanvas {
  std::ostringstream body;

  void text(double x, double y, const std::string& s, int size = 12,
            const char* anchor = "middle") {
    body << "<text x='" << fmt(x) << "' y='" << fmt(y) << "' font-size='"
         << size << "' font-family='monospace' text-anchor='" << anchor
         << "'>" << s << "</text>\n";
  }
  void line(double x1, double y1, double x2, double y2,
            const char* color = "#888", double width = 1.0) {
    body << "<line x1='" << fmt(x1) << "' y1='" << fmt(y1) << "' x2='"
         << fmt(x2) << "' y2='" << fmt(y2) << "' stroke='" << color
         << "' stroke-width='" << fmt(width) << "'/>\n";
  }

  void save(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("svg: cannot write " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth
        << "' height='" << kHeight << "' viewBox='0 0 " << kWidth << " "
        << kHeight << "'>\n"
        << "<rect width='100%' height='100%' fill='white'/>\n"
        << body.str() << "</svg>\n";
  }
};

double nice_upper(double v) {
  if (v <= 0.0) return 1.0;
  double mag = std::pow(10.0, std::floor(std::log10(v)));
  for (double s : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (v <= s * mag) return s * mag;
  return 10.0 * mag;
}

void draw_axes(SvgCanvas& svg, const std::string& title,
               const std::string& x_label, const std::string& y_label) {
  svg.text(kWidth / 2, 22, title, 14);
  svg.line(kLeft, kHeight - kBottom, kWidth - kRight, kHeight - kBottom,
           "#000");
  svg.line(kLeft, kTop, kLeft, kHeight - kBottom, "#000");
  svg.text(kWidth / 2, kHeight - 12, x_label);
  svg.body << "<text x='18' y='" << fmt(kHeight / 2)
           << "' font-size='12' font-family='monospace' text-anchor='middle' "
              "transform='rotate(-90 18 "
           << fmt(kHeight / 2) << ")'>" << y_label << "</text>\n";
}

}  // namespace

void write_line_chart_svg(
    const std::string& path, const std::string& title,
    const std::string& x_label, const std::string& y_label,
    const std::vector<std::pair<double, double>>& points) {
  SvgCanvas svg;
  draw_axes(svg, title, x_label, y_label);

  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  if (!points.empty()) {
    x_min = x_max = points[0].first;
    y_min = 0.0;
    y_max = points[0].second;
    for (auto [x, y] : points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_max = std::max(y_max, y);
    }
  }
  if (x_max == x_min) x_max = x_min + 1.0;
  y_max = nice_upper(y_max);

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return kHeight - kBottom - (y - y_min) / (y_max - y_min) * plot_h; };

  for (int i = 0; i <= 5; ++i) {
    double yv = y_min + (y_max - y_min) * i / 5.0;
    svg.line(kLeft - 4, py(yv), kLeft, py(yv), "#000");
    svg.line(kLeft, py(yv), kWidth - kRight, py(yv), "#ddd", 0.5);
    svg.text(kLeft - 8, py(yv) + 4, fmt(yv), 11, "end");
    double xv = x_min + (x_max - x_min) * i / 5.0;
    svg.line(px(xv), kHeight - kBottom, px(xv), kHeight - kBottom + 4, "#000");
    svg.text(px(xv), kHeight - kBottom + 18, fmt(xv), 11);
  }

  if (!points.empty()) {
    svg.body << "<polyline fill='none' stroke='#1f77b4' stroke-width='2' points='";
    for (auto [x, y] : points) svg.body << fmt(px(x)) << "," << fmt(py(y)) << " ";
    svg.body << "'/>\n";
    for (auto [x, y] : points)
      svg.body << "<circle cx='" << fmt(px(x)) << "' cy='" << fmt(py(y))
               << "' r='3' fill='#1f77b4'/>\n";
  }
  svg.save(path);
}

void write_bar_chart_svg(
    const std::string& path, const std::string& title,
    const std::string& y_label,
    const std::vector<std::pair<std::string, double>>& bars) {
  SvgCanvas svg;
  draw_axes(svg, title, "", y_label);

  double y_max = 1.0;
  for (const auto& [_, v] : bars) y_max = std::max(y_max, v);
  y_max = nice_upper(y_max);

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto py = [&](double y) { return kHeight - kBottom - y / y_max * plot_h; };

  for (int i = 0; i <= 5; ++i) {
    double yv = y_max * i / 5.0;
    svg.line(kLeft - 4, py(yv), kLeft, py(yv), "#000");
    svg.line(kLeft, py(yv), kWidth - kRight, py(yv), "#ddd", 0.5);
    svg.text(kLeft - 8, py(yv) + 4, fmt(yv), 11, "end");
  }

  const double n = static_cast<double>(bars.size());
  const double slot = n > 0 ? plot_w / n : plot_w;
  const double bar_w = slot * 0.6;
  for (size_t i = 0; i < bars.size(); ++i) {
    double x0 = kLeft + slot * (static_cast<double>(i) + 0.2);
    double top = py(bars[i].second);
    svg.body << "<rect x='" << fmt(x0) << "' y='" << fmt(top) << "' width='"
             << fmt(bar_w) << "' height='"
             << fmt(kHeight - kBottom - top) << "' fill='#1f77b4'/>\n";
    svg.text(x0 + bar_w / 2, kHeight - kBottom + 18, bars[i].first, 11);
    svg.text(x0 + bar_w / 2, top - 5, fmt(bars[i].second), 10);
  }
  svg.save(path);
}

}  // namespace lghand
