#pragma once

#include <string>
#include <utility>
#include <vector>

namespace lghand {

/// Minimal static SVG charts for the evaluation artifacts.
void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::string& x_label,
                          const std::string& y_label,
                          const std::vector<std::pair<double, double>>& points);

void write_bar_chart_svg(
    const std::string& path, const std::string& title,
    const std::string& y_label,
    const std::vector<std::pair<std::string, double>>& bars);

}  // namespace lghand
