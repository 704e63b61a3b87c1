#pragma once

#include <string>
#include <vector>

namespace cmftool {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Renders one line chart with axes, ticks, and a legend as a standalone SVG.
void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<Series>& series);

}  // namespace cmftool
