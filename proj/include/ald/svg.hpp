#pragma once

#include <string>
#include <vector>

namespace ald {

struct ChartSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    std::vector<ChartSeries> series;
    /// Horizontal dashed guides, e.g. y = 1 on a variance profile.
    std::vector<double> guides;
};

/// Standalone SVG document. On a log axis, nonpositive or non-finite points
/// are skipped and break the polyline.
std::string render_svg(const LineChart& chart);

}  // namespace ald
