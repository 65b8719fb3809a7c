#pragma once

#include <string>
#include <utility>
#include <vector>

namespace mtr {

/// Pixel mapping of a chart's plot area. Exposed so tests can verify that
/// rendered elements land where the data says they should.
struct ChartGeometry {
    double width = 640.0, height = 400.0;
    double left = 62.0, right = 18.0, top = 34.0, bottom = 46.0;  // margins
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;    // data ranges

    double plot_w() const { return width - left - right; }
    double plot_h() const { return height - top - bottom; }
    double x_of(double x) const { return left + (x - x_min) / (x_max - x_min) * plot_w(); }
    double y_of(double y) const { return top + (y_max - y) / (y_max - y_min) * plot_h(); }
};

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;  // (x, y), plotted in order
};

/// A least-squares line y = alpha + beta*x drawn across the data's x range.
struct FitLine {
    std::string label;
    double beta = 0.0;
    double alpha = 0.0;
};

struct Chart {
    std::string svg;
    ChartGeometry geom;
};

/// Line chart with optional fitted lines (class="fit" in the output). The x
/// range is exactly the data range, so a fit line's endpoints render at
/// (x_min, alpha + beta*x_min) and (x_max, alpha + beta*x_max).
Chart line_chart(const std::string& title, const std::string& x_label,
                 const std::string& y_label, const std::vector<Series>& series,
                 const std::vector<FitLine>& fits = {});

/// One bar per label.
Chart bar_chart(const std::string& title, const std::string& y_label,
                const std::vector<std::string>& labels, const std::vector<double>& values);

/// Bars clustered by category; values[category][group].
Chart grouped_bar_chart(const std::string& title, const std::string& y_label,
                        const std::vector<std::string>& categories,
                        const std::vector<std::string>& groups,
                        const std::vector<std::vector<double>>& values);

}  // namespace mtr
