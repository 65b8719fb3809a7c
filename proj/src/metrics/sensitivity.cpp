#include "mtr/metrics/sensitivity.hpp"

#include <cmath>

#include "mtr/util/error.hpp"

namespace mtr {

SensitivityFit fit_sensitivity(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) fail("sensitivity fit needs at least two points");
    bool distinct = false;
    for (const auto& [p, _] : points) {
        if (p != points[0].first) distinct = true;
    }
    if (!distinct) fail("sensitivity fit needs at least two distinct p values");

    const double n = static_cast<double>(points.size());
    double mean_x = 0.0, mean_y = 0.0;
    for (const auto& [x, y] : points) {
        mean_x += x;
        mean_y += y;
    }
    mean_x /= n;
    mean_y /= n;

    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : points) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }

    SensitivityFit fit;
    fit.beta = sxy / sxx;
    fit.alpha = mean_y - fit.beta * mean_x;

    double ss_res = 0.0, ss_tot = 0.0;
    for (const auto& [x, y] : points) {
        double e = y - (fit.alpha + fit.beta * x);
        ss_res += e * e;
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    if (ss_res == 0.0 || ss_tot == 0.0) {
        // collinear (or constant-y) data: the line is exact
        fit.r2 = 1.0;
    } else {
        fit.r2 = 1.0 - ss_res / ss_tot;
        if (fit.r2 < 0.0) fit.r2 = 0.0;
        if (fit.r2 > 1.0) fit.r2 = 1.0;
    }
    return fit;
}

}  // namespace mtr
