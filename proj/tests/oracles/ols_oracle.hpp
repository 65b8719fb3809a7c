#pragma once

// Closed-form simple linear regression from raw sums (normal equations),
// deliberately a different formulation than the library's centered one:
//   beta = (nΣxy − ΣxΣy) / (nΣx² − (Σx)²),  alpha = (Σy − beta·Σx)/n,
//   r² = squared Pearson correlation.

#include <cmath>
#include <utility>
#include <vector>

namespace oracle {

struct OlsFit {
    double beta, alpha, r2;
};

inline OlsFit ols(const std::vector<std::pair<double, double>>& pts) {
    double n = static_cast<double>(pts.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (const auto& [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    OlsFit fit{};
    double dx = n * sxx - sx * sx;
    fit.beta = (n * sxy - sx * sy) / dx;
    fit.alpha = (sy - fit.beta * sx) / n;
    double dy = n * syy - sy * sy;
    fit.r2 = dy == 0.0 ? 1.0 : (n * sxy - sx * sy) * (n * sxy - sx * sy) / (dx * dy);
    return fit;
}

}  // namespace oracle
