#pragma once

#include <utility>
#include <vector>

namespace mtr {

/// Least-squares line BLEU ≈ beta·p + alpha over noise probabilities p in
/// [0,1]. beta is per unit p, so beta = −100 means one BLEU point lost per
/// percentage point of noise; magnitudes closer to 0 mean more robust.
struct SensitivityFit {
    double beta = 0.0;
    double alpha = 0.0;
    double r2 = 0.0;
};

/// Ordinary least squares over (p, bleu) points. Errors unless at least two
/// points with at least two distinct p values are given. Exact on collinear
/// input: residuals vanish and r2 is exactly 1.
SensitivityFit fit_sensitivity(const std::vector<std::pair<double, double>>& points);

}  // namespace mtr
