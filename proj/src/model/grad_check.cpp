#include "mtr/model/grad_check.hpp"

#include <cmath>

#include "mtr/util/error.hpp"

namespace mtr {

namespace {

constexpr double kSmoothing = 0.1;

double batch_loss(Transformer& model, const PairCorpus& batch) {
    double loss = 0.0;
    for (const auto& [src, tgt] : batch) loss += model.eval_loss(src, tgt, kSmoothing);
    return loss;
}

}  // namespace

GradCheckResult grad_check(Transformer& model, const PairCorpus& batch, double epsilon,
                           size_t min_coords) {
    if (batch.empty()) throw Error("gradient check needs at least one sentence pair");
    if (!(epsilon > 0.0)) throw Error("epsilon must be positive");

    model.zero_grads();
    double base = 0.0;
    for (const auto& [src, tgt] : batch) {
        base += model.forward_backward(src, tgt, kSmoothing, nullptr);
    }
    if (!std::isfinite(base)) throw Error("non-finite loss in gradient check");

    size_t total = model.param_count();
    GradCheckResult r;
    for (auto& [name, t] : model.params()) {
        // even per-tensor share of the budget, at least one coordinate
        size_t want = std::max<size_t>(
            1, (min_coords * t.numel() + total - 1) / total);
        want = std::min(want, t.numel());
        for (size_t k = 0; k < want; ++k) {
            size_t idx = k * t.numel() / want;  // evenly spaced
            double saved = t.v[idx];
            t.v[idx] = saved + epsilon;
            double up = batch_loss(model, batch);
            t.v[idx] = saved - epsilon;
            double down = batch_loss(model, batch);
            t.v[idx] = saved;
            if (!std::isfinite(up) || !std::isfinite(down)) {
                throw Error("non-finite loss while perturbing '" + name + "'");
            }
            double fd = (up - down) / (2.0 * epsilon);
            double g = t.g[idx];
            // The denominator floor is atol/rtol for rtol = 1e-4: key-projection
            // biases have a true gradient of exactly zero (softmax is invariant to
            // a constant shift of the scores in a row), so the finite difference
            // measures only ulp-level cancellation noise there.  A floor below
            // that noise scale would turn agreement into spurious error.
            double rel = std::abs(g - fd) / std::max(1e-5, std::abs(g) + std::abs(fd));
            if (rel > r.max_rel_err) r.max_rel_err = rel;
            ++r.coords;
        }
    }
    return r;
}

}  // namespace mtr
