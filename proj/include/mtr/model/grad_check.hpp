#pragma once

#include <cstddef>

#include "mtr/model/trainer.hpp"
#include "mtr/model/transformer.hpp"

namespace mtr {

struct GradCheckResult {
    double max_rel_err = 0.0;
    size_t coords = 0;  // coordinates actually probed
};

/// Compares the analytic gradient of the summed batch loss against central
/// finite differences. Coordinates are sampled evenly from every parameter
/// tensor (at least one per tensor, at least min_coords overall), so
/// layer-norm gains and transparent-attention logits are always covered.
/// Relative error per coordinate: |g - fd| / max(1e-5, |g| + |fd|); the
/// denominator floor absorbs pure ulp noise on coordinates whose true
/// gradient is zero (key-projection biases). Dropout must be off; runs with
/// label smoothing 0.1. Throws on non-finite values.
GradCheckResult grad_check(Transformer& model, const PairCorpus& batch, double epsilon,
                           size_t min_coords = 200);

}  // namespace mtr
