#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace mtr {

/// Named model parameter: row-major double values plus a gradient buffer of
/// the same shape. Activations use plain vectors; this type is only for
/// trainable state, so every tensor here shows up in checkpoints, in the
/// optimizer, and in finite-difference sweeps.
struct Tensor {
    std::vector<size_t> dims;
    std::vector<double> v;
    std::vector<double> g;

    Tensor() = default;
    explicit Tensor(std::vector<size_t> d) : dims(std::move(d)) {
        v.assign(numel(), 0.0);
        g.assign(numel(), 0.0);
    }

    size_t numel() const {
        size_t n = 1;
        for (size_t d : dims) n *= d;
        return n;
    }

    size_t rows() const { return dims.empty() ? 0 : dims[0]; }
    size_t cols() const { return dims.size() < 2 ? 1 : dims[1]; }

    void zero_grad() { std::fill(g.begin(), g.end(), 0.0); }

    bool same_shape(const Tensor& o) const { return dims == o.dims; }
};

}  // namespace mtr
