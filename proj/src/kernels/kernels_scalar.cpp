#include <cmath>
#include <cstring>

#include "mtr/kernels/kernels.hpp"

// Reference kernels. Plain loops, no tricks: these define the semantics the
// SIMD variants are tested against.

namespace mtr::kern {

namespace {

void axpy_s(size_t n, double a, const double* x, double* y) {
    for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot_s(size_t n, const double* x, const double* y) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void add_s(size_t n, const double* x, double* y) {
    for (size_t i = 0; i < n; ++i) y[i] += x[i];
}

void scale_s(size_t n, double a, double* x) {
    for (size_t i = 0; i < n; ++i) x[i] *= a;
}

void gemm_nn_s(size_t m, size_t k, size_t n, const double* A, const double* B, double* C,
               bool accumulate) {
    if (!accumulate) std::memset(C, 0, m * n * sizeof(double));
    for (size_t i = 0; i < m; ++i) {
        const double* a = A + i * k;
        double* c = C + i * n;
        for (size_t p = 0; p < k; ++p) {
            double av = a[p];
            const double* b = B + p * n;
            for (size_t j = 0; j < n; ++j) c[j] += av * b[j];
        }
    }
}

void gemm_nt_s(size_t m, size_t k, size_t n, const double* A, const double* B, double* C,
               bool accumulate) {
    for (size_t i = 0; i < m; ++i) {
        const double* a = A + i * k;
        double* c = C + i * n;
        for (size_t j = 0; j < n; ++j) {
            const double* b = B + j * k;
            double acc = 0.0;
            for (size_t p = 0; p < k; ++p) acc += a[p] * b[p];
            c[j] = accumulate ? c[j] + acc : acc;
        }
    }
}

void gemm_tn_s(size_t m, size_t k, size_t n, const double* A, const double* B, double* C,
               bool accumulate) {
    if (!accumulate) std::memset(C, 0, m * n * sizeof(double));
    for (size_t p = 0; p < k; ++p) {
        const double* a = A + p * m;
        const double* b = B + p * n;
        for (size_t i = 0; i < m; ++i) {
            double av = a[i];
            double* c = C + i * n;
            for (size_t j = 0; j < n; ++j) c[j] += av * b[j];
        }
    }
}

void relu_s(size_t n, const double* x, double* y) {
    for (size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward_s(size_t n, const double* x, const double* dy, double* dx) {
    for (size_t i = 0; i < n; ++i)
        if (x[i] > 0.0) dx[i] += dy[i];
}

void softmax_rows_s(size_t rows, size_t cols, double* x) {
    for (size_t r = 0; r < rows; ++r) {
        double* row = x + r * cols;
        double mx = row[0];
        for (size_t j = 1; j < cols; ++j) mx = row[j] > mx ? row[j] : mx;
        double sum = 0.0;
        for (size_t j = 0; j < cols; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        double inv = 1.0 / sum;
        for (size_t j = 0; j < cols; ++j) row[j] *= inv;
    }
}

void layernorm_forward_s(size_t rows, size_t cols, double eps, const double* x,
                         const double* gain, const double* bias, double* y, double* mean,
                         double* rstd) {
    for (size_t r = 0; r < rows; ++r) {
        const double* xr = x + r * cols;
        double* yr = y + r * cols;
        double mu = 0.0;
        for (size_t j = 0; j < cols; ++j) mu += xr[j];
        mu /= static_cast<double>(cols);
        double var = 0.0;
        for (size_t j = 0; j < cols; ++j) {
            double d = xr[j] - mu;
            var += d * d;
        }
        var /= static_cast<double>(cols);
        double rs = 1.0 / std::sqrt(var + eps);
        mean[r] = mu;
        rstd[r] = rs;
        for (size_t j = 0; j < cols; ++j) yr[j] = gain[j] * (xr[j] - mu) * rs + bias[j];
    }
}

void layernorm_backward_s(size_t rows, size_t cols, const double* x, const double* gain,
                          const double* mean, const double* rstd, const double* dy,
                          double* dx, double* dgain, double* dbias) {
    const double inv_cols = 1.0 / static_cast<double>(cols);
    for (size_t r = 0; r < rows; ++r) {
        const double* xr = x + r * cols;
        const double* dyr = dy + r * cols;
        double* dxr = dx + r * cols;
        double mu = mean[r], rs = rstd[r];
        // Two row reductions, then the standard layer-norm gradient.
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (size_t j = 0; j < cols; ++j) {
            double xhat = (xr[j] - mu) * rs;
            double dxhat = dyr[j] * gain[j];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat;
            dgain[j] += dyr[j] * xhat;
            dbias[j] += dyr[j];
        }
        for (size_t j = 0; j < cols; ++j) {
            double xhat = (xr[j] - mu) * rs;
            double dxhat = dyr[j] * gain[j];
            dxr[j] += rs * (dxhat - inv_cols * sum_dxhat - xhat * inv_cols * sum_dxhat_xhat);
        }
    }
}

void adam_update_s(size_t n, double* param, const double* grad, double* m, double* v,
                   double lr, double beta1, double beta2, double eps, double bc1,
                   double bc2) {
    for (size_t i = 0; i < n; ++i) {
        double g = grad[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        double mhat = m[i] / bc1;
        double vhat = v[i] / bc2;
        param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

const Kernels& scalar() {
    static const Kernels table = {
        "scalar",      axpy_s,           dot_s,
        add_s,         scale_s,          gemm_nn_s,
        gemm_nt_s,     gemm_tn_s,        relu_s,
        relu_backward_s, softmax_rows_s, layernorm_forward_s,
        layernorm_backward_s, adam_update_s,
    };
    return table;
}

}  // namespace mtr::kern
