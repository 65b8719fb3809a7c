#pragma once

#include <cstddef>

namespace mtr::kern {

/// Data-parallel inner loops of the model, double precision, row-major.
///
/// Every entry has a scalar reference implementation and an AVX2 variant;
/// `active()` picks the widest supported one at runtime. The scalar table is
/// the semantic reference: SIMD variants must agree with it to tight
/// tolerance (they may reassociate reductions), which the kernel tests
/// enforce pairwise.
struct Kernels {
    const char* name;

    /// y[i] += a * x[i]
    void (*axpy)(size_t n, double a, const double* x, double* y);
    double (*dot)(size_t n, const double* x, const double* y);
    /// y[i] += x[i]
    void (*add)(size_t n, const double* x, double* y);
    /// x[i] *= a
    void (*scale)(size_t n, double a, double* x);

    /// C[m,n] = A[m,k] * B[k,n]         (+C if accumulate)
    void (*gemm_nn)(size_t m, size_t k, size_t n, const double* A, const double* B,
                    double* C, bool accumulate);
    /// C[m,n] = A[m,k] * B[n,k]^T       (+C if accumulate)
    void (*gemm_nt)(size_t m, size_t k, size_t n, const double* A, const double* B,
                    double* C, bool accumulate);
    /// C[m,n] = A[k,m]^T * B[k,n]       (+C if accumulate)
    void (*gemm_tn)(size_t m, size_t k, size_t n, const double* A, const double* B,
                    double* C, bool accumulate);

    void (*relu)(size_t n, const double* x, double* y);
    /// dx[i] += dy[i] * (x[i] > 0)
    void (*relu_backward)(size_t n, const double* x, const double* dy, double* dx);

    /// Row-wise numerically stable softmax, in place. Rows are independent.
    void (*softmax_rows)(size_t rows, size_t cols, double* x);

    /// y = gain * (x - mean(x)) * rstd + bias, per row; mean/rstd written out
    /// for the backward pass. rstd = 1/sqrt(var + eps).
    void (*layernorm_forward)(size_t rows, size_t cols, double eps, const double* x,
                              const double* gain, const double* bias, double* y,
                              double* mean, double* rstd);
    /// Accumulates into dx, dgain, dbias.
    void (*layernorm_backward)(size_t rows, size_t cols, const double* x,
                               const double* gain, const double* mean, const double* rstd,
                               const double* dy, double* dx, double* dgain, double* dbias);

    /// Adam step with precomputed bias corrections bc1 = 1-beta1^t, bc2 = 1-beta2^t.
    void (*adam_update)(size_t n, double* param, const double* grad, double* m, double* v,
                        double lr, double beta1, double beta2, double eps, double bc1,
                        double bc2);
};

const Kernels& scalar();

/// nullptr when the binary was built without AVX2 support.
const Kernels* avx2();

/// Widest supported table, honoring force_scalar() and MTR_FORCE_SCALAR=1.
const Kernels& active();

void force_scalar(bool on);
bool avx2_runtime_supported();

}  // namespace mtr::kern
