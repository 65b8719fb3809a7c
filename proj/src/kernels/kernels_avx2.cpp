// AVX2 + FMA variants of the reference kernels. This translation unit is the
// only one compiled with -mavx2 -mfma; callers reach it through the runtime
// dispatch table, never directly.

#include "mtr/kernels/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>
#include <cstring>

namespace mtr::kern {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

void axpy_v(size_t n, double a, const double* x, double* y) {
    __m256d va = _mm256_set1_pd(a);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

double dot_v(size_t n, const double* x, const double* y) {
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

void add_v(size_t n, const double* x, double* y) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) y[i] += x[i];
}

void scale_v(size_t n, double a, double* x) {
    __m256d va = _mm256_set1_pd(a);
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
    for (; i < n; ++i) x[i] *= a;
}

// Row of C accumulates broadcast(A[i,p]) * row(B,p); vectorized along n.
void gemm_nn_v(size_t m, size_t k, size_t n, const double* A, const double* B, double* C,
               bool accumulate) {
    if (!accumulate) std::memset(C, 0, m * n * sizeof(double));
    for (size_t i = 0; i < m; ++i) {
        const double* a = A + i * k;
        double* c = C + i * n;
        for (size_t p = 0; p < k; ++p) {
            axpy_v(n, a[p], B + p * n, c);
        }
    }
}

// C[i,j] = dot(row(A,i), row(B,j)); vectorized along k.
void gemm_nt_v(size_t m, size_t k, size_t n, const double* A, const double* B, double* C,
               bool accumulate) {
    for (size_t i = 0; i < m; ++i) {
        const double* a = A + i * k;
        double* c = C + i * n;
        for (size_t j = 0; j < n; ++j) {
            double acc = dot_v(k, a, B + j * k);
            c[j] = accumulate ? c[j] + acc : acc;
        }
    }
}

void gemm_tn_v(size_t m, size_t k, size_t n, const double* A, const double* B, double* C,
               bool accumulate) {
    if (!accumulate) std::memset(C, 0, m * n * sizeof(double));
    for (size_t p = 0; p < k; ++p) {
        const double* a = A + p * m;
        const double* b = B + p * n;
        for (size_t i = 0; i < m; ++i) {
            axpy_v(n, a[i], b, C + i * n);
        }
    }
}

void relu_v(size_t n, const double* x, double* y) {
    __m256d zero = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward_v(size_t n, const double* x, const double* dy, double* dx) {
    __m256d zero = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        __m256d g = _mm256_and_pd(mask, _mm256_loadu_pd(dy + i));
        _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), g));
    }
    for (; i < n; ++i)
        if (x[i] > 0.0) dx[i] += dy[i];
}

void softmax_rows_v(size_t rows, size_t cols, double* x) {
    for (size_t r = 0; r < rows; ++r) {
        double* row = x + r * cols;
        __m256d vmx = _mm256_set1_pd(-HUGE_VAL);
        size_t j = 0;
        for (; j + 4 <= cols; j += 4) vmx = _mm256_max_pd(vmx, _mm256_loadu_pd(row + j));
        double lanes[4];
        _mm256_storeu_pd(lanes, vmx);
        double mx = lanes[0];
        for (int t = 1; t < 4; ++t) mx = lanes[t] > mx ? lanes[t] : mx;
        for (; j < cols; ++j) mx = row[j] > mx ? row[j] : mx;

        // exp stays scalar for bit-comparable results; the scale is vector.
        double sum = 0.0;
        for (j = 0; j < cols; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        scale_v(cols, 1.0 / sum, row);
    }
}

void layernorm_forward_v(size_t rows, size_t cols, double eps, const double* x,
                         const double* gain, const double* bias, double* y, double* mean,
                         double* rstd) {
    const double inv_cols = 1.0 / static_cast<double>(cols);
    for (size_t r = 0; r < rows; ++r) {
        const double* xr = x + r * cols;
        double* yr = y + r * cols;
        __m256d vs = _mm256_setzero_pd();
        size_t j = 0;
        for (; j + 4 <= cols; j += 4) vs = _mm256_add_pd(vs, _mm256_loadu_pd(xr + j));
        double mu = hsum(vs);
        for (; j < cols; ++j) mu += xr[j];
        mu *= inv_cols;

        __m256d vmu = _mm256_set1_pd(mu);
        __m256d vv = _mm256_setzero_pd();
        for (j = 0; j + 4 <= cols; j += 4) {
            __m256d d = _mm256_sub_pd(_mm256_loadu_pd(xr + j), vmu);
            vv = _mm256_fmadd_pd(d, d, vv);
        }
        double var = hsum(vv);
        for (; j < cols; ++j) {
            double d = xr[j] - mu;
            var += d * d;
        }
        var *= inv_cols;
        double rs = 1.0 / std::sqrt(var + eps);
        mean[r] = mu;
        rstd[r] = rs;

        __m256d vrs = _mm256_set1_pd(rs);
        for (j = 0; j + 4 <= cols; j += 4) {
            __m256d xhat = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(xr + j), vmu), vrs);
            __m256d out = _mm256_fmadd_pd(_mm256_loadu_pd(gain + j), xhat,
                                          _mm256_loadu_pd(bias + j));
            _mm256_storeu_pd(yr + j, out);
        }
        for (; j < cols; ++j) yr[j] = gain[j] * (xr[j] - mu) * rs + bias[j];
    }
}

void layernorm_backward_v(size_t rows, size_t cols, const double* x, const double* gain,
                          const double* mean, const double* rstd, const double* dy,
                          double* dx, double* dgain, double* dbias) {
    const double inv_cols = 1.0 / static_cast<double>(cols);
    for (size_t r = 0; r < rows; ++r) {
        const double* xr = x + r * cols;
        const double* dyr = dy + r * cols;
        double* dxr = dx + r * cols;
        double mu = mean[r], rs = rstd[r];
        __m256d vmu = _mm256_set1_pd(mu), vrs = _mm256_set1_pd(rs);
        __m256d vs1 = _mm256_setzero_pd(), vs2 = _mm256_setzero_pd();
        size_t j = 0;
        for (; j + 4 <= cols; j += 4) {
            __m256d vdy = _mm256_loadu_pd(dyr + j);
            __m256d xhat = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(xr + j), vmu), vrs);
            __m256d dxhat = _mm256_mul_pd(vdy, _mm256_loadu_pd(gain + j));
            vs1 = _mm256_add_pd(vs1, dxhat);
            vs2 = _mm256_fmadd_pd(dxhat, xhat, vs2);
            _mm256_storeu_pd(dgain + j,
                             _mm256_fmadd_pd(vdy, xhat, _mm256_loadu_pd(dgain + j)));
            _mm256_storeu_pd(dbias + j, _mm256_add_pd(_mm256_loadu_pd(dbias + j), vdy));
        }
        double sum_dxhat = hsum(vs1), sum_dxhat_xhat = hsum(vs2);
        for (; j < cols; ++j) {
            double xhat = (xr[j] - mu) * rs;
            double dxhat = dyr[j] * gain[j];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat;
            dgain[j] += dyr[j] * xhat;
            dbias[j] += dyr[j];
        }

        __m256d va = _mm256_set1_pd(inv_cols * sum_dxhat);
        __m256d vb = _mm256_set1_pd(inv_cols * sum_dxhat_xhat);
        for (j = 0; j + 4 <= cols; j += 4) {
            __m256d xhat = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(xr + j), vmu), vrs);
            __m256d dxhat = _mm256_mul_pd(_mm256_loadu_pd(dyr + j), _mm256_loadu_pd(gain + j));
            __m256d t = _mm256_sub_pd(_mm256_sub_pd(dxhat, va), _mm256_mul_pd(xhat, vb));
            _mm256_storeu_pd(dxr + j, _mm256_fmadd_pd(vrs, t, _mm256_loadu_pd(dxr + j)));
        }
        for (; j < cols; ++j) {
            double xhat = (xr[j] - mu) * rs;
            double dxhat = dyr[j] * gain[j];
            dxr[j] += rs * (dxhat - inv_cols * sum_dxhat - xhat * inv_cols * sum_dxhat_xhat);
        }
    }
}

void adam_update_v(size_t n, double* param, const double* grad, double* m, double* v,
                   double lr, double beta1, double beta2, double eps, double bc1,
                   double bc2) {
    __m256d vb1 = _mm256_set1_pd(beta1), vb2 = _mm256_set1_pd(beta2);
    __m256d vo1 = _mm256_set1_pd(1.0 - beta1), vo2 = _mm256_set1_pd(1.0 - beta2);
    __m256d vibc1 = _mm256_set1_pd(1.0 / bc1), vibc2 = _mm256_set1_pd(1.0 / bc2);
    __m256d vlr = _mm256_set1_pd(lr), veps = _mm256_set1_pd(eps);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d g = _mm256_loadu_pd(grad + i);
        __m256d vm = _mm256_fmadd_pd(vo1, g, _mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)));
        __m256d vv = _mm256_fmadd_pd(vo2, _mm256_mul_pd(g, g),
                                     _mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)));
        _mm256_storeu_pd(m + i, vm);
        _mm256_storeu_pd(v + i, vv);
        __m256d mhat = _mm256_mul_pd(vm, vibc1);
        __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vv, vibc2)), veps);
        __m256d upd = _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom);
        _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), upd));
    }
    for (; i < n; ++i) {
        double g = grad[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        double mhat = m[i] / bc1;
        double vhat = v[i] / bc2;
        param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

const Kernels* avx2() {
    static const Kernels table = {
        "avx2",        axpy_v,           dot_v,
        add_v,         scale_v,          gemm_nn_v,
        gemm_nt_v,     gemm_tn_v,        relu_v,
        relu_backward_v, softmax_rows_v, layernorm_forward_v,
        layernorm_backward_v, adam_update_v,
    };
    return &table;
}

}  // namespace mtr::kern

#else

namespace mtr::kern {
const Kernels* avx2() { return nullptr; }
}  // namespace mtr::kern

#endif
