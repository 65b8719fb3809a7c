#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "mtr/kernels/kernels.hpp"
#include "mtr/util/rng.hpp"

using namespace mtr;
using kern::Kernels;

namespace {

std::vector<double> random_vec(Rng& rng, size_t n, double lo = -2.0, double hi = 2.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = lo + (hi - lo) * rng.unit();
    return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

// Sizes straddling the 4-lane boundary so both vector body and tail run.
constexpr size_t kSizes[] = {1, 2, 3, 4, 5, 7, 8, 13, 16, 31, 64, 100};

}  // namespace

TEST_CASE("scalar gemm_nn matches naive index-form oracle") {
    Rng rng(11);
    const auto& K = kern::scalar();
    for (size_t m : {1u, 3u, 5u}) {
        for (size_t k : {1u, 4u, 7u}) {
            for (size_t n : {2u, 5u, 9u}) {
                auto A = random_vec(rng, m * k);
                auto B = random_vec(rng, k * n);
                std::vector<double> C(m * n, 0.0), Cref(m * n, 0.0);
                K.gemm_nn(m, k, n, A.data(), B.data(), C.data(), false);
                for (size_t i = 0; i < m; ++i)
                    for (size_t j = 0; j < n; ++j)
                        for (size_t p = 0; p < k; ++p)
                            Cref[i * n + j] += A[i * k + p] * B[p * n + j];
                CHECK(max_abs_diff(C, Cref) < 1e-12);
            }
        }
    }
}

TEST_CASE("gemm transpose variants agree with explicit transposition") {
    Rng rng(12);
    const auto& K = kern::scalar();
    size_t m = 5, k = 7, n = 4;
    auto A = random_vec(rng, m * k);
    auto B = random_vec(rng, n * k);   // for nt
    auto At = random_vec(rng, k * m);  // for tn
    auto B2 = random_vec(rng, k * n);

    std::vector<double> C1(m * n), C2(m * n, 0.0);
    K.gemm_nt(m, k, n, A.data(), B.data(), C1.data(), false);
    std::vector<double> Bt(k * n);
    for (size_t j = 0; j < n; ++j)
        for (size_t p = 0; p < k; ++p) Bt[p * n + j] = B[j * k + p];
    K.gemm_nn(m, k, n, A.data(), Bt.data(), C2.data(), false);
    CHECK(max_abs_diff(C1, C2) < 1e-12);

    K.gemm_tn(m, k, n, At.data(), B2.data(), C1.data(), false);
    std::vector<double> Ant(m * k);
    for (size_t i = 0; i < m; ++i)
        for (size_t p = 0; p < k; ++p) Ant[i * k + p] = At[p * m + i];
    K.gemm_nn(m, k, n, Ant.data(), B2.data(), C2.data(), false);
    CHECK(max_abs_diff(C1, C2) < 1e-12);
}

TEST_CASE("softmax rows are normalized, monotone, stable under shift") {
    Rng rng(13);
    const auto& K = kern::scalar();
    size_t rows = 6, cols = 31;
    auto x = random_vec(rng, rows * cols, -30.0, 30.0);
    auto y = x;
    K.softmax_rows(rows, cols, y.data());
    for (size_t r = 0; r < rows; ++r) {
        double sum = 0.0;
        for (size_t j = 0; j < cols; ++j) {
            CHECK(y[r * cols + j] >= 0.0);
            sum += y[r * cols + j];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    // Shifting a row by a constant leaves softmax unchanged.
    auto shifted = x;
    for (size_t j = 0; j < cols; ++j) shifted[j] += 123.0;
    K.softmax_rows(1, cols, shifted.data());
    std::vector<double> row0(y.begin(), y.begin() + cols);
    std::vector<double> row0s(shifted.begin(), shifted.begin() + cols);
    CHECK(max_abs_diff(row0, row0s) < 1e-12);
}

TEST_CASE("layernorm forward normalizes rows") {
    Rng rng(14);
    const auto& K = kern::scalar();
    size_t rows = 4, cols = 13;
    auto x = random_vec(rng, rows * cols);
    std::vector<double> gain(cols, 1.0), bias(cols, 0.0);
    std::vector<double> y(rows * cols), mean(rows), rstd(rows);
    K.layernorm_forward(rows, cols, 1e-5, x.data(), gain.data(), bias.data(), y.data(),
                        mean.data(), rstd.data());
    for (size_t r = 0; r < rows; ++r) {
        double mu = 0.0, var = 0.0;
        for (size_t j = 0; j < cols; ++j) mu += y[r * cols + j];
        mu /= cols;
        for (size_t j = 0; j < cols; ++j) {
            double d = y[r * cols + j] - mu;
            var += d * d;
        }
        var /= cols;
        CHECK(std::fabs(mu) < 1e-12);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("avx2 variants match scalar reference" *
          doctest::skip(kern::avx2() == nullptr || !kern::avx2_runtime_supported())) {
    const Kernels& S = kern::scalar();
    const Kernels* Vp = kern::avx2();
    REQUIRE(Vp != nullptr);
    const Kernels& V = *Vp;
    Rng rng(99);

    for (size_t n : kSizes) {
        CAPTURE(n);
        auto x = random_vec(rng, n);
        auto y0 = random_vec(rng, n);

        SUBCASE("") {}
        {
            auto ys = y0, yv = y0;
            S.axpy(n, 1.7, x.data(), ys.data());
            V.axpy(n, 1.7, x.data(), yv.data());
            CHECK(max_abs_diff(ys, yv) < 1e-13);
        }
        {
            double ds = S.dot(n, x.data(), y0.data());
            double dv = V.dot(n, x.data(), y0.data());
            CHECK(ds == doctest::Approx(dv).epsilon(1e-12));
        }
        {
            auto ys = y0, yv = y0;
            S.add(n, x.data(), ys.data());
            V.add(n, x.data(), yv.data());
            CHECK(max_abs_diff(ys, yv) == 0.0);
            S.scale(n, 0.37, ys.data());
            V.scale(n, 0.37, yv.data());
            CHECK(max_abs_diff(ys, yv) == 0.0);
        }
        {
            auto rs = x, rv = x;
            S.relu(n, x.data(), rs.data());
            V.relu(n, x.data(), rv.data());
            CHECK(max_abs_diff(rs, rv) == 0.0);
            auto dxs = y0, dxv = y0;
            S.relu_backward(n, x.data(), y0.data(), dxs.data());
            V.relu_backward(n, x.data(), y0.data(), dxv.data());
            CHECK(max_abs_diff(dxs, dxv) == 0.0);
        }
        {
            auto p1 = x, p2 = x, g = y0;
            std::vector<double> m1(n, 0.1), v1(n, 0.2), m2(n, 0.1), v2(n, 0.2);
            S.adam_update(n, p1.data(), g.data(), m1.data(), v1.data(), 1e-3, 0.9, 0.98,
                          1e-9, 0.1, 0.02);
            V.adam_update(n, p2.data(), g.data(), m2.data(), v2.data(), 1e-3, 0.9, 0.98,
                          1e-9, 0.1, 0.02);
            CHECK(max_abs_diff(p1, p2) < 1e-15);
            CHECK(max_abs_diff(m1, m2) < 1e-15);
            CHECK(max_abs_diff(v1, v2) < 1e-15);
        }
    }

    for (size_t m : {1u, 3u, 8u}) {
        for (size_t k : {1u, 5u, 16u}) {
            for (size_t n : {1u, 7u, 12u}) {
                CAPTURE(m);
                CAPTURE(k);
                CAPTURE(n);
                auto A = random_vec(rng, m * k);
                auto B1 = random_vec(rng, k * n);
                auto B2 = random_vec(rng, n * k);
                auto A2 = random_vec(rng, k * m);
                std::vector<double> Cs(m * n, 0.5), Cv(m * n, 0.5);

                S.gemm_nn(m, k, n, A.data(), B1.data(), Cs.data(), true);
                V.gemm_nn(m, k, n, A.data(), B1.data(), Cv.data(), true);
                CHECK(max_abs_diff(Cs, Cv) < 1e-12);

                S.gemm_nt(m, k, n, A.data(), B2.data(), Cs.data(), false);
                V.gemm_nt(m, k, n, A.data(), B2.data(), Cv.data(), false);
                CHECK(max_abs_diff(Cs, Cv) < 1e-12);

                S.gemm_tn(m, k, n, A2.data(), B1.data(), Cs.data(), false);
                V.gemm_tn(m, k, n, A2.data(), B1.data(), Cv.data(), false);
                CHECK(max_abs_diff(Cs, Cv) < 1e-12);
            }
        }
    }

    for (size_t cols : {3u, 4u, 13u, 64u}) {
        size_t rows = 5;
        CAPTURE(cols);
        auto x = random_vec(rng, rows * cols, -20.0, 20.0);
        auto xs = x, xv = x;
        S.softmax_rows(rows, cols, xs.data());
        V.softmax_rows(rows, cols, xv.data());
        CHECK(max_abs_diff(xs, xv) < 1e-13);

        auto gain = random_vec(rng, cols, 0.5, 1.5);
        auto bias = random_vec(rng, cols, -0.5, 0.5);
        std::vector<double> ys(rows * cols), yv(rows * cols);
        std::vector<double> means(rows), rstds(rows), meanv(rows), rstdv(rows);
        S.layernorm_forward(rows, cols, 1e-5, x.data(), gain.data(), bias.data(), ys.data(),
                            means.data(), rstds.data());
        V.layernorm_forward(rows, cols, 1e-5, x.data(), gain.data(), bias.data(), yv.data(),
                            meanv.data(), rstdv.data());
        CHECK(max_abs_diff(ys, yv) < 1e-12);

        auto dy = random_vec(rng, rows * cols);
        std::vector<double> dxs(rows * cols, 0.0), dxv(rows * cols, 0.0);
        std::vector<double> dgs(cols, 0.0), dgv(cols, 0.0), dbs(cols, 0.0), dbv(cols, 0.0);
        S.layernorm_backward(rows, cols, x.data(), gain.data(), means.data(), rstds.data(),
                             dy.data(), dxs.data(), dgs.data(), dbs.data());
        V.layernorm_backward(rows, cols, x.data(), gain.data(), meanv.data(), rstdv.data(),
                             dy.data(), dxv.data(), dgv.data(), dbv.data());
        CHECK(max_abs_diff(dxs, dxv) < 1e-12);
        CHECK(max_abs_diff(dgs, dgv) < 1e-12);
        CHECK(max_abs_diff(dbs, dbv) < 1e-12);
    }
}

TEST_CASE("dispatch honors force_scalar") {
    kern::force_scalar(true);
    CHECK(std::string(kern::active().name) == "scalar");
    kern::force_scalar(false);
    if (kern::avx2_runtime_supported() && kern::avx2() != nullptr)
        CHECK(std::string(kern::active().name) == "avx2");
}
