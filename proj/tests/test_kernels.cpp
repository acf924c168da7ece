#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "moquad/kernels.hpp"
#include "moquad/rng.hpp"

using namespace moquad;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng, double lo = -2.0, double hi = 2.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

// Sizes crossing the 4-lane boundary plus the scalar tail.
const std::vector<std::size_t> kSizes = {0, 1, 2, 3, 4, 5, 7, 8, 13, 64, 67, 255, 1024};

}  // namespace

TEST_CASE("scalar and avx2 variants agree") {
    if (!kernels::avx2_supported()) {
        MESSAGE("avx2 not available on this CPU; dispatch test skipped");
        return;
    }

    Rng rng(7);
    for (const std::size_t n : kSizes) {
        const auto a = random_vec(n, rng);
        const auto b = random_vec(n, rng);

        kernels::force_backend(kernels::Backend::Scalar);
        const double dot_s = kernels::dot(a.data(), b.data(), n);
        const double sum_s = kernels::sum(a.data(), n);
        std::vector<double> axpy_s = b;
        kernels::axpy(0.37, a.data(), axpy_s.data(), n);
        std::vector<double> mix_s(n);
        kernels::mix(0.7, a.data(), 0.3, b.data(), mix_s.data(), n);
        std::vector<double> scale_s = a;
        kernels::scale(-1.25, scale_s.data(), n);
        std::vector<double> relu_s(n);
        kernels::relu(a.data(), relu_s.data(), n);

        kernels::force_backend(kernels::Backend::Avx2);
        const double dot_v = kernels::dot(a.data(), b.data(), n);
        const double sum_v = kernels::sum(a.data(), n);
        std::vector<double> axpy_v = b;
        kernels::axpy(0.37, a.data(), axpy_v.data(), n);
        std::vector<double> mix_v(n);
        kernels::mix(0.7, a.data(), 0.3, b.data(), mix_v.data(), n);
        std::vector<double> scale_v = a;
        kernels::scale(-1.25, scale_v.data(), n);
        std::vector<double> relu_v(n);
        kernels::relu(a.data(), relu_v.data(), n);

        // Reductions reassociate; elementwise ops differ by at most an fma
        // rounding.
        CHECK(dot_v == doctest::Approx(dot_s).epsilon(1e-13));
        CHECK(sum_v == doctest::Approx(sum_s).epsilon(1e-13));
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(axpy_v[i] - axpy_s[i]) <= 1e-15);
            CHECK(std::abs(mix_v[i] - mix_s[i]) <= 1e-15);
            CHECK(scale_v[i] == scale_s[i]);
            CHECK(relu_v[i] == relu_s[i]);
        }
    }
    kernels::force_backend(kernels::Backend::Scalar);
}

TEST_CASE("dot matches a hand computation") {
    const std::vector<double> a = {1.0, 2.0, 3.0};
    const std::vector<double> b = {4.0, 5.0, 6.0};
    CHECK(kernels::dot(a.data(), b.data(), 3) == doctest::Approx(32.0));
}

TEST_CASE("matvec and its transpose are consistent with ger") {
    Rng rng(99);
    const std::size_t rows = 5, cols = 7;
    const auto w = random_vec(rows * cols, rng);
    const auto x = random_vec(cols, rng);
    const auto g = random_vec(rows, rng);

    std::vector<double> y(rows);
    kernels::matvec(w.data(), x.data(), y.data(), rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += w[r * cols + c] * x[c];
        CHECK(y[r] == doctest::Approx(acc).epsilon(1e-14));
    }

    // <g, W x> == <W^T g, x>
    std::vector<double> wtg(cols, 0.0);
    kernels::matvec_t_accum(w.data(), g.data(), wtg.data(), rows, cols);
    const double lhs = kernels::dot(g.data(), y.data(), rows);
    const double rhs = kernels::dot(wtg.data(), x.data(), cols);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));

    // ger accumulates the outer product.
    std::vector<double> w2(rows * cols, 0.0);
    kernels::ger_accum(g.data(), x.data(), w2.data(), rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            CHECK(w2[r * cols + c] == doctest::Approx(g[r] * x[c]));
}

TEST_CASE("relu clamps negatives only") {
    const std::vector<double> x = {-1.0, 0.0, 2.5, -0.0};
    std::vector<double> out(4);
    kernels::relu(x.data(), out.data(), 4);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
    CHECK(out[2] == 2.5);
    CHECK(out[3] == 0.0);
}

TEST_CASE("forcing an unsupported backend throws") {
    if (kernels::avx2_supported()) {
        kernels::force_backend(kernels::Backend::Avx2);
        CHECK(kernels::active_backend() == kernels::Backend::Avx2);
    }
    kernels::force_backend(kernels::Backend::Scalar);
    CHECK(kernels::active_backend() == kernels::Backend::Scalar);
}
