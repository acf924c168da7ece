// AVX2+FMA kernel variants. Compiled with -mavx2 -mfma on x86; the dispatcher
// only routes here after a runtime CPU check. Reduction order is fixed
// (4 lanes, in-order tail), so results are reproducible run to run.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cstddef>

namespace moquad::kernels::avx2 {

namespace {

inline double hadd(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
    const std::size_t body = n & ~std::size_t(3);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    }
    double r = hadd(acc);
    for (std::size_t i = body; i < n; ++i) r += a[i] * b[i];
    return r;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const std::size_t body = n & ~std::size_t(3);
    const __m256d va = _mm256_set1_pd(alpha);
    for (std::size_t i = 0; i < body; i += 4) {
        const __m256d r =
            _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, r);
    }
    for (std::size_t i = body; i < n; ++i) y[i] += alpha * x[i];
}

void mix(double wa, const double* a, double wb, const double* b, double* out,
         std::size_t n) {
    const std::size_t body = n & ~std::size_t(3);
    const __m256d vwa = _mm256_set1_pd(wa);
    const __m256d vwb = _mm256_set1_pd(wb);
    for (std::size_t i = 0; i < body; i += 4) {
        const __m256d r = _mm256_fmadd_pd(
            vwa, _mm256_loadu_pd(a + i), _mm256_mul_pd(vwb, _mm256_loadu_pd(b + i)));
        _mm256_storeu_pd(out + i, r);
    }
    for (std::size_t i = body; i < n; ++i) out[i] = wa * a[i] + wb * b[i];
}

void scale(double alpha, double* y, std::size_t n) {
    const std::size_t body = n & ~std::size_t(3);
    const __m256d va = _mm256_set1_pd(alpha);
    for (std::size_t i = 0; i < body; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_mul_pd(va, _mm256_loadu_pd(y + i)));
    }
    for (std::size_t i = body; i < n; ++i) y[i] *= alpha;
}

double sum(const double* x, std::size_t n) {
    const std::size_t body = n & ~std::size_t(3);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    }
    double r = hadd(acc);
    for (std::size_t i = body; i < n; ++i) r += x[i];
    return r;
}

void relu(const double* x, double* out, std::size_t n) {
    const std::size_t body = n & ~std::size_t(3);
    const __m256d zero = _mm256_setzero_pd();
    for (std::size_t i = 0; i < body; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    }
    for (std::size_t i = body; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

}  // namespace moquad::kernels::avx2

#endif  // x86-64
