#include "moquad/kernels.hpp"

#include <atomic>

#include "moquad/common.hpp"

namespace moquad::kernels {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void mix(double wa, const double* a, double wb, const double* b, double* out,
         std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = wa * a[i] + wb * b[i];
}

void scale(double alpha, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] *= alpha;
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

void relu(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define MOQUAD_X86 1
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void mix(double wa, const double* a, double wb, const double* b, double* out,
         std::size_t n);
void scale(double alpha, double* y, std::size_t n);
double sum(const double* x, std::size_t n);
void relu(const double* x, double* out, std::size_t n);
}  // namespace avx2
#endif

namespace {

struct Dispatch {
    Backend backend;
    double (*dot)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*mix)(double, const double*, double, const double*, double*, std::size_t);
    void (*scale)(double, double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    void (*relu)(const double*, double*, std::size_t);
};

constexpr Dispatch kScalar{Backend::Scalar, scalar::dot,   scalar::axpy,
                           scalar::mix,     scalar::scale, scalar::sum,
                           scalar::relu};

#ifdef MOQUAD_X86
constexpr Dispatch kAvx2{Backend::Avx2, avx2::dot,   avx2::axpy, avx2::mix,
                         avx2::scale,   avx2::sum,   avx2::relu};
#endif

bool detect_avx2() {
#ifdef MOQUAD_X86
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

std::atomic<const Dispatch*> g_dispatch{nullptr};

const Dispatch* current() {
    const Dispatch* d = g_dispatch.load(std::memory_order_acquire);
    if (d) return d;
#ifdef MOQUAD_X86
    d = detect_avx2() ? &kAvx2 : &kScalar;
#else
    d = &kScalar;
#endif
    g_dispatch.store(d, std::memory_order_release);
    return d;
}

}  // namespace

bool avx2_supported() { return detect_avx2(); }

Backend active_backend() { return current()->backend; }

const char* backend_name(Backend b) {
    return b == Backend::Avx2 ? "avx2" : "scalar";
}

void force_backend(Backend b) {
    if (b == Backend::Scalar) {
        g_dispatch.store(&kScalar, std::memory_order_release);
        return;
    }
#ifdef MOQUAD_X86
    if (detect_avx2()) {
        g_dispatch.store(&kAvx2, std::memory_order_release);
        return;
    }
#endif
    throw ConfigError("kernels: avx2 backend requested but the CPU does not support it");
}

double dot(const double* a, const double* b, std::size_t n) {
    return current()->dot(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    current()->axpy(alpha, x, y, n);
}

void mix(double wa, const double* a, double wb, const double* b, double* out,
         std::size_t n) {
    current()->mix(wa, a, wb, b, out, n);
}

void scale(double alpha, double* y, std::size_t n) {
    current()->scale(alpha, y, n);
}

double sum(const double* x, std::size_t n) { return current()->sum(x, n); }

void relu(const double* x, double* out, std::size_t n) {
    current()->relu(x, out, n);
}

void matvec(const double* w, const double* x, double* y, std::size_t rows,
            std::size_t cols) {
    const Dispatch* d = current();
    for (std::size_t r = 0; r < rows; ++r) y[r] = d->dot(w + r * cols, x, cols);
}

void matvec_t_accum(const double* w, const double* g, double* y,
                    std::size_t rows, std::size_t cols) {
    const Dispatch* d = current();
    for (std::size_t r = 0; r < rows; ++r) d->axpy(g[r], w + r * cols, y, cols);
}

void ger_accum(const double* g, const double* x, double* w, std::size_t rows,
               std::size_t cols) {
    const Dispatch* d = current();
    for (std::size_t r = 0; r < rows; ++r) d->axpy(g[r], x, w + r * cols, cols);
}

}  // namespace moquad::kernels
