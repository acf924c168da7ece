#pragma once

#include <cstddef>

namespace moquad::kernels {

// Dense double-precision primitives behind the training loop's inner loops
// (similarity matrices, MLP mat-vec products, blend/update sweeps).
//
// Each primitive has a scalar reference implementation and an AVX2+FMA
// variant; the backend is picked once at runtime from CPU capabilities and
// can be pinned explicitly (the CLI's --deterministic mode pins Scalar so
// results are bit-reproducible across machines). Within one process and
// backend every kernel is deterministic: fixed iteration order, fixed
// reduction tree.

enum class Backend { Scalar, Avx2 };

// Backend currently in use.
Backend active_backend();
const char* backend_name(Backend b);

// Pin a backend. Throws ConfigError if the CPU lacks support for it.
void force_backend(Backend b);

// True if the running CPU can execute the AVX2 variants.
bool avx2_supported();

// sum_i a[i] * b[i]
double dot(const double* a, const double* b, std::size_t n);

// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);

// out[i] = wa * a[i] + wb * b[i]
void mix(double wa, const double* a, double wb, const double* b, double* out,
         std::size_t n);

// y[i] *= alpha
void scale(double alpha, double* y, std::size_t n);

// sum_i x[i]
double sum(const double* x, std::size_t n);

// out[i] = max(x[i], 0)
void relu(const double* x, double* out, std::size_t n);

// Compositions over the primitives (row-major W, rows x cols).
// y = W x
void matvec(const double* w, const double* x, double* y, std::size_t rows,
            std::size_t cols);
// y += W^T g
void matvec_t_accum(const double* w, const double* g, double* y,
                    std::size_t rows, std::size_t cols);
// W += g x^T
void ger_accum(const double* g, const double* x, double* w, std::size_t rows,
               std::size_t cols);

}  // namespace moquad::kernels
