#pragma once

#include <cstddef>

// Dense arithmetic kernels used by the matrix and tape layers.
//
// Every operation has a scalar reference implementation and, where the
// loop is data-parallel, an AVX2 (x86-64) or NEON (aarch64) variant that
// is selected once at startup.  The SIMD variants perform the exact same
// per-element operation sequence as the scalar kernels (no FMA, no
// reassociation of accumulations), so all lanes produce bit-identical
// results.  Order-sensitive reductions (dot products, norms) live with
// their callers and stay scalar.

namespace plgnn::kernels {

enum class Backend { scalar, avx2, neon };

Backend active_backend();
bool backend_available(Backend b);
const char* backend_name(Backend b);

// Switch lanes at runtime (equivalence tests). Throws std::invalid_argument
// if the requested backend is not available on this machine.
void force_backend(Backend b);

// out = a op b, elementwise over n entries. Buffers must not alias
// partially; out == a or out == b is allowed.
void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void div(const double* a, const double* b, double* out, std::size_t n);

void scale(const double* a, double s, double* out, std::size_t n);
void add_scalar(const double* a, double s, double* out, std::size_t n);

// out = max(a, 0)
void relu(const double* a, double* out, std::size_t n);
// out = g where a > 0, else 0   (ReLU backward)
void relu_mask(const double* a, const double* g, double* out, std::size_t n);

// y += s * x
void axpy(double s, const double* x, double* y, std::size_t n);

// c = a(m x k) * b(k x n), row-major, c overwritten.
// Accumulation order over k is fixed per output element in every lane.
void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n);

namespace detail {
struct Ops {
  void (*add)(const double*, const double*, double*, std::size_t);
  void (*sub)(const double*, const double*, double*, std::size_t);
  void (*mul)(const double*, const double*, double*, std::size_t);
  void (*div)(const double*, const double*, double*, std::size_t);
  void (*scale)(const double*, double, double*, std::size_t);
  void (*add_scalar)(const double*, double, double*, std::size_t);
  void (*relu)(const double*, double*, std::size_t);
  void (*relu_mask)(const double*, const double*, double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*matmul)(const double*, const double*, double*,
                 std::size_t, std::size_t, std::size_t);
};
const Ops& avx2_ops();  // defined only when compiled with AVX2 support
}  // namespace detail

}  // namespace plgnn::kernels
