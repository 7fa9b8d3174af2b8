#include "plgnn/kernels.hpp"

#include <algorithm>
#include <stdexcept>

#if defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace plgnn::kernels {

namespace {

// ---- scalar reference lane ----

void s_add(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}
void s_sub(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}
void s_mul(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}
void s_div(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] / b[i];
}
void s_scale(const double* a, double s, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * s;
}
void s_add_scalar(const double* a, double s, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + s;
}
void s_relu(const double* a, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
}
void s_relu_mask(const double* a, const double* g, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] > 0.0 ? g[i] : 0.0;
}
void s_axpy(double s, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += s * x[i];
}
void s_matmul(const double* a, const double* b, double* c,
              std::size_t m, std::size_t k, std::size_t n) {
  std::fill(c, c + m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t l = 0; l < k; ++l) {
      const double av = a[i * k + l];
      const double* brow = b + l * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

constexpr detail::Ops scalar_ops = {
    s_add, s_sub, s_mul, s_div, s_scale, s_add_scalar,
    s_relu, s_relu_mask, s_axpy, s_matmul};

#if defined(__aarch64__)

// ---- NEON lane (2 doubles per step, same op sequence as scalar) ----

void n_add(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}
void n_sub(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}
void n_mul(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}
void n_div(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vdivq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] / b[i];
}
void n_scale(const double* a, double s, double* out, std::size_t n) {
  const float64x2_t sv = vdupq_n_f64(s);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), sv));
  for (; i < n; ++i) out[i] = a[i] * s;
}
void n_add_scalar(const double* a, double s, double* out, std::size_t n) {
  const float64x2_t sv = vdupq_n_f64(s);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), sv));
  for (; i < n; ++i) out[i] = a[i] + s;
}
void n_relu(const double* a, double* out, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t x = vld1q_f64(a + i);
    const uint64x2_t pos = vcgtq_f64(x, zero);
    vst1q_f64(out + i, vbslq_f64(pos, x, zero));
  }
  for (; i < n; ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
}
void n_relu_mask(const double* a, const double* g, double* out, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const uint64x2_t pos = vcgtq_f64(vld1q_f64(a + i), zero);
    vst1q_f64(out + i, vbslq_f64(pos, vld1q_f64(g + i), zero));
  }
  for (; i < n; ++i) out[i] = a[i] > 0.0 ? g[i] : 0.0;
}
void n_axpy(double s, const double* x, double* y, std::size_t n) {
  const float64x2_t sv = vdupq_n_f64(s);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t prod = vmulq_f64(sv, vld1q_f64(x + i));
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), prod));
  }
  for (; i < n; ++i) y[i] += s * x[i];
}
void n_matmul(const double* a, const double* b, double* c,
              std::size_t m, std::size_t k, std::size_t n) {
  std::fill(c, c + m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t l = 0; l < k; ++l) {
      const double av = a[i * k + l];
      const float64x2_t avv = vdupq_n_f64(av);
      const double* brow = b + l * n;
      std::size_t j = 0;
      for (; j + 2 <= n; j += 2) {
        const float64x2_t prod = vmulq_f64(avv, vld1q_f64(brow + j));
        vst1q_f64(crow + j, vaddq_f64(vld1q_f64(crow + j), prod));
      }
      for (; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

constexpr detail::Ops neon_ops = {
    n_add, n_sub, n_mul, n_div, n_scale, n_add_scalar,
    n_relu, n_relu_mask, n_axpy, n_matmul};

#endif  // __aarch64__

bool cpu_has_avx2() {
#if defined(PLGNN_HAVE_AVX2)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend detect_backend() {
#if defined(__aarch64__)
  return Backend::neon;
#else
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
#endif
}

const detail::Ops* ops_for(Backend b) {
  switch (b) {
    case Backend::scalar:
      return &scalar_ops;
    case Backend::avx2:
#if defined(PLGNN_HAVE_AVX2)
      return &detail::avx2_ops();
#else
      return nullptr;
#endif
    case Backend::neon:
#if defined(__aarch64__)
      return &neon_ops;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

Backend g_backend = detect_backend();
const detail::Ops* g_ops = ops_for(detect_backend());

}  // namespace

Backend active_backend() { return g_backend; }

bool backend_available(Backend b) {
  if (b == Backend::scalar) return true;
  if (b == Backend::avx2) return cpu_has_avx2();
#if defined(__aarch64__)
  if (b == Backend::neon) return true;
#endif
  return false;
}

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "?";
}

void force_backend(Backend b) {
  if (!backend_available(b))
    throw std::invalid_argument(std::string("kernel backend not available: ") +
                                backend_name(b));
  g_backend = b;
  g_ops = ops_for(b);
}

void add(const double* a, const double* b, double* out, std::size_t n) {
  g_ops->add(a, b, out, n);
}
void sub(const double* a, const double* b, double* out, std::size_t n) {
  g_ops->sub(a, b, out, n);
}
void mul(const double* a, const double* b, double* out, std::size_t n) {
  g_ops->mul(a, b, out, n);
}
void div(const double* a, const double* b, double* out, std::size_t n) {
  g_ops->div(a, b, out, n);
}
void scale(const double* a, double s, double* out, std::size_t n) {
  g_ops->scale(a, s, out, n);
}
void add_scalar(const double* a, double s, double* out, std::size_t n) {
  g_ops->add_scalar(a, s, out, n);
}
void relu(const double* a, double* out, std::size_t n) {
  g_ops->relu(a, out, n);
}
void relu_mask(const double* a, const double* g, double* out, std::size_t n) {
  g_ops->relu_mask(a, g, out, n);
}
void axpy(double s, const double* x, double* y, std::size_t n) {
  g_ops->axpy(s, x, y, n);
}
void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n) {
  g_ops->matmul(a, b, c, m, k, n);
}

}  // namespace plgnn::kernels
