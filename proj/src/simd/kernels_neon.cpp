// AArch64 Advanced SIMD backend. Uses vmulq/vaddq pairs (never vfmaq) so the
// results match the scalar reference bit for bit.

#include <arm_neon.h>

#include <algorithm>

#include "curvssl/simd/kernels.hpp"
#include "kernels_impl.hpp"

namespace curvssl::simd {

namespace {

constexpr std::size_t kLanes = 2;

void add(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void div(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) vst1q_f64(out + i, vdivq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] / b[i];
}

void scale(double s, const double* a, double* out, std::size_t n) {
  const float64x2_t sv = vdupq_n_f64(s);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) vst1q_f64(out + i, vmulq_f64(sv, vld1q_f64(a + i)));
  for (; i < n; ++i) out[i] = s * a[i];
}

void relu(const double* a, double* out, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const float64x2_t v = vld1q_f64(a + i);
    vst1q_f64(out + i, vbslq_f64(vcgtq_f64(v, zero), v, zero));
  }
  for (; i < n; ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
}

inline void axpy_inline(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t av = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(av, vld1q_f64(x + i))));
  }
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void axpy(double alpha, const double* x, double* y, std::size_t n) { axpy_inline(alpha, x, y, n); }

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  detail::gemm_nn_blocked(a, b, c, m, k, n, axpy_inline);
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  detail::gemm_tn_rows(a, b, c, m, k, n, axpy_inline);
}

void pairwise_sq_dist(const double* x, const double* xt, double* out, std::size_t n, std::size_t d) {
  for (std::size_t i = 0; i < n; ++i) {
    double* oi = out + i * n;
    std::fill(oi, oi + n, 0.0);
    for (std::size_t p = 0; p < d; ++p) {
      const double xip = x[i * d + p];
      const float64x2_t xv = vdupq_n_f64(xip);
      const double* col = xt + p * n;
      std::size_t j = 0;
      for (; j + kLanes <= n; j += kLanes) {
        const float64x2_t diff = vsubq_f64(xv, vld1q_f64(col + j));
        vst1q_f64(oi + j, vaddq_f64(vld1q_f64(oi + j), vmulq_f64(diff, diff)));
      }
      for (; j < n; ++j) {
        const double diff = xip - col[j];
        oi[j] = oi[j] + diff * diff;
      }
    }
  }
}

}  // namespace

const KernelTable& neon_kernels() {
  static const KernelTable table{Backend::Neon, add, sub, mul, div, scale, relu, axpy, gemm_nn, gemm_tn,
                                 pairwise_sq_dist};
  return table;
}

}  // namespace curvssl::simd
