// Compiled with -mavx2 (no -mfma): products and sums stay separately rounded,
// matching the scalar reference bit for bit.

#include <immintrin.h>

#include <algorithm>

#include "curvssl/simd/kernels.hpp"
#include "kernels_impl.hpp"

namespace curvssl::simd {

namespace {

constexpr std::size_t kLanes = 4;

template <class Op, class Tail>
inline void binary(const double* a, const double* b, double* out, std::size_t n, Op op, Tail tail) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(out + i, op(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = tail(a[i], b[i]);
}

void add(const double* a, const double* b, double* out, std::size_t n) {
  binary(a, b, out, n, [](__m256d x, __m256d y) { return _mm256_add_pd(x, y); },
         [](double x, double y) { return x + y; });
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  binary(a, b, out, n, [](__m256d x, __m256d y) { return _mm256_sub_pd(x, y); },
         [](double x, double y) { return x - y; });
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
  binary(a, b, out, n, [](__m256d x, __m256d y) { return _mm256_mul_pd(x, y); },
         [](double x, double y) { return x * y; });
}

void div(const double* a, const double* b, double* out, std::size_t n) {
  binary(a, b, out, n, [](__m256d x, __m256d y) { return _mm256_div_pd(x, y); },
         [](double x, double y) { return x / y; });
}

void scale(double s, const double* a, double* out, std::size_t n) {
  const __m256d sv = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) _mm256_storeu_pd(out + i, _mm256_mul_pd(sv, _mm256_loadu_pd(a + i)));
  for (; i < n; ++i) out[i] = s * a[i];
}

void relu(const double* a, double* out, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d v = _mm256_loadu_pd(a + i);
    // Keep v where v > 0, else +0.0 (matches the scalar select, including NaN -> 0).
    _mm256_storeu_pd(out + i, _mm256_and_pd(v, _mm256_cmp_pd(v, zero, _CMP_GT_OQ)));
  }
  for (; i < n; ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
}

inline void axpy_inline(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 * kLanes <= n; i += 4 * kLanes) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    __m256d y1 = _mm256_loadu_pd(y + i + 4);
    __m256d y2 = _mm256_loadu_pd(y + i + 8);
    __m256d y3 = _mm256_loadu_pd(y + i + 12);
    y0 = _mm256_add_pd(y0, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    y1 = _mm256_add_pd(y1, _mm256_mul_pd(av, _mm256_loadu_pd(x + i + 4)));
    y2 = _mm256_add_pd(y2, _mm256_mul_pd(av, _mm256_loadu_pd(x + i + 8)));
    y3 = _mm256_add_pd(y3, _mm256_mul_pd(av, _mm256_loadu_pd(x + i + 12)));
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + 4, y1);
    _mm256_storeu_pd(y + i + 8, y2);
    _mm256_storeu_pd(y + i + 12, y3);
  }
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(av, _mm256_loadu_pd(x + i))));
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
      const __m256d xv = _mm256_set1_pd(xip);
      const double* col = xt + p * n;
      std::size_t j = 0;
      for (; j + kLanes <= n; j += kLanes) {
        const __m256d diff = _mm256_sub_pd(xv, _mm256_loadu_pd(col + j));
        _mm256_storeu_pd(oi + j, _mm256_add_pd(_mm256_loadu_pd(oi + j), _mm256_mul_pd(diff, diff)));
      }
      for (; j < n; ++j) {
        const double diff = xip - col[j];
        oi[j] = oi[j] + diff * diff;
      }
    }
  }
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{Backend::Avx2, add, sub, mul, div, scale, relu, axpy, gemm_nn, gemm_tn,
                                 pairwise_sq_dist};
  return table;
}

}  // namespace curvssl::simd
