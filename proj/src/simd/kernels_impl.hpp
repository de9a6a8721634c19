#pragma once

// Loop skeletons shared by the vector backends. The per-element operation
// order (ascending p, skip of zero coefficients) is the scalar reference's.

#include <algorithm>
#include <cstddef>

namespace curvssl::simd {

namespace detail {

inline constexpr std::size_t kRowBlock = 4;

template <class Axpy>
inline void gemm_nn_blocked(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                            std::size_t n, Axpy axpy) {
  std::fill(c, c + m * n, 0.0);
  for (std::size_t i0 = 0; i0 < m; i0 += kRowBlock) {
    const std::size_t i1 = std::min(m, i0 + kRowBlock);
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      for (std::size_t i = i0; i < i1; ++i) {
        const double aip = a[i * k + p];
        if (aip == 0.0) continue;
        axpy(aip, bp, c + i * n, n);
      }
    }
  }
}

template <class Axpy>
inline void gemm_tn_rows(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                         Axpy axpy) {
  std::fill(c, c + m * n, 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    const double* bp = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double api = a[p * m + i];
      if (api == 0.0) continue;
      axpy(api, bp, c + i * n, n);
    }
  }
}

}  // namespace detail

const KernelTable& avx2_kernels();
const KernelTable& neon_kernels();

}  // namespace curvssl::simd
