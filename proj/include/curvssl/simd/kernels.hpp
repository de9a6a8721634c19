#pragma once

// Dense inner loops used by the tensor primitives and the kNN search.
//
// Each backend implements the same table. Every kernel produces each output
// element with the same sequence of IEEE operations as the scalar reference
// (vectorization runs across independent outputs, never across a reduction,
// and multiply/add are never fused), so all backends are bit-identical.

#include <cstddef>
#include <string_view>
#include <vector>

namespace curvssl::simd {

enum class Backend { Scalar, Avx2, Neon };

std::string_view to_string(Backend backend);

struct KernelTable {
  Backend backend;

  // out[i] = a[i] op b[i]
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  void (*div)(const double* a, const double* b, double* out, std::size_t n);
  // out[i] = s * a[i]
  void (*scale)(double s, const double* a, double* out, std::size_t n);
  // out[i] = max(a[i], 0)
  void (*relu)(const double* a, double* out, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // c[m×n] = a[m×k] · b[k×n]; rows of `a` with zero entries skip that term.
  void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
  // c[m×n] = aᵀ · b with a[k×m], b[k×n].
  void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
  // out[n×n] squared Euclidean distances between rows of x[n×d]; xt is xᵀ.
  void (*pairwise_sq_dist)(const double* x, const double* xt, double* out, std::size_t n, std::size_t d);
};

const KernelTable& scalar_kernels();

// Backends compiled into this binary and supported by the running CPU.
std::vector<Backend> available_backends();
bool is_available(Backend backend);
const KernelTable& kernels_for(Backend backend);

// Process-wide selection; defaults to the widest available backend.
const KernelTable& active();
void select(Backend backend);
Backend best_available();

}  // namespace curvssl::simd
