#include <atomic>

#include "curvssl/error.hpp"
#include "curvssl/simd/kernels.hpp"
#include "kernels_impl.hpp"

namespace curvssl::simd {

namespace {

bool cpu_supports(Backend backend) {
  switch (backend) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
#if defined(CURVSSL_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Backend::Neon:
#if defined(CURVSSL_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{&kernels_for(best_available())};
  return slot;
}

}  // namespace

std::string_view to_string(Backend backend) {
  switch (backend) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "unknown";
}

std::vector<Backend> available_backends() {
  std::vector<Backend> out;
  for (Backend b : {Backend::Scalar, Backend::Avx2, Backend::Neon}) {
    if (cpu_supports(b)) out.push_back(b);
  }
  return out;
}

bool is_available(Backend backend) { return cpu_supports(backend); }

const KernelTable& kernels_for(Backend backend) {
  if (!cpu_supports(backend)) {
    throw Error(ErrorKind::InvalidArgument, "SIMD backend not available: " + std::string(to_string(backend)));
  }
  switch (backend) {
#if defined(CURVSSL_HAVE_AVX2)
    case Backend::Avx2: return avx2_kernels();
#endif
#if defined(CURVSSL_HAVE_NEON)
    case Backend::Neon: return neon_kernels();
#endif
    default: return scalar_kernels();
  }
}

Backend best_available() {
  if (cpu_supports(Backend::Avx2)) return Backend::Avx2;
  if (cpu_supports(Backend::Neon)) return Backend::Neon;
  return Backend::Scalar;
}

const KernelTable& active() { return *active_slot().load(std::memory_order_acquire); }

void select(Backend backend) { active_slot().store(&kernels_for(backend), std::memory_order_release); }

}  // namespace curvssl::simd
