#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "curvssl/error.hpp"
#include "curvssl/simd/kernels.hpp"

using namespace curvssl::simd;

namespace {

std::vector<double> draw(std::mt19937_64& rng, std::size_t n, double zero_rate = 0.0) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::bernoulli_distribution z(zero_rate);
  std::vector<double> v(n);
  for (double& x : v) x = z(rng) ? 0.0 : u(rng);
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scalar backend is always available and listed first") {
  const auto backends = available_backends();
  REQUIRE_FALSE(backends.empty());
  CHECK(backends.front() == Backend::Scalar);
  CHECK(is_available(Backend::Scalar));
  CHECK(&kernels_for(Backend::Scalar) == &scalar_kernels());
}

TEST_CASE("selecting an unavailable backend throws") {
  for (Backend b : {Backend::Avx2, Backend::Neon}) {
    if (!is_available(b)) CHECK_THROWS_AS(kernels_for(b), curvssl::Error);
  }
}

TEST_CASE("select switches the active table") {
  const Backend before = active().backend;
  select(Backend::Scalar);
  CHECK(active().backend == Backend::Scalar);
  select(best_available());
  CHECK(active().backend == best_available());
  select(before);
}

TEST_CASE("every backend matches the scalar reference bit for bit") {
  std::mt19937_64 rng(7);
  const KernelTable& ref = scalar_kernels();
  for (Backend backend : available_backends()) {
    const KernelTable& t = kernels_for(backend);
    CAPTURE(to_string(backend));

    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 16u, 31u, 64u, 129u}) {
      CAPTURE(n);
      const auto a = draw(rng, n), b = draw(rng, n, 0.1);
      auto denom = draw(rng, n);
      for (double& x : denom) x = x == 0.0 ? 1.0 : x;
      std::vector<double> want(n), got(n);

      ref.add(a.data(), b.data(), want.data(), n);
      t.add(a.data(), b.data(), got.data(), n);
      CHECK(same_bits(want, got));
      ref.sub(a.data(), b.data(), want.data(), n);
      t.sub(a.data(), b.data(), got.data(), n);
      CHECK(same_bits(want, got));
      ref.mul(a.data(), b.data(), want.data(), n);
      t.mul(a.data(), b.data(), got.data(), n);
      CHECK(same_bits(want, got));
      ref.div(a.data(), denom.data(), want.data(), n);
      t.div(a.data(), denom.data(), got.data(), n);
      CHECK(same_bits(want, got));
      ref.scale(-0.37, a.data(), want.data(), n);
      t.scale(-0.37, a.data(), got.data(), n);
      CHECK(same_bits(want, got));
      ref.relu(a.data(), want.data(), n);
      t.relu(a.data(), got.data(), n);
      CHECK(same_bits(want, got));
      want = b;
      got = b;
      ref.axpy(1.7, a.data(), want.data(), n);
      t.axpy(1.7, a.data(), got.data(), n);
      CHECK(same_bits(want, got));
    }

    for (int trial = 0; trial < 40; ++trial) {
      std::uniform_int_distribution<std::size_t> dim(1, 19);
      const std::size_t m = dim(rng), k = dim(rng), n = dim(rng);
      CAPTURE(m);
      CAPTURE(k);
      CAPTURE(n);
      const auto a = draw(rng, m * k, 0.2), b = draw(rng, k * n);
      std::vector<double> want(m * n), got(m * n);
      ref.gemm_nn(a.data(), b.data(), want.data(), m, k, n);
      t.gemm_nn(a.data(), b.data(), got.data(), m, k, n);
      CHECK(same_bits(want, got));

      const auto at = draw(rng, k * m, 0.2);
      ref.gemm_tn(at.data(), b.data(), want.data(), m, k, n);
      t.gemm_tn(at.data(), b.data(), got.data(), m, k, n);
      CHECK(same_bits(want, got));

      const std::size_t rows = m + 1, d = k;
      const auto x = draw(rng, rows * d);
      std::vector<double> xt(rows * d);
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t p = 0; p < d; ++p) xt[p * rows + i] = x[i * d + p];
      }
      std::vector<double> dw(rows * rows), dg(rows * rows);
      ref.pairwise_sq_dist(x.data(), xt.data(), dw.data(), rows, d);
      t.pairwise_sq_dist(x.data(), xt.data(), dg.data(), rows, d);
      CHECK(same_bits(dw, dg));
    }
  }
}

TEST_CASE("scalar gemm matches a hand product") {
  const std::vector<double> a{1, 2, 3, 4}, b{5, 6, 7, 8};
  std::vector<double> c(4);
  scalar_kernels().gemm_nn(a.data(), b.data(), c.data(), 2, 2, 2);
  CHECK(c == std::vector<double>{19, 22, 43, 50});
  scalar_kernels().gemm_tn(a.data(), b.data(), c.data(), 2, 2, 2);
  CHECK(c == std::vector<double>{26, 30, 38, 44});
}

TEST_CASE("pairwise squared distances are symmetric with a zero diagonal") {
  const std::vector<double> x{0, 0, 3, 4, 1, 1};
  const std::vector<double> xt{0, 3, 1, 0, 4, 1};
  std::vector<double> out(9);
  for (Backend backend : available_backends()) {
    kernels_for(backend).pairwise_sq_dist(x.data(), xt.data(), out.data(), 3, 2);
    CHECK(out == std::vector<double>{0, 25, 2, 25, 0, 13, 2, 13, 0});
  }
}
