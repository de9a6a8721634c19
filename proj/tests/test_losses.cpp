#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "curvssl/error.hpp"
#include "curvssl/losses.hpp"
#include "support/helpers.hpp"

using namespace curvssl;

namespace {

LossOptions options(std::size_t k, Metric metric, LossWeights w = {}, double eps = kDefaultEps) {
  LossOptions o;
  o.k = k;
  o.metric = std::move(metric);
  o.weights = w;
  o.eps = eps;
  return o;
}

Tensor permute_rows(const Tensor& t, const std::vector<std::size_t>& perm) {
  Tensor out = Tensor::matrix(t.rows(), t.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    std::copy(t.row(perm[i]).begin(), t.row(perm[i]).end(), out.row(i).begin());
  }
  return out;
}

double trace(const Tensor& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, i);
  return s;
}

}  // namespace

TEST_CASE("feature standardization") {
  const Tensor two = standardize_features(Tensor::from_rows({{1}, {3}}));
  CHECK(two[0] == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK(two[1] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(standardize_features(Tensor::from_rows({{5}, {5}, {5}})) == Tensor::matrix(3, 1));

  std::mt19937_64 rng(1);
  const Tensor z = standardize_features(testing::random_matrix(rng, 20, 3), 0.0);
  const Tensor again = standardize_features(z, kDefaultEps);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(again[i] - z[i]) <= 1e-4);

  try {
    (void)standardize_features(Tensor::from_rows({{1, 2}}));
    FAIL("expected BatchTooSmall");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BatchTooSmall);
  }
}

TEST_CASE("cross correlation") {
  const Tensor a = Tensor::from_rows({{-1}, {1}});
  const Tensor b = Tensor::from_rows({{1}, {-1}});
  CHECK(cross_correlation(a, a) == Tensor::from_rows({{1}}));
  CHECK(cross_correlation(a, b) == Tensor::from_rows({{-1}}));
  CHECK_THROWS_AS(cross_correlation(a, Tensor::matrix(3, 1)), Error);

  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor x = Tensor::matrix(10000, 2), y = Tensor::matrix(10000, 2);
  for (double& v : x.values()) v = n(rng);
  for (double& v : y.values()) v = n(rng);
  const Tensor c = cross_correlation(standardize_features(x), standardize_features(y));
  for (double v : c.values()) CHECK(std::abs(v) <= 0.05);
  const Tensor self = cross_correlation(standardize_features(x), standardize_features(x));
  for (double v : self.values()) CHECK(std::abs(v) <= 1.0 + 1e-9);
}

TEST_CASE("barlow loss examples") {
  CHECK(barlow_loss(Tensor::from_rows({{1, 0}, {0, 1}}), 1.0).value == 0.0);
  const PenaltyParts zero = barlow_loss(Tensor::matrix(2, 2), 1.0);
  CHECK(zero.value == 2.0);
  CHECK(zero.diag == 2.0);
  CHECK(zero.offdiag == 0.0);
  const PenaltyParts half = barlow_loss(Tensor::from_rows({{1, 0.5}, {0.5, 1}}), 1.0);
  CHECK(half.value == 0.5);
  CHECK(half.offdiag == 0.5);
  CHECK(barlow_loss(Tensor::from_rows({{1, 0.5}, {0.5, 1}}), 0.25).value == 0.125);
  CHECK_THROWS_AS(barlow_loss(Tensor::matrix(2, 3), 1.0), Error);
}

TEST_CASE("score standardization") {
  const Tensor two = standardize_scores(Tensor::vector({1, 3}));
  CHECK(two[0] == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK(two[1] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(standardize_scores(Tensor::vector({2, 2, 2})) == Tensor::vector({0, 0, 0}));
  const Tensor three = standardize_scores(Tensor::vector({0, 1, 2}), 0.0);
  CHECK(three[0] == doctest::Approx(-std::sqrt(1.5)).epsilon(1e-15));
  CHECK(three[1] == 0.0);
  CHECK(three[2] == doctest::Approx(std::sqrt(1.5)).epsilon(1e-15));
  CHECK_THROWS_AS(standardize_scores(Tensor::vector({1})), Error);
}

TEST_CASE("curvature matrix and loss") {
  const Tensor c = Tensor::vector({-1, 1});
  const Tensor m = curvature_matrix(c, c);
  CHECK(m == Tensor::from_rows({{0.5, -0.5}, {-0.5, 0.5}}));
  CHECK(trace(m) == 1.0);
  CHECK(trace(curvature_matrix(c, Tensor::vector({1, -1}))) == -1.0);

  const double r = std::sqrt(1.5);
  const Tensor s = Tensor::vector({-r, 0, r});
  CHECK(trace(curvature_matrix(s, s)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(curvature_matrix(c, s), Error);

  CHECK(curvature_loss(m, 1.0).value == 1.0);
  CHECK(curvature_loss(Tensor::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}), 1.0).value == 0.0);
  CHECK(curvature_loss(Tensor::matrix(2, 2), 1.0).value == 2.0);
}

TEST_CASE("identical views") {
  std::mt19937_64 rng(3);
  for (const Metric& metric : {Metric{Euclidean{}}, Metric{KernelSpec::rbf_median()}}) {
    const Tensor z = testing::random_matrix(rng, 8, 4);
    const LossBreakdown l = total_loss(z, z, options(3, metric));
    CHECK(l.emb_diag <= 1e-8);

    const Tensor ct = standardize_scores(batch_curvature(z, 3, metric));
    double want = 0.0;
    for (double v : ct.values()) want += (v * v / 8.0 - 1.0) * (v * v / 8.0 - 1.0);
    CHECK(std::abs(l.curv_diag - want) <= 1e-12);
  }
}

TEST_CASE("alpha zero turns the curvature term off") {
  std::mt19937_64 rng(4);
  const Tensor z1 = testing::random_matrix(rng, 8, 4), z2 = testing::random_matrix(rng, 8, 4);
  const LossBreakdown l = total_loss(z1, z2, options(3, Euclidean{}, {1, 1, 0}));
  CHECK(l.total == l.embedding_loss());
  CHECK(l.curv_diag > 0.0);

  LossOptions off = options(3, Euclidean{}, {1, 1, 0});
  off.include_curvature = false;
  const LossBreakdown skipped = total_loss(z1, z2, off);
  CHECK(skipped.curv_diag == 0.0);
  CHECK(skipped.curv_offdiag == 0.0);
  CHECK(std::abs(skipped.embedding_loss() - l.embedding_loss()) <= 1e-12);
}

TEST_CASE("total matches the weighted components") {
  std::mt19937_64 rng(5);
  const LossWeights w{0.3, 2.0, 0.7};
  const LossBreakdown l =
      total_loss(testing::random_matrix(rng, 10, 3), testing::random_matrix(rng, 10, 3), options(4, Euclidean{}, w));
  CHECK(l.weights == w);
  CHECK(l.total == doctest::Approx(l.emb_diag + 0.3 * l.emb_offdiag + 0.7 * (l.curv_diag + 2.0 * l.curv_offdiag))
                       .epsilon(1e-14));
  for (double v : {l.emb_diag, l.emb_offdiag, l.curv_diag, l.curv_offdiag}) CHECK(v >= 0.0);
}

TEST_CASE("total loss matches the straight-line oracle") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor z1 = testing::random_matrix(rng, 8, 4), z2 = testing::random_matrix(rng, 8, 4);
    const auto m1 = testing::to_mat(z1), m2 = testing::to_mat(z2);
    const std::pair<Metric, std::optional<double>> metrics[] = {
        {Euclidean{}, std::nullopt}, {KernelSpec::rbf(0.9), 0.9}, {KernelSpec::rbf_median(), 0.0}};
    for (const auto& [metric, gamma] : metrics) {
      const LossBreakdown got = total_loss(z1, z2, options(3, metric));
      const oracle::Loss want = oracle::total_loss(m1, m2, 3, gamma, 1, 1, 1, kDefaultEps);
      CHECK(std::abs(got.total - want.total) <= 1e-12);
      CHECK(std::abs(got.emb_diag - want.emb_diag) <= 1e-12);
      CHECK(std::abs(got.emb_offdiag - want.emb_offdiag) <= 1e-12);
      CHECK(std::abs(got.curv_diag - want.curv_diag) <= 1e-12);
      CHECK(std::abs(got.curv_offdiag - want.curv_offdiag) <= 1e-12);
    }
  }
}

TEST_CASE("view swap and batch permutation leave the loss unchanged") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor z1 = testing::random_matrix(rng, 10, 4), z2 = testing::random_matrix(rng, 10, 4);
    for (const Metric& metric : {Metric{Euclidean{}}, Metric{KernelSpec::rbf_median()}}) {
      const double base = total_loss(z1, z2, options(3, metric)).total;
      CHECK(std::abs(total_loss(z2, z1, options(3, metric)).total - base) <= 1e-10);

      std::vector<std::size_t> perm(10);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      CHECK(std::abs(total_loss(permute_rows(z1, perm), permute_rows(z2, perm), options(3, metric)).total - base) <=
            1e-10);
    }
  }
}

TEST_CASE("embedding loss ignores positive per-feature affine maps") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> scale(0.2, 5.0), shift(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor z1 = testing::random_matrix(rng, 12, 3), z2 = testing::random_matrix(rng, 12, 3);
    Tensor moved = z1;
    for (std::size_t u = 0; u < 3; ++u) {
      const double a = scale(rng), b = shift(rng);
      for (std::size_t i = 0; i < 12; ++i) moved(i, u) = a * z1(i, u) + b;
    }
    const double base = total_loss(z1, z2, options(3, Euclidean{}, {}, 1e-12)).embedding_loss();
    CHECK(std::abs(total_loss(moved, z2, options(3, Euclidean{}, {}, 1e-12)).embedding_loss() - base) <= 1e-8);
  }
}

TEST_CASE("trace of the curvature matrix is at most one") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor z1 = testing::random_matrix(rng, 10, 4), z2 = testing::random_matrix(rng, 10, 4);
    const Tensor c1 = standardize_scores(batch_curvature(z1, 3, Euclidean{}));
    const Tensor c2 = standardize_scores(batch_curvature(z2, 3, Euclidean{}));
    CHECK(trace(curvature_matrix(c1, c2)) <= 1.0 + 1e-9);
    // Equality holds in the eps -> 0 limit; at the default eps the trace is
    // sigma^2 / (sigma + eps)^2.
    const Tensor raw = batch_curvature(z1, 3, Euclidean{});
    const Tensor tight = standardize_scores(raw, 1e-12);
    CHECK(std::abs(trace(curvature_matrix(tight, tight)) - 1.0) <= 1e-9);
    CHECK(trace(curvature_matrix(c1, c1)) < 1.0);
  }
}

TEST_CASE("total loss gradients with respect to both views") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    for (const Metric& metric : {Metric{Euclidean{}}, Metric{KernelSpec::rbf(0.7)}}) {
      Graph g;
      const NodeId z1 = g.parameter("z1", testing::random_matrix(rng, 8, 4));
      const NodeId z2 = g.parameter("z2", testing::random_matrix(rng, 8, 4));
      const LossNodes l = build_total_loss(g, z1, z2, options(3, metric));
      const GradReport r = finite_diff_check(g, l.total, 1e-5, 1e-4);
      CHECK(r.pass);
    }
  }
}

TEST_CASE("curvature needs k of at least two") {
  std::mt19937_64 rng(11);
  const Tensor z = testing::random_matrix(rng, 8, 4);
  CHECK_THROWS_AS(total_loss(z, z, options(1, Euclidean{})), Error);
  CHECK_THROWS_AS(total_loss(z, z, options(8, Euclidean{})), Error);
}
