#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "curvssl/error.hpp"
#include "curvssl/geometry.hpp"
#include "support/helpers.hpp"

using namespace curvssl;

namespace {

EdgeBundle bundle(std::initializer_list<double> center, std::initializer_list<std::initializer_list<double>> nbrs) {
  const std::vector<double> c(center);
  return EdgeBundle::from_rows(c, Tensor::from_rows(nbrs));
}

std::vector<std::vector<std::size_t>> rows_of(const NeighborGraph& g) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < g.rows(); ++i) {
    const auto n = g.neighbors(i);
    out.emplace_back(n.begin(), n.end());
  }
  return out;
}

EdgeBundle random_bundle(std::mt19937_64& rng, std::size_t k, std::size_t d) {
  return EdgeBundle::from_rows(testing::random_matrix(rng, 1, d).row(0), testing::random_matrix(rng, k, d));
}

}  // namespace

TEST_CASE("knn on a line") {
  const Tensor pts = Tensor::from_rows({{0}, {1}, {3}});
  CHECK(rows_of(knn_euclidean(pts, 1)) == std::vector<std::vector<std::size_t>>{{1}, {0}, {1}});
  CHECK(rows_of(knn_euclidean(pts, 2)) == std::vector<std::vector<std::size_t>>{{1, 2}, {0, 2}, {1, 0}});
}

TEST_CASE("knn ties go to the lower index") {
  const Tensor pts = Tensor::from_rows({{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {1, 0}});
  const auto g = knn_euclidean(pts, 3);
  CHECK(rows_of(g)[0] == std::vector<std::size_t>{1, 2, 3});
  CHECK(g.neighbors(1)[0] == 4);
  CHECK(g.neighbors(4)[0] == 1);
}

TEST_CASE("knn rejects k outside [1, b-1]") {
  const Tensor pts = Tensor::from_rows({{0}, {1}, {3}});
  for (std::size_t k : {0u, 3u, 4u}) {
    try {
      (void)knn_euclidean(pts, k);
      FAIL("expected KTooLarge");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::KTooLarge);
    }
  }
}

TEST_CASE("knn agrees with a full sort") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> bdist(2, 64), ddist(1, 8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t b = bdist(rng), d = ddist(rng);
    std::uniform_int_distribution<std::size_t> kdist(1, b - 1);
    const std::size_t k = kdist(rng);
    Tensor pts = testing::random_matrix(rng, b, d);
    // Force some exact ties with a coarse grid now and then.
    if (trial % 4 == 0) {
      for (double& v : pts.values()) v = std::round(v * 2.0) / 2.0;
    }
    const auto g = knn_euclidean(pts, k);
    CHECK(rows_of(g) == oracle::knn(testing::to_mat(pts), k));
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j : g.neighbors(i)) CHECK(j != i);
    }
  }
}

TEST_CASE("curvature score examples") {
  CHECK(curvature_score(bundle({0, 0}, {{1, 0}, {0, 1}})) == 0.0);
  CHECK(curvature_score(bundle({0, 0}, {{1, 0}, {2, 0}, {3, 0}})) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(curvature_score(bundle({0, 0}, {{1, 0}, {-1, 0}, {0, 1}, {0, -1}})) ==
        doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(std::abs(curvature_score(bundle({0, 0}, {{1, 0}, {1, 1}})) - 0.7071067811865476) <= 1e-12);
}

TEST_CASE("curvature score errors") {
  CHECK_THROWS_AS(curvature_score(bundle({0, 0}, {{1, 0}})), Error);
  try {
    (void)curvature_score(bundle({1, 1}, {{2, 0}, {1, 1}}));
    FAIL("expected DegenerateEdge");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateEdge);
  }
}

TEST_CASE("curvature score is bounded and matches the oracle") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> kd(2, 8), dd(1, 16);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = kd(rng), d = dd(rng);
    const EdgeBundle b = random_bundle(rng, k, d);
    const double c = curvature_score(b);
    const double bound = static_cast<double>(k * (k - 1)) / 2.0;
    CHECK(std::abs(c) <= bound + 1e-12);
    CHECK(c == doctest::Approx(oracle::cosine_sum(testing::to_mat(b.edges))).epsilon(1e-12));
  }
}

TEST_CASE("curvature score is invariant to rigid motion and scaling about the center") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> kd(2, 8), dd(2, 8);
  std::uniform_real_distribution<double> sd(0.05, 20.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = kd(rng), d = dd(rng);
    const Tensor center = testing::random_matrix(rng, 1, d);
    const Tensor nbrs = testing::random_matrix(rng, k, d);
    const double base = curvature_score(EdgeBundle::from_rows(center.row(0), nbrs));

    const auto q = testing::random_rotation(rng, d);
    const Tensor shift = testing::random_matrix(rng, 1, d, -5, 5);
    auto move = [&](std::span<const double> x) {
      std::vector<double> y(d);
      for (std::size_t r = 0; r < d; ++r) {
        double s = shift[r];
        for (std::size_t c = 0; c < d; ++c) s += q[r][c] * x[c];
        y[r] = s;
      }
      return y;
    };
    Tensor moved = Tensor::matrix(k, d);
    for (std::size_t a = 0; a < k; ++a) {
      const auto y = move(nbrs.row(a));
      std::copy(y.begin(), y.end(), moved.row(a).begin());
    }
    const auto mc = move(center.row(0));
    CHECK(std::abs(curvature_score(EdgeBundle::from_rows(mc, moved)) - base) <= 1e-10);

    const double s = sd(rng);
    Tensor scaled = Tensor::matrix(k, d);
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t p = 0; p < d; ++p) scaled(a, p) = center[p] + s * (nbrs(a, p) - center[p]);
    }
    CHECK(std::abs(curvature_score(EdgeBundle::from_rows(center.row(0), scaled)) - base) <= 1e-10);
  }
}

TEST_CASE("batch curvature on the unit square") {
  const Tensor sq = Tensor::from_rows({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
  const Tensor c = batch_curvature(sq, 2, Euclidean{});
  REQUIRE(c.size() == 4);
  // Each corner's two nearest corners sit on orthogonal edges.
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(c[i] - 0.0) <= 1e-12);

  // Corner plus its two adjacent corners and the diagonal one: cos 90° +
  // 2 cos 45°.
  const Tensor c3 = batch_curvature(sq, 3, Euclidean{});
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(c3[i] - 1.4142135623730951) <= 1e-12);
}

TEST_CASE("interior points on a line see opposite neighbors") {
  const Tensor line = Tensor::from_rows({{0}, {1}, {2.5}, {4}, {6}});
  const Tensor c = batch_curvature(line, 2, Euclidean{});
  const auto want = oracle::curvatures(testing::to_mat(line), 2, std::nullopt);
  for (std::size_t i = 0; i < 5; ++i) CHECK(c[i] == doctest::Approx(want[i]).epsilon(1e-12));
  CHECK(c[2] == doctest::Approx(-1.0));
  CHECK(c[0] == doctest::Approx(1.0));
}

TEST_CASE("linear-kernel batch curvature equals the euclidean one") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor pts = testing::random_matrix(rng, 12, 5);
    const Tensor e = batch_curvature(pts, 4, Euclidean{});
    const Tensor l = batch_curvature(pts, 4, KernelSpec::linear());
    for (std::size_t i = 0; i < 12; ++i) CHECK(std::abs(e[i] - l[i]) <= 1e-10);
  }
}

TEST_CASE("batch curvature reports the degenerate row") {
  const Tensor pts = Tensor::from_rows({{0, 0}, {1, 0}, {0, 1}, {5, 5}, {5, 5}});
  try {
    (void)batch_curvature(pts, 2, Euclidean{});
    FAIL("expected DegenerateEdge");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateEdge);
    REQUIRE(e.row().has_value());
    CHECK((*e.row() == 3 || *e.row() == 4));
  }
}

TEST_CASE("batch curvature gradients match central differences") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    Graph g;
    const NodeId pts = g.parameter("points", testing::random_matrix(rng, 8, 3));
    const CurvatureNodes cn = batch_curvature(g, pts, 3, Euclidean{});
    const NodeId w = g.constant(testing::random_matrix(rng, 8, 1));
    const NodeId out = g.sum(g.mul(cn.scores, w));
    const GradReport r = finite_diff_check(g, out, 1e-5, 1e-4);
    CHECK(r.pass);
  }
}

TEST_CASE("neighbor selection is frozen into the graph") {
  Graph g;
  const NodeId pts = g.parameter("points", Tensor::from_rows({{0}, {1}, {3}, {7}}));
  const CurvatureNodes cn = batch_curvature(g, pts, 2, Euclidean{});
  const auto before = rows_of(cn.neighbors);
  g.set_value(pts, Tensor::from_rows({{7}, {3}, {1}, {0}}));
  g.forward();
  CHECK(rows_of(cn.neighbors) == before);
  CHECK(g.value(cn.scores).all_finite());
}

TEST_CASE("metric descriptions") {
  CHECK(describe(Metric{Euclidean{}}) == "euclidean");
  CHECK(describe(Metric{KernelSpec::linear()}) == "linear");
}
