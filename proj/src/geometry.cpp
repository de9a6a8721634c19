#include "curvssl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "curvssl/error.hpp"
#include "curvssl/rkhs.hpp"
#include "curvssl/simd/kernels.hpp"

namespace curvssl {

namespace {

void check_k(std::size_t n, std::size_t k) {
  if (k == 0 || k >= n) {
    throw Error(ErrorKind::KTooLarge, "k = " + std::to_string(k) + " needs 1 <= k <= " +
                                          std::to_string(n == 0 ? 0 : n - 1) + " for " + std::to_string(n) +
                                          " points");
  }
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Pair (a, b), a < b, of every bundle, flattened to edge-row indices.
void edge_pairs(std::size_t rows, std::size_t k, std::vector<std::size_t>& first, std::vector<std::size_t>& second) {
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t a = 0; a + 1 < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        first.push_back(i * k + a);
        second.push_back(i * k + b);
      }
    }
  }
}

// Per-row k(x_r, y_r) as a rows×1 node.
NodeId kernel_rows(Graph& g, NodeId x, NodeId y, const KernelSpec& spec) {
  if (spec.kind == KernelSpec::Kind::Linear) return g.row_sum(g.mul(x, y));
  return g.exp(g.scale(g.row_sum(g.square(g.sub(x, y))), -*spec.gamma));
}

}  // namespace

NeighborGraph select_neighbors(std::span<const double> distances, std::size_t n, std::size_t k, std::string source) {
  check_k(n, k);
  NeighborGraph out{k, std::vector<std::size_t>(n * k), std::move(source)};
  std::vector<std::size_t> order(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = distances.data() + i * n;
    std::size_t t = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) order[t++] = j;
    }
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [row](std::size_t a, std::size_t b) { return row[a] < row[b] || (row[a] == row[b] && a < b); });
    std::copy_n(order.begin(), k, out.indices.begin() + static_cast<std::ptrdiff_t>(i * k));
  }
  return out;
}

NeighborGraph knn_euclidean(const Tensor& points, std::size_t k) {
  if (!points.is_matrix()) throw Error(ErrorKind::ShapeMismatch, "points must be b×d");
  const std::size_t n = points.rows(), d = points.cols();
  check_k(n, k);
  std::vector<double> xt(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < d; ++p) xt[p * n + i] = points(i, p);
  }
  std::vector<double> sq(n * n);
  simd::active().pairwise_sq_dist(points.data(), xt.data(), sq.data(), n, d);
  return select_neighbors(sq, n, k, "euclidean");
}

EdgeBundle EdgeBundle::from_points(const Tensor& points, std::size_t center,
                                   std::span<const std::size_t> neighbors) {
  Tensor rows = Tensor::matrix(neighbors.size(), points.cols());
  for (std::size_t a = 0; a < neighbors.size(); ++a) {
    std::copy_n(points.row(neighbors[a]).data(), points.cols(), rows.row(a).data());
  }
  return from_rows(points.row(center), rows);
}

EdgeBundle EdgeBundle::from_rows(std::span<const double> center, const Tensor& neighbor_rows) {
  if (neighbor_rows.cols() != center.size()) throw Error(ErrorKind::ShapeMismatch, "neighbor/center dimension");
  EdgeBundle b{Tensor({1, center.size()}, std::vector<double>(center.begin(), center.end())),
               Tensor::matrix(neighbor_rows.rows(), center.size())};
  for (std::size_t a = 0; a < neighbor_rows.rows(); ++a) {
    for (std::size_t p = 0; p < center.size(); ++p) b.edges(a, p) = neighbor_rows(a, p) - center[p];
  }
  return b;
}

double curvature_score(const EdgeBundle& bundle) {
  const std::size_t k = bundle.edges.rows();
  if (k < 2) throw Error(ErrorKind::InvalidArgument, "curvature needs at least two edges");
  std::vector<double> norms(k);
  for (std::size_t a = 0; a < k; ++a) {
    norms[a] = norm(bundle.edges.row(a));
    if (!(norms[a] > kEdgeFloor)) throw Error(ErrorKind::DegenerateEdge, "edge " + std::to_string(a) + " has zero length");
  }
  double score = 0.0;
  for (std::size_t a = 0; a + 1 < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      const auto ea = bundle.edges.row(a), eb = bundle.edges.row(b);
      const double dot = std::inner_product(ea.begin(), ea.end(), eb.begin(), 0.0);
      score += dot / (norms[a] * norms[b]);
    }
  }
  return score;
}

std::string describe(const Metric& metric) {
  if (std::holds_alternative<Euclidean>(metric)) return "euclidean";
  return std::get<KernelSpec>(metric).describe();
}

CurvatureNodes batch_curvature(Graph& graph, NodeId points, std::size_t k, const Metric& metric) {
  const Tensor& z = graph.value(points);
  if (!z.is_matrix()) throw Error(ErrorKind::ShapeMismatch, "points must be b×d");
  const std::size_t b = z.rows(), d = z.cols();

  CurvatureNodes out{0, {}, metric};
  if (const auto* spec = std::get_if<KernelSpec>(&metric)) {
    spec->validate();
    const KernelSpec search = spec->needs_bandwidth() ? KernelSpec::rbf(rkhs::pilot_gamma(z)) : *spec;
    out.neighbors = rkhs::knn_rkhs(z, k, search);
    out.metric = rkhs::resolve_bandwidth(*spec, z, out.neighbors);
  } else {
    out.neighbors = knn_euclidean(z, k);
  }

  if (k < 2) {
    out.scores = graph.constant(Tensor::matrix(b, 1));
    return out;
  }

  std::vector<std::size_t> centers(b * k), tips(out.neighbors.indices);
  for (std::size_t i = 0; i < b; ++i) std::fill_n(centers.begin() + static_cast<std::ptrdiff_t>(i * k), k, i);

  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t a = 0; a < k; ++a) {
      const auto tip = z.row(tips[i * k + a]);
      const auto ctr = z.row(i);
      double s = 0.0;
      for (std::size_t p = 0; p < d; ++p) s += (tip[p] - ctr[p]) * (tip[p] - ctr[p]);
      if (!(std::sqrt(s) > kEdgeFloor)) {
        throw Error(ErrorKind::DegenerateEdge,
                    "row " + std::to_string(i) + " coincides with neighbor " + std::to_string(tips[i * k + a]), i);
      }
    }
  }

  const NodeId edges = graph.sub(graph.gather_rows(points, std::move(tips)), graph.gather_rows(points, std::move(centers)));
  std::vector<std::size_t> first, second;
  edge_pairs(b, k, first, second);
  const std::size_t pairs = k * (k - 1) / 2;

  NodeId pair_values = 0;
  if (const auto* spec = std::get_if<KernelSpec>(&out.metric)) {
    const NodeId cross = kernel_rows(graph, graph.gather_rows(edges, first), graph.gather_rows(edges, second), *spec);
    const NodeId self = kernel_rows(graph, edges, edges, *spec);
    const NodeId denom = graph.sqrt(graph.mul(graph.gather_rows(self, first), graph.gather_rows(self, second)));
    pair_values = graph.div(cross, denom);
  } else {
    const NodeId lengths = graph.sqrt(graph.row_sum(graph.square(edges)));
    const NodeId unit = graph.div(edges, graph.broadcast_col(lengths, d));
    pair_values = graph.row_sum(graph.mul(graph.gather_rows(unit, std::move(first)), graph.gather_rows(unit, std::move(second))));
  }
  out.scores = graph.segment_sum(pair_values, pairs);
  return out;
}

Tensor batch_curvature(const Tensor& points, std::size_t k, const Metric& metric) {
  Graph g;
  const NodeId z = g.constant(points);
  const CurvatureNodes nodes = batch_curvature(g, z, k, metric);
  const Tensor& s = g.value(nodes.scores);
  return Tensor({s.size()}, std::vector<double>(s.values().begin(), s.values().end()));
}

}  // namespace curvssl
