#pragma once

// Exact kNN and the discrete curvature score: for a point x_i with neighbors
// x_1..x_k and edges e_a = x_a - x_i, the score is the sum over a < b of
// cos(e_a, e_b).

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "curvssl/autodiff.hpp"
#include "curvssl/kernel_spec.hpp"
#include "curvssl/tensor.hpp"

namespace curvssl {

// Edges at or below this norm make a bundle degenerate.
inline constexpr double kEdgeFloor = 1e-12;

struct NeighborGraph {
  std::size_t k = 0;
  std::vector<std::size_t> indices;  // rows × k, row-major
  std::string source;

  std::size_t rows() const noexcept { return k == 0 ? 0 : indices.size() / k; }
  std::span<const std::size_t> neighbors(std::size_t row) const { return {indices.data() + row * k, k}; }
};

// k smallest entries per row of a dense n×n distance matrix, self excluded,
// ties broken by ascending index. Throws KTooLarge unless 1 <= k <= n-1.
NeighborGraph select_neighbors(std::span<const double> distances, std::size_t n, std::size_t k, std::string source);

NeighborGraph knn_euclidean(const Tensor& points, std::size_t k);

struct EdgeBundle {
  Tensor center;  // 1×d
  Tensor edges;   // k×d, row a = x_a - center

  static EdgeBundle from_points(const Tensor& points, std::size_t center, std::span<const std::size_t> neighbors);
  static EdgeBundle from_rows(std::span<const double> center, const Tensor& neighbor_rows);
};

// Throws DegenerateEdge (edge norm <= kEdgeFloor) or InvalidArgument (k < 2).
double curvature_score(const EdgeBundle& bundle);

struct Euclidean {
  friend bool operator==(const Euclidean&, const Euclidean&) = default;
};
using Metric = std::variant<Euclidean, KernelSpec>;

std::string describe(const Metric& metric);

struct CurvatureNodes {
  NodeId scores = 0;  // b×1
  NeighborGraph neighbors;
  Metric metric;      // with any median-heuristic bandwidth resolved
};

// Differentiable per-row curvature of the current value of `points` (b×d).
// Neighbor selection happens once, on the current values, and is frozen into
// the graph. Kernel metrics use knn_rkhs and the normalized-Gram score.
// k = 1 yields all-zero scores (no edge pairs).
CurvatureNodes batch_curvature(Graph& graph, NodeId points, std::size_t k, const Metric& metric);

// Value-only convenience over the graph path; returns a length-b vector.
Tensor batch_curvature(const Tensor& points, std::size_t k, const Metric& metric);

}  // namespace curvssl
