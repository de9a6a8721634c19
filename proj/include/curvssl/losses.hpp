#pragma once

// The training objective:
//   L = L_emb + alpha_curv * L_curv
//   L_emb  = sum_u (C_uu - 1)^2 + lambda_emb  * sum_{u!=v} C_uv^2,  C = Z~ᵀ Z~' / b
//   L_curv = sum_i (M_ii - 1)^2 + lambda_curv * sum_{i!=j} M_ij^2,  M = c~ c~'ᵀ / b
// where Z~ are per-feature standardized embeddings and c~ the batch-standardized
// curvature scores of the raw embeddings. Standard deviations are population
// (divide by b).

#include <optional>

#include "curvssl/autodiff.hpp"
#include "curvssl/geometry.hpp"
#include "curvssl/tensor.hpp"

namespace curvssl {

inline constexpr double kDefaultEps = 1e-5;

struct LossWeights {
  double lambda_emb = 1.0;
  double lambda_curv = 1.0;
  double alpha_curv = 1.0;

  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

// Components are unweighted sums; total applies the weights.
struct LossBreakdown {
  double total = 0.0;
  double emb_diag = 0.0;
  double emb_offdiag = 0.0;
  double curv_diag = 0.0;
  double curv_offdiag = 0.0;
  LossWeights weights;

  double embedding_loss() const { return emb_diag + weights.lambda_emb * emb_offdiag; }
  double curvature_loss() const { return curv_diag + weights.lambda_curv * curv_offdiag; }

  friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

struct PenaltyParts {
  double value = 0.0;
  double diag = 0.0;
  double offdiag = 0.0;
};

// Per column (z - mean) / (std + eps). Throws BatchTooSmall for b < 2.
Tensor standardize_features(const Tensor& z, double eps = kDefaultEps);
// (1/b) aᵀ b for two standardized b×d batches.
Tensor cross_correlation(const Tensor& a, const Tensor& b);
PenaltyParts barlow_loss(const Tensor& c, double lambda_emb);

// Scores are a length-b vector (or b×1); result has the same shape.
Tensor standardize_scores(const Tensor& scores, double eps = kDefaultEps);
// M_ij = c_i c'_j / b.
Tensor curvature_matrix(const Tensor& c1, const Tensor& c2);
PenaltyParts curvature_loss(const Tensor& m, double lambda_curv);

struct LossOptions {
  std::size_t k = 10;
  Metric metric = Euclidean{};
  LossWeights weights;
  double eps = kDefaultEps;
  // false drops the curvature branch from the graph entirely (curv_* read 0).
  bool include_curvature = true;
};

struct LossNodes {
  NodeId total = 0;
  NodeId emb_diag = 0;
  NodeId emb_offdiag = 0;
  std::optional<NodeId> curv_diag;
  std::optional<NodeId> curv_offdiag;
  std::optional<CurvatureNodes> curvature_first;
  std::optional<CurvatureNodes> curvature_second;
  LossWeights weights;

  LossBreakdown breakdown(const Graph& graph) const;
};

// Appends the objective for two b×d_z views to `graph`; differentiable with
// respect to both views (neighbor selections frozen).
LossNodes build_total_loss(Graph& graph, NodeId first, NodeId second, const LossOptions& options);

LossBreakdown total_loss(const Tensor& first, const Tensor& second, const LossOptions& options);

}  // namespace curvssl
