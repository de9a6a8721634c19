#include "curvssl/losses.hpp"

#include <cmath>

#include "curvssl/error.hpp"

namespace curvssl {

namespace {

void require_batch(std::size_t b) {
  if (b < 2) throw Error(ErrorKind::BatchTooSmall, "standardization needs at least 2 rows, got " + std::to_string(b));
}

PenaltyParts penalty(const Tensor& m, double lambda, const char* what) {
  if (!m.is_matrix() || m.rows() != m.cols()) throw Error(ErrorKind::ShapeMismatch, std::string(what) + " must be square");
  PenaltyParts p;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (i == j) {
        p.diag += (m(i, i) - 1.0) * (m(i, i) - 1.0);
      } else {
        p.offdiag += m(i, j) * m(i, j);
      }
    }
  }
  p.value = p.diag + lambda * p.offdiag;
  return p;
}

NodeId standardize_node(Graph& g, NodeId z, double eps) {
  const std::size_t b = g.value(z).rows();
  require_batch(b);
  const NodeId centered = g.sub(z, g.broadcast_row(g.mean_rows(z), b));
  return g.div(centered, g.broadcast_row(g.add_scalar(g.std_rows(z), eps), b));
}

struct PenaltyNodes {
  NodeId diag;
  NodeId offdiag;
};

PenaltyNodes penalty_nodes(Graph& g, NodeId m) {
  const std::size_t n = g.value(m).rows();
  Tensor eye = Tensor::matrix(n, n);
  Tensor off = Tensor::matrix(n, n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    eye(i, i) = 1.0;
    off(i, i) = 0.0;
  }
  const NodeId eye_node = g.constant(std::move(eye));
  const NodeId off_node = g.constant(std::move(off));
  return {g.sum(g.mul(g.square(g.sub(m, eye_node)), eye_node)), g.sum(g.mul(g.square(m), off_node))};
}

}  // namespace

Tensor standardize_features(const Tensor& z, double eps) {
  if (!z.is_matrix()) throw Error(ErrorKind::ShapeMismatch, "embeddings must be b×d");
  const std::size_t b = z.rows(), d = z.cols();
  require_batch(b);
  Tensor out = Tensor::matrix(b, d);
  for (std::size_t u = 0; u < d; ++u) {
    double mean = 0.0;
    for (std::size_t i = 0; i < b; ++i) mean += z(i, u);
    mean /= static_cast<double>(b);
    double var = 0.0;
    for (std::size_t i = 0; i < b; ++i) var += (z(i, u) - mean) * (z(i, u) - mean);
    const double sd = std::sqrt(var / static_cast<double>(b));
    for (std::size_t i = 0; i < b; ++i) out(i, u) = (z(i, u) - mean) / (sd + eps);
  }
  return out;
}

Tensor cross_correlation(const Tensor& a, const Tensor& b) {
  if (!a.is_matrix() || !a.same_shape(b)) throw Error(ErrorKind::ShapeMismatch, "views must share a b×d shape");
  const std::size_t n = a.rows(), d = a.cols();
  Tensor c = Tensor::matrix(d, d);
  for (std::size_t u = 0; u < d; ++u) {
    for (std::size_t v = 0; v < d; ++v) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += a(i, u) * b(i, v);
      c(u, v) = s / static_cast<double>(n);
    }
  }
  return c;
}

PenaltyParts barlow_loss(const Tensor& c, double lambda_emb) { return penalty(c, lambda_emb, "cross-correlation"); }

Tensor standardize_scores(const Tensor& scores, double eps) {
  const std::size_t b = scores.size();
  require_batch(b);
  double mean = 0.0;
  for (double v : scores.values()) mean += v;
  mean /= static_cast<double>(b);
  double var = 0.0;
  for (double v : scores.values()) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(b));
  Tensor out = scores;
  for (double& v : out.values()) v = (v - mean) / (sd + eps);
  return out;
}

Tensor curvature_matrix(const Tensor& c1, const Tensor& c2) {
  if (c1.size() != c2.size()) throw Error(ErrorKind::ShapeMismatch, "score vectors differ in length");
  const std::size_t b = c1.size();
  Tensor m = Tensor::matrix(b, b);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) m(i, j) = c1[i] * c2[j] / static_cast<double>(b);
  }
  return m;
}

PenaltyParts curvature_loss(const Tensor& m, double lambda_curv) { return penalty(m, lambda_curv, "curvature matrix"); }

LossBreakdown LossNodes::breakdown(const Graph& graph) const {
  LossBreakdown out;
  out.weights = weights;
  out.total = graph.value(total).item();
  out.emb_diag = graph.value(emb_diag).item();
  out.emb_offdiag = graph.value(emb_offdiag).item();
  if (curv_diag) out.curv_diag = graph.value(*curv_diag).item();
  if (curv_offdiag) out.curv_offdiag = graph.value(*curv_offdiag).item();
  return out;
}

LossNodes build_total_loss(Graph& g, NodeId first, NodeId second, const LossOptions& options) {
  const Tensor& z1 = g.value(first);
  const Tensor& z2 = g.value(second);
  if (!z1.is_matrix() || !z1.same_shape(z2)) {
    throw Error(ErrorKind::ShapeMismatch, "views " + shape_string(z1.shape()) + " and " + shape_string(z2.shape()));
  }
  const std::size_t b = z1.rows();
  require_batch(b);
  const LossWeights& w = options.weights;

  LossNodes out;
  out.weights = w;
  const NodeId c = g.scale(g.matmul(g.transpose(standardize_node(g, first, options.eps)),
                                    standardize_node(g, second, options.eps)),
                           1.0 / static_cast<double>(b));
  const PenaltyNodes emb = penalty_nodes(g, c);
  out.emb_diag = emb.diag;
  out.emb_offdiag = emb.offdiag;
  out.total = g.add(emb.diag, g.scale(emb.offdiag, w.lambda_emb));

  if (!options.include_curvature) return out;
  if (options.k < 2) throw Error(ErrorKind::InvalidArgument, "curvature needs k >= 2");

  out.curvature_first = batch_curvature(g, first, options.k, options.metric);
  out.curvature_second = batch_curvature(g, second, options.k, options.metric);
  const NodeId s1 = standardize_node(g, out.curvature_first->scores, options.eps);
  const NodeId s2 = standardize_node(g, out.curvature_second->scores, options.eps);
  const NodeId m = g.scale(g.matmul(s1, g.transpose(s2)), 1.0 / static_cast<double>(b));
  const PenaltyNodes curv = penalty_nodes(g, m);
  out.curv_diag = curv.diag;
  out.curv_offdiag = curv.offdiag;
  const NodeId curv_total = g.add(curv.diag, g.scale(curv.offdiag, w.lambda_curv));
  out.total = g.add(out.total, g.scale(curv_total, w.alpha_curv));
  return out;
}

LossBreakdown total_loss(const Tensor& first, const Tensor& second, const LossOptions& options) {
  Graph g;
  const NodeId a = g.constant(first);
  const NodeId b = g.constant(second);
  return build_total_loss(g, a, b, options).breakdown(g);
}

}  // namespace curvssl
