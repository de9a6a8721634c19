#include "curvssl/rkhs.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "curvssl/error.hpp"
#include "curvssl/simd/kernels.hpp"

namespace curvssl {

void KernelSpec::validate() const {
  if (kind == Kind::Rbf && gamma && !(*gamma > 0.0 && std::isfinite(*gamma))) {
    throw Error(ErrorKind::InvalidArgument, "rbf gamma must be positive and finite");
  }
}

std::string KernelSpec::describe() const {
  if (kind == Kind::Linear) return "linear";
  if (!gamma) return "rbf(gamma=median)";
  std::ostringstream os;
  os.precision(17);
  os << "rbf(gamma=" << *gamma << ")";
  return os.str();
}

namespace rkhs {

namespace {

double gamma_of(const KernelSpec& spec) {
  spec.validate();
  if (!spec.gamma) throw Error(ErrorKind::InvalidArgument, "rbf kernel used before its bandwidth was resolved");
  return *spec.gamma;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) s += (a[p] - b[p]) * (a[p] - b[p]);
  return std::sqrt(s);
}

}  // namespace

double kernel_eval(const KernelSpec& spec, std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::ShapeMismatch, "kernel arguments of dimension " + std::to_string(a.size()) + " and " +
                                              std::to_string(b.size()));
  }
  if (spec.kind == KernelSpec::Kind::Linear) {
    double s = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p) s += a[p] * b[p];
    return s;
  }
  const double gamma = gamma_of(spec);
  double s = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) s += (a[p] - b[p]) * (a[p] - b[p]);
  return std::exp(-gamma * s);
}

double rkhs_distance(const KernelSpec& spec, std::span<const double> a, std::span<const double> b) {
  const double r = kernel_eval(spec, a, a) - 2.0 * kernel_eval(spec, a, b) + kernel_eval(spec, b, b);
  return std::sqrt(std::max(r, 0.0));
}

NeighborGraph knn_rkhs(const Tensor& points, std::size_t k, const KernelSpec& spec) {
  if (!points.is_matrix()) throw Error(ErrorKind::ShapeMismatch, "points must be b×d");
  const std::size_t n = points.rows(), d = points.cols();
  if (spec.kind == KernelSpec::Kind::Rbf) (void)gamma_of(spec);
  if (k == 0 || k >= n) return select_neighbors({}, n, k, "rkhs");  // raises KTooLarge

  // Both kernels give an RKHS distance that is strictly increasing in the
  // Euclidean one (linear: equal; rbf: sqrt(2 - 2 exp(-gamma r^2))). Ranking
  // on the exact squared distance avoids ties from exp saturating.
  std::vector<double> xt(n * d), dist(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < d; ++p) xt[p * n + i] = points(i, p);
  }
  simd::active().pairwise_sq_dist(points.data(), xt.data(), dist.data(), n, d);
  return select_neighbors(dist, n, k, "rkhs:" + spec.describe());
}

GramMatrix normalized_gram(const Tensor& edges, const KernelSpec& spec) {
  const std::size_t k = edges.rows();
  std::vector<double> self(k);
  for (std::size_t a = 0; a < k; ++a) {
    self[a] = kernel_eval(spec, edges.row(a), edges.row(a));
    if (!(self[a] > 0.0)) throw Error(ErrorKind::DegenerateEdge, "edge " + std::to_string(a) + " has zero self-kernel");
  }
  GramMatrix g{Tensor::matrix(k, k), true};
  for (std::size_t a = 0; a < k; ++a) {
    g.values(a, a) = 1.0;
    for (std::size_t b = a + 1; b < k; ++b) {
      const double v = kernel_eval(spec, edges.row(a), edges.row(b)) / std::sqrt(self[a] * self[b]);
      g.values(a, b) = v;
      g.values(b, a) = v;
    }
  }
  return g;
}

double kernel_curvature_score(const EdgeBundle& bundle, const KernelSpec& spec) {
  if (bundle.edges.rows() < 2) throw Error(ErrorKind::InvalidArgument, "curvature needs at least two edges");
  const std::vector<double> origin(bundle.edges.cols(), 0.0);
  for (std::size_t a = 0; a < bundle.edges.rows(); ++a) {
    if (!(distance(bundle.edges.row(a), origin) > kEdgeFloor)) {
      throw Error(ErrorKind::DegenerateEdge, "edge " + std::to_string(a) + " has zero length");
    }
  }
  const GramMatrix g = normalized_gram(bundle.edges, spec);
  double score = 0.0;
  for (std::size_t a = 0; a + 1 < g.values.rows(); ++a) {
    for (std::size_t b = a + 1; b < g.values.cols(); ++b) score += g.values(a, b);
  }
  return score;
}

double gamma_from_median(std::span<const double> distances) {
  const double sigma = median(std::vector<double>(distances.begin(), distances.end()));
  if (!(sigma > 0.0)) return 1.0;
  return 1.0 / (2.0 * sigma * sigma);
}

double pilot_gamma(const Tensor& points) {
  std::vector<double> d;
  d.reserve(points.rows() * (points.rows() - 1) / 2);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    for (std::size_t j = i + 1; j < points.rows(); ++j) d.push_back(distance(points.row(i), points.row(j)));
  }
  return gamma_from_median(d);
}

double edge_median_gamma(const Tensor& points, const NeighborGraph& neighbors) {
  std::vector<double> d;
  for (std::size_t i = 0; i < neighbors.rows(); ++i) {
    const auto nb = neighbors.neighbors(i);
    // e_a - e_b = x_a - x_b: the center cancels.
    for (std::size_t a = 0; a + 1 < nb.size(); ++a) {
      for (std::size_t b = a + 1; b < nb.size(); ++b) d.push_back(distance(points.row(nb[a]), points.row(nb[b])));
    }
  }
  return gamma_from_median(d);
}

KernelSpec resolve_bandwidth(const KernelSpec& spec, const Tensor& points, const NeighborGraph& neighbors) {
  if (!spec.needs_bandwidth()) return spec;
  return KernelSpec::rbf(edge_median_gamma(points, neighbors));
}

}  // namespace rkhs
}  // namespace curvssl
