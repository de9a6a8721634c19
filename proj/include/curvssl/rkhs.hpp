#pragma once

// Kernel functions, RKHS distances, RKHS kNN and the kernel curvature score:
// the sum of the strict upper triangle of the normalized kernel matrix of a
// bundle's edges, K'_ab = k(e_a, e_b) / sqrt(k(e_a, e_a) k(e_b, e_b)).

#include <span>

#include "curvssl/geometry.hpp"
#include "curvssl/kernel_spec.hpp"
#include "curvssl/tensor.hpp"

namespace curvssl::rkhs {

double kernel_eval(const KernelSpec& spec, std::span<const double> a, std::span<const double> b);

// sqrt(k(a,a) - 2k(a,b) + k(b,b)), radicand clamped at zero.
double rkhs_distance(const KernelSpec& spec, std::span<const double> a, std::span<const double> b);

NeighborGraph knn_rkhs(const Tensor& points, std::size_t k, const KernelSpec& spec);

struct GramMatrix {
  Tensor values;  // k×k
  bool normalized = false;
};

GramMatrix normalized_gram(const Tensor& edges, const KernelSpec& spec);

double kernel_curvature_score(const EdgeBundle& bundle, const KernelSpec& spec);

// gamma = 1 / (2 sigma^2) for a median distance sigma (1 if sigma == 0).
double gamma_from_median(std::span<const double> distances);

// Median over all unordered point pairs; used to pick neighbors before the
// edges exist. rbf neighbor order does not depend on gamma anyway.
double pilot_gamma(const Tensor& points);

// Median over ||e_a - e_b|| for every bundle and pair a < b: exactly the
// distances the rbf kernel sees when scoring.
double edge_median_gamma(const Tensor& points, const NeighborGraph& neighbors);

// Fills in a missing rbf gamma with edge_median_gamma; other specs unchanged.
KernelSpec resolve_bandwidth(const KernelSpec& spec, const Tensor& points, const NeighborGraph& neighbors);

}  // namespace curvssl::rkhs
