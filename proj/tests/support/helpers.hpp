#pragma once

#include <random>

#include "curvssl/tensor.hpp"
#include "support/oracle.hpp"

namespace testing {

inline curvssl::Tensor random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double lo = -1.0,
                                     double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  curvssl::Tensor t = curvssl::Tensor::matrix(r, c);
  for (double& v : t.values()) v = u(rng);
  return t;
}

inline oracle::Mat to_mat(const curvssl::Tensor& t) {
  oracle::Mat m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t(i, j);
  }
  return m;
}

inline curvssl::Tensor from_mat(const oracle::Mat& m) {
  curvssl::Tensor t = curvssl::Tensor::matrix(m.size(), m.empty() ? 0 : m[0].size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m[i].size(); ++j) t(i, j) = m[i][j];
  }
  return t;
}

// Random orthogonal d×d matrix by Gram-Schmidt on a Gaussian draw.
inline oracle::Mat random_rotation(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> n(0.0, 1.0);
  oracle::Mat q;
  while (q.size() < d) {
    std::vector<double> v(d);
    for (double& x : v) x = n(rng);
    for (const auto& e : q) {
      double dot = 0.0;
      for (std::size_t p = 0; p < d; ++p) dot += v[p] * e[p];
      for (std::size_t p = 0; p < d; ++p) v[p] -= dot * e[p];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;
    for (double& x : v) x /= norm;
    q.push_back(v);
  }
  return q;
}

}  // namespace testing
