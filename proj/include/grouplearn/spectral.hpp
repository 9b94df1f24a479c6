#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "grouplearn/network.hpp"

namespace grouplearn {

// Dominant eigenpair of a primitive non-negative matrix. left/right are
// l2-normalized with strictly positive entries; the biorthonormal scaling
// (left^T right == 1) is exposed as a derived accessor.
struct PerronPair {
  double rho;
  Eigen::VectorXd left;
  Eigen::VectorXd right;

  double biorthonormal_scale() const { return 1.0 / left.dot(right); }

  // right vector rescaled so that weights^T right == 1
  Eigen::VectorXd right_against(const Eigen::VectorXd& weights) const {
    return right / weights.dot(right);
  }

  // rank-one limit projector of M^t / rho^t
  Eigen::MatrixXd projector() const {
    return biorthonormal_scale() * right * left.transpose();
  }
};

// normalized left Perron vector of the neighborhood matrix: positive, sums to 1
struct Centrality {
  Eigen::VectorXd alpha;
};

namespace detail {

inline Eigen::VectorXd power_iterate(const Eigen::MatrixXd& M, double tol, int max_iter) {
  const int n = static_cast<int>(M.rows());
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = M * v;
    const double norm = w.norm();
    if (norm == 0.0) throw std::runtime_error("power iteration hit the zero vector");
    w /= norm;
    if ((w - v).norm() < tol) return w;
    v = std::move(w);
  }
  throw std::runtime_error("power iteration did not converge");
}

}  // namespace detail

inline PerronPair perron_pair(const Eigen::MatrixXd& M, double tol = 1e-13,
                              int max_iter = 100000) {
  if (M.rows() != M.cols()) throw std::domain_error("matrix must be square");
  if ((M.array() < 0.0).any()) throw std::domain_error("matrix must be non-negative");
  PerronPair p;
  p.right = detail::power_iterate(M, tol, max_iter);
  p.left = detail::power_iterate(M.transpose(), tol, max_iter);
  p.rho = p.right.dot(M * p.right) / p.right.squaredNorm();
  return p;
}

inline Centrality centrality(const DiGraph& g) {
  if (!g.is_strongly_connected())
    throw std::invalid_argument("centrality requires a strongly connected graph");
  PerronPair p = perron_pair(g.adjacency());
  return {p.left / p.left.sum()};
}

// unique fixed point s^T T = s^T of a row-stochastic primitive matrix
inline Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& T) {
  if (T.rows() != T.cols()) throw std::domain_error("matrix must be square");
  if (((T.rowwise().sum().array() - 1.0).abs() > 1e-10).any())
    throw std::domain_error("matrix rows must sum to 1");
  Eigen::VectorXd s = detail::power_iterate(T.transpose(), 1e-13, 100000);
  return s / s.sum();
}

}  // namespace grouplearn
