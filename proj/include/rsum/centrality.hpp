#pragma once

#include <Eigen/Dense>

#include <stdexcept>

namespace rsum {

template <typename Scalar>
struct PageRankOptions {
  Scalar damping = Scalar(0.85);
  Scalar tolerance = Scalar(1e-6);  // L1 change between iterates
  int max_iterations = 100;
};

template <typename Scalar>
struct PageRankResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> scores;
  int iterations = 0;
  bool converged = false;
};

// Damped weighted PageRank over a non-negative weight matrix; weights(i, j)
// is the edge i -> j. An undirected graph is a symmetric matrix. Mass held by
// nodes without out-edges is spread uniformly, so scores always sum to 1.
template <typename Derived>
PageRankResult<typename Derived::Scalar> weighted_pagerank(
    const Eigen::MatrixBase<Derived>& weights,
    const PageRankOptions<typename Derived::Scalar>& opt = {}) {
  using Scalar = typename Derived::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  const auto n = weights.rows();
  if (weights.cols() != n) throw std::invalid_argument("weighted_pagerank: matrix must be square");
  PageRankResult<Scalar> result;
  if (n == 0) {
    result.converged = true;
    return result;
  }
  if ((weights.array() < Scalar(0)).any())
    throw std::invalid_argument("weighted_pagerank: negative edge weight");

  const Vector out_strength = weights.rowwise().sum();
  // Column-stochastic transition over nodes with out-edges.
  Matrix transition = weights.transpose();
  Eigen::Array<bool, Eigen::Dynamic, 1> dangling(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    dangling(j) = out_strength(j) <= Scalar(0);
    if (!dangling(j)) transition.col(j) /= out_strength(j);
  }

  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  Vector x = Vector::Constant(n, inv_n);
  for (result.iterations = 1; result.iterations <= opt.max_iterations; ++result.iterations) {
    Scalar dangling_mass = Scalar(0);
    for (Eigen::Index j = 0; j < n; ++j)
      if (dangling(j)) dangling_mass += x(j);
    Vector next = opt.damping * (transition * x + Vector::Constant(n, dangling_mass * inv_n));
    next.array() += (Scalar(1) - opt.damping) * inv_n;
    const Scalar delta = (next - x).cwiseAbs().sum();
    x = std::move(next);
    if (delta < opt.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.iterations = std::min(result.iterations, opt.max_iterations);
  result.scores = std::move(x);
  return result;
}

}  // namespace rsum
