#pragma once

#include <Eigen/Dense>
#include <random>

#include "ddsplit/ddsplit.hpp"

namespace ddsplit::testing {

inline Grid unit_square(int N) { return build_grid(1.0, 1.0, N, N); }

inline DiffusionOperator laplacian(const Grid& g) {
  return assemble_diffusion(g, [](double, double) { return 1.0; }, 1.0);
}

/// Smooth variable coefficient bounded below by 1.
inline DiffusionOperator variable_operator(const Grid& g) {
  return assemble_diffusion(g, [](double x1, double x2) { return 1.0 + x1 * x1 + 0.5 * std::sin(3.0 * x2) + 0.5; },
                            1.0);
}

inline GridFunction random_function(const Grid& g, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  GridFunction u(g);
  for (double& v : u.values()) v = d(rng);
  return u;
}

inline double rel_diff(const GridFunction& a, const GridFunction& b) {
  const double n = std::max(norm(a), norm(b));
  return n == 0.0 ? 0.0 : norm(a - b) / n;
}

inline Eigen::MatrixXd dense(const DiffusionOperator& A) { return dense_matrix(A).matrix(); }

inline Eigen::VectorXd vec(const GridFunction& u) { return to_eigen(u); }

inline Eigen::MatrixXd diag(const Mask& chi) {
  return Eigen::Map<const Eigen::VectorXd>(chi->data(), static_cast<Eigen::Index>(chi->size())).asDiagonal();
}

inline Eigen::MatrixXd eye(const Grid& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  return Eigen::MatrixXd::Identity(n, n);
}

}  // namespace ddsplit::testing
