#include <gtest/gtest.h>

#include "support.hpp"

using namespace ddsplit;
using namespace ddsplit::testing;

namespace {

constexpr double tight = 1e-13;

EnergyFunctional weighted_energy(const DiffusionOperator& A, double sigma, double tau) {
  return EnergyFunctional{EnergyKind::S_hyperbolic_weighted, sigma, tau, A, std::nullopt};
}

EnergyFunctional regularized_energy(const DiffusionOperator& A, const Decomposition& dec, double sigma, double tau) {
  return EnergyFunctional{EnergyKind::S_hyperbolic_regularized, sigma, tau, A, dec, tight};
}

Decomposition single_component(const Grid& g) {
  return Decomposition::from_masks(g, {std::vector<double>(g.size(), 1.0)});
}

}  // namespace

TEST(SecondLevel, SingleNode) {
  const Grid g = unit_square(2);
  const DiffusionOperator A = laplacian(g);
  const HyperbolicState s = init_second_level(GridFunction(g, 1.0), GridFunction(g), A, 0.1, GridFunction(g));
  EXPECT_NEAR(s.y_curr[0], 0.92, 1e-15);
  EXPECT_EQ(s.y_prev[0], 1.0);
  EXPECT_EQ(s.n, 1);
}

TEST(SecondLevel, ZeroDataAndZeroStep) {
  std::mt19937_64 rng(50);
  const Grid g = unit_square(6);
  const DiffusionOperator A = laplacian(g);
  const GridFunction v0 = random_function(g, rng), u0 = random_function(g, rng);
  EXPECT_LT(rel_diff(init_second_level(GridFunction(g), v0, A, 0.1, GridFunction(g)).y_curr, 0.1 * v0), 1e-15);
  EXPECT_LT(rel_diff(init_second_level(u0, v0, A, 0.0, GridFunction(g)).y_curr, u0), 1e-15);
}

TEST(ThreeLevel, ScalarRecurrence) {
  const Grid g = unit_square(2);
  const DiffusionOperator A = laplacian(g);
  const HyperbolicState s{GridFunction(g, 0.92), GridFunction(g, 1.0), 0.1, 1};
  const HyperbolicState s2 = step_threelevel_weighted(s, A, 0.0, 0.1, GridFunction(g));
  EXPECT_NEAR(s2.y_curr[0], 2 * 0.92 - 1 - 0.01 * 16 * 0.92, 1e-14);
  EXPECT_NEAR(s2.y_curr[0], 0.6928, 1e-14);
  EXPECT_EQ(s2.y_prev[0], 0.92);
}

TEST(ThreeLevel, ScalarEnergyByHand) {
  const Grid g = unit_square(2);
  const DiffusionOperator A = laplacian(g);
  const double sigma = 0.5, tau = 0.1;
  // eta = (0.92 - 1)/0.1 = -0.8, zeta = 0.96, D = 16 + 0.25 * 0.01 * 256 = 16.64, h1 h2 = 0.25
  const double expect = 0.25 * (16.64 * 0.64 + 256.0 * 0.96 * 0.96);
  const double got = evaluate_energy(weighted_energy(A, sigma, tau), GridFunction(g, 0.92), GridFunction(g, 1.0)).value;
  EXPECT_NEAR(got, expect, 1e-11);
}

TEST(ThreeLevel, ZeroStep) {
  std::mt19937_64 rng(51);
  const Grid g = unit_square(8);
  const DiffusionOperator A = laplacian(g);
  const Decomposition dec = build_two_component(g, 0.5);
  const HyperbolicState s{random_function(g, rng), random_function(g, rng), 0.0, 1};
  const GridFunction expect = 2.0 * s.y_curr - s.y_prev;
  const GridFunction phi = random_function(g, rng);
  EXPECT_LT(rel_diff(step_threelevel_weighted(s, A, 0.5, 0.0, phi).y_curr, expect), 1e-15);
  EXPECT_LT(rel_diff(step_regularized_hyperbolic(s, A, dec, 0.5, 0.0, phi).y_curr, expect), 1e-15);
}

TEST(ThreeLevel, EnergyConservedWithoutSource) {
  std::mt19937_64 rng(52);
  const Grid g = unit_square(12);
  const DiffusionOperator A = variable_operator(g);
  for (double sigma : {0.25, 0.5, 1.0}) {
    const double tau = 0.01;
    const EnergyFunctional fn = weighted_energy(A, sigma, tau);
    HyperbolicState s{random_function(g, rng), random_function(g, rng), tau, 1};
    const double s1 = evaluate_energy(fn, s).value;
    for (int n = 0; n < 50; ++n) {
      s = step_threelevel_weighted(s, A, sigma, tau, GridFunction(g), tight);
      EXPECT_NEAR(evaluate_energy(fn, s).value, s1, 1e-10 * s1);
    }
  }
}

TEST(ThreeLevel, EnergyIdentityWithSource) {
  std::mt19937_64 rng(53);
  const Grid g = unit_square(10);
  const DiffusionOperator A = variable_operator(g);
  for (double sigma : {0.25, 0.6}) {
    const double tau = 0.02;
    const EnergyFunctional fn = weighted_energy(A, sigma, tau);
    for (int trial = 0; trial < 5; ++trial) {
      const HyperbolicState s{random_function(g, rng), random_function(g, rng), tau, 1};
      const GridFunction phi = random_function(g, rng, 10.0);
      const HyperbolicState s1 = step_threelevel_weighted(s, A, sigma, tau, phi, tight);
      const double lhs = evaluate_energy(fn, s1).value - evaluate_energy(fn, s).value;
      const double rhs = tau * inner_product(phi, A(s1.eta(tau) + s.eta(tau)));
      EXPECT_NEAR(lhs, rhs, 1e-9 * std::max(std::abs(rhs), evaluate_energy(fn, s).value));
    }
  }
}

TEST(ThreeLevel, LevelBoundWithSource) {
  std::mt19937_64 rng(54);
  const Grid g = unit_square(10);
  const DiffusionOperator A = variable_operator(g);
  const double sigma = 0.5, tau = 0.01;
  const EnergyFunctional fn = weighted_energy(A, sigma, tau);
  const auto An = OperatorExpression::diffusion(A);
  for (int trial = 0; trial < 10; ++trial) {
    HyperbolicState s{random_function(g, rng), random_function(g, rng), tau, 1};
    for (int n = 0; n < 5; ++n) {
      const GridFunction phi = random_function(g, rng, 200.0);
      const double e0 = evaluate_energy(fn, s).value;
      const double a = energy_norm(An, phi);
      s = step_threelevel_weighted(s, A, sigma, tau, phi, tight);
      EXPECT_LE(evaluate_energy(fn, s).value, three_level_energy_bound(e0, tau, a * a) * (1.0 + 1e-12));
    }
  }
}

TEST(ThreeLevel, TimeReversible) {
  std::mt19937_64 rng(55);
  const Grid g = unit_square(10);
  const DiffusionOperator A = variable_operator(g);
  const double sigma = 0.3, tau = 0.02;
  const HyperbolicState s{random_function(g, rng), random_function(g, rng), tau, 1};
  HyperbolicState fwd = s;
  for (int n = 0; n < 5; ++n) fwd = step_threelevel_weighted(fwd, A, sigma, tau, GridFunction(g), tight);
  HyperbolicState back{fwd.y_prev, fwd.y_curr, 0.0, 1};
  for (int n = 0; n < 5; ++n) back = step_threelevel_weighted(back, A, sigma, tau, GridFunction(g), tight);
  EXPECT_LT(rel_diff(back.y_curr, s.y_prev), 1e-9);
  EXPECT_LT(rel_diff(back.y_prev, s.y_curr), 1e-9);
}

TEST(Regularized3, SingleComponentEqualsWeighted) {
  std::mt19937_64 rng(56);
  const Grid g = unit_square(12);
  const DiffusionOperator A = variable_operator(g);
  const Decomposition one = single_component(g);
  for (double sigma : {0.25, 0.5}) {
    const double tau = 0.02;
    HyperbolicState a{random_function(g, rng), random_function(g, rng), tau, 1};
    HyperbolicState b = a;
    for (int n = 0; n < 20; ++n) {
      a = step_regularized_hyperbolic(a, A, one, sigma, tau, GridFunction(g), tight);
      b = step_threelevel_weighted(b, A, sigma, tau, GridFunction(g), tight);
      EXPECT_LT(rel_diff(a.y_curr, b.y_curr), 1e-10);
    }
  }
}

TEST(Regularized3, EnergyConservedAtThreshold) {
  std::mt19937_64 rng(57);
  const Grid g = unit_square(16);
  const DiffusionOperator A = variable_operator(g);
  for (const Decomposition& dec : {build_two_component(g, 0.5), build_three_component(g, 0.5, 1)}) {
    const double sigma = 0.25 * dec.p(), tau = 0.01;
    const EnergyFunctional fn = regularized_energy(A, dec, sigma, tau);
    HyperbolicState s{random_function(g, rng), random_function(g, rng), tau, 1};
    const double s1 = evaluate_energy(fn, s).value;
    for (int n = 0; n < 50; ++n) {
      s = step_regularized_hyperbolic(s, A, dec, sigma, tau, GridFunction(g), tight);
      EXPECT_NEAR(evaluate_energy(fn, s).value, s1, 1e-9 * s1);
    }
  }
}

TEST(Regularized3, OperatorFacts) {
  const Grid g = unit_square(6);  // 5 x 5 interior
  const DiffusionOperator A = variable_operator(g);
  const Eigen::MatrixXd Ad = dense(A), I = eye(g);
  for (const Decomposition& dec : {build_two_component(g, 0.5), build_three_component(g, 0.5, 0)}) {
    const double tau = 0.05;
    for (double sigma : {0.25 * dec.p(), 0.25 * dec.p() + 0.3}) {
      Eigen::MatrixXd At = Eigen::MatrixXd::Zero(Ad.rows(), Ad.cols());
      for (int a = 1; a <= dec.p(); ++a) {
        const Eigen::MatrixXd X = diag(dec.mask(a));
        At += (I + sigma * tau * tau * X * Ad).lu().solve(X * Ad);
      }
      const Eigen::MatrixXd AAt = Ad * At;
      EXPECT_LT((AAt - AAt.transpose()).norm(), 1e-10 * AAt.norm());
      const Eigen::MatrixXd D = Ad * (I - 0.25 * tau * tau * At);
      EXPECT_GT(min_eigenvalue(0.5 * (D + D.transpose())), 0.0);
    }
  }
}

TEST(Regularized3, LevelBoundWithSource) {
  std::mt19937_64 rng(58);
  const Grid g = unit_square(8);
  const DiffusionOperator A = variable_operator(g);
  const Decomposition dec = build_two_component(g, 0.5);
  const double sigma = 0.5, tau = 0.01;
  const EnergyFunctional fn = regularized_energy(A, dec, sigma, tau);
  for (int trial = 0; trial < 10; ++trial) {
    HyperbolicState s{random_function(g, rng), random_function(g, rng), tau, 1};
    for (int n = 0; n < 5; ++n) {
      const GridFunction phi = random_function(g, rng, 200.0);
      const double e0 = evaluate_energy(fn, s).value;
      const double src = regularized_source_norm_sq(A, dec, sigma, tau, phi);
      s = step_regularized_hyperbolic(s, A, dec, sigma, tau, phi, tight);
      EXPECT_LE(evaluate_energy(fn, s).value, three_level_energy_bound(e0, tau, src) * (1.0 + 1e-12));
    }
  }
}

TEST(Regularized3, Threshold) {
  EXPECT_DOUBLE_EQ(hyperbolic_regularized_threshold(2), 0.5);
  EXPECT_DOUBLE_EQ(hyperbolic_regularized_threshold(3), 0.75);
  EXPECT_DOUBLE_EQ(hyperbolic_weighted_threshold(), 0.25);
}

TEST(HyperbolicState, Accessors) {
  const Grid g = unit_square(4);
  const HyperbolicState s{GridFunction(g, 3.0), GridFunction(g, 1.0), 0.2, 2};
  EXPECT_DOUBLE_EQ(s.eta(0.5)[0], 4.0);
  EXPECT_DOUBLE_EQ(s.zeta()[0], 2.0);
}
