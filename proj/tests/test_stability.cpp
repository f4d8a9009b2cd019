#include <gtest/gtest.h>

#include "support.hpp"

using namespace ddsplit;
using namespace ddsplit::testing;

namespace {

SchemeConfig config(SchemeKind kind, double sigma, double tau, std::optional<Decomposition> dec = std::nullopt) {
  SchemeConfig c;
  c.kind = kind;
  c.sigma = sigma;
  c.tau = tau;
  c.decomposition = std::move(dec);
  c.solver_tol = 1e-13;
  return c;
}

}  // namespace

TEST(Dense, IdentityAndSymmetry) {
  const Grid g = unit_square(7);
  const DiffusionOperator A = variable_operator(g);
  EXPECT_EQ((dense_matrix(OperatorExpression::identity(A)).matrix() - eye(g)).norm(), 0.0);
  const Eigen::MatrixXd Ad = dense(A);
  EXPECT_EQ((Ad - Ad.transpose()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((dense_matrix(OperatorExpression::diffusion(A)).matrix() - Ad).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Dense, MaskedRowsVanishOffInterface) {
  const Grid g = unit_square(8);
  const DiffusionOperator A = laplacian(g);
  const Decomposition dec = build_two_component(g, 0.5);
  const Eigen::MatrixXd M = dense_matrix(masked_operator(A, dec, 2)).matrix();
  for (std::size_t r = 0; r < g.size(); ++r) {
    const bool on = dec.classes()[r] != NodeClass::subdomain;
    const double row = M.row(static_cast<Eigen::Index>(r)).cwiseAbs().maxCoeff();
    if (on) {
      EXPECT_GT(row, 0.0);
    } else {
      EXPECT_EQ(row, 0.0);
    }
  }
}

TEST(Dense, SizeCap) {
  const Grid g = unit_square(66);
  EXPECT_THROW(dense_matrix(laplacian(g)), SizeLimitError);
  EXPECT_THROW(DenseOperator::identity(g), SizeLimitError);
  EXPECT_NO_THROW(DenseOperator::check_size(unit_square(65)));
}

TEST(Dense, ApplyMatchesSparse) {
  std::mt19937_64 rng(60);
  const Grid g = unit_square(9);
  const DiffusionOperator A = variable_operator(g);
  const GridFunction u = random_function(g, rng);
  EXPECT_LT(rel_diff(dense_matrix(A)(u), A(u)), 1e-14);
}

TEST(Symmetrized, ConjugatedMasks) {
  const Grid g = unit_square(8);
  const DiffusionOperator A = variable_operator(g);
  const Eigen::MatrixXd Ad = dense(A);
  for (const Decomposition& dec : {build_two_component(g, 0.5), build_three_component(g, 0.5, 1)}) {
    const SymmetrizedFactors f = symmetrized_operators(A, dec, 0.5, 0.01, FactorFamily::factorized);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(Ad.rows(), Ad.cols());
    for (const auto& C : f.C) {
      EXPECT_LT((C - C.transpose()).norm(), 1e-12 * C.norm());
      EXPECT_GE(min_eigenvalue(C), -1e-10);
      sum += C;
    }
    EXPECT_LT((sum - Ad).cwiseAbs().maxCoeff(), 1e-10 * Ad.cwiseAbs().maxCoeff());
    for (const auto& S : f.S) EXPECT_LE(spectral_norm(S), 1.0 + 1e-10);
  }
}

TEST(Symmetrized, SquareRoot) {
  const Grid g = unit_square(6);
  const DiffusionOperator A = variable_operator(g);
  const SquareRoot r = sqrt_spd(A);
  const Eigen::MatrixXd Ad = dense(A);
  EXPECT_LT((r.half * r.half - Ad).norm(), 1e-10 * Ad.norm());
  EXPECT_LT((r.half * r.inv_half - eye(g)).norm(), 1e-10);
}

TEST(Transition, FactorizedNormBound) {
  const Grid g = unit_square(4);  // 3 x 3 interior
  const DiffusionOperator A = laplacian(g);
  const Decomposition dec = build_two_component(g, 0.5);
  for (SchemeKind k : {SchemeKind::factorized, SchemeKind::factorized_commuted}) {
    for (double sigma : {0.5, 1.0}) {
      for (double tau : {0.001, 0.1, 10.0}) {
        EXPECT_LE(spectral_norm(transition_operator(config(k, sigma, tau, dec), A)), 1.0 + 1e-10);
      }
    }
  }
}

TEST(Transition, FactorizedDecomposition) {
  // S = (2 sigma - 1)/(2 sigma) E + 1/(2 sigma) S_1 S_2 in the symmetrized variables.
  const Grid g = unit_square(8);
  const DiffusionOperator A = variable_operator(g);
  const Decomposition dec = build_two_component(g, 0.5);
  for (double sigma : {0.5, 0.8, 1.0, 2.0}) {
    const double tau = 0.05;
    const Eigen::MatrixXd S = transition_operator(config(SchemeKind::factorized, sigma, tau, dec), A).matrix();
    const SymmetrizedFactors f = symmetrized_operators(A, dec, sigma, tau, FactorFamily::factorized);
    const Eigen::MatrixXd expect = (2 * sigma - 1) / (2 * sigma) * eye(g) + 1.0 / (2 * sigma) * f.S[0] * f.S[1];
    EXPECT_LT((S - expect).norm(), 1e-10 * S.norm());
  }
}

TEST(Transition, RegularizedNormBound) {
  const Grid g = unit_square(8);
  const DiffusionOperator A = variable_operator(g);
  for (const Decomposition& dec : {build_two_component(g, 0.5), build_three_component(g, 0.5, 1)}) {
    const double sigma = 0.5 * dec.p(), tau = 0.1;
    EXPECT_LE(spectral_norm(transition_operator(config(SchemeKind::regularized, sigma, tau, dec), A)), 1.0 + 1e-10);
    const SymmetrizedFactors f = symmetrized_operators(A, dec, sigma, tau, FactorFamily::regularized);
    for (const auto& S : f.S) EXPECT_LE(spectral_norm(S), 1.0 + 1e-10);
    // Additive form: S = (1/p) sum S_a.
    Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(g.size(), g.size());
    for (const auto& S : f.S) avg += S / dec.p();
    const Eigen::MatrixXd S = transition_operator(config(SchemeKind::regularized, sigma, tau, dec), A).matrix();
    EXPECT_LT((S - avg).norm(), 1e-10 * S.norm());
  }
}

TEST(Transition, ZeroStepIsIdentity) {
  const Grid g = unit_square(6);
  const DiffusionOperator A = laplacian(g);
  const Decomposition dec = build_two_component(g, 0.5);
  for (SchemeKind k : {SchemeKind::weighted, SchemeKind::factorized, SchemeKind::componentwise,
                       SchemeKind::componentwise_symmetrized, SchemeKind::regularized}) {
    const DenseOperator S = transition_operator(config(k, 0.5, 0.0, dec), A);
    EXPECT_EQ((S.matrix() - eye(g)).cwiseAbs().maxCoeff(), 0.0) << to_string(k);
    EXPECT_EQ(spectral_norm(S), 1.0);
  }
}

TEST(Transition, StepEqualsDenseMap) {
  std::mt19937_64 rng(61);
  const Grid g = unit_square(8);
  const DiffusionOperator A = variable_operator(g);
  for (const Decomposition& dec : {build_two_component(g, 0.5), build_three_component(g, 0.5, 1)}) {
    for (SchemeKind k : {SchemeKind::weighted, SchemeKind::factorized, SchemeKind::factorized_commuted,
                         SchemeKind::componentwise, SchemeKind::componentwise_symmetrized,
                         SchemeKind::regularized}) {
      if ((k == SchemeKind::factorized || k == SchemeKind::factorized_commuted) && dec.p() != 2) continue;
      const SchemeConfig c = config(k, 0.7, 0.03, dec);
      const GridFunction y = random_function(g, rng);
      const GridFunction y1 = step(ParabolicState{y, 0.0, 0}, A, c, GridFunction(g)).y;
      const Eigen::VectorXd expect = transition_operator(c, A).matrix() * symmetrized_state(c, A, y);
      const Eigen::VectorXd got = symmetrized_state(c, A, y1);
      EXPECT_LT((got - expect).norm(), 1e-9 * expect.norm()) << to_string(k);
    }
  }
}

TEST(Transition, ComponentwiseFactorsAndProduct) {
  const Grid g = unit_square(8);
  const DiffusionOperator A = variable_operator(g);
  const Decomposition dec = build_three_component(g, 0.5, 1);
  const double tau = 0.2;
  const SymmetrizedFactors f = symmetrized_operators(A, dec, 0.5, tau, FactorFamily::componentwise);
  Eigen::MatrixXd prod = eye(g);
  for (const auto& S : f.S) {
    EXPECT_LE(spectral_norm(S), 1.0 + 1e-10);
    prod = S * prod;
  }
  const Eigen::MatrixXd S = transition_operator(config(SchemeKind::componentwise, 0.5, tau, dec), A).matrix();
  EXPECT_LT((S - prod).norm(), 1e-10 * S.norm());
  EXPECT_LE(spectral_norm(S), 1.0 + 1e-10);
}

TEST(Transition, SymmetrizedProductIsPalindromic) {
  // The reversed product S_1 ... S_p S_p ... S_1 equals its own transpose.
  const Grid g = unit_square(8);
  const DiffusionOperator A = variable_operator(g);
  for (const Decomposition& dec : {build_two_component(g, 0.5), build_three_component(g, 0.5, 1)}) {
    const Eigen::MatrixXd S =
        transition_operator(config(SchemeKind::componentwise_symmetrized, 0.5, 0.1, dec), A).matrix();
    EXPECT_LT((S - S.transpose()).norm(), 1e-9 * S.norm());
    const SymmetrizedFactors f = symmetrized_operators(A, dec, 0.5, 0.1, FactorFamily::symmetrized);
    Eigen::MatrixXd prod = eye(g);
    for (const auto& Sa : f.S) prod = Sa * prod;
    for (auto it = f.S.rbegin(); it != f.S.rend(); ++it) prod = *it * prod;
    EXPECT_LT((S - prod).norm(), 1e-10 * S.norm());
  }
}

TEST(Energy, TrivialReductions) {
  std::mt19937_64 rng(62);
  const Grid g = unit_square(8);
  const DiffusionOperator A = variable_operator(g);
  const GridFunction y = random_function(g, rng);
  const double an = energy_norm(OperatorExpression::diffusion(A), y);
  EXPECT_NEAR(evaluate_energy(EnergyFunctional{EnergyKind::D_parabolic, 0.5, 0.3, A, std::nullopt}, y).value, an,
              1e-14 * an);
  const Decomposition empty =
      Decomposition::from_masks(g, {std::vector<double>(g.size(), 1.0), std::vector<double>(g.size(), 0.0)});
  EXPECT_NEAR(evaluate_energy(EnergyFunctional{EnergyKind::B2A, 1.0, 0.3, A, empty}, y).value, an, 1e-14 * an);
  EXPECT_THROW(evaluate_energy(EnergyFunctional{EnergyKind::S_hyperbolic_weighted, 0.5, 0.1, A, std::nullopt}, y),
               InvalidArgument);
  const EnergyValue below = evaluate_energy(EnergyFunctional{EnergyKind::D_parabolic, 0.4, 1e-4, A, std::nullopt}, y);
  EXPECT_TRUE(below.below_threshold);
  EXPECT_GT(below.value, 0.0);
}

TEST(Certify, FactorizedPasses) {
  const Grid g = unit_square(8);
  const DiffusionOperator A = laplacian(g);
  const CertificationReport rep = certify(config(SchemeKind::factorized, 1.0, 0.01, build_two_component(g, 0.5)), A, 20);
  EXPECT_TRUE(rep.certified());
  EXPECT_LE(rep.transition_norm, 1.0 + 1e-10);
  ASSERT_EQ(rep.factor_norms.size(), 2u);
  EXPECT_DOUBLE_EQ(rep.identity_weight, 0.5);
}

TEST(Certify, WeightedPasses) {
  const Grid g = unit_square(8);
  EXPECT_TRUE(certify(config(SchemeKind::weighted, 0.5, 0.01), laplacian(g), 20).certified());
}

TEST(Certify, BelowThresholdIsDiagnostic) {
  const Grid g = unit_square(8);
  const CertificationReport rep =
      certify(config(SchemeKind::regularized, 0.6, 0.05, build_two_component(g, 0.5)), laplacian(g), 10);
  EXPECT_FALSE(rep.above_threshold);
  EXPECT_FALSE(rep.certified());
  EXPECT_GT(rep.transition_norm, 0.0);
}

TEST(Certify, Hyperbolic) {
  const Grid g = unit_square(8);
  const DiffusionOperator A = laplacian(g);
  const Decomposition dec = build_two_component(g, 0.5);
  const auto reg = certify_hyperbolic(A, &dec, 0.5, 0.01, 30);
  EXPECT_TRUE(reg.certified());
  EXPECT_GT(reg.min_eigenvalue_D, 0.0);
  const auto w = certify_hyperbolic(A, nullptr, 0.25, 0.01, 30);
  EXPECT_TRUE(w.certified());
}
