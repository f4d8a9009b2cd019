#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "ddsplit/energy.hpp"

namespace ddsplit {

/// Dense matrices are a verification device for small grids only.
inline constexpr std::size_t dense_size_cap = 4096;

/// Explicit square matrix over the interior nodes of a grid.
class DenseOperator {
 public:
  DenseOperator(const Grid& grid, Eigen::MatrixXd m) : grid_(grid), m_(std::move(m)) {
    if (static_cast<std::size_t>(m_.rows()) != grid_.size() || m_.rows() != m_.cols()) {
      throw InvalidArgument("DenseOperator: dimension does not match the grid");
    }
  }
  static DenseOperator identity(const Grid& grid) {
    check_size(grid);
    const auto n = static_cast<Eigen::Index>(grid.size());
    return DenseOperator(grid, Eigen::MatrixXd::Identity(n, n));
  }

  const Grid& grid() const noexcept { return grid_; }
  const Eigen::MatrixXd& matrix() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }

  GridFunction operator()(const GridFunction& u) const {
    if (!(u.grid() == grid_)) throw InvalidArgument("DenseOperator: grid mismatch");
    const Eigen::VectorXd out = m_ * Eigen::Map<const Eigen::VectorXd>(u.data(), dim());
    return GridFunction(grid_, std::vector<double>(out.data(), out.data() + out.size()));
  }

  static void check_size(const Grid& grid) {
    if (grid.size() > dense_size_cap) {
      throw SizeLimitError("dense operators are limited to " + std::to_string(dense_size_cap) +
                           " interior nodes, grid has " + std::to_string(grid.size()));
    }
  }

 private:
  Grid grid_;
  Eigen::MatrixXd m_;
};

/// Explicit matrix of an expression, column by column on the unit vectors.
inline DenseOperator dense_matrix(const OperatorExpression& op) {
  const Grid& grid = op.grid();
  DenseOperator::check_size(grid);
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd m(n, n);
  GridFunction e(grid);
  for (Eigen::Index j = 0; j < n; ++j) {
    e[static_cast<std::size_t>(j)] = 1.0;
    const GridFunction col = apply(op, e);
    e[static_cast<std::size_t>(j)] = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) = col[static_cast<std::size_t>(i)];
  }
  return DenseOperator(grid, std::move(m));
}

inline DenseOperator dense_matrix(const DiffusionOperator& A) {
  DenseOperator::check_size(A.grid());
  const auto n = static_cast<Eigen::Index>(A.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  const CsrMatrix& csr = A.csr();
  for (std::size_t r = 0; r < csr.rows(); ++r) {
    for (std::size_t k = csr.row_ptr[r]; k < csr.row_ptr[r + 1]; ++k) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(csr.cols[k])) = csr.vals[k];
    }
  }
  return DenseOperator(A.grid(), std::move(m));
}

inline Eigen::VectorXd to_eigen(const GridFunction& u) {
  return Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()));
}
inline GridFunction from_eigen(const Grid& grid, const Eigen::VectorXd& v) {
  return GridFunction(grid, std::vector<double>(v.data(), v.data() + v.size()));
}

/// ||M||_2 from the eigenvalues of M^T M.
inline double spectral_norm(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.transpose() * m, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}
inline double spectral_norm(const DenseOperator& m) { return spectral_norm(m.matrix()); }

/// Smallest eigenvalue of the symmetric part.
inline double min_eigenvalue(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

struct SpectralBound {
  double lambda_min = 0.0;
  double bound = 0.0;
};

/// Smallest eigenvalue of A against kappa (delta1 + delta2).
/// Throws ContractError if lambda_min < bound - 1e-9.
inline SpectralBound spectral_bound_check(const DiffusionOperator& A) {
  const DenseOperator dense = dense_matrix(A);
  SpectralBound out{min_eigenvalue(dense.matrix()), spectral_lower_bound(A.grid(), A.kappa())};
  if (out.lambda_min < out.bound - 1e-9) {
    throw ContractError("spectral bound violated: lambda_min = " + std::to_string(out.lambda_min) +
                        " < " + std::to_string(out.bound));
  }
  return out;
}

/// Square root and inverse square root of a dense SPD operator.
struct SquareRoot {
  Eigen::MatrixXd half;
  Eigen::MatrixXd inv_half;
};

inline SquareRoot sqrt_spd(const DiffusionOperator& A) {
  const DenseOperator dense = dense_matrix(A);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense.matrix());
  if (es.info() != Eigen::Success || !(es.eigenvalues().minCoeff() > 0.0)) {
    throw ContractError("sqrt_spd: operator is not positive definite");
  }
  const Eigen::VectorXd s = es.eigenvalues().cwiseSqrt();
  const Eigen::MatrixXd& V = es.eigenvectors();
  return SquareRoot{V * s.asDiagonal() * V.transpose(), V * s.cwiseInverse().asDiagonal() * V.transpose()};
}

/// Which one-parameter family of factors S_a = (E + c C_a)^{-1} (E - c' C_a) to build.
enum class FactorFamily {
  factorized,             // c = c' = sigma tau
  regularized,            // c = sigma tau, c' = (p - sigma) tau
  componentwise,          // c = sigma tau, c' = (1 - sigma) tau
  symmetrized,            // half steps: c = sigma tau/2, c' = (1 - sigma) tau/2
  hyperbolic_positivity,  // c = sigma tau^2, c' = (p/4 - sigma) tau^2
};

struct SymmetrizedFactors {
  std::vector<Eigen::MatrixXd> C;  // A^{1/2} chi_a A^{1/2}
  std::vector<Eigen::MatrixXd> S;
};

namespace detail {

inline std::vector<Eigen::MatrixXd> conjugated_masks(const SquareRoot& root, const Decomposition& dec) {
  std::vector<Eigen::MatrixXd> out;
  for (int a = 1; a <= dec.p(); ++a) {
    const Eigen::Map<const Eigen::VectorXd> chi(dec.mask(a)->data(), static_cast<Eigen::Index>(dec.mask(a)->size()));
    Eigen::MatrixXd C = root.half * chi.asDiagonal() * root.half;
    out.push_back(0.5 * (C + C.transpose()));
  }
  return out;
}

/// (E + c C)^{-1} M via a symmetric positive definite solve.
inline Eigen::MatrixXd resolvent_apply(const Eigen::MatrixXd& C, double c, const Eigen::MatrixXd& M) {
  const auto n = C.rows();
  const Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n) + c * C;
  return B.ldlt().solve(M);
}

}  // namespace detail

inline SymmetrizedFactors symmetrized_operators(const DiffusionOperator& A, const Decomposition& dec,
                                                double sigma, double tau, FactorFamily family) {
  if (!(dec.grid() == A.grid())) throw InvalidArgument("symmetrized_operators: grid mismatch");
  const SquareRoot root = sqrt_spd(A);
  SymmetrizedFactors out;
  out.C = detail::conjugated_masks(root, dec);
  const double p = dec.p();
  double c = sigma * tau, cp = sigma * tau;
  switch (family) {
    case FactorFamily::factorized: break;
    case FactorFamily::regularized: cp = (p - sigma) * tau; break;
    case FactorFamily::componentwise: cp = (1.0 - sigma) * tau; break;
    case FactorFamily::symmetrized:
      c = 0.5 * sigma * tau;
      cp = 0.5 * (1.0 - sigma) * tau;
      break;
    case FactorFamily::hyperbolic_positivity:
      c = sigma * tau * tau;
      cp = (0.25 * p - sigma) * tau * tau;
      break;
  }
  const auto n = static_cast<Eigen::Index>(A.size());
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  for (const Eigen::MatrixXd& C : out.C) out.S.push_back(detail::resolvent_apply(C, c, I - cp * C));
  return out;
}

/// One-step map of a parabolic scheme in the symmetrized variables:
/// v = A^{1/2} y for weighted, regularized and component-wise schemes,
/// w = Btilde_2 A^{1/2} y (Btilde_1 for the commuted order) for the factorized ones.
inline DenseOperator transition_operator(const SchemeConfig& cfg, const DiffusionOperator& A) {
  DenseOperator::check_size(A.grid());
  const auto n = static_cast<Eigen::Index>(A.size());
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const SquareRoot root = sqrt_spd(A);
  const Eigen::MatrixXd Ad = dense_matrix(A).matrix();
  const double tau = cfg.tau, sigma = cfg.sigma;
  if (cfg.kind == SchemeKind::weighted) {
    // (E + sigma tau A)^{-1} (E - (1 - sigma) tau A) commutes with A^{1/2}.
    return DenseOperator(A.grid(), detail::resolvent_apply(Ad, sigma * tau, I - (1.0 - sigma) * tau * Ad));
  }
  if (!cfg.decomposition) throw InvalidArgument("transition_operator: scheme requires a decomposition");
  const Decomposition& dec = *cfg.decomposition;
  const std::vector<Eigen::MatrixXd> C = detail::conjugated_masks(root, dec);
  auto R = [&](std::size_t a, double c) { return detail::resolvent_apply(C[a], c, C[a]); };

  switch (cfg.kind) {
    case SchemeKind::factorized:
    case SchemeKind::factorized_commuted: {
      if (dec.p() != 2) throw UnsupportedDecomposition("factorized transition needs two components");
      const std::size_t left = cfg.kind == SchemeKind::factorized ? 0 : 1;
      const std::size_t right = 1 - left;
      const Eigen::MatrixXd Bl = I + sigma * tau * C[left];
      const Eigen::MatrixXd Br = I + sigma * tau * C[right];
      // S = E - tau Bl^{-1} A Br^{-1}
      const Eigen::MatrixXd ABrinv = Br.transpose().ldlt().solve(Ad.transpose()).transpose();
      return DenseOperator(A.grid(), I - tau * Bl.ldlt().solve(ABrinv));
    }
    case SchemeKind::regularized: {
      Eigen::MatrixXd S = I;
      for (std::size_t a = 0; a < C.size(); ++a) S -= tau * R(a, sigma * tau);
      return DenseOperator(A.grid(), std::move(S));
    }
    case SchemeKind::componentwise: {
      Eigen::MatrixXd S = I;
      for (std::size_t a = 0; a < C.size(); ++a) S = (I - tau * R(a, sigma * tau)) * S;
      return DenseOperator(A.grid(), std::move(S));
    }
    case SchemeKind::componentwise_symmetrized: {
      const double half = 0.5 * tau;
      std::vector<Eigen::MatrixXd> Sa;
      for (std::size_t a = 0; a < C.size(); ++a) Sa.push_back(I - half * R(a, sigma * half));
      Eigen::MatrixXd S = I;
      for (std::size_t a = 0; a < Sa.size(); ++a) S = Sa[a] * S;
      for (std::size_t a = Sa.size(); a-- > 0;) S = Sa[a] * S;
      return DenseOperator(A.grid(), std::move(S));
    }
    default: break;
  }
  throw InvalidArgument("transition_operator: unsupported scheme");
}

/// Maps a state y into the variables in which transition_operator acts.
inline Eigen::VectorXd symmetrized_state(const SchemeConfig& cfg, const DiffusionOperator& A,
                                         const GridFunction& y) {
  const SquareRoot root = sqrt_spd(A);
  Eigen::VectorXd v = root.half * to_eigen(y);
  if (cfg.kind == SchemeKind::factorized || cfg.kind == SchemeKind::factorized_commuted) {
    const int b = cfg.kind == SchemeKind::factorized ? 2 : 1;
    const std::vector<Eigen::MatrixXd> C = detail::conjugated_masks(root, *cfg.decomposition);
    v += cfg.sigma * cfg.tau * C[static_cast<std::size_t>(b - 1)] * v;
  }
  return v;
}

/// (Dtilde^{-1} A^{1/2} phi, A^{1/2} phi) with Dtilde = E - tau^2/4 sum_a R_a,
/// the source norm of the regularized three-level estimate. Dense only.
inline double regularized_source_norm_sq(const DiffusionOperator& A, const Decomposition& dec, double sigma,
                                         double tau, const GridFunction& phi) {
  DenseOperator::check_size(A.grid());
  const SquareRoot root = sqrt_spd(A);
  const std::vector<Eigen::MatrixXd> C = detail::conjugated_masks(root, dec);
  const auto n = static_cast<Eigen::Index>(A.size());
  Eigen::MatrixXd D = Eigen::MatrixXd::Identity(n, n);
  for (const auto& Ca : C) D -= 0.25 * tau * tau * detail::resolvent_apply(Ca, sigma * tau * tau, Ca);
  const Eigen::VectorXd f = root.half * to_eigen(phi);
  const double h = A.grid().h1 * A.grid().h2;
  return h * f.dot(D.ldlt().solve(f));
}

/// Dtilde = E - tau^2/4 sum_a (E + sigma tau^2 C_a)^{-1} C_a for the regularized
/// three-level scheme (p = 1 mask set reproduces the weighted scheme's operator).
inline Eigen::MatrixXd hyperbolic_dtilde(const DiffusionOperator& A, const Decomposition& dec, double sigma,
                                         double tau) {
  const SquareRoot root = sqrt_spd(A);
  const std::vector<Eigen::MatrixXd> C = detail::conjugated_masks(root, dec);
  const auto n = static_cast<Eigen::Index>(A.size());
  Eigen::MatrixXd D = Eigen::MatrixXd::Identity(n, n);
  for (const auto& Ca : C) D -= 0.25 * tau * tau * detail::resolvent_apply(Ca, sigma * tau * tau, Ca);
  return 0.5 * (D + D.transpose());
}

inline constexpr double certify_tol = 1e-10;

struct CertificationReport {
  std::string scheme;
  double sigma = 0.0;
  double tau = 0.0;
  double threshold = 0.0;
  bool above_threshold = false;
  double transition_norm = 0.0;
  std::vector<double> factor_norms;
  /// Factorized schemes: S = (2 sigma - 1)/(2 sigma) E + 1/(2 sigma) S_1 S_2.
  double identity_weight = 0.0;
  int trajectories = 0;
  int steps = 0;
  bool energy_monotone = true;
  double worst_energy_growth = 0.0;  // max over steps of (E^{n+1} - E^n) / E^0

  /// Only meaningful above the threshold; below it the report is diagnostic.
  bool certified() const noexcept {
    if (!above_threshold) return false;
    bool factors_ok = true;
    for (double f : factor_norms) factors_ok = factors_ok && f <= 1.0 + certify_tol;
    return transition_norm <= 1.0 + certify_tol && factors_ok && energy_monotone;
  }
};

/// Certifies a parabolic scheme on a dense-capable grid: transition norm,
/// factor norms, and energy monotonicity along random trajectories with f = 0.
inline CertificationReport certify(const SchemeConfig& cfg, const DiffusionOperator& A, int steps,
                                   int trajectories = 3, unsigned seed = 20110512u) {
  CertificationReport rep;
  rep.scheme = to_string(cfg.kind);
  rep.sigma = cfg.sigma;
  rep.tau = cfg.tau;
  rep.threshold = cfg.stability_threshold();
  rep.above_threshold = !cfg.below_threshold();
  rep.steps = steps;
  rep.trajectories = trajectories;
  rep.transition_norm = spectral_norm(transition_operator(cfg, A));

  if (cfg.kind != SchemeKind::weighted && cfg.decomposition) {
    FactorFamily fam = FactorFamily::factorized;
    switch (cfg.kind) {
      case SchemeKind::regularized: fam = FactorFamily::regularized; break;
      case SchemeKind::componentwise: fam = FactorFamily::componentwise; break;
      case SchemeKind::componentwise_symmetrized: fam = FactorFamily::symmetrized; break;
      default: break;
    }
    const SymmetrizedFactors f = symmetrized_operators(A, *cfg.decomposition, cfg.sigma, cfg.tau, fam);
    for (const auto& S : f.S) rep.factor_norms.push_back(spectral_norm(S));
    if (fam == FactorFamily::factorized && cfg.sigma > 0.0) {
      rep.identity_weight = (2.0 * cfg.sigma - 1.0) / (2.0 * cfg.sigma);
    }
  }

  const EnergyFunctional fn = monitored_energy(cfg, A);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const GridFunction zero(A.grid());
  SchemeConfig tight = cfg;
  tight.solver_tol = std::min(cfg.solver_tol, 1e-12);
  for (int k = 0; k < trajectories; ++k) {
    GridFunction y0(A.grid());
    for (double& v : y0.values()) v = dist(rng);
    ParabolicState s{y0, 0.0, 0};
    const double e0 = evaluate_energy(fn, s.y).value;
    double prev = e0;
    for (int n = 0; n < steps; ++n) {
      s = step(s, A, tight, zero);
      const double e = evaluate_energy(fn, s.y).value;
      const double growth = (e - prev) / e0;
      rep.worst_energy_growth = std::max(rep.worst_energy_growth, growth);
      if (growth > certify_tol) rep.energy_monotone = false;
      prev = e;
    }
  }
  return rep;
}

struct HyperbolicCertificationReport {
  bool regularized = false;
  double sigma = 0.0;
  double tau = 0.0;
  double threshold = 0.0;
  bool above_threshold = false;
  double min_eigenvalue_D = 0.0;  // Dtilde (regularized) or D (weighted)
  int steps = 0;
  double max_energy_drift = 0.0;  // max_n |S^n - S^1| / S^1 along a random trajectory

  bool certified(double drift_tol = 1e-9) const noexcept {
    return above_threshold && min_eigenvalue_D > 0.0 && max_energy_drift <= drift_tol;
  }
};

/// Three-level schemes: positivity of the energy operator and conservation of S^n with f = 0.
/// A null decomposition selects the weighted scheme.
inline HyperbolicCertificationReport certify_hyperbolic(const DiffusionOperator& A, const Decomposition* dec,
                                                        double sigma, double tau, int steps,
                                                        unsigned seed = 20110512u) {
  HyperbolicCertificationReport rep;
  rep.regularized = dec != nullptr;
  rep.sigma = sigma;
  rep.tau = tau;
  rep.steps = steps;
  rep.threshold = dec ? hyperbolic_regularized_threshold(dec->p()) : hyperbolic_weighted_threshold();
  rep.above_threshold = sigma >= rep.threshold;
  if (dec) {
    rep.min_eigenvalue_D = min_eigenvalue(hyperbolic_dtilde(A, *dec, sigma, tau));
  } else {
    const Eigen::MatrixXd Ad = dense_matrix(A).matrix();
    rep.min_eigenvalue_D = min_eigenvalue(Ad + (sigma - 0.25) * tau * tau * Ad * Ad);
  }

  EnergyFunctional fn{dec ? EnergyKind::S_hyperbolic_regularized : EnergyKind::S_hyperbolic_weighted, sigma,
                      tau, A, dec ? std::optional<Decomposition>(*dec) : std::nullopt};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  GridFunction u0(A.grid()), v0(A.grid());
  for (double& v : u0.values()) v = dist(rng);
  for (double& v : v0.values()) v = dist(rng);
  const GridFunction zero(A.grid());
  HyperbolicState s = init_second_level(u0, v0, A, tau, zero);
  const double s1 = evaluate_energy(fn, s).value;
  for (int n = 0; n < steps; ++n) {
    s = dec ? step_regularized_hyperbolic(s, A, *dec, sigma, tau, zero, 1e-13)
            : step_threelevel_weighted(s, A, sigma, tau, zero, 1e-13);
    rep.max_energy_drift = std::max(rep.max_energy_drift, std::abs(evaluate_energy(fn, s).value - s1) / s1);
  }
  return rep;
}

}  // namespace ddsplit
