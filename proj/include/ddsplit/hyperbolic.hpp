#pragma once

#include "ddsplit/decomposition.hpp"
#include "ddsplit/solver.hpp"

namespace ddsplit {

/// Two consecutive levels y^n, y^{n-1} of a three-level scheme.
struct HyperbolicState {
  GridFunction y_curr;
  GridFunction y_prev;
  double t = 0.0;
  int n = 1;

  /// (y^n - y^{n-1}) / tau
  GridFunction eta(double tau) const { return (1.0 / tau) * (y_curr - y_prev); }
  /// (y^n + y^{n-1}) / 2
  GridFunction zeta() const { return 0.5 * (y_curr + y_prev); }
};

/// y^0 = u0, y^1 = u0 + tau v0 + tau^2/2 (phi0 - A u0).
inline HyperbolicState init_second_level(const GridFunction& u0, const GridFunction& v0,
                                         const DiffusionOperator& A, double tau, const GridFunction& phi0) {
  u0.check_same(v0);
  u0.check_same(phi0);
  if (!(u0.grid() == A.grid())) throw InvalidArgument("init_second_level: grid mismatch");
  GridFunction y1 = u0;
  y1.axpy(tau, v0).axpy(0.5 * tau * tau, phi0 - A(u0));
  return HyperbolicState{std::move(y1), u0, tau, 1};
}

namespace detail {

inline void check_state(const HyperbolicState& s, const DiffusionOperator& A, const GridFunction& phi) {
  if (!(s.y_curr.grid() == A.grid()) || !(s.y_prev.grid() == A.grid()) || !(phi.grid() == A.grid())) {
    throw InvalidArgument("hyperbolic step: grid mismatch");
  }
}

}  // namespace detail

/// sum_a (E + c chi_a A)^{-1} chi_a A y, one masked solve per component.
inline GridFunction regularized_sum(const DiffusionOperator& A, const Decomposition& dec, double c,
                                    const GridFunction& y, double tol = default_solver_tol) {
  const GridFunction Ay = A(y);
  GridFunction out(y.grid());
  for (int a = 1; a <= dec.p(); ++a) {
    const Mask& chi = dec.mask(a);
    out += masked_resolvent(A, chi, c, hadamard(*chi, Ay), tol);
  }
  return out;
}

/// (E + sigma tau^2 A) y^{n+1} = (2E - (1 - 2 sigma) tau^2 A) y^n - (E + sigma tau^2 A) y^{n-1} + tau^2 phi
inline HyperbolicState step_threelevel_weighted(const HyperbolicState& s, const DiffusionOperator& A,
                                                double sigma, double tau, const GridFunction& phi,
                                                double tol = default_solver_tol) {
  detail::check_state(s, A, phi);
  const double tt = tau * tau;
  GridFunction rhs = 2.0 * s.y_curr;
  rhs.axpy(-(1.0 - 2.0 * sigma) * tt, A(s.y_curr));
  rhs -= s.y_prev;
  rhs.axpy(-sigma * tt, A(s.y_prev));
  rhs.axpy(tt, phi);
  GridFunction next = solve_factor(A, Factor{1.0, sigma * tt, nullptr}, rhs, tol);
  return HyperbolicState{std::move(next), s.y_curr, (s.n + 1) * tau, s.n + 1};
}

/// y^{n+1} = 2 y^n - y^{n-1} - tau^2 sum_a (E + sigma tau^2 chi_a A)^{-1} chi_a A y^n + tau^2 phi
inline HyperbolicState step_regularized_hyperbolic(const HyperbolicState& s, const DiffusionOperator& A,
                                                   const Decomposition& dec, double sigma, double tau,
                                                   const GridFunction& phi, double tol = default_solver_tol) {
  detail::check_state(s, A, phi);
  if (!(dec.grid() == A.grid())) throw InvalidArgument("hyperbolic step: decomposition grid mismatch");
  const double tt = tau * tau;
  GridFunction next = 2.0 * s.y_curr;
  next -= s.y_prev;
  next.axpy(-tt, regularized_sum(A, dec, sigma * tt, s.y_curr, tol));
  next.axpy(tt, phi);
  return HyperbolicState{std::move(next), s.y_curr, (s.n + 1) * tau, s.n + 1};
}

inline double hyperbolic_weighted_threshold() noexcept { return 0.25; }
inline double hyperbolic_regularized_threshold(int p) noexcept { return 0.25 * p; }

/// Right-hand side of the level-wise bound  S^{n+1} <= e^tau S^n + tau^2/2 e^tau / (e^{tau/2} - 1) |phi|^2.
inline double three_level_energy_bound(double energy, double tau, double source_norm_sq) noexcept {
  const double e = std::exp(tau);
  if (source_norm_sq == 0.0) return e * energy;
  return e * energy + 0.5 * tau * tau * e / std::expm1(0.5 * tau) * source_norm_sq;
}

}  // namespace ddsplit
