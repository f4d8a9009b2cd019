#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include "ddsplit/hyperbolic.hpp"
#include "ddsplit/parabolic.hpp"

namespace ddsplit {

/// Monitored quantities of the stability estimates.
enum class EnergyKind {
  D_parabolic,               // |y|_D, D = A + (sigma - 1/2) tau A^2
  B2A,                       // |B_2 y|_A, B_2 = E + sigma tau chi_2 A
  S_hyperbolic_weighted,     // |eta|_D^2 + |A zeta|^2, D = A + (sigma - 1/4) tau^2 A^2
  S_hyperbolic_regularized,  // |eta|_D^2 + |zeta|_{A Atilde}^2, D = A (E - tau^2/4 Atilde)
  A_norm,                    // |y|_A
};

struct EnergyFunctional {
  EnergyKind kind = EnergyKind::A_norm;
  double sigma = 0.5;
  double tau = 0.01;
  DiffusionOperator A;
  std::optional<Decomposition> decomposition;  // B2A and S_hyperbolic_regularized
  double solver_tol = 1e-12;
  /// Component whose factor is measured by B2A; 1 for the commuted factorization.
  int b_component = 2;

  bool two_level() const noexcept {
    return kind == EnergyKind::S_hyperbolic_weighted || kind == EnergyKind::S_hyperbolic_regularized;
  }

  double threshold() const noexcept {
    switch (kind) {
      case EnergyKind::D_parabolic: return 0.5;
      case EnergyKind::S_hyperbolic_weighted: return 0.25;
      case EnergyKind::S_hyperbolic_regularized:
        return 0.25 * (decomposition ? decomposition->p() : 1);
      default: return -std::numeric_limits<double>::infinity();
    }
  }
};

struct EnergyValue {
  double value = 0.0;
  /// sigma below the functional's validity threshold; value is still reported.
  bool below_threshold = false;
};

namespace detail {

inline double quadratic_or_throw(double q, double scale, const char* what) {
  if (q >= 0.0) return q;
  if (q > -1e-13 * scale) return 0.0;
  throw ContractError(std::string(what) + ": quadratic form is negative");
}

inline const Decomposition& energy_decomposition(const EnergyFunctional& fn) {
  if (!fn.decomposition) throw InvalidArgument("energy functional requires a decomposition");
  return *fn.decomposition;
}

}  // namespace detail

/// Parabolic kinds return the norm itself (not its square).
inline EnergyValue evaluate_energy(const EnergyFunctional& fn, const GridFunction& y) {
  if (fn.two_level()) throw InvalidArgument("evaluate_energy: hyperbolic functional needs two levels");
  if (!(y.grid() == fn.A.grid())) throw InvalidArgument("evaluate_energy: grid mismatch");
  EnergyValue out;
  out.below_threshold = fn.sigma < fn.threshold();
  const DiffusionOperator& A = fn.A;
  switch (fn.kind) {
    case EnergyKind::D_parabolic: {
      const GridFunction Ay = A(y);
      const double q = inner_product(Ay, y) + (fn.sigma - 0.5) * fn.tau * inner_product(Ay, Ay);
      out.value = std::sqrt(detail::quadratic_or_throw(q, inner_product(y, y), "D_parabolic"));
      break;
    }
    case EnergyKind::B2A: {
      const Decomposition& dec = detail::energy_decomposition(fn);
      const auto B = OperatorExpression::shifted_masked(A, dec.mask(fn.b_component), fn.sigma * fn.tau);
      out.value = energy_norm(OperatorExpression::diffusion(A), apply(B, y));
      break;
    }
    case EnergyKind::A_norm:
      out.value = energy_norm(OperatorExpression::diffusion(A), y);
      break;
    default:
      break;
  }
  return out;
}

/// Hyperbolic kinds return S^n built from y^n = y_curr and y^{n-1} = y_prev.
inline EnergyValue evaluate_energy(const EnergyFunctional& fn, const GridFunction& y_curr,
                                   const GridFunction& y_prev) {
  if (!fn.two_level()) throw InvalidArgument("evaluate_energy: parabolic functional takes one level");
  y_curr.check_same(y_prev);
  if (!(y_curr.grid() == fn.A.grid())) throw InvalidArgument("evaluate_energy: grid mismatch");
  EnergyValue out;
  out.below_threshold = fn.sigma < fn.threshold();
  const DiffusionOperator& A = fn.A;
  const double tt = fn.tau * fn.tau;
  const GridFunction eta = (1.0 / fn.tau) * (y_curr - y_prev);
  const GridFunction zeta = 0.5 * (y_curr + y_prev);
  const GridFunction Aeta = A(eta);
  const GridFunction Azeta = A(zeta);
  if (fn.kind == EnergyKind::S_hyperbolic_weighted) {
    const double q = inner_product(Aeta, eta) + (fn.sigma - 0.25) * tt * inner_product(Aeta, Aeta);
    out.value = detail::quadratic_or_throw(q, inner_product(eta, eta), "S_hyperbolic_weighted") +
                inner_product(Azeta, Azeta);
  } else {
    const Decomposition& dec = detail::energy_decomposition(fn);
    const double c = fn.sigma * tt;
    const GridFunction Rt_eta = regularized_sum(A, dec, c, eta, fn.solver_tol);
    const GridFunction Rt_zeta = regularized_sum(A, dec, c, zeta, fn.solver_tol);
    const double q = inner_product(Aeta, eta) - 0.25 * tt * inner_product(Rt_eta, Aeta);
    const double s = inner_product(Rt_zeta, Azeta);
    out.value = detail::quadratic_or_throw(q, inner_product(eta, eta), "S_hyperbolic_regularized") +
                detail::quadratic_or_throw(s, inner_product(zeta, zeta), "S_hyperbolic_regularized");
  }
  return out;
}

inline EnergyValue evaluate_energy(const EnergyFunctional& fn, const HyperbolicState& s) {
  return evaluate_energy(fn, s.y_curr, s.y_prev);
}

/// Energy monitored by the stability estimate of a parabolic scheme.
inline EnergyFunctional monitored_energy(const SchemeConfig& cfg, const DiffusionOperator& A) {
  EnergyFunctional fn{EnergyKind::A_norm, cfg.sigma, cfg.tau, A, cfg.decomposition};
  switch (cfg.kind) {
    case SchemeKind::weighted: fn.kind = EnergyKind::D_parabolic; break;
    case SchemeKind::factorized: fn.kind = EnergyKind::B2A; break;
    case SchemeKind::factorized_commuted:
      fn.kind = EnergyKind::B2A;
      fn.b_component = 1;
      break;
    default: break;
  }
  return fn;
}

}  // namespace ddsplit
