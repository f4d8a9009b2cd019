#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ddsplit/decomposition.hpp"
#include "ddsplit/solver.hpp"

namespace ddsplit {

enum class SchemeKind {
  weighted,
  factorized,
  factorized_commuted,
  componentwise,
  componentwise_symmetrized,
  regularized,
};

inline const char* to_string(SchemeKind k) noexcept {
  switch (k) {
    case SchemeKind::weighted: return "weighted";
    case SchemeKind::factorized: return "factorized";
    case SchemeKind::factorized_commuted: return "factorized_commuted";
    case SchemeKind::componentwise: return "componentwise";
    case SchemeKind::componentwise_symmetrized: return "componentwise_symmetrized";
    case SchemeKind::regularized: return "regularized";
  }
  return "?";
}

inline std::optional<SchemeKind> scheme_from_string(const std::string& s) {
  for (SchemeKind k : {SchemeKind::weighted, SchemeKind::factorized, SchemeKind::factorized_commuted,
                       SchemeKind::componentwise, SchemeKind::componentwise_symmetrized,
                       SchemeKind::regularized}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

/// Time at which the source is sampled for the step t^n -> t^{n+1}.
enum class SourceSampling {
  weighted_time,  // sigma t^{n+1} + (1 - sigma) t^n
  new_level,      // t^{n+1}
  old_level,      // t^n
  midpoint,       // t^n + tau / 2
};

/// How a component-wise substep builds its right-hand side.
enum class ComponentwiseForm {
  resolvent,  // y' = y - tau (E + s tau chi A)^{-1} chi A y + tau chi phi
  two_stage,  // (E + s tau chi A)(y' - y)/tau + chi A y = (E + s tau chi A) chi phi
};

struct SchemeConfig {
  SchemeKind kind = SchemeKind::weighted;
  double sigma = 0.5;
  double tau = 0.01;
  std::optional<SourceSampling> rhs_sampling;
  std::optional<Decomposition> decomposition;
  ComponentwiseForm componentwise_form = ComponentwiseForm::resolvent;
  double solver_tol = default_solver_tol;

  int components() const noexcept { return decomposition ? decomposition->p() : 1; }

  SourceSampling sampling() const noexcept {
    if (rhs_sampling) return *rhs_sampling;
    switch (kind) {
      case SchemeKind::weighted:
      case SchemeKind::factorized:
      case SchemeKind::factorized_commuted:
        return SourceSampling::weighted_time;
      default:
        return SourceSampling::new_level;
    }
  }

  /// Smallest sigma for which the scheme is unconditionally stable.
  double stability_threshold() const noexcept {
    return kind == SchemeKind::regularized ? 0.5 * components() : 0.5;
  }
  bool below_threshold() const noexcept { return sigma < stability_threshold(); }

  std::vector<std::string> warnings() const {
    std::vector<std::string> out;
    if (below_threshold()) {
      out.push_back(std::string(to_string(kind)) + " scheme with sigma = " + std::to_string(sigma) +
                    " is below its stability threshold " + std::to_string(stability_threshold()));
    }
    return out;
  }
};

struct ParabolicState {
  GridFunction y;
  double t = 0.0;
  int n = 0;
};

/// f(x1, x2, t); an empty function is the zero source.
using Source = std::function<double(double, double, double)>;

inline double source_time(const SchemeConfig& cfg, int n) noexcept {
  const double t0 = n * cfg.tau;
  const double t1 = (n + 1) * cfg.tau;
  switch (cfg.sampling()) {
    case SourceSampling::weighted_time: return cfg.sigma * t1 + (1.0 - cfg.sigma) * t0;
    case SourceSampling::new_level: return t1;
    case SourceSampling::old_level: return t0;
    case SourceSampling::midpoint: return t0 + 0.5 * cfg.tau;
  }
  return t1;
}

inline GridFunction sample_source(const Source& f, const Grid& grid, double t) {
  if (!f) return GridFunction(grid);
  return sample([&](double x1, double x2) { return f(x1, x2, t); }, grid);
}

namespace detail {

inline void check_state(const ParabolicState& s, const DiffusionOperator& A, const GridFunction& phi) {
  if (!(s.y.grid() == A.grid()) || !(phi.grid() == A.grid())) {
    throw InvalidArgument("parabolic step: grid mismatch");
  }
}

inline const Decomposition& require_decomposition(const SchemeConfig& cfg, const Grid& grid) {
  if (!cfg.decomposition) {
    throw InvalidArgument(std::string(to_string(cfg.kind)) + " scheme requires a decomposition");
  }
  if (!(cfg.decomposition->grid() == grid)) throw InvalidArgument("decomposition grid mismatch");
  return *cfg.decomposition;
}

inline ParabolicState advance(const ParabolicState& s, const SchemeConfig& cfg, GridFunction y) {
  return ParabolicState{std::move(y), (s.n + 1) * cfg.tau, s.n + 1};
}

/// (E + c chi A)^{-1} chi A y
inline GridFunction damped_component(const DiffusionOperator& A, const Mask& chi, double c,
                                     const GridFunction& y, double tol) {
  return masked_resolvent(A, chi, c, hadamard(*chi, A(y)), tol);
}

}  // namespace detail

/// (E + sigma tau A) y^{n+1} = (E - (1 - sigma) tau A) y^n + tau phi
inline ParabolicState step_weighted(const ParabolicState& s, const DiffusionOperator& A,
                                    const SchemeConfig& cfg, const GridFunction& phi) {
  detail::check_state(s, A, phi);
  GridFunction rhs = s.y;
  rhs.axpy(-(1.0 - cfg.sigma) * cfg.tau, A(s.y)).axpy(cfg.tau, phi);
  return detail::advance(s, cfg, solve_factor(A, Factor{1.0, cfg.sigma * cfg.tau, nullptr}, rhs, cfg.solver_tol));
}

/// Factorized scheme B_1 B_2 (y^{n+1} - y^n)/tau + A y^n = phi with
/// B_a = E + sigma tau chi_a A, for a crisp two-component decomposition.
///
/// Stages (chi_2 marks the interface):
///  1. explicit predictor w = phi - A y^n on the interface;
///  2. implicit solve of B_1 w = phi - A y^n in the subdomains, interface frozen;
///  3. implicit correction B_2 z = w on the interface, subdomains frozen;
/// then y^{n+1} = y^n + tau z. The commuted variant B_2 B_1 swaps the roles:
/// implicit on the interface first, then the subdomains.
inline ParabolicState step_factorized(const ParabolicState& s, const DiffusionOperator& A,
                                      const SchemeConfig& cfg, const GridFunction& phi) {
  detail::check_state(s, A, phi);
  const Decomposition& dec = detail::require_decomposition(cfg, A.grid());
  if (dec.p() != 2 || !dec.is_crisp()) {
    throw UnsupportedDecomposition("factorized scheme needs a crisp two-component decomposition");
  }
  const bool commuted = cfg.kind == SchemeKind::factorized_commuted;
  const Mask& first = dec.mask(commuted ? 2 : 1);
  const Mask& second = dec.mask(commuted ? 1 : 2);
  const double c = cfg.sigma * cfg.tau;

  GridFunction residual = phi - A(s.y);
  // Rows outside the support of `first` are pinned to the explicit value
  // (stage 1); the rest is the subdomain solve with those values frozen (stage 2).
  GridFunction w = masked_resolvent(A, first, c, residual, cfg.solver_tol);
  // Stage 3 leaves w untouched off the support of `second`.
  GridFunction z = masked_resolvent(A, second, c, w, cfg.solver_tol);
  GridFunction y = s.y;
  y.axpy(cfg.tau, z);
  return detail::advance(s, cfg, std::move(y));
}

/// Sequential substeps alpha = 1..p, each advancing the latest iterate:
/// y_a = y_{a-1} - tau (E + sigma tau chi_a A)^{-1} chi_a A y_{a-1} + tau chi_a phi.
inline ParabolicState step_componentwise(const ParabolicState& s, const DiffusionOperator& A,
                                         const SchemeConfig& cfg, const GridFunction& phi) {
  detail::check_state(s, A, phi);
  const Decomposition& dec = detail::require_decomposition(cfg, A.grid());
  const double c = cfg.sigma * cfg.tau;
  GridFunction y = s.y;
  for (int a = 1; a <= dec.p(); ++a) {
    const Mask& chi = dec.mask(a);
    const GridFunction chi_phi = hadamard(*chi, phi);
    if (cfg.componentwise_form == ComponentwiseForm::resolvent) {
      y.axpy(-cfg.tau, detail::damped_component(A, chi, c, y, cfg.solver_tol)).axpy(cfg.tau, chi_phi);
    } else {
      const Factor b{1.0, c, chi};
      const GridFunction rhs = apply(OperatorExpression::factor(A, b), chi_phi) - hadamard(*chi, A(y));
      y.axpy(cfg.tau, solve_factor(A, b, rhs, cfg.solver_tol));
    }
  }
  return detail::advance(s, cfg, std::move(y));
}

/// Two half-steps of length tau/2: a forward sweep alpha = 1..p and a reverse
/// sweep alpha = p..1. Each substep is
///   y' = y - (tau/2) (E + sigma (tau/2) chi_a A)^{-1} chi_a A y + (tau/2) chi_a phi,
/// which for sigma = 1/2 is (E + tau/4 chi_a A)^{-1}(E - tau/4 chi_a A) y plus source.
inline ParabolicState step_componentwise_symmetrized(const ParabolicState& s, const DiffusionOperator& A,
                                                     const SchemeConfig& cfg, const GridFunction& phi) {
  detail::check_state(s, A, phi);
  const Decomposition& dec = detail::require_decomposition(cfg, A.grid());
  const double half = 0.5 * cfg.tau;
  const double c = cfg.sigma * half;
  GridFunction y = s.y;
  auto substep = [&](int a) {
    const Mask& chi = dec.mask(a);
    y.axpy(-half, detail::damped_component(A, chi, c, y, cfg.solver_tol)).axpy(half, hadamard(*chi, phi));
  };
  for (int a = 1; a <= dec.p(); ++a) substep(a);
  for (int a = dec.p(); a >= 1; --a) substep(a);
  return detail::advance(s, cfg, std::move(y));
}

/// y^{n+1} = y^n - tau sum_a (E + sigma tau chi_a A)^{-1} chi_a A y^n + tau phi.
/// All components read the same y^n.
inline ParabolicState step_regularized(const ParabolicState& s, const DiffusionOperator& A,
                                       const SchemeConfig& cfg, const GridFunction& phi) {
  detail::check_state(s, A, phi);
  const Decomposition& dec = detail::require_decomposition(cfg, A.grid());
  const double c = cfg.sigma * cfg.tau;
  GridFunction y = s.y;
  for (int a = 1; a <= dec.p(); ++a) {
    y.axpy(-cfg.tau, detail::damped_component(A, dec.mask(a), c, s.y, cfg.solver_tol));
  }
  y.axpy(cfg.tau, phi);
  return detail::advance(s, cfg, std::move(y));
}

inline ParabolicState step(const ParabolicState& s, const DiffusionOperator& A, const SchemeConfig& cfg,
                           const GridFunction& phi) {
  switch (cfg.kind) {
    case SchemeKind::weighted: return step_weighted(s, A, cfg, phi);
    case SchemeKind::factorized:
    case SchemeKind::factorized_commuted: return step_factorized(s, A, cfg, phi);
    case SchemeKind::componentwise: return step_componentwise(s, A, cfg, phi);
    case SchemeKind::componentwise_symmetrized: return step_componentwise_symmetrized(s, A, cfg, phi);
    case SchemeKind::regularized: return step_regularized(s, A, cfg, phi);
  }
  throw InvalidArgument("unknown scheme kind");
}

/// Samples phi^n from f according to the configured rule, then steps.
inline ParabolicState step(const ParabolicState& s, const DiffusionOperator& A, const SchemeConfig& cfg,
                           const Source& f) {
  return step(s, A, cfg, sample_source(f, A.grid(), source_time(cfg, s.n)));
}

}  // namespace ddsplit
