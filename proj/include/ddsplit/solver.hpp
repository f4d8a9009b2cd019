#pragma once

#include <cmath>
#include <cstdio>
#include <vector>

#include "ddsplit/operator_expression.hpp"

namespace ddsplit {

inline constexpr double default_solver_tol = 1e-10;

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Jacobi-preconditioned conjugate gradients for an SPD operator given as a
/// callable out = M x. Stops when ||b - M x|| <= rel_tol ||b||.
/// x holds the initial guess on entry. Returns the iteration count.
template <class ApplyFn>
int pcg(ApplyFn&& apply_m, std::span<const double> inv_diag, std::span<const double> b,
        std::span<double> x, double rel_tol, int max_iter) {
  const std::size_t n = b.size();
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return 0;
  }
  std::vector<double> r(n), z(n), p(n), q(n);
  apply_m(std::span<const double>(x.data(), n), std::span<double>(q));
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  double rnorm = std::sqrt(dot(r, r));
  if (rnorm <= rel_tol * bnorm) return 0;
  for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = dot(r, z);
  int it = 1;
  for (; it <= max_iter; ++it) {
    apply_m(std::span<const double>(p), std::span<double>(q));
    const double pq = dot(p, q);
    if (!(pq > 0.0) || !std::isfinite(pq)) {
      if (!std::isfinite(pq)) throw NonFiniteValue("pcg: non-finite value in iteration");
      if (pq == 0.0 && rz == 0.0) break;  // residual underflow: no further progress possible
      throw ContractError("pcg: operator is not positive definite on the search direction");
    }
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    rnorm = std::sqrt(dot(r, r));
    if (!std::isfinite(rnorm)) throw NonFiniteValue("pcg: non-finite residual");
    if (rnorm <= rel_tol * bnorm) return it;
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "pcg: no convergence in %d iterations, relative residual %.3e",
                std::min(it, max_iter), rnorm / bnorm);
  throw NoConvergence(buf);
}

}  // namespace detail

/// Solves (identity E + coefficient chi A) x = rhs.
///
/// Nodes with chi = 0 are pinned: x = rhs / identity there. On the support S
/// of chi the rows are divided by chi, leaving the SPD system
///   (identity / chi + coefficient A_SS) x_S = rhs_S / chi - coefficient A_SP x_P,
/// which is solved by preconditioned CG. An unmasked factor is the case S = all.
inline GridFunction solve_factor(const DiffusionOperator& A, const Factor& f, const GridFunction& rhs,
                                 double rel_tol = default_solver_tol) {
  if (!(rel_tol > 0.0)) throw InvalidArgument("solve: rel_tol must be positive");
  if (!(rhs.grid() == A.grid())) throw InvalidArgument("solve: grid mismatch");
  const std::size_t n = A.size();
  GridFunction x(A.grid());
  if (f.coefficient == 0.0) {
    if (!(f.identity != 0.0)) throw ContractError("solve: singular factor");
    for (std::size_t r = 0; r < n; ++r) x[r] = rhs[r] / f.identity;
    return x;
  }
  const bool pos = f.masked() ? (f.identity > 0.0 && f.coefficient > 0.0)
                              : (f.identity >= 0.0 && f.coefficient > 0.0);
  if (!pos) throw ContractError("solve: factor is not reducible to an SPD system");

  std::vector<std::size_t> support;
  std::vector<double> weight;
  support.reserve(n);
  weight.reserve(n);
  std::vector<std::ptrdiff_t> local(n, -1);
  for (std::size_t r = 0; r < n; ++r) {
    const double w = f.masked() ? (*f.mask)[r] : 1.0;
    if (w < 0.0 || !std::isfinite(w)) throw ContractError("solve: mask weight outside [0, inf)");
    if (w > 0.0) {
      local[r] = static_cast<std::ptrdiff_t>(support.size());
      support.push_back(r);
      weight.push_back(w);
    } else {
      x[r] = rhs[r] / f.identity;
    }
  }
  const std::size_t m = support.size();
  if (m == 0) return x;

  const CsrMatrix& csr = A.csr();
  const double c = f.coefficient;
  std::vector<double> b(m), inv_diag(m), xs(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t r = support[i];
    double coupling = 0.0;
    for (std::size_t k = csr.row_ptr[r]; k < csr.row_ptr[r + 1]; ++k) {
      if (local[csr.cols[k]] < 0) coupling += csr.vals[k] * x[csr.cols[k]];
    }
    b[i] = rhs[r] / weight[i] - c * coupling;
    inv_diag[i] = 1.0 / (f.identity / weight[i] + c * csr.vals[csr.diag_pos[r]]);
    xs[i] = rhs[r];
  }
  auto apply_reduced = [&](std::span<const double> v, std::span<double> out) {
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t r = support[i];
      double s = 0.0;
      for (std::size_t k = csr.row_ptr[r]; k < csr.row_ptr[r + 1]; ++k) {
        const std::ptrdiff_t j = local[csr.cols[k]];
        if (j >= 0) s += csr.vals[k] * v[static_cast<std::size_t>(j)];
      }
      out[i] = f.identity / weight[i] * v[i] + c * s;
    }
  };
  detail::pcg(apply_reduced, inv_diag, b, xs, rel_tol, static_cast<int>(10 * m));
  for (std::size_t i = 0; i < m; ++i) x[support[i]] = xs[i];
  return x;
}

/// Solves op x = rhs for an SPD expression, or one whose factors each reduce
/// to an SPD solve on a node subset. Products are inverted factor by factor.
inline GridFunction solve_spd(const OperatorExpression& op, const GridFunction& rhs,
                              double rel_tol = default_solver_tol) {
  if (!(rhs.grid() == op.grid())) throw InvalidArgument("solve_spd: grid mismatch");
  if (!op.is_solvable()) throw ContractError("solve_spd: expression is not SPD");
  GridFunction x = rhs;
  for (const Factor& f : op.factors()) x = solve_factor(op.op(), f, x, rel_tol);
  if (op.scale() != 1.0) x *= 1.0 / op.scale();
  return x;
}

/// (E + c chi A)^{-1} rhs, the resolvent used by every implicit stage.
inline GridFunction masked_resolvent(const DiffusionOperator& A, const Mask& chi, double c,
                                     const GridFunction& rhs, double rel_tol = default_solver_tol) {
  return solve_factor(A, Factor{1.0, c, chi}, rhs, rel_tol);
}

}  // namespace ddsplit
