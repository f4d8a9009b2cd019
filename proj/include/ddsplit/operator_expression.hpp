#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "ddsplit/diffusion_operator.hpp"

namespace ddsplit {

/// Diagonal weight field over interior nodes; null means the identity.
using Mask = std::shared_ptr<const std::vector<double>>;

/// One factor  identity * E + coefficient * chi * A.
struct Factor {
  double identity = 0.0;
  double coefficient = 0.0;
  Mask mask;

  bool masked() const noexcept { return mask != nullptr; }
};

/// Symbolic product of at most two factors over one diffusion operator,
/// times a scalar. Evaluated factor by factor; no product matrix is formed.
class OperatorExpression {
 public:
  static constexpr std::size_t max_factors = 2;

  /// E
  static OperatorExpression identity(const DiffusionOperator& A) {
    return OperatorExpression(A, {Factor{1.0, 0.0, nullptr}});
  }
  /// A
  static OperatorExpression diffusion(const DiffusionOperator& A) {
    return OperatorExpression(A, {Factor{0.0, 1.0, nullptr}});
  }
  /// chi A
  static OperatorExpression masked(const DiffusionOperator& A, Mask chi) {
    check_mask(A, chi);
    return OperatorExpression(A, {Factor{0.0, 1.0, std::move(chi)}});
  }
  /// E + c A
  static OperatorExpression shifted(const DiffusionOperator& A, double c) {
    return OperatorExpression(A, {Factor{1.0, c, nullptr}});
  }
  /// E + c chi A
  static OperatorExpression shifted_masked(const DiffusionOperator& A, Mask chi, double c) {
    check_mask(A, chi);
    return OperatorExpression(A, {Factor{1.0, c, std::move(chi)}});
  }
  static OperatorExpression factor(const DiffusionOperator& A, Factor f) {
    if (f.masked()) check_mask(A, f.mask);
    return OperatorExpression(A, {std::move(f)});
  }

  const DiffusionOperator& op() const noexcept { return A_; }
  const Grid& grid() const noexcept { return A_.grid(); }
  double scale() const noexcept { return scale_; }
  /// Leftmost factor first; application runs right to left.
  const std::vector<Factor>& factors() const noexcept { return factors_; }

  /// All factors are polynomials in A, hence commute and the product is symmetric.
  bool is_symmetric() const noexcept {
    for (const Factor& f : factors_) {
      if (f.masked() && f.coefficient != 0.0) return false;
    }
    return true;
  }

  /// Symmetric and positive definite as composed.
  bool is_spd() const noexcept {
    if (!is_symmetric() || !(scale_ > 0.0)) return false;
    for (const Factor& f : factors_) {
      const bool pos = (f.identity > 0.0 && f.coefficient >= 0.0) ||
                       (f.identity >= 0.0 && f.coefficient > 0.0);
      if (!pos) return false;
    }
    return true;
  }

  /// Every factor is either SPD or reduces to an SPD solve on the support of its mask.
  bool is_solvable() const noexcept {
    if (scale_ == 0.0) return false;
    for (const Factor& f : factors_) {
      if (f.masked()) {
        if (!(f.identity > 0.0 && f.coefficient >= 0.0)) return false;
        for (double w : *f.mask) {
          if (!(w >= 0.0)) return false;
        }
      } else {
        const bool pos = (f.identity > 0.0 && f.coefficient >= 0.0) ||
                         (f.identity >= 0.0 && f.coefficient > 0.0);
        if (!pos) return false;
      }
    }
    return true;
  }

  friend OperatorExpression operator*(const OperatorExpression& lhs, const OperatorExpression& rhs) {
    if (!(lhs.grid() == rhs.grid()) || &lhs.A_.csr() != &rhs.A_.csr()) {
      throw InvalidArgument("OperatorExpression: factors over different operators");
    }
    if (lhs.factors_.size() + rhs.factors_.size() > max_factors) {
      throw InvalidArgument("OperatorExpression: at most two factors per product");
    }
    OperatorExpression out = lhs;
    out.factors_.insert(out.factors_.end(), rhs.factors_.begin(), rhs.factors_.end());
    out.scale_ *= rhs.scale_;
    return out;
  }
  friend OperatorExpression operator*(double s, OperatorExpression e) {
    e.scale_ *= s;
    return e;
  }

 private:
  OperatorExpression(const DiffusionOperator& A, std::vector<Factor> factors)
      : A_(A), factors_(std::move(factors)) {}

  static void check_mask(const DiffusionOperator& A, const Mask& chi) {
    if (!chi || chi->size() != A.size()) {
      throw InvalidArgument("OperatorExpression: mask does not match the operator grid");
    }
  }

  DiffusionOperator A_;
  double scale_ = 1.0;
  std::vector<Factor> factors_;
};

/// out = (identity E + coefficient chi A) u
inline void apply_factor(const DiffusionOperator& A, const Factor& f, std::span<const double> u,
                         std::span<double> out, std::span<double> scratch) {
  if (f.coefficient != 0.0) {
    A.multiply(u, scratch);
    if (f.masked()) {
      const std::vector<double>& chi = *f.mask;
      for (std::size_t r = 0; r < u.size(); ++r) {
        out[r] = f.identity * u[r] + f.coefficient * chi[r] * scratch[r];
      }
    } else {
      for (std::size_t r = 0; r < u.size(); ++r) out[r] = f.identity * u[r] + f.coefficient * scratch[r];
    }
  } else {
    for (std::size_t r = 0; r < u.size(); ++r) out[r] = f.identity * u[r];
  }
}

inline GridFunction apply(const OperatorExpression& op, const GridFunction& u) {
  if (!(u.grid() == op.grid())) throw InvalidArgument("apply: grid mismatch");
  GridFunction cur = u;
  GridFunction next(u.grid());
  std::vector<double> scratch(u.size());
  const auto& fs = op.factors();
  for (auto it = fs.rbegin(); it != fs.rend(); ++it) {
    apply_factor(op.op(), *it, cur.values(), next.values(), scratch);
    std::swap(cur, next);
  }
  if (op.scale() != 1.0) cur *= op.scale();
  return cur;
}

/// sqrt((D u, u)) for symmetric positive (semi)definite D.
inline double energy_norm(const OperatorExpression& op, const GridFunction& u) {
  if (!op.is_symmetric()) throw ContractError("energy_norm: expression is not symmetric");
  const double q = inner_product(apply(op, u), u);
  if (!std::isfinite(q)) throw NonFiniteValue("energy_norm: non-finite quadratic form");
  if (q >= 0.0) return std::sqrt(q);
  const double uu = inner_product(u, u);
  if (q > -1e-13 * uu) return 0.0;
  throw ContractError("energy_norm: quadratic form is negative (" + std::to_string(q) + ")");
}

}  // namespace ddsplit
