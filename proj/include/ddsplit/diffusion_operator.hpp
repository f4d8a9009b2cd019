#pragma once

#include <cmath>
#include <cstdio>
#include <memory>
#include <span>
#include <vector>

#include "ddsplit/grid.hpp"

namespace ddsplit {

/// Compressed-sparse-row storage for the 5-point stencil.
struct CsrMatrix {
  std::vector<std::size_t> row_ptr;
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  std::vector<std::size_t> diag_pos;

  std::size_t rows() const noexcept { return diag_pos.size(); }
  std::size_t nnz() const noexcept { return vals.size(); }
};

/// Sparse symmetric diffusion operator -div(k grad) on the interior nodes,
/// homogeneous Dirichlet data, k sampled at face midpoints.
///
/// Copies share the assembled matrix, which never changes after assembly.
class DiffusionOperator {
 public:
  DiffusionOperator(const Grid& grid, double kappa, std::shared_ptr<const CsrMatrix> csr)
      : grid_(grid), kappa_(kappa), csr_(std::move(csr)) {}

  const Grid& grid() const noexcept { return grid_; }
  double kappa() const noexcept { return kappa_; }
  const CsrMatrix& csr() const noexcept { return *csr_; }
  std::size_t size() const noexcept { return csr_->rows(); }

  double diagonal(std::size_t r) const noexcept { return csr_->vals[csr_->diag_pos[r]]; }

  /// Entry (r, c), zero outside the stencil.
  double entry(std::size_t r, std::size_t c) const noexcept {
    for (std::size_t k = csr_->row_ptr[r]; k < csr_->row_ptr[r + 1]; ++k) {
      if (csr_->cols[k] == c) return csr_->vals[k];
    }
    return 0.0;
  }

  /// out = A x, raw arrays of length size().
  void multiply(std::span<const double> x, std::span<double> out) const noexcept {
    const CsrMatrix& m = *csr_;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      double s = 0.0;
      for (std::size_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) s += m.vals[k] * x[m.cols[k]];
      out[r] = s;
    }
  }

  GridFunction operator()(const GridFunction& u) const {
    if (!(u.grid() == grid_)) throw InvalidArgument("DiffusionOperator: grid mismatch");
    GridFunction out(grid_);
    multiply(u.values(), out.values());
    return out;
  }

 private:
  Grid grid_;
  double kappa_;
  std::shared_ptr<const CsrMatrix> csr_;
};

/// Assembles the 5-point operator. Every face coefficient is evaluated once
/// and shared by the two rows it couples, so the matrix is bit-symmetric.
inline DiffusionOperator assemble_diffusion(const Grid& grid, const PointFunction& k,
                                            double kappa) {
  if (!(kappa > 0.0)) throw InvalidArgument("assemble_diffusion: kappa must be positive");
  const int n1 = grid.interior1();
  const int n2 = grid.interior2();

  // kx(f, i2): face between columns f and f+1 on row i2, f = 0..N1-1.
  // ky(i1, f): face between rows f and f+1 on column i1, f = 0..N2-1.
  std::vector<double> kx(static_cast<std::size_t>(grid.N1) * (n2 + 1));
  std::vector<double> ky(static_cast<std::size_t>(n1 + 1) * grid.N2);
  auto kx_at = [&](int f, int i2) -> double& { return kx[static_cast<std::size_t>(i2) * grid.N1 + f]; };
  auto ky_at = [&](int i1, int f) -> double& { return ky[static_cast<std::size_t>(f) * (n1 + 1) + i1]; };

  auto check = [&](double value, double x1, double x2) {
    if (!(value >= kappa)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "coefficient k = %.17g below kappa = %.17g at face (%.17g, %.17g)",
                    value, kappa, x1, x2);
      throw CoefficientViolation(buf);
    }
  };
  for (int i2 = 1; i2 <= n2; ++i2) {
    for (int f = 0; f < grid.N1; ++f) {
      const double x1 = (f + 0.5) * grid.h1;
      const double x2 = grid.x2(i2);
      const double v = k(x1, x2);
      check(v, x1, x2);
      kx_at(f, i2) = v / (grid.h1 * grid.h1);
    }
  }
  for (int f = 0; f < grid.N2; ++f) {
    for (int i1 = 1; i1 <= n1; ++i1) {
      const double x1 = grid.x1(i1);
      const double x2 = (f + 0.5) * grid.h2;
      const double v = k(x1, x2);
      check(v, x1, x2);
      ky_at(i1, f) = v / (grid.h2 * grid.h2);
    }
  }

  auto csr = std::make_shared<CsrMatrix>();
  const std::size_t n = grid.size();
  csr->row_ptr.reserve(n + 1);
  csr->cols.reserve(5 * n);
  csr->vals.reserve(5 * n);
  csr->diag_pos.reserve(n);
  csr->row_ptr.push_back(0);
  for (int i2 = 1; i2 <= n2; ++i2) {
    for (int i1 = 1; i1 <= n1; ++i1) {
      const double west = kx_at(i1 - 1, i2);
      const double east = kx_at(i1, i2);
      const double south = ky_at(i1, i2 - 1);
      const double north = ky_at(i1, i2);
      auto push = [&](int j1, int j2, double v) {
        csr->cols.push_back(grid.index(j1, j2));
        csr->vals.push_back(v);
      };
      // Column order south, west, diagonal, east, north keeps rows sorted.
      if (i2 > 1) push(i1, i2 - 1, -south);
      if (i1 > 1) push(i1 - 1, i2, -west);
      csr->diag_pos.push_back(csr->vals.size());
      push(i1, i2, west + east + south + north);
      if (i1 < n1) push(i1 + 1, i2, -east);
      if (i2 < n2) push(i1, i2 + 1, -north);
      csr->row_ptr.push_back(csr->vals.size());
    }
  }
  return DiffusionOperator(grid, kappa, std::move(csr));
}

/// Lower spectral bound kappa * (delta1 + delta2) of the operator,
/// delta_a = 4 / h_a^2 * sin^2(pi h_a / (2 l_a)).
inline double spectral_lower_bound(const Grid& grid, double kappa) {
  const double pi = std::acos(-1.0);
  auto delta = [pi](double h, double l) {
    const double s = std::sin(pi * h / (2.0 * l));
    return 4.0 / (h * h) * s * s;
  };
  return kappa * (delta(grid.h1, grid.l1) + delta(grid.h2, grid.l2));
}

}  // namespace ddsplit
