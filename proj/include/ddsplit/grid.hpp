#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ddsplit/error.hpp"

namespace ddsplit {

/// Uniform rectangular mesh on (0,l1) x (0,l2) with N1 x N2 cells.
///
/// Only interior nodes carry unknowns. They are numbered lexicographically,
/// i1 fastest: r = (i2 - 1) * (N1 - 1) + (i1 - 1).
struct Grid {
  double l1 = 1.0;
  double l2 = 1.0;
  int N1 = 2;
  int N2 = 2;
  double h1 = 0.5;
  double h2 = 0.5;

  int interior1() const noexcept { return N1 - 1; }
  int interior2() const noexcept { return N2 - 1; }
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(N1 - 1) * static_cast<std::size_t>(N2 - 1);
  }

  /// Interior index; requires 1 <= i1 <= N1-1, 1 <= i2 <= N2-1.
  std::size_t index(int i1, int i2) const noexcept {
    return static_cast<std::size_t>(i2 - 1) * static_cast<std::size_t>(N1 - 1) +
           static_cast<std::size_t>(i1 - 1);
  }
  int i1_of(std::size_t r) const noexcept { return static_cast<int>(r % (N1 - 1)) + 1; }
  int i2_of(std::size_t r) const noexcept { return static_cast<int>(r / (N1 - 1)) + 1; }

  double x1(int i1) const noexcept { return i1 * h1; }
  double x2(int i2) const noexcept { return i2 * h2; }

  bool is_interior(int i1, int i2) const noexcept {
    return i1 >= 1 && i1 <= N1 - 1 && i2 >= 1 && i2 <= N2 - 1;
  }

  friend bool operator==(const Grid&, const Grid&) = default;
};

inline Grid build_grid(double l1, double l2, int N1, int N2) {
  if (!(l1 > 0.0) || !(l2 > 0.0)) {
    throw InvalidArgument("build_grid: side lengths must be positive");
  }
  if (N1 < 2 || N2 < 2) {
    throw InvalidArgument("build_grid: need at least 2 cells per axis, got " +
                          std::to_string(N1) + "x" + std::to_string(N2));
  }
  return Grid{l1, l2, N1, N2, l1 / N1, l2 / N2};
}

/// Values of a discrete field on the interior nodes of a grid.
/// Boundary nodes are implicit and read as zero.
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(const Grid& grid, double fill = 0.0)
      : grid_(grid), values_(grid.size(), fill) {}
  GridFunction(const Grid& grid, std::vector<double> values)
      : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw InvalidArgument("GridFunction: " + std::to_string(values_.size()) +
                            " values for " + std::to_string(grid_.size()) + " interior nodes");
    }
  }

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator[](std::size_t r) noexcept { return values_[r]; }
  double operator[](std::size_t r) const noexcept { return values_[r]; }

  /// Node value; boundary and out-of-range nodes read as zero.
  double at(int i1, int i2) const noexcept {
    return grid_.is_interior(i1, i2) ? values_[grid_.index(i1, i2)] : 0.0;
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  GridFunction& operator+=(const GridFunction& o) {
    check_same(o);
    for (std::size_t r = 0; r < values_.size(); ++r) values_[r] += o.values_[r];
    return *this;
  }
  GridFunction& operator-=(const GridFunction& o) {
    check_same(o);
    for (std::size_t r = 0; r < values_.size(); ++r) values_[r] -= o.values_[r];
    return *this;
  }
  GridFunction& operator*=(double s) noexcept {
    for (double& v : values_) v *= s;
    return *this;
  }
  /// this += s * o
  GridFunction& axpy(double s, const GridFunction& o) {
    check_same(o);
    for (std::size_t r = 0; r < values_.size(); ++r) values_[r] += s * o.values_[r];
    return *this;
  }

  void check_same(const GridFunction& o) const {
    if (!(grid_ == o.grid_)) throw InvalidArgument("grid functions live on different grids");
  }

 private:
  Grid grid_;
  std::vector<double> values_;
};

inline GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
inline GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
inline GridFunction operator*(double s, GridFunction a) { return a *= s; }

/// Pointwise product, used for diagonal masks.
inline GridFunction hadamard(std::span<const double> weights, GridFunction u) {
  if (weights.size() != u.size()) throw InvalidArgument("hadamard: size mismatch");
  for (std::size_t r = 0; r < u.size(); ++r) u[r] *= weights[r];
  return u;
}

/// (u, w) = sum over interior nodes of u * w * h1 * h2.
inline double inner_product(const GridFunction& u, const GridFunction& w) {
  u.check_same(w);
  double sum = 0.0;
  for (std::size_t r = 0; r < u.size(); ++r) sum += u[r] * w[r];
  return sum * u.grid().h1 * u.grid().h2;
}

inline double norm(const GridFunction& u) { return std::sqrt(inner_product(u, u)); }

inline double max_abs(const GridFunction& u) noexcept {
  double m = 0.0;
  for (double v : u.values()) m = std::max(m, std::abs(v));
  return m;
}

inline bool all_finite(const GridFunction& u) noexcept {
  for (double v : u.values()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

using PointFunction = std::function<double(double, double)>;

/// Evaluates f at every interior node (i1*h1, i2*h2).
inline GridFunction sample(const PointFunction& f, const Grid& grid) {
  GridFunction out(grid);
  for (int i2 = 1; i2 <= grid.interior2(); ++i2) {
    for (int i1 = 1; i1 <= grid.interior1(); ++i1) {
      out[grid.index(i1, i2)] = f(grid.x1(i1), grid.x2(i2));
    }
  }
  return out;
}

}  // namespace ddsplit
