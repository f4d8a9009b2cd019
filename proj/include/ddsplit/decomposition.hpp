#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ddsplit/operator_expression.hpp"

namespace ddsplit {

enum class NodeClass : std::uint8_t {
  subdomain,          // strictly inside a coarse cell
  interface_segment,  // on exactly one coarse line
  interface_cross,    // on a crossing of two coarse lines
};

/// Partition of unity chi_1 + ... + chi_p = E over the interior nodes,
/// together with the geometric classification of the substructuring.
class Decomposition {
 public:
  /// Wraps arbitrary masks; used for test decompositions. Sizes are checked,
  /// the partition property is not (see verify_partition).
  static Decomposition from_masks(const Grid& grid, std::vector<std::vector<double>> masks,
                                  double coarse_step = 0.0) {
    if (masks.empty()) throw InvalidArgument("Decomposition: need at least one mask");
    Decomposition d;
    d.grid_ = grid;
    d.coarse_step_ = coarse_step;
    for (auto& m : masks) {
      if (m.size() != grid.size()) throw InvalidArgument("Decomposition: mask size mismatch");
      d.masks_.push_back(std::make_shared<const std::vector<double>>(std::move(m)));
    }
    d.classes_.assign(grid.size(), NodeClass::subdomain);
    return d;
  }

  const Grid& grid() const noexcept { return grid_; }
  int p() const noexcept { return static_cast<int>(masks_.size()); }
  double coarse_step() const noexcept { return coarse_step_; }
  /// Overlap half-width in grid steps; 0 for crisp splittings.
  int overlap_halfwidth() const noexcept { return overlap_; }

  /// chi_alpha for 1 <= alpha <= p.
  const Mask& mask(int alpha) const {
    if (alpha < 1 || alpha > p()) {
      throw InvalidArgument("Decomposition: component " + std::to_string(alpha) +
                            " out of range 1.." + std::to_string(p()));
    }
    return masks_[static_cast<std::size_t>(alpha - 1)];
  }
  double weight(int alpha, std::size_t r) const { return (*mask(alpha))[r]; }
  const std::vector<NodeClass>& classes() const noexcept { return classes_; }

  std::size_t support_size(int alpha) const {
    std::size_t c = 0;
    for (double w : *mask(alpha)) c += (w != 0.0);
    return c;
  }
  std::size_t count(NodeClass k) const noexcept {
    std::size_t c = 0;
    for (NodeClass x : classes_) c += (x == k);
    return c;
  }
  std::size_t interface_size() const noexcept {
    return count(NodeClass::interface_segment) + count(NodeClass::interface_cross);
  }

  /// Every mask is {0,1}-valued and the supports are disjoint.
  bool is_crisp() const noexcept {
    for (std::size_t r = 0; r < grid_.size(); ++r) {
      int ones = 0;
      for (const Mask& m : masks_) {
        const double w = (*m)[r];
        if (w == 1.0) {
          ++ones;
        } else if (w != 0.0) {
          return false;
        }
      }
      if (ones > 1) return false;
    }
    return true;
  }

 private:
  friend Decomposition build_two_component(const Grid&, double);
  friend Decomposition build_three_component(const Grid&, double, int);

  Grid grid_;
  double coarse_step_ = 0.0;
  int overlap_ = 0;
  std::vector<Mask> masks_;
  std::vector<NodeClass> classes_;
};

namespace detail {

/// Number of fine steps per coarse step along one axis; rejects misalignment.
inline int coarse_ratio(double hhat, double h, double l, char axis) {
  const double ratio = hhat / h;
  const double rounded = std::round(ratio);
  const double cells = l / hhat;
  const double rounded_cells = std::round(cells);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio || rounded_cells < 1.0 ||
      std::abs(cells - rounded_cells) > 1e-9 * cells) {
    throw AlignmentError(std::string("coarse step ") + std::to_string(hhat) +
                         " is not aligned with the fine grid along x" + axis +
                         " (h = " + std::to_string(h) + ", l = " + std::to_string(l) + ")");
  }
  return static_cast<int>(rounded);
}

struct CoarseLayout {
  int r1 = 1;
  int r2 = 1;
};

inline CoarseLayout coarse_layout(const Grid& grid, double hhat) {
  if (!(hhat > 0.0)) throw InvalidArgument("coarse step must be positive");
  CoarseLayout c{coarse_ratio(hhat, grid.h1, grid.l1, '1'), coarse_ratio(hhat, grid.h2, grid.l2, '2')};
  const int lines = (grid.N1 / c.r1 - 1) + (grid.N2 / c.r2 - 1);
  if (lines < 1) {
    throw DegenerateDecomposition("coarse step " + std::to_string(hhat) +
                                  " leaves no interior coarse line");
  }
  return c;
}

inline std::vector<NodeClass> classify(const Grid& grid, const CoarseLayout& c) {
  std::vector<NodeClass> classes(grid.size());
  for (int i2 = 1; i2 <= grid.interior2(); ++i2) {
    for (int i1 = 1; i1 <= grid.interior1(); ++i1) {
      const bool on1 = i1 % c.r1 == 0;
      const bool on2 = i2 % c.r2 == 0;
      classes[grid.index(i1, i2)] = (on1 && on2)   ? NodeClass::interface_cross
                                    : (on1 || on2) ? NodeClass::interface_segment
                                                   : NodeClass::subdomain;
    }
  }
  return classes;
}

}  // namespace detail

/// chi_2 = indicator of the interface nodes (all nodes on coarse lines), chi_1 = 1 - chi_2.
inline Decomposition build_two_component(const Grid& grid, double hhat) {
  const detail::CoarseLayout layout = detail::coarse_layout(grid, hhat);
  Decomposition d;
  d.grid_ = grid;
  d.coarse_step_ = hhat;
  d.classes_ = detail::classify(grid, layout);
  std::vector<double> chi1(grid.size()), chi2(grid.size());
  for (std::size_t r = 0; r < grid.size(); ++r) {
    chi2[r] = d.classes_[r] == NodeClass::subdomain ? 0.0 : 1.0;
    chi1[r] = 1.0 - chi2[r];
  }
  d.masks_ = {std::make_shared<const std::vector<double>>(std::move(chi1)),
              std::make_shared<const std::vector<double>>(std::move(chi2))};
  return d;
}

/// Three components: subdomains, interface segments, interface crossings.
///
/// With overlap_halfwidth = w > 0 the crossing component is dilated w steps
/// along each interface line. On a node at distance d <= w from its crossing,
/// chi_2 = d / (w + 1) and chi_3 = 1 - chi_2, so chi_2 + chi_3 = 1 on the
/// interface and chi_3 ramps linearly from 1 at the crossing.
inline Decomposition build_three_component(const Grid& grid, double hhat, int overlap_halfwidth) {
  if (overlap_halfwidth < 0) throw InvalidArgument("overlap half-width must be nonnegative");
  const detail::CoarseLayout layout = detail::coarse_layout(grid, hhat);
  const int w = overlap_halfwidth;
  const int lines1 = grid.N1 / layout.r1 - 1;
  const int lines2 = grid.N2 / layout.r2 - 1;
  const bool has_cross = lines1 > 0 && lines2 > 0;
  if (w > 0 && has_cross) {
    // Arms of neighbouring crossings on one line must not share a node.
    if ((lines1 > 1 && 2 * w >= layout.r1) || (lines2 > 1 && 2 * w >= layout.r2)) {
      throw OverlapCollision("overlap half-width " + std::to_string(w) +
                             " makes bands of neighbouring crossings merge");
    }
  }

  Decomposition d;
  d.grid_ = grid;
  d.coarse_step_ = hhat;
  d.overlap_ = w;
  d.classes_ = detail::classify(grid, layout);
  const std::size_t n = grid.size();
  std::vector<double> chi1(n, 0.0), chi2(n, 0.0), chi3(n, 0.0);
  for (int i2 = 1; i2 <= grid.interior2(); ++i2) {
    for (int i1 = 1; i1 <= grid.interior1(); ++i1) {
      const std::size_t r = grid.index(i1, i2);
      switch (d.classes_[r]) {
        case NodeClass::subdomain:
          chi1[r] = 1.0;
          break;
        case NodeClass::interface_cross:
          chi3[r] = 1.0;
          break;
        case NodeClass::interface_segment: {
          // Distance along the line to the nearest crossing.
          int dist = -1;
          if (has_cross) {
            const bool horizontal = i2 % layout.r2 == 0;  // line x2 = const, runs along x1
            const int pos = horizontal ? i1 : i2;
            const int ratio = horizontal ? layout.r1 : layout.r2;
            const int rem = pos % ratio;
            const int cells = horizontal ? grid.N1 / layout.r1 : grid.N2 / layout.r2;
            const int below = pos - rem;  // nearest crossing coordinate below
            const int above = below + ratio;
            int best = -1;
            if (below > 0) best = rem;
            if (above < cells * ratio && (best < 0 || ratio - rem < best)) best = ratio - rem;
            dist = best;
          }
          if (dist >= 1 && dist <= w) {
            chi2[r] = static_cast<double>(dist) / static_cast<double>(w + 1);
            chi3[r] = 1.0 - chi2[r];
          } else {
            chi2[r] = 1.0;
          }
          break;
        }
      }
    }
  }
  d.masks_ = {std::make_shared<const std::vector<double>>(std::move(chi1)),
              std::make_shared<const std::vector<double>>(std::move(chi2)),
              std::make_shared<const std::vector<double>>(std::move(chi3))};
  return d;
}

/// chi_alpha A
inline OperatorExpression masked_operator(const DiffusionOperator& A, const Decomposition& dec,
                                          int alpha) {
  if (!(A.grid() == dec.grid())) throw InvalidArgument("masked_operator: grid mismatch");
  return OperatorExpression::masked(A, dec.mask(alpha));
}

struct PartitionReport {
  double max_deviation = 0.0;  // max |sum_alpha chi_alpha - 1|
  double min_weight = 0.0;
  std::size_t subdomain_nodes = 0;
  std::size_t segment_nodes = 0;
  std::size_t cross_nodes = 0;
  std::vector<std::size_t> support_sizes;

  bool passed() const noexcept { return max_deviation == 0.0 && min_weight >= 0.0; }
};

inline PartitionReport verify_partition(const Decomposition& dec) {
  PartitionReport rep;
  rep.min_weight = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < dec.grid().size(); ++r) {
    double sum = 0.0;
    for (int a = 1; a <= dec.p(); ++a) {
      const double w = dec.weight(a, r);
      sum += w;
      rep.min_weight = std::min(rep.min_weight, w);
    }
    rep.max_deviation = std::max(rep.max_deviation, std::abs(sum - 1.0));
  }
  rep.subdomain_nodes = dec.count(NodeClass::subdomain);
  rep.segment_nodes = dec.count(NodeClass::interface_segment);
  rep.cross_nodes = dec.count(NodeClass::interface_cross);
  for (int a = 1; a <= dec.p(); ++a) rep.support_sizes.push_back(dec.support_size(a));
  return rep;
}

}  // namespace ddsplit
