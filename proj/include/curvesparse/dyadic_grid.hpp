#pragma once

// The 3^n shifted nonisotropic dyadic grids. A cube at scale k has side
// 2^floor(k alpha_i) along axis i; the grid with shift j offsets axis i by
// sign(F) j_i / 3 cells, where the sign alternates with the parity of
// F = floor(k alpha_i) so that consecutive generations nest.

#include "curvesparse/box.hpp"
#include "curvesparse/curve_geometry.hpp"

#include <cstdint>
#include <vector>

namespace curvesparse {

using IndexVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

struct DyadicCube {
  int k = 0;  ///< canonical scale: the largest k producing this side vector
  IndexVector m;
  Eigen::VectorXi shift;

  friend bool operator==(const DyadicCube& a, const DyadicCube& b) {
    return a.k == b.k && a.m == b.m && a.shift == b.shift;
  }
};

/// Raised when k * alpha_i lies within the guard band of an integer for an
/// exponent that is not a detectable rational.
class FloorAmbiguity : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DyadicGrid {
 public:
  DyadicGrid(MonomialCurve curve, Eigen::VectorXi shift);

  /// Grid with j = 0.
  explicit DyadicGrid(MonomialCurve curve);

  const MonomialCurve& curve() const { return curve_; }
  const Eigen::VectorXi& shift() const { return shift_; }
  Eigen::Index dim() const { return curve_.dim(); }

  /// floor(k alpha_i) per axis; exact for rational exponents.
  Eigen::VectorXi exponents(int k) const;
  int canonical_scale(int k) const;
  /// Largest k' < k whose side vector differs.
  int next_finer_scale(int k) const;
  /// Smallest canonical k' > k whose side vector differs.
  int next_coarser_scale(int k) const;

  DyadicCube find_cube(const Vector& x, int k) const;
  Box cube_box(const DyadicCube& c) const;
  Vector cube_sides(const DyadicCube& c) const;
  double volume(const DyadicCube& c) const;
  /// ell(Q) = 2^k.
  double ell(const DyadicCube& c) const;

  DyadicCube parent(const DyadicCube& c) const;
  std::vector<DyadicCube> children(const DyadicCube& c) const;

  /// All scale-k cubes that intersect `region`.
  std::vector<DyadicCube> cubes_intersecting(const Box& region, int k) const;

  /// Exact lattice tests; both cubes must come from this grid.
  bool contains(const DyadicCube& outer, const DyadicCube& inner) const;
  bool intersects(const DyadicCube& a, const DyadicCube& b) const;

  /// Gamma-cube S with the same center, S containing c and ell(S) < 2 ell(c).
  GammaCube enclosing_gamma_cube(const DyadicCube& c) const;

 private:
  int axis_exponent(int k, Eigen::Index axis) const;
  int offset_sign(int exponent) const { return (exponent % 2 != 0) ? 1 : -1; }
  std::int64_t lattice_lo(const DyadicCube& c, Eigen::Index axis, int exponent) const;

  MonomialCurve curve_;
  Eigen::VectorXi shift_;
};

Box third_cube(const DyadicGrid& grid, const DyadicCube& c);
Box scaled_cube(const DyadicGrid& grid, const DyadicCube& c, double factor);

/// Every shift vector in {0,1,2}^n.
std::vector<Eigen::VectorXi> all_shifts(Eigen::Index n);

}  // namespace curvesparse
