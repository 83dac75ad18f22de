#pragma once

#include <Eigen/Dense>

#include <string>

namespace curvesparse {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Axis-aligned box [lo, hi) in R^n.
struct Box {
  Vector lo;
  Vector hi;

  Box() = default;
  Box(Vector lo_, Vector hi_);

  static Box centered(const Vector& center, const Vector& sides);

  Eigen::Index dim() const { return lo.size(); }
  Vector sides() const { return hi - lo; }
  Vector center() const { return 0.5 * (lo + hi); }
  double volume() const;
  bool empty() const;

  /// Half-open membership.
  bool contains(const Vector& x) const;
  bool contains(const Box& other) const;
  bool intersects(const Box& other) const;

  /// Box with the same center and every side multiplied by `factor`.
  Box scaled(double factor) const;
  Box expanded(const Vector& margin) const;

  std::string to_string() const;
};

Box intersection(const Box& a, const Box& b);
double overlap_volume(const Box& a, const Box& b);

}  // namespace curvesparse
