#pragma once

#include <Eigen/Dense>

#include <vector>

namespace curvesparse {

struct GaussLegendre {
  Eigen::VectorXd nodes;    ///< on [-1, 1]
  Eigen::VectorXd weights;
};

/// Gauss-Legendre rule of the given order via Newton iteration on P_n.
GaussLegendre gauss_legendre(int order);

/// Least-squares line through (log x, log y).
struct PowerLawFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  /// Half width of the two-sided 95% confidence interval on the slope
  /// (Student t with points - 2 degrees of freedom).
  double slope_ci95 = 0.0;
  std::size_t points = 0;
};

PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace curvesparse
