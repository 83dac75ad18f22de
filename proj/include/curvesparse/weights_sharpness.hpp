#pragma once

// Nonisotropic Muckenhoupt and reverse Holder constants over gamma-cube
// families, the weighted operator bound, and the scan showing that sparse
// domination breaks down outside the admissible region.

#include "curvesparse/operators.hpp"
#include "curvesparse/quadrature.hpp"
#include "curvesparse/sparse_engine.hpp"

#include <vector>

namespace curvesparse {

/// Strictly positive samples, floored at w_min.
class Weight {
 public:
  explicit Weight(GridFunction w, double w_min = 0.0);

  const GridFunction& values() const { return w_; }
  double floor() const { return floor_; }
  std::size_t floored_cells() const { return floored_; }

 private:
  GridFunction w_;
  double floor_;
  std::size_t floored_ = 0;
};

/// w(x) = max(rho(x, x0), rho_min)^a sampled on the grid of `like`.
Weight power_weight(const MonomialCurve& curve, const GridFunction& like, const Vector& x0, double a,
                    double rho_min);

/// Gamma-cubes with ell = 2^j, j_min <= j <= j_max, centered on a lattice with
/// half-side spacing so neighbours overlap by half; every cube lies in the
/// domain and each generation covers it.
struct QuasiBallFamily {
  std::vector<Box> balls;
  std::vector<int> generation;  ///< j of each ball
  int j_min = 0;
  int j_max = 0;

  static QuasiBallFamily build(const MonomialCurve& curve, const Box& domain, int j_min, int j_max);
};

/// max_B <w>_B <w^(1-p')>_B^(p-1).
double ap_constant(const Weight& w, double p, const QuasiBallFamily& balls);

/// max_B <w>_{B,p} / <w>_B.
double rh_constant(const Weight& w, double p, const QuasiBallFamily& balls);

/// max(1/(p-r), (s'-1)/(s'-p)); requires r < p < s'.
double alpha_exponent(double p, double r, double s);

struct WeightedBoundReport {
  double p = 0.0, r = 0.0, s = 0.0;
  double ap_index = 0.0;        ///< p/r
  double rh_index = 0.0;        ///< (s'/p)'
  double ap = 0.0;              ///< [w]_{A_{p/r}}
  double rh = 0.0;              ///< [w]_{RH_{(s'/p)'}}
  double alpha = 0.0;
  double weight_factor = 0.0;   ///< (ap * rh)^alpha
  std::vector<double> norm_ratios;   ///< ||H f||_{L^p(w)} / ||f||_{L^p(w)}
  std::vector<double> ratios;        ///< norm ratio / weight factor
  double max_ratio = 0.0;            ///< empirical constant
  double weight_floor = 0.0;
};

/// Test functions with their truncated Hilbert transforms, computed once and
/// shared across weights.
struct WeightedTestFamily {
  std::vector<GridFunction> functions;
  std::vector<GridFunction> transforms;

  static WeightedTestFamily make(std::vector<GridFunction> functions, const TruncationWindow& window,
                                 const MonomialCurve& curve, const QuadratureRule& rule = {});
};

WeightedBoundReport weighted_bound_check(const WeightedTestFamily& family, const Weight& w, double p, double r,
                                         double s, const QuasiBallFamily& balls);

// ---------------------------------------------------------------------------

/// f_eps = chi_{[-eps, eps]^n} / ||.||_r on a grid aligned with the box, and
/// g_eps = normalized indicator of the cells near gamma([1/2, 1]) where
/// A_1 f_eps exceeds half its maximum.
struct BumpPair {
  double eps = 0.0;
  GridFunction f;
  GridFunction g;
  GridFunction averaged;        ///< A_1 f_eps on the cells near gamma([1/2, 1])
  std::size_t g_cells = 0;
};

struct SharpnessOptions {
  int cells_per_eps = 4;
  /// Quadrature nodes per half-annulus are at least nodes_per_inverse_eps / eps.
  double nodes_per_inverse_eps = 24.0;
  /// Oracle meshes are eps / oracle_cells and eps / (2 oracle_cells).
  int oracle_cells = 8;
  /// Allow (1/r, 1/s') inside the region, for control runs.
  bool control_run = false;
  SparseOptions sparse;
};

BumpPair make_bump_pair(const MonomialCurve& curve, double r, double s, double eps, const SharpnessOptions& options);

/// ||A~_1 chi_R||_{s'} / ||chi_R||_r for R = [-eps, eps]^n, with A~_1 the
/// positive average over t in [1/2, 1]. The inner integral is exact; the outer
/// norm is a midpoint sum on the given mesh.
double box_oracle(const MonomialCurve& curve, double r, double s, double eps, double mesh);

struct SharpnessRow {
  double eps = 0.0;
  double pairing = 0.0;     ///< <A_1 f_eps, g_eps>
  double lambda = 0.0;      ///< sparse form of the constructed collection
  double ratio = 0.0;
  double oracle_coarse = 0.0;
  double oracle_fine = 0.0;
  std::size_t g_cells = 0;
  std::size_t cubes = 0;
};

struct SharpnessReport {
  double r = 0.0, s = 0.0;
  bool inside_region = false;
  std::vector<SharpnessRow> rows;
  PowerLawFit pairing_fit;      ///< fitted on the rows after the two coarsest
  PowerLawFit oracle_fit;
  double sigma = 0.0;           ///< -slope of the pairing fit
  double oracle_sigma = 0.0;
  double predicted_sigma = 0.0; ///< n/r - 1 - (n-1)/s'
  bool pairing_increasing = false;
  bool ratio_increasing = false;
  double lambda_spread = 0.0;   ///< max over rows of max(l / l0, l0 / l)
  double ratio_spread = 0.0;    ///< max ratio / min ratio
};

/// eps_list must be strictly decreasing; rejects (r, s) inside the region
/// unless options.control_run is set.
SharpnessReport sharpness_scan(const MonomialCurve& curve, double r, double s, const std::vector<double>& eps_list,
                               const SharpnessOptions& options = {});

}  // namespace curvesparse
