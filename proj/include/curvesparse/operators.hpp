#pragma once

// Quadrature realisations of the single-scale curve averages, their localized
// pieces, truncated Hilbert transforms along a monomial curve, the Fourier
// transform of a smooth arclength measure, and translation-continuity
// estimates.

#include "curvesparse/curve_geometry.hpp"
#include "curvesparse/dyadic_grid.hpp"
#include "curvesparse/grid_function.hpp"
#include "curvesparse/quadrature.hpp"

#include <complex>
#include <map>
#include <stdexcept>
#include <vector>

namespace curvesparse {

/// Midpoint rule with `nodes_per_half` nodes on each half-annulus.
struct QuadratureRule {
  int nodes_per_half = 256;

  void validate() const {
    if (nodes_per_half < 16) throw std::invalid_argument("QuadratureRule: need at least 16 nodes per half-annulus");
  }
};

/// Dyadic scales 2^k_min .. 2^k_max of the truncated transform.
struct TruncationWindow {
  int k_min = -6;
  int k_max = 1;

  void validate() const {
    if (k_min > k_max) throw std::invalid_argument("TruncationWindow: k_min must not exceed k_max");
  }
};

enum class Kernel {
  Hilbert,          ///< int_{lambda/2 <= |t| < lambda} f(x - gamma(t)) dt / t
  PositiveAverage,  ///< int_{lambda/2 <= t < lambda} f(x - gamma(t)) dt
};

enum class Padding {
  Require,     ///< output grid must hold the whole image of supp f
  ZeroExtend,  ///< evaluate only where asked; mass outside the output grid is dropped
};

class PaddingError : public std::domain_error {
 public:
  PaddingError(const std::string& what, Vector required_margin)
      : std::domain_error(what), required_margin_(std::move(required_margin)) {}
  const Vector& required_margin() const { return required_margin_; }

 private:
  Vector required_margin_;
};

/// Per-axis margin max |gamma_i(t)| over lambda/2 <= |t| <= lambda.
Vector curve_margin(const MonomialCurve& curve, double lambda);

/// A_lambda f (or the positive average) evaluated on f's own grid.
GridFunction single_scale(const GridFunction& f, const MonomialCurve& curve, double lambda,
                          const QuadratureRule& rule = {}, Kernel kernel = Kernel::Hilbert,
                          Padding padding = Padding::Require);

/// Same operator evaluated at the cell centers of `output`'s grid (whose
/// values are ignored). With a non-empty mask only the flagged cells are
/// computed; the rest are zero.
GridFunction single_scale_on(const GridFunction& f, const GridFunction& output, const MonomialCurve& curve,
                             double lambda, const QuadratureRule& rule = {}, Kernel kernel = Kernel::Hilbert,
                             Padding padding = Padding::Require, const std::vector<bool>& mask = {});

/// sum_{k = k_min}^{k_max} A_{2^k} f on f's grid.
GridFunction truncated_hilbert(const GridFunction& f, const TruncationWindow& window, const MonomialCurve& curve,
                               const QuadratureRule& rule = {}, Padding padding = Padding::Require);

/// <H f, g> over the window, evaluating H f only where g is nonzero. f and g
/// share a grid. Returns per-scale contributions keyed by k.
std::map<int, double> hilbert_pairing_by_scale(const GridFunction& f, const GridFunction& g,
                                               const TruncationWindow& window, const MonomialCurve& curve,
                                               const QuadratureRule& rule = {});
double hilbert_pairing(const GridFunction& f, const GridFunction& g, const TruncationWindow& window,
                       const MonomialCurve& curve, const QuadratureRule& rule = {});

// ---------------------------------------------------------------------------
// Localized pieces A_Q f = A_{2^{q-N}} (f chi_{Q/3}), ell(Q) = 2^q.

struct SupportViolation {
  Eigen::Index cell = 0;
  Vector center;
  double value = 0.0;
};

class SupportViolationError : public std::runtime_error {
 public:
  SupportViolationError(const std::string& what, SupportViolation v)
      : std::runtime_error(what), violation_(std::move(v)) {}
  const SupportViolation& violation() const { return violation_; }

 private:
  SupportViolation violation_;
};

struct LocalizedOutput {
  GridFunction value;
  std::vector<SupportViolation> violations;  ///< nonzero cells whose centers lie outside Q
};

/// Computes A_Q f on f's grid and lists every nonzero cell outside Q.
LocalizedOutput localized_unchecked(const GridFunction& f, const DyadicGrid& grid, const DyadicCube& Q, int N,
                                    const QuadratureRule& rule = {});

/// A_Q f; throws SupportViolationError naming the first offending cell.
GridFunction localized(const GridFunction& f, const DyadicGrid& grid, const DyadicCube& Q, int N,
                       const QuadratureRule& rule = {});

/// Every (shift, cube) pair at scale q whose third-cube meets `region`.
std::vector<std::pair<DyadicGrid, DyadicCube>> localized_cubes(const MonomialCurve& curve, const Box& region, int q);

struct DecompositionCheck {
  double relative_l1_error = 0.0;
  std::size_t cubes = 0;
  std::size_t violating_cells = 0;
};

/// Compares sum over all shifts and scale-q cubes of A_Q f with A_{2^{q-N}} f.
DecompositionCheck check_localized_decomposition(const GridFunction& f, const MonomialCurve& curve, int q, int N,
                                                 const QuadratureRule& rule = {});

struct SupportCalibration {
  int N = 0;
  std::vector<int> violations_per_N;  ///< index i holds the count for N = i + 1
};

/// Smallest N in [1, max_N] with no support violations for f = 1 on the grid
/// at every scale in `scales`.
SupportCalibration calibrate_support_constant(const MonomialCurve& curve, const Box& domain,
                                              const Eigen::VectorXi& counts, const std::vector<int>& scales,
                                              int max_N = 12, const QuadratureRule& rule = {});

// ---------------------------------------------------------------------------

/// psi(t) = (16 (t - 1/2)(1 - t))^3 on [1/2, 1]: C^2 at the endpoints, max 1.
struct BumpProfile {
  double lo = 0.5;
  double hi = 1.0;

  double operator()(double t) const;
  double integral() const;
};

/// int e^{-i xi . gamma(t)} psi(t) dt by composite Gauss-Legendre, doubling the
/// panel count until successive values differ by less than 1e-8 relative (or
/// 1e-13 of the integral of psi, whichever is larger).
std::complex<double> arclength_fourier(const MonomialCurve& curve, const BumpProfile& psi, const Vector& xi);
std::complex<double> arclength_fourier(const TorsionCurve& curve, const BumpProfile& psi, const Vector& xi);

/// Unit xi with xi . gamma^(k)(t0) = 0 for k < n: the direction of slowest
/// decay, where the phase has an order-n critical point at t0.
Vector degenerate_direction(const MonomialCurve& curve, double t0);

// ---------------------------------------------------------------------------

/// Test functions for the translation-continuity study; all share one grid
/// padded so A_1 f is fully captured.
struct ContinuityFamily {
  std::vector<GridFunction> functions;
  std::vector<std::string> labels;
};

ContinuityFamily continuity_test_family(const MonomialCurve& curve, double cells_per_unit, unsigned long long seed,
                                        int random_fields = 2);

/// max over the family of ||(A_1 - tau_y A_1) f||_{s'} / ||f||_r.
double continuity_norm_estimate(const MonomialCurve& curve, const Vector& y, double r, double s_prime,
                                const ContinuityFamily& family, const QuadratureRule& rule = {});

/// Reuses A_1 f across many translations.
class ContinuityStudy {
 public:
  ContinuityStudy(const MonomialCurve& curve, ContinuityFamily family, const QuadratureRule& rule = {});
  double estimate(const Vector& y, double r, double s_prime) const;

 private:
  ContinuityFamily family_;
  std::vector<GridFunction> averaged_;
};

}  // namespace curvesparse
