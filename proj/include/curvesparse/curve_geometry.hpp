#pragma once

// Monomial curves t -> (eps_j |t|^alpha_j), their nonisotropic dilations and
// quasi-metric, gamma-cubes, the admissible exponent region, and the torsion
// and Taylor-frame machinery for curves with nonvanishing torsion.

#include "curvesparse/box.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace curvesparse {

struct Rational {
  long long num = 0;
  long long den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// Returns p/q when x * q is an exact integer in double arithmetic for some
/// q <= max_den (so 1.5 -> 3/2, 2 -> 2/1, sqrt(2) -> nullopt).
std::optional<Rational> detect_rational(double x, long long max_den = 1024);

template <typename Scalar>
class MonomialCurveT {
 public:
  using VectorS = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  MonomialCurveT(VectorS alpha, Eigen::VectorXi eps_plus, Eigen::VectorXi eps_minus)
      : alpha_(std::move(alpha)), eps_plus_(std::move(eps_plus)), eps_minus_(std::move(eps_minus)) {
    const auto n = alpha_.size();
    if (n < 2) throw std::invalid_argument("MonomialCurve: dimension must be at least 2");
    if (eps_plus_.size() != n || eps_minus_.size() != n)
      throw std::invalid_argument("MonomialCurve: sign vectors must match the exponent count");
    bool branches_differ = false;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(alpha_[j] > Scalar(0))) throw std::invalid_argument("MonomialCurve: exponents must be positive");
      if (j > 0 && !(alpha_[j] > alpha_[j - 1]))
        throw std::invalid_argument("MonomialCurve: exponents must be strictly increasing");
      if (std::abs(eps_plus_[j]) != 1 || std::abs(eps_minus_[j]) != 1)
        throw std::invalid_argument("MonomialCurve: signs must be +1 or -1");
      branches_differ = branches_differ || eps_plus_[j] != eps_minus_[j];
    }
    if (!branches_differ)
      throw std::invalid_argument("MonomialCurve: eps_plus and eps_minus must differ in some coordinate");
    rational_.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) rational_.push_back(detect_rational(static_cast<double>(alpha_[j])));
  }

  /// (t, t^2) with the even second coordinate: the standard parabola.
  static MonomialCurveT parabola() { return moment(2); }

  /// (t, t^2, ..., t^n) written in monomial form.
  static MonomialCurveT moment(int n) {
    VectorS alpha(n);
    Eigen::VectorXi plus = Eigen::VectorXi::Ones(n), minus(n);
    for (int j = 0; j < n; ++j) {
      alpha[j] = Scalar(j + 1);
      minus[j] = (j % 2 == 0) ? -1 : 1;
    }
    return MonomialCurveT(alpha, plus, minus);
  }

  Eigen::Index dim() const { return alpha_.size(); }
  const VectorS& alpha() const { return alpha_; }
  const Eigen::VectorXi& eps_plus() const { return eps_plus_; }
  const Eigen::VectorXi& eps_minus() const { return eps_minus_; }
  Scalar homogeneous_dimension() const { return alpha_.sum(); }

  /// Exact p/q form of alpha_j when it is rational with a small denominator.
  const std::optional<Rational>& rational_alpha(Eigen::Index j) const {
    return rational_[static_cast<std::size_t>(j)];
  }

  template <typename NewScalar>
  MonomialCurveT<NewScalar> cast() const {
    return MonomialCurveT<NewScalar>(alpha_.template cast<NewScalar>(), eps_plus_, eps_minus_);
  }

 private:
  VectorS alpha_;
  Eigen::VectorXi eps_plus_;
  Eigen::VectorXi eps_minus_;
  std::vector<std::optional<Rational>> rational_;
};

using MonomialCurve = MonomialCurveT<double>;

template <typename Scalar>
typename MonomialCurveT<Scalar>::VectorS eval_curve(const MonomialCurveT<Scalar>& curve, Scalar t) {
  using std::abs;
  using std::pow;
  const auto n = curve.dim();
  typename MonomialCurveT<Scalar>::VectorS x(n);
  const Scalar a = abs(t);
  const Eigen::VectorXi& eps = t >= Scalar(0) ? curve.eps_plus() : curve.eps_minus();
  for (Eigen::Index j = 0; j < n; ++j) x[j] = a == Scalar(0) ? Scalar(0) : Scalar(eps[j]) * pow(a, curve.alpha()[j]);
  return x;
}

/// delta_lambda(x) = (lambda^alpha_1 x_1, ..., lambda^alpha_n x_n).
template <typename Scalar, typename Derived>
typename MonomialCurveT<Scalar>::VectorS dilate(const MonomialCurveT<Scalar>& curve, Scalar lambda,
                                                const Eigen::MatrixBase<Derived>& x) {
  using std::pow;
  if (!(lambda > Scalar(0))) throw std::invalid_argument("dilate: lambda must be positive");
  typename MonomialCurveT<Scalar>::VectorS out(curve.dim());
  for (Eigen::Index j = 0; j < curve.dim(); ++j) out[j] = pow(lambda, curve.alpha()[j]) * x[j];
  return out;
}

/// rho(x, y) = max_j |x_j - y_j|^(1/alpha_j).
template <typename Scalar, typename DerivedX, typename DerivedY>
Scalar quasi_metric(const MonomialCurveT<Scalar>& curve, const Eigen::MatrixBase<DerivedX>& x,
                    const Eigen::MatrixBase<DerivedY>& y) {
  using std::abs;
  using std::pow;
  Scalar rho(0);
  for (Eigen::Index j = 0; j < curve.dim(); ++j) {
    const Scalar d = abs(x[j] - y[j]);
    if (d > Scalar(0)) rho = std::max(rho, pow(d, Scalar(1) / curve.alpha()[j]));
  }
  return rho;
}

/// Largest observed rho(x,z) / (rho(x,y) + rho(y,z)) over `samples` random
/// triples drawn uniformly from [-extent, extent]^n.
double empirical_quasi_triangle_constant(const MonomialCurve& curve, int samples, unsigned long long seed,
                                         double extent = 1.0);

/// Hyperrectangle whose side along frame axis k is ell^exponents[k].
class GammaCube {
 public:
  GammaCube(Vector center, double ell, Matrix frame, Vector exponents);

  /// Axis-parallel cube for a monomial curve.
  static GammaCube monomial(const MonomialCurve& curve, Vector center, double ell);

  const Vector& center() const { return center_; }
  double ell() const { return ell_; }
  const Matrix& frame() const { return frame_; }
  const Vector& exponents() const { return exponents_; }

  Vector sides() const;
  double volume() const;
  bool contains(const Vector& x) const;
  bool axis_aligned() const;
  /// Only meaningful when the frame is the identity.
  Box as_box() const;

 private:
  Vector center_;
  double ell_;
  Matrix frame_;
  Vector exponents_;
};

struct RationalPoint {
  Rational x;
  Rational y;
};

/// The trapezoid of admissible (1/r, 1/s') pairs, or its dual in (1/r, 1/s).
class SparseRegion {
 public:
  enum class Coordinates { InverseRDualS, InverseRInverseS };

  int n() const { return n_; }
  Coordinates coordinates() const { return coordinates_; }
  /// Four vertices as listed (the n = 2 trapezoid repeats one vertex).
  const std::vector<RationalPoint>& vertices() const { return vertices_; }
  /// Deduplicated convex hull in counter-clockwise order.
  const std::vector<Eigen::Vector2d>& hull() const { return hull_; }

  /// Strict interior test with a 1e-12 margin on every edge.
  bool contains_interior(double x, double y) const;

 private:
  friend SparseRegion omega_vertices(int n);
  friend SparseRegion omega_prime_vertices(int n);
  SparseRegion(int n, Coordinates c, std::vector<RationalPoint> vertices);

  int n_;
  Coordinates coordinates_;
  std::vector<RationalPoint> vertices_;
  std::vector<Eigen::Vector2d> hull_;
};

SparseRegion omega_vertices(int n);
SparseRegion omega_prime_vertices(int n);

/// s' = s/(s-1), with s = 1 giving infinity.
double dual_exponent(double s);

/// Whether (1/r, 1/s') lies strictly inside the region.
bool in_omega_interior(const SparseRegion& region, double r, double s);

/// A C^n curve given through its derivatives gamma^(k)(t), k = 0..n.
class TorsionCurve {
 public:
  using DerivativeFn = std::function<Vector(double t, int order)>;

  TorsionCurve(int n, DerivativeFn derivative, std::string name, bool approximate = false);

  /// (t, t^2, ..., t^n).
  static TorsionCurve moment(int n);
  /// rotation * moment curve.
  static TorsionCurve rotated_moment(const Matrix& rotation);
  /// Component i is sum_d coefficients(i, d) t^d.
  static TorsionCurve polynomial(const Matrix& coefficients, std::string name = "polynomial");
  /// (cos t, sin t).
  static TorsionCurve circle();
  /// Derivatives by central differences with step 1e-5 from positions only;
  /// flagged approximate.
  static TorsionCurve from_positions(int n, std::function<Vector(double)> position, std::string name);

  int dim() const { return n_; }
  const std::string& name() const { return name_; }
  bool approximate() const { return approximate_; }

  Vector position(double t) const { return derivative_(t, 0); }
  Vector derivative(double t, int order) const { return derivative_(t, order); }
  /// Columns gamma^(1)(t), ..., gamma^(n)(t).
  Matrix derivative_matrix(double t) const;

 private:
  int n_;
  DerivativeFn derivative_;
  std::string name_;
  bool approximate_;
};

double torsion(const TorsionCurve& curve, double t);

/// Gram-Schmidt on gamma^(1)(t0), ..., gamma^(n)(t0); columns are e_1..e_n with
/// e_k . gamma^(k)(t0) > 0. Throws when the torsion vanishes at t0.
Matrix build_frame(const TorsionCurve& curve, double t0);

/// Gamma-cube for a torsion curve: frame from t0, side ell^k along e_k.
GammaCube torsion_cube(const TorsionCurve& curve, double t0, Vector center, double ell);

/// Derivative matrix of the rescaled curve nu_k(t) = lambda^-k gamma_k(lambda t)
/// in the frame built at `anchor`; entry (k, l) is nu_k^(l)(t).
Matrix rescaled_derivative_matrix(const TorsionCurve& curve, const Matrix& frame, double lambda, double t);

/// Minimum over `samples` points t with lambda*t in I_i of |torsion(nu)|,
/// where I_i (1 <= i <= M2) is the i-th of M2 equal pieces of [lambda/2, lambda], nu is
/// the curve rescaled in the frame built at the left endpoint of I_i.
double rescaled_torsion_check(const TorsionCurve& curve, double lambda, int i, int M2, int samples = 33);

}  // namespace curvesparse
