#include "curvesparse/curve_geometry.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

namespace curvesparse {

std::optional<Rational> detect_rational(double x, long long max_den) {
  if (!std::isfinite(x)) return std::nullopt;
  for (long long q = 1; q <= max_den; ++q) {
    const double scaled = x * static_cast<double>(q);
    if (std::abs(scaled) > 1e15) return std::nullopt;
    if (scaled == std::floor(scaled)) {
      const auto p = static_cast<long long>(scaled);
      const long long g = std::gcd(p < 0 ? -p : p, q);
      return Rational{p / g, q / g};
    }
  }
  return std::nullopt;
}

double empirical_quasi_triangle_constant(const MonomialCurve& curve, int samples, unsigned long long seed,
                                         double extent) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-extent, extent);
  const auto n = curve.dim();
  double worst = 0.0;
  Vector x(n), y(n), z(n);
  for (int s = 0; s < samples; ++s) {
    for (Eigen::Index j = 0; j < n; ++j) {
      x[j] = u(rng);
      y[j] = u(rng);
      z[j] = u(rng);
    }
    const double denom = quasi_metric(curve, x, y) + quasi_metric(curve, y, z);
    if (denom > 0.0) worst = std::max(worst, quasi_metric(curve, x, z) / denom);
  }
  return worst;
}

// ---------------------------------------------------------------------------

GammaCube::GammaCube(Vector center, double ell, Matrix frame, Vector exponents)
    : center_(std::move(center)), ell_(ell), frame_(std::move(frame)), exponents_(std::move(exponents)) {
  const auto n = center_.size();
  if (!(ell_ > 0.0)) throw std::invalid_argument("GammaCube: ell must be positive");
  if (frame_.rows() != n || frame_.cols() != n || exponents_.size() != n)
    throw std::invalid_argument("GammaCube: dimension mismatch");
}

GammaCube GammaCube::monomial(const MonomialCurve& curve, Vector center, double ell) {
  const auto n = curve.dim();
  return GammaCube(std::move(center), ell, Matrix::Identity(n, n), curve.alpha());
}

Vector GammaCube::sides() const {
  Vector s(exponents_.size());
  for (Eigen::Index k = 0; k < s.size(); ++k) s[k] = std::pow(ell_, exponents_[k]);
  return s;
}

double GammaCube::volume() const { return std::pow(ell_, exponents_.sum()); }

bool GammaCube::contains(const Vector& x) const {
  const Vector u = frame_.transpose() * (x - center_);
  const Vector half = 0.5 * sides();
  return (u.array() >= -half.array()).all() && (u.array() < half.array()).all();
}

bool GammaCube::axis_aligned() const { return frame_.isIdentity(0.0); }

Box GammaCube::as_box() const {
  if (!axis_aligned()) throw std::logic_error("GammaCube::as_box: frame is not the identity");
  return Box::centered(center_, sides());
}

// ---------------------------------------------------------------------------

namespace {

Rational make_rational(long long p, long long q) {
  const long long g = std::gcd(p < 0 ? -p : p, q);
  return Rational{p / g, q / g};
}

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a == b; }), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Eigen::Vector2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace

SparseRegion::SparseRegion(int n, Coordinates c, std::vector<RationalPoint> vertices)
    : n_(n), coordinates_(c), vertices_(std::move(vertices)) {
  std::vector<Eigen::Vector2d> pts;
  for (const auto& v : vertices_) pts.emplace_back(v.x.value(), v.y.value());
  hull_ = convex_hull(std::move(pts));
}

bool SparseRegion::contains_interior(double x, double y) const {
  if (hull_.size() < 3) return false;
  const Eigen::Vector2d p(x, y);
  for (std::size_t i = 0; i < hull_.size(); ++i) {
    const auto& a = hull_[i];
    const auto& b = hull_[(i + 1) % hull_.size()];
    if (cross(a, b, p) <= 1e-12 * (b - a).norm()) return false;
  }
  return true;
}

SparseRegion omega_vertices(int n) {
  if (n < 2) throw std::invalid_argument("omega_vertices: n must be at least 2");
  const long long m = n;
  std::vector<RationalPoint> v{
      {make_rational(0, 1), make_rational(0, 1)},
      {make_rational(1, 1), make_rational(1, 1)},
      {make_rational(m * m - m + 2, m * m + m), make_rational(m - 1, m + 1)},
      {make_rational(2, m + 1), make_rational(2 * m - 2, m * m + m)},
  };
  return SparseRegion(n, SparseRegion::Coordinates::InverseRDualS, std::move(v));
}

SparseRegion omega_prime_vertices(int n) {
  if (n < 2) throw std::invalid_argument("omega_prime_vertices: n must be at least 2");
  const long long m = n;
  std::vector<RationalPoint> v{
      {make_rational(0, 1), make_rational(1, 1)},
      {make_rational(1, 1), make_rational(0, 1)},
      {make_rational(m * m - m + 2, m * m + m), make_rational(2, m + 1)},
      {make_rational(2, m + 1), make_rational(m * m - m + 2, m * m + m)},
  };
  return SparseRegion(n, SparseRegion::Coordinates::InverseRInverseS, std::move(v));
}

double dual_exponent(double s) {
  if (s == 1.0) return std::numeric_limits<double>::infinity();
  return s / (s - 1.0);
}

bool in_omega_interior(const SparseRegion& region, double r, double s) {
  const double x = 1.0 / r;
  const double y = region.coordinates() == SparseRegion::Coordinates::InverseRDualS ? 1.0 - 1.0 / s : 1.0 / s;
  return region.contains_interior(x, y);
}

// ---------------------------------------------------------------------------

TorsionCurve::TorsionCurve(int n, DerivativeFn derivative, std::string name, bool approximate)
    : n_(n), derivative_(std::move(derivative)), name_(std::move(name)), approximate_(approximate) {
  if (n_ < 2) throw std::invalid_argument("TorsionCurve: dimension must be at least 2");
}

TorsionCurve TorsionCurve::polynomial(const Matrix& coefficients, std::string name) {
  const int n = static_cast<int>(coefficients.rows());
  return TorsionCurve(
      n,
      [coefficients](double t, int order) {
        Vector out = Vector::Zero(coefficients.rows());
        for (Eigen::Index d = order; d < coefficients.cols(); ++d) {
          double falling = 1.0;
          for (Eigen::Index m = 0; m < order; ++m) falling *= static_cast<double>(d - m);
          out += coefficients.col(d) * (falling * std::pow(t, static_cast<double>(d - order)));
        }
        return out;
      },
      std::move(name));
}

TorsionCurve TorsionCurve::moment(int n) {
  Matrix c = Matrix::Zero(n, n + 1);
  for (int j = 0; j < n; ++j) c(j, j + 1) = 1.0;
  return polynomial(c, "moment");
}

TorsionCurve TorsionCurve::rotated_moment(const Matrix& rotation) {
  const int n = static_cast<int>(rotation.rows());
  Matrix c = Matrix::Zero(n, n + 1);
  for (int j = 0; j < n; ++j) c(j, j + 1) = 1.0;
  return polynomial(rotation * c, "rotated_moment");
}

TorsionCurve TorsionCurve::circle() {
  return TorsionCurve(
      2,
      [](double t, int order) {
        const double phase = t + order * 0.5 * M_PI;
        return Vector(Eigen::Vector2d(std::cos(phase), std::sin(phase)));
      },
      "circle");
}

TorsionCurve TorsionCurve::from_positions(int n, std::function<Vector(double)> position, std::string name) {
  constexpr double h = 1e-5;
  return TorsionCurve(
      n,
      [position = std::move(position)](double t, int order) {
        if (order == 0) return position(t);
        Vector acc;
        double binom = 1.0;
        for (int j = 0; j <= order; ++j) {
          const Vector term = position(t + (0.5 * order - j) * h) * ((j % 2 ? -1.0 : 1.0) * binom);
          acc = j == 0 ? term : Vector(acc + term);
          binom = binom * (order - j) / (j + 1);
        }
        return Vector(acc / std::pow(h, order));
      },
      std::move(name), true);
}

Matrix TorsionCurve::derivative_matrix(double t) const {
  Matrix m(n_, n_);
  for (int k = 1; k <= n_; ++k) m.col(k - 1) = derivative(t, k);
  return m;
}

double torsion(const TorsionCurve& curve, double t) { return curve.derivative_matrix(t).determinant(); }

Matrix build_frame(const TorsionCurve& curve, double t0) {
  const Matrix d = curve.derivative_matrix(t0);
  const int n = curve.dim();
  double scale = 1.0;
  for (int k = 0; k < n; ++k) scale *= d.col(k).norm();
  if (!(std::abs(d.determinant()) > 1e-12 * scale))
    throw std::domain_error("build_frame: torsion vanishes at t0 = " + std::to_string(t0));
  Matrix e(n, n);
  for (int k = 0; k < n; ++k) {
    Vector v = d.col(k);
    for (int j = 0; j < k; ++j) v -= e.col(j).dot(v) * e.col(j);
    e.col(k) = v.normalized();
  }
  return e;
}

GammaCube torsion_cube(const TorsionCurve& curve, double t0, Vector center, double ell) {
  Vector exponents(curve.dim());
  for (int k = 0; k < curve.dim(); ++k) exponents[k] = k + 1;
  return GammaCube(std::move(center), ell, build_frame(curve, t0), std::move(exponents));
}

Matrix rescaled_derivative_matrix(const TorsionCurve& curve, const Matrix& frame, double lambda, double t) {
  const int n = curve.dim();
  const Matrix g = frame.transpose() * curve.derivative_matrix(lambda * t);
  Matrix nu(n, n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) nu(k, l) = std::pow(lambda, l - k) * g(k, l);
  return nu;
}

double rescaled_torsion_check(const TorsionCurve& curve, double lambda, int i, int M2, int samples) {
  if (!(lambda > 0.0)) throw std::invalid_argument("rescaled_torsion_check: lambda must be positive");
  if (M2 < 1 || i < 1 || i > M2) throw std::invalid_argument("rescaled_torsion_check: need 1 <= i <= M2");
  if (samples < 2) throw std::invalid_argument("rescaled_torsion_check: need at least two samples");
  const double width = 0.5 * lambda / M2;
  const double left = 0.5 * lambda + (i - 1) * width;
  const Matrix frame = build_frame(curve, left);
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    const double t = (left + width * s / (samples - 1)) / lambda;
    worst = std::min(worst, std::abs(rescaled_derivative_matrix(curve, frame, lambda, t).determinant()));
  }
  return worst;
}

}  // namespace curvesparse
