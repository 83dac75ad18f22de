#include "curvesparse/curve_geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace curvesparse;

namespace {

MonomialCurve curve_of(std::initializer_list<double> alpha, std::initializer_list<int> plus,
                       std::initializer_list<int> minus) {
  Vector a(static_cast<Eigen::Index>(alpha.size()));
  Eigen::VectorXi p(a.size()), m(a.size());
  Eigen::Index i = 0;
  for (double x : alpha) a[i++] = x;
  i = 0;
  for (int x : plus) p[i++] = x;
  i = 0;
  for (int x : minus) m[i++] = x;
  return MonomialCurve(a, p, m);
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("eval_curve on the two branches") {
  const auto parabola = curve_of({1, 2}, {1, 1}, {-1, 1});
  CHECK(eval_curve(parabola, -2.0) == vec({-2, 4}));
  CHECK(eval_curve(parabola, 0.0) == vec({0, 0}));

  const auto cubic = curve_of({1, 3}, {1, 1}, {-1, -1});
  CHECK(eval_curve(cubic, -2.0) == vec({-2, -8}));
  CHECK(eval_curve(MonomialCurve::moment(4), 0.0).isZero());
}

TEST_CASE("constructor rejects malformed curves") {
  CHECK_THROWS_AS(curve_of({2, 1}, {1, 1}, {-1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(curve_of({1, 2}, {1, 1}, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(curve_of({1, 2}, {1, 2}, {-1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(curve_of({-1, 2}, {1, 1}, {-1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(curve_of({1}, {1}, {-1}), std::invalid_argument);
}

TEST_CASE("rational exponent detection") {
  CHECK(detect_rational(1.5) == Rational{3, 2});
  CHECK(detect_rational(2.0) == Rational{2, 1});
  CHECK_FALSE(detect_rational(std::sqrt(2.0)).has_value());
}

TEST_CASE("dilation") {
  const auto parabola = MonomialCurve::parabola();
  CHECK(dilate(parabola, 2.0, vec({1, 1})) == vec({2, 4}));
  CHECK(dilate(parabola, 1.0, vec({0.3, -0.7})) == vec({0.3, -0.7}));
  CHECK_THROWS_AS(dilate(parabola, 0.0, vec({1, 1})), std::invalid_argument);

  const auto c = curve_of({0.5, 1.25, 2.5}, {1, -1, 1}, {1, 1, -1});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double lambda = u(rng), t = u(rng);
    const Vector lhs = dilate(c, lambda, eval_curve(c, t));
    const Vector rhs = eval_curve(c, lambda * t);
    CHECK((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
  }
}

TEST_CASE("quasi-metric") {
  const auto parabola = MonomialCurve::parabola();
  CHECK(quasi_metric(parabola, vec({4, 4}), vec({0, 0})) == doctest::Approx(4.0));
  CHECK(quasi_metric(parabola, vec({0.3, 2}), vec({0.3, 2})) == 0.0);

  // Every exponent is at least 1, so each |.|^(1/alpha) is subadditive and
  // the constant cannot exceed 1.
  const double K = empirical_quasi_triangle_constant(parabola, 10000, 11);
  CHECK(std::isfinite(K));
  CHECK(K <= 1.0 + 1e-12);
  CHECK(K > 0.5);

  // With an exponent below 1 the constant exceeds 1 but stays below 2^(1/a - 1).
  const auto sub = curve_of({0.5, 2}, {1, 1}, {-1, 1});
  const double Ks = empirical_quasi_triangle_constant(sub, 10000, 11);
  CHECK(Ks > 1.0);
  CHECK(Ks <= 2.0 + 1e-12);
}

TEST_CASE("admissible region vertices") {
  const auto omega2 = omega_vertices(2);
  REQUIRE(omega2.vertices().size() == 4);
  CHECK(omega2.vertices()[0].x == Rational{0, 1});
  CHECK(omega2.vertices()[1].x == Rational{1, 1});
  CHECK(omega2.vertices()[2].x == Rational{2, 3});
  CHECK(omega2.vertices()[2].y == Rational{1, 3});
  CHECK(omega2.vertices()[3].x == Rational{2, 3});
  CHECK(omega2.vertices()[3].y == Rational{1, 3});
  CHECK(omega2.hull().size() == 3);

  const auto omega3 = omega_vertices(3);
  CHECK(omega3.vertices()[2].x == Rational{2, 3});
  CHECK(omega3.vertices()[2].y == Rational{1, 2});
  CHECK(omega3.vertices()[3].x == Rational{1, 2});
  CHECK(omega3.vertices()[3].y == Rational{1, 3});
  CHECK(omega3.hull().size() == 4);

  const auto dual = omega_prime_vertices(2);
  std::vector<std::pair<double, double>> hull;
  for (const auto& v : dual.hull()) hull.emplace_back(v.x(), v.y());
  REQUIRE(hull.size() == 3);
  auto has = [&](double x, double y) {
    for (const auto& [a, b] : hull)
      if (std::abs(a - x) < 1e-15 && std::abs(b - y) < 1e-15) return true;
    return false;
  };
  CHECK(has(0, 1));
  CHECK(has(1, 0));
  CHECK(has(2.0 / 3, 2.0 / 3));
}

TEST_CASE("interior membership") {
  const auto omega2 = omega_vertices(2);
  CHECK(omega2.contains_interior(0.6, 0.4));
  CHECK_FALSE(omega2.contains_interior(0.5, 0.5));
  CHECK_FALSE(omega2.contains_interior(0.8, 0.2));
  CHECK(in_omega_interior(omega2, 1.0 / 0.6, 1.0 / 0.6));
  CHECK(std::isinf(dual_exponent(1.0)));
  CHECK(dual_exponent(2.0) == 2.0);

  // Oracle: barycentric test against the hull triangle.
  const auto& h = omega2.hull();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const Eigen::Vector2d p(u(rng), u(rng));
    const Eigen::Vector2d a = h[0], b = h[1], c = h[2];
    auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& x, const Eigen::Vector2d& y) {
      return (x - o).x() * (y - o).y() - (x - o).y() * (y - o).x();
    };
    const double d1 = cross(a, b, p), d2 = cross(b, c, p), d3 = cross(c, a, p);
    const double margin = std::min({std::abs(d1), std::abs(d2), std::abs(d3)});
    if (margin < 1e-9) continue;
    const bool inside = (d1 > 0 && d2 > 0 && d3 > 0) || (d1 < 0 && d2 < 0 && d3 < 0);
    CHECK(omega2.contains_interior(p.x(), p.y()) == inside);
  }
}

TEST_CASE("torsion") {
  CHECK(torsion(TorsionCurve::moment(2), 0.7) == doctest::Approx(2.0));
  CHECK(torsion(TorsionCurve::moment(2), -3.1) == doctest::Approx(2.0));
  CHECK(torsion(TorsionCurve::circle(), 0.4) == doctest::Approx(1.0));
  CHECK(torsion(TorsionCurve::moment(3), 1.3) == doctest::Approx(12.0));

  const auto approx = TorsionCurve::from_positions(
      2, [](double t) { return vec({std::cos(t), std::sin(t)}); }, "circle-fd");
  CHECK(approx.approximate());
  CHECK(torsion(approx, 0.4) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("frames") {
  CHECK(build_frame(TorsionCurve::moment(3), 0.0).isApprox(Matrix::Identity(3, 3)));

  Matrix coeffs(2, 3);
  coeffs << 0, 3, 0,  //
      0, 4, 0.5;
  const Matrix F = build_frame(TorsionCurve::polynomial(coeffs), 0.0);
  CHECK(F(0, 0) == doctest::Approx(0.6));
  CHECK(F(1, 0) == doctest::Approx(0.8));
  CHECK(F(0, 1) == doctest::Approx(-0.8));
  CHECK(F(1, 1) == doctest::Approx(0.6));

  const double th = 0.3;
  Matrix R(2, 2);
  R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  CHECK(build_frame(TorsionCurve::rotated_moment(R), 0.0).isApprox(R, 1e-12));

  Matrix flat(2, 2);
  flat << 0, 1, 0, 0;
  CHECK_THROWS(build_frame(TorsionCurve::polynomial(flat), 0.0));
}

TEST_CASE("rescaled torsion") {
  const auto moment = TorsionCurve::moment(2);
  for (double lambda : {1.0, 0.25, 1.0 / 64})
    CHECK(rescaled_torsion_check(moment, lambda, 1, 4) == doctest::Approx(2.0).epsilon(1e-9));

  Matrix coeffs(2, 4);
  coeffs << 0, 1, 0, 0,  //
      0, 0, 1, 0.1;
  const auto perturbed = TorsionCurve::polynomial(coeffs);
  for (int i = 1; i <= 4; ++i) {
    const double m = rescaled_torsion_check(perturbed, std::ldexp(1.0, -6), i, 4);
    CHECK(std::abs(m - 2.0) < 0.2);
  }

  // At lambda = 1 the rescaled torsion is the torsion itself, since the frame
  // is orthonormal with positive orientation.
  double direct = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 33; ++s) direct = std::min(direct, std::abs(torsion(perturbed, 0.5 + 0.125 * s / 32.0)));
  CHECK(rescaled_torsion_check(perturbed, 1.0, 1, 4) == doctest::Approx(direct).epsilon(1e-9));
}

TEST_CASE("gamma-cubes") {
  const auto parabola = MonomialCurve::parabola();
  const GammaCube S = GammaCube::monomial(parabola, vec({1, 2}), 2.0);
  CHECK(S.sides() == vec({2, 4}));
  CHECK(S.volume() == doctest::Approx(8.0));
  CHECK(S.axis_aligned());
  CHECK(S.contains(vec({0.1, 0.1})));
  CHECK_FALSE(S.contains(vec({2.1, 2})));
  CHECK(S.as_box().lo == vec({0, 0}));

  const GammaCube T = torsion_cube(TorsionCurve::moment(2), 0.0, vec({0, 0}), 0.5);
  CHECK(T.sides().isApprox(vec({0.5, 0.25})));
}
