#include "curvesparse/dyadic_grid.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace curvesparse;

namespace {

MonomialCurve curve_with(double a1, double a2) {
  Vector a(2);
  a << a1, a2;
  Eigen::VectorXi plus(2), minus(2);
  plus << 1, 1;
  minus << -1, 1;
  return MonomialCurve(a, plus, minus);
}

DyadicCube cube(int k, std::int64_t m0, std::int64_t m1, int j0 = 0, int j1 = 0) {
  DyadicCube c;
  c.k = k;
  c.m = IndexVector(2);
  c.m << m0, m1;
  c.shift = Eigen::VectorXi(2);
  c.shift << j0, j1;
  return c;
}

Vector vec2(double x, double y) {
  Vector v(2);
  v << x, y;
  return v;
}

bool box_near(const Box& a, const Box& b, double tol = 1e-12) {
  return (a.lo - b.lo).cwiseAbs().maxCoeff() <= tol && (a.hi - b.hi).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

TEST_CASE("cube boxes") {
  const DyadicGrid grid(MonomialCurve::parabola());
  CHECK(box_near(grid.cube_box(cube(0, 0, 0)), Box(vec2(0, 0), vec2(1, 1))));

  const DyadicGrid g32(curve_with(1.0, 1.5));
  CHECK(g32.cube_sides(cube(3, 0, 0)) == vec2(8, 16));
  CHECK(g32.exponents(3) == Eigen::Vector2i(3, 4));

  Eigen::VectorXi j(2);
  j << 1, 0;
  const DyadicGrid shifted(MonomialCurve::parabola(), j);
  CHECK(box_near(shifted.cube_box(cube(1, 0, 0, 1, 0)), Box(vec2(2.0 / 3, 0), vec2(8.0 / 3, 4))));
}

TEST_CASE("find_cube") {
  const DyadicGrid grid(MonomialCurve::parabola());
  const auto a = grid.find_cube(vec2(0.5, 0.5), 0);
  CHECK(a.m == IndexVector::Zero(2));
  const auto b = grid.find_cube(vec2(-0.1, 0.0), 0);
  CHECK(b.m[0] == -1);
  CHECK(b.m[1] == 0);

  // Partition: each sampled point lies in exactly one cube of the 3x3 block
  // around the one returned.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 10000; ++i) {
    const Vector x = vec2(u(rng), u(rng));
    const int k = static_cast<int>(i % 7) - 3;
    const auto c = grid.find_cube(x, k);
    int hits = 0;
    for (int d0 = -1; d0 <= 1; ++d0)
      for (int d1 = -1; d1 <= 1; ++d1) {
        DyadicCube n = c;
        n.m[0] += d0;
        n.m[1] += d1;
        hits += grid.cube_box(n).contains(x) ? 1 : 0;
      }
    CHECK(hits == 1);
  }
}

TEST_CASE("parents") {
  const DyadicGrid grid(MonomialCurve::parabola());
  const auto unit = cube(0, 0, 0);
  const auto P = grid.parent(unit);
  CHECK(P.k == 1);
  CHECK(grid.cube_sides(P) == vec2(2, 4));
  CHECK(grid.contains(P, unit));
  const auto PP = grid.parent(P);
  CHECK(grid.contains(PP, P));
  CHECK_FALSE(grid.contains(P, PP));
  CHECK(grid.volume(PP) > grid.volume(P));

  // ell ratio of parent to child over many cubes is exactly 2 for (1, 2).
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  double sup = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto c = grid.find_cube(vec2(u(rng), u(rng)), static_cast<int>(i % 9) - 4);
    sup = std::max(sup, grid.ell(grid.parent(c)) / grid.ell(c));
  }
  CHECK(sup == 2.0);
}

TEST_CASE("canonical scales") {
  const DyadicGrid slow(curve_with(0.25, 0.5));
  CHECK(slow.exponents(0) == slow.exponents(1));
  CHECK(slow.canonical_scale(0) == 1);
  CHECK(slow.next_coarser_scale(1) == 3);
  CHECK(slow.next_finer_scale(1) == -1);
  const auto c = slow.find_cube(vec2(0.3, 0.3), 0);
  CHECK(c.k == 1);
}

TEST_CASE("children partition their parent") {
  for (const auto& shift : all_shifts(2)) {
    const DyadicGrid grid(curve_with(1.0, std::sqrt(2.0)), shift);
    const auto P = grid.find_cube(vec2(0.37, -1.2), 2);
    const auto kids = grid.children(P);
    double vol = 0.0;
    for (std::size_t a = 0; a < kids.size(); ++a) {
      CHECK(grid.contains(P, kids[a]));
      CHECK(grid.parent(kids[a]) == P);
      vol += grid.volume(kids[a]);
      for (std::size_t b = a + 1; b < kids.size(); ++b) CHECK_FALSE(grid.intersects(kids[a], kids[b]));
    }
    CHECK(vol == grid.volume(P));
  }
}

TEST_CASE("scaled cubes") {
  const DyadicGrid grid(MonomialCurve::parabola());
  CHECK(box_near(third_cube(grid, cube(0, 0, 0)), Box(vec2(1.0 / 3, 1.0 / 3), vec2(2.0 / 3, 2.0 / 3))));
  CHECK(box_near(scaled_cube(grid, cube(0, 0, 0), 1.0), Box(vec2(0, 0), vec2(1, 1))));
  const Box t = third_cube(grid, cube(1, 0, 0));
  CHECK(t.sides().isApprox(vec2(2.0 / 3, 4.0 / 3)));
  CHECK(t.center().isApprox(vec2(1, 2)));
}

TEST_CASE("enclosing gamma-cubes") {
  const DyadicGrid grid(MonomialCurve::parabola());
  const GammaCube S = grid.enclosing_gamma_cube(cube(0, 0, 0));
  CHECK(box_near(S.as_box(), Box(vec2(0, 0), vec2(1, 1))));

  const DyadicGrid g32(curve_with(1.0, 1.5));
  const auto c = cube(1, 0, 0);
  CHECK(g32.cube_sides(c) == vec2(2, 2));
  const GammaCube T = g32.enclosing_gamma_cube(c);
  CHECK(T.ell() == doctest::Approx(2.0));
  CHECK(T.ell() < 2.0 * g32.ell(c));

  const DyadicGrid irr(curve_with(1.0, std::sqrt(2.0)));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int i = 0; i < 1000; ++i) {
    const auto q = irr.find_cube(vec2(u(rng), u(rng)), static_cast<int>(i % 11) - 5);
    const GammaCube E = irr.enclosing_gamma_cube(q);
    const Box b = irr.cube_box(q), e = E.as_box();
    const double tol = 1e-12 * e.sides().maxCoeff();
    CHECK((e.lo.array() <= b.lo.array() + tol).all());
    CHECK((e.hi.array() >= b.hi.array() - tol).all());
    CHECK(E.ell() < 2.0 * irr.ell(q));
  }
}

TEST_CASE("window partition and exact lattice tests") {
  Eigen::VectorXi j(2);
  j << 2, 1;
  const DyadicGrid grid(MonomialCurve::parabola(), j);
  const Box W(vec2(-0.7, -0.2), vec2(2.1, 3.3));
  const auto cubes = grid.cubes_intersecting(W, 0);
  double covered = 0.0;
  for (std::size_t a = 0; a < cubes.size(); ++a) {
    covered += overlap_volume(grid.cube_box(cubes[a]), W);
    for (std::size_t b = a + 1; b < cubes.size(); ++b) CHECK_FALSE(grid.intersects(cubes[a], cubes[b]));
  }
  CHECK(covered == doctest::Approx(W.volume()).epsilon(1e-12));
  CHECK(grid.intersects(cubes.front(), cubes.front()));
}

TEST_CASE("floor ambiguity") {
  const DyadicGrid grid(curve_with(1.0, 2.0 + 1e-12));
  CHECK_THROWS_AS(grid.exponents(1), FloorAmbiguity);
  const DyadicGrid fine(curve_with(1.0, 2.0 + 1e-6));
  CHECK(fine.exponents(1) == Eigen::Vector2i(1, 2));
}
