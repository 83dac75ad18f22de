#include "curvesparse/grid_function.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace curvesparse;

namespace {

Vector vec2(double x, double y) {
  Vector v(2);
  v << x, y;
  return v;
}

const Box unit(vec2(0, 0), vec2(1, 1));

GridFunction random_field(const Box& domain, Eigen::VectorXi counts, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GridFunction f(domain, counts);
  for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = u(rng);
  return f;
}

}  // namespace

TEST_CASE("lp norms") {
  const GridFunction one(unit, Eigen::Vector2i(16, 16), 1.0);
  for (double p : {1.0, 1.5, 2.0, 7.0}) CHECK(lp_norm(one, p) == doctest::Approx(1.0));

  const auto half = GridFunction::sample(unit, Eigen::Vector2i(16, 16), [](const Vector& x) { return x[0] < 0.5; });
  CHECK(lp_norm(half, 2.0) == doctest::Approx(std::sqrt(0.5)));

  const auto f = random_field(unit, Eigen::Vector2i(20, 30), 4);
  CHECK(lp_norm(f, 1.0) <= lp_norm(f, 2.0) * lp_norm(one, 2.0) + 1e-14);
}

TEST_CASE("cube averages") {
  const GridFunction c(unit, Eigen::Vector2i(16, 16), 3.5);
  const Box Q(vec2(0.25, 0.125), vec2(0.75, 0.5));
  CHECK(average(c, Q, 1.0) == doctest::Approx(3.5));
  CHECK(average(c, Q, 3.0) == doctest::Approx(3.5));

  const auto left = GridFunction::sample(unit, Eigen::Vector2i(16, 16), [](const Vector& x) { return x[0] < 0.5; });
  CHECK(average(left, Q, 1.0) == doctest::Approx(0.5));
  CHECK(average(left, Q, 2.0) == doctest::Approx(std::sqrt(0.5)));

  const auto f = random_field(unit, Eigen::Vector2i(32, 32), 8);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (int i = 0; i < 50; ++i) {
    const double x = u(rng), y = u(rng);
    const Box B(vec2(x, y), vec2(x + 0.2 + u(rng), y + 0.1 + u(rng)));
    const double a1 = average(f, B, 1.0), a2 = average(f, B, 2.0), a4 = average(f, B, 4.0);
    CHECK(a1 <= a2 * (1 + 1e-14));
    CHECK(a2 <= a4 * (1 + 1e-14));
  }
}

TEST_CASE("partial cells are weighted by overlap") {
  const GridFunction one(unit, Eigen::Vector2i(10, 10), 1.0);
  const Box Q(vec2(0.05, 0.05), vec2(0.33, 0.71));
  const auto flagged = average_flagged(one, Q, 1.0);
  CHECK(flagged.value == doctest::Approx(1.0));
  const auto r = restrict_to(one, Q);
  CHECK(r.values().sum() * r.cell_volume() == doctest::Approx(Q.volume()).epsilon(1e-12));
}

TEST_CASE("translation") {
  const auto f = random_field(Box(vec2(-1, -1), vec2(1, 1)), Eigen::Vector2i(40, 20), 2);
  CHECK(translate(f, vec2(0, 0)).values().isApprox(f.values()));

  const GridFunction moved = translate(f, vec2(f.mesh()[0], 0.0));
  for (int j = 0; j < 20; ++j)
    for (int i = 1; i < 40; ++i) CHECK(moved[i + 40 * j] == f[i - 1 + 40 * j]);

  // Smooth f: the norm of the interpolated shift matches the analytic one.
  auto gauss = [](const Vector& c) {
    return [c](const Vector& x) { return std::exp(-8.0 * (x - c).squaredNorm()); };
  };
  const Box D(vec2(-2, -2), vec2(2, 2));
  double previous = 1.0;
  for (int n : {64, 128, 256}) {
    const auto g = GridFunction::sample(D, Eigen::Vector2i(n, n), gauss(vec2(0, 0)));
    const auto shifted = translate(g, vec2(0.1234, -0.0567));
    const auto exact = GridFunction::sample(D, Eigen::Vector2i(n, n), gauss(vec2(0.1234, -0.0567)));
    const double err = lp_norm(shifted.with_values(shifted.values() - exact.values()), 2.0) / lp_norm(exact, 2.0);
    CHECK(err < 0.6 * previous);
    CHECK(std::abs(lp_norm(shifted, 2.0) / lp_norm(g, 2.0) - 1.0) < 4.0 * err + 1e-12);
    previous = err;
  }
}

TEST_CASE("restriction") {
  const auto f = random_field(unit, Eigen::Vector2i(24, 12), 5);
  CHECK(restrict_to(f, Box(vec2(-1, -1), vec2(2, 2))).values().isApprox(f.values()));
  CHECK(restrict_to(f, Box(vec2(2, 2), vec2(3, 3))).values().isZero());

  // Split the square into E and three complementary boxes; L1 masses add up.
  const Box E(vec2(0.21, 0.33), vec2(0.58, 0.91));
  const Box pieces[] = {Box(vec2(0, 0), vec2(1, 0.33)), Box(vec2(0, 0.91), vec2(1, 1)),
                        Box(vec2(0, 0.33), vec2(0.21, 0.91)), Box(vec2(0.58, 0.33), vec2(1, 0.91))};
  double rest = 0.0;
  for (const auto& P : pieces) rest += lp_norm(restrict_to(f, P), 1.0);
  CHECK(lp_norm(restrict_to(f, E), 1.0) + rest == doctest::Approx(lp_norm(f, 1.0)).epsilon(1e-12));

  // Idempotent on boxes whose faces are cell faces.
  const Box aligned(vec2(0.25, 0.25), vec2(0.75, 0.5));
  const auto once = restrict_to(f, aligned);
  CHECK(restrict_to(once, aligned).values().isApprox(once.values()));
}

TEST_CASE("interpolation and support") {
  const auto lin = GridFunction::sample(unit, Eigen::Vector2i(8, 8), [](const Vector& x) { return 2 * x[0] - x[1]; });
  CHECK(lin.interpolate(vec2(0.4, 0.6)) == doctest::Approx(0.2));
  CHECK(lin.interpolate(vec2(1.5, 0.5)) == 0.0);

  GridFunction spot(unit, Eigen::Vector2i(8, 8));
  spot[3 + 8 * 5] = 1.0;
  const Box s = spot.support_box();
  CHECK(s.lo.isApprox(vec2(3.0 / 8, 5.0 / 8)));
  CHECK(s.hi.isApprox(vec2(4.0 / 8, 6.0 / 8)));
  CHECK(GridFunction(unit, Eigen::Vector2i(8, 8)).support_box().empty());
  CHECK(pairing(lin, spot) == doctest::Approx(lin[3 + 8 * 5] / 64.0));
}

TEST_CASE("binary dump round trip") {
  const auto f = random_field(Box(vec2(-1, 0), vec2(1, 3)), Eigen::Vector2i(7, 5), 3);
  const auto dir = std::filesystem::temp_directory_path() / "curvesparse_gf_test";
  std::filesystem::create_directories(dir);
  save_grid_function(f, dir / "f");
  const auto g = load_grid_function(dir / "f");
  CHECK(g.same_geometry(f));
  CHECK((g.values() == f.values()).all());
  std::filesystem::remove_all(dir);
}
