#include "curvesparse/sparse_engine.hpp"
#include "curvesparse/experiment.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

using namespace curvesparse;

namespace {

Vector vec2(double x, double y) {
  Vector v(2);
  v << x, y;
  return v;
}

const Box unit(vec2(0, 0), vec2(1, 1));

GridFunction random_nonneg(const Eigen::Vector2i& counts, unsigned long long seed, int index) {
  auto rng = seeded_rng(seed, 7, static_cast<unsigned long long>(index));
  return random_bump_function(MonomialCurve::parabola(), unit, counts, rng, 3);
}

MonomialCurve slow_curve() {
  Vector a(2);
  a << 0.5, 1.0;
  Eigen::VectorXi plus(2), minus(2);
  plus << 1, 1;
  minus << -1, 1;
  return MonomialCurve(a, plus, minus);
}

bool subdividable(const DyadicGrid& grid, const DyadicCube& c, const GridFunction& f, const StoppingFloor& floor) {
  if (c.k <= floor.floor_scale) return false;
  const Vector sides = grid.cube_sides(c);
  for (Eigen::Index d = 0; d < sides.size(); ++d)
    if (sides[d] < floor.min_cells_per_axis * f.mesh()[d] * (1 - 1e-12)) return false;
  return true;
}

// Brute force: every descendant whose average exceeds the threshold and whose
// strict ancestors below Q0 do not.
std::vector<DyadicCube> oracle_stopping(const DyadicGrid& grid, const DyadicCube& Q0, const GridFunction& f1,
                                        const GridFunction& f2, double r, double s, double C,
                                        const StoppingFloor& floor) {
  const Box root = grid.cube_box(Q0);
  const double a1 = average(f1, root, r), a2 = average(f2, root, s);
  std::vector<DyadicCube> out;
  std::function<void(const DyadicCube&)> visit = [&](const DyadicCube& P) {
    if (!subdividable(grid, P, f1, floor)) return;
    for (const auto& c : grid.children(P)) {
      const Box b = grid.cube_box(c);
      if (average(f1, b, r) > C * a1 || average(f2, b, s) > C * a2)
        out.push_back(c);
      else
        visit(c);
    }
  };
  visit(Q0);
  return out;
}

bool same_set(std::vector<DyadicCube> a, std::vector<DyadicCube> b) {
  if (a.size() != b.size()) return false;
  for (const auto& x : a)
    if (std::find(b.begin(), b.end(), x) == b.end()) return false;
  return true;
}

}  // namespace

TEST_CASE("stopping children") {
  const auto parabola = MonomialCurve::parabola();
  const DyadicGrid grid(parabola);
  const DyadicCube Q0 = grid.find_cube(vec2(0.5, 0.5), 0);
  const Eigen::Vector2i counts(64, 256);
  const GridFunction chi(unit, counts, 1.0);
  CHECK(stopping_children(grid, Q0, chi, chi, 1.5, 2.0, 1.01).empty());

  SUBCASE("a spike selects its ancestors once C is small enough") {
    GridFunction spike(unit, counts);
    const DyadicCube deep = grid.find_cube(vec2(0.3, 0.6), -3);
    spike = restrict_to(GridFunction(unit, counts, 1.0), grid.cube_box(deep));
    const double ratio = grid.volume(Q0) / grid.volume(deep);
    const auto none = stopping_children(grid, Q0, spike, chi, 1.0, 2.0, ratio * 1.01);
    CHECK(none.empty());
    const auto some = stopping_children(grid, Q0, spike, chi, 1.0, 2.0, ratio * 0.99);
    REQUIRE(some.size() == 1);
    CHECK(grid.contains(some.front(), deep));
    const auto oracle = oracle_stopping(grid, Q0, spike, chi, 1.0, 2.0, 3.0, {});
    CHECK(same_set(stopping_children(grid, Q0, spike, chi, 1.0, 2.0, 3.0), oracle));
  }

  SUBCASE("maximal antichain against brute force") {
    const StoppingFloor floor{4, -64};
    for (int i = 0; i < 10; ++i) {
      const auto f1 = random_nonneg(counts, 3, 2 * i), f2 = random_nonneg(counts, 3, 2 * i + 1);
      const auto got = stopping_children(grid, Q0, f1, f2, 1.5, 2.5, 2.0, floor);
      CHECK(same_set(got, oracle_stopping(grid, Q0, f1, f2, 1.5, 2.5, 2.0, floor)));
      for (std::size_t a = 0; a < got.size(); ++a)
        for (std::size_t b = a + 1; b < got.size(); ++b) CHECK_FALSE(grid.intersects(got[a], got[b]));
    }
  }

  SUBCASE("half-measure bound at the default constant") {
    const double C = std::exp2(parabola.homogeneous_dimension() + 3);
    for (int i = 0; i < 100; ++i) {
      const auto f1 = random_nonneg(counts, 5, 2 * i), f2 = random_nonneg(counts, 5, 2 * i + 1);
      double measure = 0.0;
      for (const auto& P : stopping_children(grid, Q0, f1, f2, 1.5, 2.5, C)) measure += grid.volume(P);
      CHECK(measure < 0.5 * grid.volume(Q0));
    }
  }
}

TEST_CASE("sparse construction") {
  const auto parabola = MonomialCurve::parabola();
  const Eigen::Vector2i counts(64, 256);

  SUBCASE("indicator of the root") {
    const GridFunction chi(unit, counts, 1.0);
    const auto built = sparse_construct(chi, chi, 1.5, 2.5, parabola);
    REQUIRE(built.collection.entries.size() == 1);
    CHECK(built.collection.entries[0].cube.volume() == doctest::Approx(1.0));
    CHECK(verify_sparsity(built.collection, 0.99).pass);
  }

  SUBCASE("a spike produces a chain of ancestors") {
    const DyadicGrid grid(parabola);
    const DyadicCube deep = grid.find_cube(vec2(0.7, 0.2), -2);
    const auto spike = restrict_to(GridFunction(unit, counts, 1.0), grid.cube_box(deep));
    SparseOptions opt;
    opt.C = 4.0;
    const auto built = sparse_construct(spike, spike, 1.0, 1.0, parabola, opt);
    const auto& entries = built.collection.entries;
    REQUIRE(entries.size() >= 2);
    for (std::size_t a = 0; a < entries.size(); ++a)
      for (std::size_t b = 0; b < entries.size(); ++b)
        if (a != b)
          CHECK((built.collection.grid.contains(entries[a].base, entries[b].base) ||
                 built.collection.grid.contains(entries[b].base, entries[a].base)));
    CHECK(verify_sparsity(built.collection, 0.5).pass);
  }

  SUBCASE("random inputs give certified collections") {
    for (int i = 0; i < 20; ++i) {
      const auto f = random_nonneg(counts, 11, 2 * i), g = random_nonneg(counts, 11, 2 * i + 1);
      SparseOptions opt;
      opt.C = 4.0;
      const auto built = sparse_construct(f, g, 1.5, 2.5, parabola, opt);
      CHECK_FALSE(built.tree.partial);
      const auto cert = verify_sparsity(built.collection, 0.5);
      CHECK(cert.pass);
      const auto gamma = to_gamma_collection(built.collection);
      CHECK(gamma.gamma_cubes);
      CHECK(verify_sparsity(gamma, 0.5 * std::exp2(-3.0)).pass);
      for (std::size_t e = 0; e < gamma.entries.size(); ++e) {
        const Box base = built.collection.entries[e].cube;
        CHECK(gamma.entries[e].cube.contains(base));
      }
      // Each retained sub-average stays below twice the stopping constant.
      for (const auto& node : built.tree.nodes) CHECK(node.retained_ratio_sup <= 2.0 * built.tree.C + 1e-9);
    }
  }

  SUBCASE("node budget yields a partial result") {
    const auto f = random_nonneg(counts, 2, 0);
    SparseOptions opt;
    opt.C = 1.05;
    opt.node_budget = 3;
    const auto built = sparse_construct(f, f, 1.0, 1.0, parabola, opt);
    CHECK(built.tree.partial);
    CHECK(built.collection.partial);
  }
}

TEST_CASE("sparsity certificates") {
  const auto curve = slow_curve();
  const DyadicGrid grid(curve);
  const DyadicCube Q = grid.find_cube(vec2(0.5, 0.5), 0);
  const DyadicCube child = grid.find_cube(vec2(0.25, 0.25), -1);
  REQUIRE(grid.volume(child) == doctest::Approx(0.25 * grid.volume(Q)));
  REQUIRE(grid.contains(Q, child));

  auto entry = [&](const DyadicCube& c, std::vector<DyadicCube> removed) {
    return CollectionEntry{grid.cube_box(c), c, std::move(removed), 0, false};
  };

  SparseCollection single{grid, {entry(Q, {})}, false, false};
  CHECK(verify_sparsity(single, 0.99).pass);

  const DyadicCube far = grid.find_cube(vec2(5.5, 0.5), 0);
  SparseCollection apart{grid, {entry(Q, {}), entry(far, {})}, false, false};
  CHECK(verify_sparsity(apart, 0.9).pass);

  SparseCollection chain{grid, {entry(Q, {child}), entry(child, {})}, false, false};
  const auto half = verify_sparsity(chain, 0.5);
  CHECK(half.pass);
  CHECK(half.min_ratio == doctest::Approx(0.75));
  CHECK_FALSE(verify_sparsity(chain, 0.8).pass);

  // Overlapping E sets are caught.
  SparseCollection overlap{grid, {entry(Q, {}), entry(child, {})}, false, false};
  CHECK_FALSE(verify_sparsity(overlap, 0.1).pass);
}

TEST_CASE("sparse form") {
  const DyadicGrid grid(MonomialCurve::parabola());
  const DyadicCube Q = grid.find_cube(vec2(0.5, 0.5), 0);
  const GridFunction chi(unit, Eigen::Vector2i(32, 32), 1.0);
  SparseCollection one{grid, {CollectionEntry{grid.cube_box(Q), Q, {}, 0, false}}, false, false};
  CHECK(sparse_form(one, chi, chi, 1.5, 2.0) == doctest::Approx(1.0));

  const auto f = random_nonneg(Eigen::Vector2i(32, 32), 4, 0), g = random_nonneg(Eigen::Vector2i(32, 32), 4, 1);
  const double base = sparse_form(one, f, g, 1.5, 2.0);
  CHECK(sparse_form(one, f.with_values(2 * f.values()), g, 1.5, 2.0) == doctest::Approx(2 * base));

  const DyadicCube child = grid.find_cube(vec2(0.3, 0.3), -1);
  SparseCollection more = one;
  more.entries.push_back(CollectionEntry{grid.cube_box(child), child, {}, 1, false});
  CHECK(sparse_form(more, f, g, 1.5, 2.0) >= base);
}

TEST_CASE("Calderon-Zygmund decomposition") {
  const auto parabola = MonomialCurve::parabola();
  const DyadicGrid grid(parabola);
  const DyadicCube Q0 = grid.find_cube(vec2(0.5, 0.5), 0);
  const Eigen::Vector2i counts(64, 256);
  const double r = 1.5, s = 2.5;

  SUBCASE("constants have no bad part") {
    const GridFunction c(unit, counts, 1.0);
    const auto cz = cz_decompose(c, c, grid, Q0, r, s, 4.0);
    CHECK(cz.stopping.empty());
    CHECK(cz.good[0].values().isApprox(c.values()));
    CHECK(cz.reconstruct(1).values().isApprox(c.values()));
  }

  SUBCASE("unnormalized inputs are rejected") {
    const GridFunction c(unit, counts, 2.0);
    CHECK_THROWS_AS(cz_decompose(c, c, grid, Q0, r, s, 4.0), std::invalid_argument);
  }

  SUBCASE("random inputs") {
    const double C0 = 4.0;
    for (int i = 0; i < 20; ++i) {
      const auto [f1, f2] = normalized_pair(random_nonneg(counts, 9, 2 * i), random_nonneg(counts, 9, 2 * i + 1),
                                            grid, Q0, r, s);
      const auto cz = cz_decompose(f1, f2, grid, Q0, r, s, C0);
      const GridFunction* f[2] = {&f1, &f2};
      const double p[2] = {r, s};
      for (int k = 0; k < 2; ++k) {
        const double l1 = f[k]->values().abs().sum() * f[k]->cell_volume();
        CHECK((cz.reconstruct(k).values() - f[k]->values()).abs().maxCoeff() <=
              1e-12 * f[k]->values().abs().maxCoeff());
        for (const auto& piece : cz.bad[k]) {
          double integral = 0.0, norm = 0.0;
          for (double v : piece.values) {
            integral += v * f[k]->cell_volume();
            norm += std::pow(std::abs(v), p[k]) * f[k]->cell_volume();
          }
          CHECK(std::abs(integral) < 1e-12 * l1);
          const double L = grid.volume(piece.cube), parent = grid.volume(grid.parent(piece.cube));
          CHECK(std::pow(norm, 1 / p[k]) <= 2 * std::pow(parent / L, 1 / p[k]) * 2 * C0 * std::pow(L, 1 / p[k]));
        }
      }
      CHECK(cz.stopping_measure < 0.5 * cz.root_measure);
      double scale_sum = 0.0;
      for (int k : cz.scales()) scale_sum += cz.bad_at_scale(0, k).values().abs().sum();
      double direct = 0.0;
      for (const auto& piece : cz.bad[0])
        for (double v : piece.values) direct += std::abs(v);
      CHECK(scale_sum == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("domination report") {
  const auto parabola = MonomialCurve::parabola();
  const Eigen::Vector2i counts(32, 256);
  const double r = 1 / 0.6, s = 1 / 0.6;

  const GridFunction chi(unit, counts, 1.0);
  const auto zero = domination_report(chi, chi.zeros_like(), r, s, {-6, 1}, parabola);
  CHECK(zero.ratio == 0.0);

  // <H chi, chi> vanishes for the square, under any window.
  const auto a = domination_report(chi, chi, r, s, {-6, 1}, parabola);
  const auto b = domination_report(chi, chi, r, s, {-8, 3}, parabola);
  CHECK(std::abs(a.pairing) < 1e-12);
  CHECK(std::abs(b.pairing) < 1e-12);
  CHECK(a.lambda == doctest::Approx(1.0));
  CHECK(a.admissible);

  // The empirical supremum settles as trials are added.
  const Box domain = unit;
  const ExponentPair pair{r, s, true};
  const auto first = domination_study(parabola, domain, counts, pair, {-6, 1}, {}, {}, 20, 1);
  const auto more = domination_study(parabola, domain, counts, pair, {-6, 1}, {}, {}, 40, 1);
  CHECK(first.certificates_pass);
  CHECK(more.certificates_pass);
  CHECK(std::isfinite(more.ratio_sup));
  CHECK(more.ratio_sup <= 2.0 * first.ratio_sup);
}
