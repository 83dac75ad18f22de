#include "curvesparse/experiment.hpp"

#include "curvesparse/parallel.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace curvesparse {

namespace {

constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Strict JSON reading: every key must be consumed, types are checked, and
// errors carry the dotted path of the field.

class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: '" + display() + "' must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    if (!v.is_number()) throw ConfigError("config: '" + field(key) + "' must be a number");
    return v.get<double>();
  }

  long long integer(const std::string& key, long long fallback) {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError("config: '" + field(key) + "' must be an integer");
    return v.get<long long>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError("config: '" + field(key) + "' must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    if (!v.is_string()) throw ConfigError("config: '" + field(key) + "' must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    if (!v.is_array()) throw ConfigError("config: '" + field(key) + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError("config: '" + field(key) + "' must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<int> integers(const std::string& key, std::vector<int> fallback) {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    if (!v.is_array()) throw ConfigError("config: '" + field(key) + "' must be an array of integers");
    std::vector<int> out;
    for (const auto& e : v) {
      if (!e.is_number_integer()) throw ConfigError("config: '" + field(key) + "' must be an array of integers");
      out.push_back(e.get<int>());
    }
    return out;
  }

  std::vector<std::vector<double>> number_rows(const std::string& key, std::vector<std::vector<double>> fallback) {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    const std::string msg = "config: '" + field(key) + "' must be an array of number arrays";
    if (!v.is_array()) throw ConfigError(msg);
    std::vector<std::vector<double>> out;
    for (const auto& row : v) {
      if (!row.is_array()) throw ConfigError(msg);
      std::vector<double> r;
      for (const auto& e : row) {
        if (!e.is_number()) throw ConfigError(msg);
        r.push_back(e.get<double>());
      }
      out.push_back(std::move(r));
    }
    return out;
  }

  Reader child(const std::string& key) {
    if (!has(key)) return Reader(empty_, field(key));
    return Reader(raw(key), field(key));
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  /// Rejects keys that were never read.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError("config: unknown key '" + field(it.key()) + "'");
  }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  static inline const Json empty_ = Json::object();
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json to_json(const Eigen::VectorXi& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json to_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

Json to_json(const PowerLawFit& fit) {
  return Json{{"slope", fit.slope},
              {"intercept", fit.intercept},
              {"slope_stderr", fit.slope_stderr},
              {"slope_ci95", fit.slope_ci95},
              {"points", fit.points}};
}

Json to_json(const SparsityCertificate& c) {
  return Json{{"status", c.pass ? "pass" : "fail"},
              {"delta", c.delta},
              {"min_ratio", c.min_ratio},
              {"message", c.message}};
}

std::string rational_string(const Rational& q) { return std::to_string(q.num) + "/" + std::to_string(q.den); }

MonomialCurve parse_curve(Reader curve) {
  if (curve.has("preset")) {
    const std::string preset = curve.string("preset", "");
    curve.finish();
    if (preset == "parabola") return MonomialCurve::parabola();
    if (preset.rfind("moment", 0) == 0) {
      int n = 0;
      try {
        n = std::stoi(preset.substr(6));
      } catch (const std::exception&) {
        n = 0;
      }
      if (n >= 2 && n <= 8) return MonomialCurve::moment(n);
    }
    throw ConfigError("config: 'curve.preset' must be 'parabola' or 'moment<n>' with 2 <= n <= 8, got '" + preset +
                      "'");
  }
  const auto alpha = curve.numbers("alpha", {1.0, 2.0});
  const auto plus = curve.integers("eps_plus", std::vector<int>(alpha.size(), 1));
  std::vector<int> minus_default(alpha.size(), 1);
  if (!minus_default.empty()) minus_default[0] = -1;
  const auto minus = curve.integers("eps_minus", minus_default);
  curve.finish();
  try {
    return MonomialCurve(Eigen::Map<const Vector>(alpha.data(), static_cast<Eigen::Index>(alpha.size())),
                         Eigen::Map<const Eigen::VectorXi>(plus.data(), static_cast<Eigen::Index>(plus.size())),
                         Eigen::Map<const Eigen::VectorXi>(minus.data(), static_cast<Eigen::Index>(minus.size())));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: 'curve': ") + e.what());
  }
}

ExponentPair make_pair_from_inverses(double inv_r, double inv_sd, int n, const std::string& field) {
  if (!(inv_r > 0.0 && inv_r <= 1.0) || !(inv_sd >= 0.0 && inv_sd < 1.0))
    throw ConfigError("config: '" + field + "' needs 0 < 1/r <= 1 and 0 <= 1/s' < 1");
  ExponentPair p;
  p.r = 1.0 / inv_r;
  p.s = 1.0 / (1.0 - inv_sd);
  p.admissible = in_omega_interior(omega_vertices(n), p.r, p.s);
  return p;
}

Json pair_json(const ExponentPair& p) {
  return Json{{"inv_r", 1.0 / p.r}, {"inv_s_dual", 1.0 - 1.0 / p.s}, {"r", p.r}, {"s", p.s},
              {"admissible", p.admissible}};
}

}  // namespace

ExperimentConfig parse_config(const Json& j) {
  Reader root(j, "");
  ExperimentConfig cfg;
  cfg.curve = parse_curve(root.child("curve"));
  const auto n = cfg.curve.dim();

  {
    Reader grid = root.child("grid");
    const auto lo = grid.numbers("lo", std::vector<double>(static_cast<std::size_t>(n), 0.0));
    const auto hi = grid.numbers("hi", std::vector<double>(static_cast<std::size_t>(n), 1.0));
    std::vector<int> default_counts(static_cast<std::size_t>(n), 32);
    if (n == 2) default_counts = {32, 256};
    const auto counts = grid.integers("counts", default_counts);
    grid.finish();
    if (static_cast<Eigen::Index>(lo.size()) != n || static_cast<Eigen::Index>(hi.size()) != n ||
        static_cast<Eigen::Index>(counts.size()) != n)
      throw ConfigError("config: 'grid.lo', 'grid.hi' and 'grid.counts' must have one entry per curve dimension");
    cfg.domain = Box(Eigen::Map<const Vector>(lo.data(), n), Eigen::Map<const Vector>(hi.data(), n));
    if (cfg.domain.empty()) throw ConfigError("config: 'grid' needs lo < hi on every axis");
    cfg.counts = Eigen::Map<const Eigen::VectorXi>(counts.data(), n);
  }

  for (const auto& row : root.number_rows("exponent_pairs", {{0.6, 0.4}})) {
    if (row.size() != 2) throw ConfigError("config: 'exponent_pairs' entries must be [1/r, 1/s']");
    cfg.pairs.push_back(make_pair_from_inverses(row[0], row[1], static_cast<int>(n), "exponent_pairs"));
  }
  if (cfg.pairs.empty()) throw ConfigError("config: 'exponent_pairs' must not be empty");

  {
    Reader w = root.child("window");
    cfg.window.k_min = static_cast<int>(w.integer("k_min", -6));
    cfg.window.k_max = static_cast<int>(w.integer("k_max", 1));
    w.finish();
    if (cfg.window.k_min > cfg.window.k_max) throw ConfigError("config: 'window.k_min' must not exceed 'window.k_max'");
    if (cfg.window.k_min < -30 || cfg.window.k_max > 30) throw ConfigError("config: 'window' scales must lie in [-30, 30]");
  }
  {
    Reader q = root.child("quadrature");
    cfg.rule.nodes_per_half = static_cast<int>(q.integer("nodes_per_half", 256));
    q.finish();
    if (cfg.rule.nodes_per_half < 16) throw ConfigError("config: 'quadrature.nodes_per_half' must be at least 16");
  }
  {
    Reader s = root.child("stopping");
    cfg.sparse.C = s.number("C", 0.0);
    cfg.sparse.floor.min_cells_per_axis = static_cast<int>(s.integer("min_cells_per_axis", 4));
    cfg.sparse.floor.floor_scale = static_cast<int>(s.integer("floor_scale", -64));
    cfg.sparse.node_budget = static_cast<std::size_t>(s.integer("node_budget", 200000));
    cfg.sparse.max_doublings = static_cast<int>(s.integer("max_doublings", 16));
    s.finish();
    if (cfg.sparse.C != 0.0 && !(cfg.sparse.C > 1.0))
      throw ConfigError("config: 'stopping.C' must be 0 (automatic) or exceed 1");
    if (cfg.sparse.floor.min_cells_per_axis < 1)
      throw ConfigError("config: 'stopping.min_cells_per_axis' must be at least 1");
    if (cfg.sparse.node_budget < 1) throw ConfigError("config: 'stopping.node_budget' must be positive");
  }
  for (Eigen::Index d = 0; d < n; ++d)
    if (cfg.counts[d] < 2 * cfg.sparse.floor.min_cells_per_axis)
      throw ConfigError("config: 'grid.counts' must give at least 2 * stopping.min_cells_per_axis cells per axis");

  const long long seed = root.integer("seed", 1);
  if (seed < 0) throw ConfigError("config: 'seed' must be nonnegative");
  cfg.seed = static_cast<unsigned long long>(seed);
  cfg.output = root.string("output", "out");

  for (const auto& name : subcommands()) {
    std::string key = name;
    std::replace(key.begin(), key.end(), '-', '_');
    if (root.has(key)) {
      const Json& sec = root.raw(key);
      if (!sec.is_object()) throw ConfigError("config: '" + key + "' must be an object");
      cfg.sections[key] = sec;
    }
  }
  root.finish();

  Json curve{{"alpha", to_json(cfg.curve.alpha())},
             {"eps_plus", to_json(cfg.curve.eps_plus())},
             {"eps_minus", to_json(cfg.curve.eps_minus())}};
  Json pairs = Json::array();
  for (const auto& p : cfg.pairs) pairs.push_back({1.0 / p.r, 1.0 - 1.0 / p.s});
  cfg.canonical = Json{{"curve", curve},
                       {"grid", {{"lo", to_json(cfg.domain.lo)}, {"hi", to_json(cfg.domain.hi)},
                                 {"counts", to_json(cfg.counts)}}},
                       {"exponent_pairs", pairs},
                       {"window", {{"k_min", cfg.window.k_min}, {"k_max", cfg.window.k_max}}},
                       {"quadrature", {{"nodes_per_half", cfg.rule.nodes_per_half}}},
                       {"stopping", {{"C", cfg.sparse.C},
                                     {"min_cells_per_axis", cfg.sparse.floor.min_cells_per_axis},
                                     {"floor_scale", cfg.sparse.floor.floor_scale},
                                     {"node_budget", cfg.sparse.node_budget},
                                     {"max_doublings", cfg.sparse.max_doublings}}},
                       {"seed", cfg.seed},
                       {"output", cfg.output}};
  for (auto it = cfg.sections.begin(); it != cfg.sections.end(); ++it) cfg.canonical[it.key()] = it.value();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

ExperimentConfig default_config() { return parse_config(Json::object()); }

std::mt19937_64 seeded_rng(unsigned long long seed, unsigned long long stream, unsigned long long index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

GridFunction random_bump_function(const MonomialCurve& curve, const Box& domain, const Eigen::VectorXi& counts,
                                  std::mt19937_64& rng, int bumps) {
  const auto n = domain.dim();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double scale = std::numeric_limits<double>::infinity();
  for (Eigen::Index d = 0; d < n; ++d) scale = std::min(scale, std::pow(domain.sides()[d], 1.0 / curve.alpha()[d]));
  struct Bump {
    Vector center, half;
    double amplitude;
  };
  std::vector<Bump> list;
  for (int b = 0; b < bumps; ++b) {
    Bump bump{Vector(n), Vector(n), 0.5 + unit(rng)};
    const double ell = scale * (0.2 + 0.4 * unit(rng));
    for (Eigen::Index d = 0; d < n; ++d) {
      bump.center[d] = domain.lo[d] + domain.sides()[d] * unit(rng);
      bump.half[d] = 0.5 * std::pow(ell, curve.alpha()[d]);
    }
    list.push_back(std::move(bump));
  }
  return GridFunction::sample(domain, counts, [&](const Vector& x) {
    double v = 0.0;
    for (const auto& b : list) {
      double p = b.amplitude;
      for (Eigen::Index d = 0; d < n && p != 0.0; ++d) {
        const double u = (x[d] - b.center[d]) / b.half[d];
        p = std::abs(u) >= 1.0 ? 0.0 : p * (1.0 - u * u) * (1.0 - u * u);
      }
      v += p;
    }
    return v;
  });
}

// ---------------------------------------------------------------------------

GridPropertyReport grid_property_suite(const MonomialCurve& curve, int k_range, int points, unsigned long long seed) {
  if (k_range < 1 || points < 1) throw std::invalid_argument("grid_property_suite: k_range and points must be positive");
  const auto n = curve.dim();
  GridPropertyReport rep;
  {
    std::ostringstream os;
    os << std::setprecision(17) << '(';
    for (Eigen::Index d = 0; d < n; ++d) os << (d ? "," : "") << curve.alpha()[d];
    os << ')';
    rep.alpha = os.str();
  }
  rep.parent_volume_ratio_min = std::numeric_limits<double>::infinity();
  auto check = [&](bool ok, const std::string& what) {
    ++rep.checks;
    if (!ok) {
      ++rep.violations;
      if (rep.first_violations.size() < 10) rep.first_violations.push_back(what);
    }
  };
  auto within = [](const Box& inner, const Box& outer) {
    for (Eigen::Index d = 0; d < inner.dim(); ++d) {
      const double tol = 1e-12 * std::max(1.0, outer.hi[d] - outer.lo[d]);
      if (inner.lo[d] < outer.lo[d] - tol || inner.hi[d] > outer.hi[d] + tol) return false;
    }
    return true;
  };
  const auto shifts = all_shifts(n);
  std::vector<DyadicGrid> grids;
  for (const auto& j : shifts) grids.emplace_back(curve, j);
  const double volume_bound = std::exp2(std::max(curve.homogeneous_dimension(), static_cast<double>(n)));

  // Scale monotonicity (differentiation property).
  for (int k = -k_range; k < k_range; ++k) {
    const Eigen::VectorXi a = grids[0].exponents(k), b = grids[0].exponents(k + 1);
    check((a.array() <= b.array()).all() && a.sum() < b.sum(), "side vector not increasing at k = " + std::to_string(k));
  }

  auto rng = seeded_rng(seed, 10, 0);
  std::uniform_real_distribution<double> coord(-3.0, 3.0);
  for (int p = 0; p < points; ++p) {
    Vector x(n);
    for (Eigen::Index d = 0; d < n; ++d) x[d] = coord(rng);
    const DyadicGrid& grid = grids[static_cast<std::size_t>(p) % grids.size()];
    for (int k = -k_range; k <= k_range; ++k) {
      const DyadicCube c = grid.find_cube(x, k);
      const Box box = grid.cube_box(c);
      check(box.contains(x), "find_cube misses its point at k = " + std::to_string(k));
      const DyadicCube P = grid.parent(c);
      check(grid.contains(P, c) && within(box, grid.cube_box(P)), "parent does not contain child " + box.to_string());
      check(grid.find_cube(x, P.k) == P, "coarser cube through x differs from the parent at k = " + std::to_string(k));
      const double ratio = grid.volume(P) / grid.volume(c);
      rep.parent_volume_ratio_min = std::min(rep.parent_volume_ratio_min, ratio);
      rep.parent_volume_ratio_max = std::max(rep.parent_volume_ratio_max, ratio);
      const auto kids = grid.children(P);
      check(std::find(kids.begin(), kids.end(), c) != kids.end(), "cube missing from its parent's children");
      const GammaCube S = grid.enclosing_gamma_cube(c);
      const double enclosing = S.volume() / grid.volume(c);
      rep.enclosing_ratio_max = std::max(rep.enclosing_ratio_max, enclosing);
      check(within(box, S.as_box()) && enclosing < volume_bound, "enclosing gamma-cube too small or too large");
    }
  }

  // Exhaustive partition, children and third-cube tiling checks on windows of
  // three cube sides per scale.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = -k_range; k <= k_range; ++k) {
    const Eigen::VectorXi F = grids[0].exponents(k);
    Vector sides(n), center(n);
    for (Eigen::Index d = 0; d < n; ++d) {
      sides[d] = 3.0 * std::ldexp(1.0, F[d]);
      center[d] = (2.0 * unit(rng) - 1.0) * std::ldexp(1.0, F[d] + 1);
    }
    const Box W = Box::centered(center, sides);
    for (const auto& grid : grids) {
      const auto cubes = grid.cubes_intersecting(W, k);
      double covered = 0.0;
      bool disjoint = true;
      for (std::size_t a = 0; a < cubes.size(); ++a) {
        covered += overlap_volume(grid.cube_box(cubes[a]), W);
        for (std::size_t b = a + 1; b < cubes.size(); ++b) disjoint = disjoint && !grid.intersects(cubes[a], cubes[b]);
      }
      check(disjoint, "scale-" + std::to_string(k) + " cubes overlap");
      check(std::abs(covered - W.volume()) <= 1e-9 * W.volume(), "scale-" + std::to_string(k) + " cubes do not tile");
      const DyadicCube& c = cubes.front();
      const auto kids = grid.children(c);
      double kid_volume = 0.0;
      bool inside = true, kids_disjoint = true;
      for (std::size_t a = 0; a < kids.size(); ++a) {
        kid_volume += grid.volume(kids[a]);
        inside = inside && grid.contains(c, kids[a]);
        for (std::size_t b = a + 1; b < kids.size(); ++b)
          kids_disjoint = kids_disjoint && !grid.intersects(kids[a], kids[b]);
      }
      check(inside && kids_disjoint && kid_volume == grid.volume(c), "children do not partition their parent");
    }
    std::vector<Box> thirds;
    for (const auto& [grid, Q] : localized_cubes(curve, W, k)) thirds.push_back(third_cube(grid, Q));
    double covered = 0.0, overlap = 0.0;
    for (std::size_t a = 0; a < thirds.size(); ++a) {
      covered += overlap_volume(thirds[a], W);
      for (std::size_t b = a + 1; b < thirds.size(); ++b) overlap += overlap_volume(thirds[a], thirds[b]);
    }
    check(std::abs(covered - W.volume()) <= 1e-9 * W.volume() && overlap <= 1e-9 * W.volume(),
          "third-cubes do not tile at scale " + std::to_string(k));
  }
  return rep;
}

DominationStudy domination_study(const MonomialCurve& curve, const Box& domain, const Eigen::VectorXi& counts,
                                 const ExponentPair& pair, const TruncationWindow& window, const QuadratureRule& rule,
                                 const SparseOptions& sparse, int trials, unsigned long long seed, int bumps) {
  DominationStudy study;
  study.pair = pair;
  for (int t = 0; t < trials; ++t) {
    auto rf = seeded_rng(seed, 0, static_cast<unsigned long long>(t));
    auto rg = seeded_rng(seed, 1, static_cast<unsigned long long>(t));
    const GridFunction f = random_bump_function(curve, domain, counts, rf, bumps);
    const GridFunction g = random_bump_function(curve, domain, counts, rg, bumps);
    DominationTrial trial{static_cast<std::size_t>(t), domination_report(f, g, pair.r, pair.s, window, curve, rule, sparse)};
    study.ratio_sup = std::max(study.ratio_sup, trial.report.ratio);
    study.certificates_pass =
        study.certificates_pass && trial.report.dyadic_certificate.pass && trial.report.gamma_certificate.pass;
    study.trials.push_back(std::move(trial));
  }
  return study;
}

DecayStudy decay_study(const std::vector<int>& dims, const std::vector<double>& radii, int random_directions,
                       double t0, unsigned long long seed) {
  DecayStudy study;
  const BumpProfile psi;
  for (int n : dims) {
    const MonomialCurve curve = MonomialCurve::moment(n);
    std::vector<std::pair<std::string, Vector>> directions{{"degenerate", degenerate_direction(curve, t0)}};
    for (int i = 0; i < random_directions; ++i) {
      auto rng = seeded_rng(seed, 2, static_cast<unsigned long long>(n * 1000 + i));
      std::normal_distribution<double> normal;
      Vector xi(n);
      for (int d = 0; d < n; ++d) xi[d] = normal(rng);
      directions.emplace_back("random" + std::to_string(i), xi.normalized());
    }
    std::vector<double> sup(radii.size(), 0.0);
    for (const auto& [name, xi] : directions) {
      for (std::size_t i = 0; i < radii.size(); ++i) {
        DecayRow row;
        row.n = n;
        row.direction = name;
        row.radius = radii[i];
        row.magnitude = std::abs(arclength_fourier(curve, psi, radii[i] * xi));
        row.normalized = row.magnitude * std::pow(1.0 + radii[i], 1.0 / n);
        sup[i] = std::max(sup[i], row.normalized);
        study.rows.push_back(row);
      }
    }
    const auto [lo, hi] = std::minmax_element(sup.begin(), sup.end());
    study.band.emplace_back(n, *hi / *lo);
  }
  return study;
}

ContinuityResult continuity_study(const MonomialCurve& curve, const std::vector<int>& log2_y, double r,
                                  double s_prime, double cells_per_unit, int random_fields, unsigned long long seed,
                                  const QuadratureRule& rule) {
  if (log2_y.size() < 3) throw std::invalid_argument("continuity_study: need at least three translations");
  ContinuityStudy study(curve, continuity_test_family(curve, cells_per_unit, seed, random_fields), rule);
  ContinuityResult out;
  const Vector direction = Vector::Ones(curve.dim()).normalized();
  for (int j : log2_y) {
    const double y = std::ldexp(1.0, j);
    out.y.push_back(y);
    out.estimate.push_back(study.estimate(y * direction, r, s_prime));
  }
  out.fit = fit_power_law(out.y, out.estimate);
  return out;
}

// ---------------------------------------------------------------------------

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256: digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"grid-props", "support-check", "decay", "continuity",
                                              "dominate",   "sharpness",     "weights", "region"};
  return names;
}

namespace {

/// Collects output files so the manifest can hash them.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + (dir_ / name).string() + "'");
    out << content;
    files_.push_back(name);
  }

  void add_existing(const std::string& name) { files_.push_back(name); }

  const std::filesystem::path& dir() const { return dir_; }

  Json manifest_files() const {
    std::vector<std::string> sorted = files_;
    std::sort(sorted.begin(), sorted.end());
    Json a = Json::array();
    for (const auto& name : sorted) {
      std::ifstream in(dir_ / name, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      const std::string bytes = ss.str();
      a.push_back({{"path", name}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
    }
    return a;
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

std::string csv_number(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

Json section(const ExperimentConfig& cfg, const std::string& key) {
  return cfg.sections.contains(key) ? cfg.sections.at(key) : Json::object();
}

Json run_grid_props(const ExperimentConfig& cfg, OutputDir& out) {
  const Json sec = section(cfg, "grid_props");
  Reader r(sec, "grid_props");
  const auto alphas = r.number_rows("alphas", {{1.0, 2.0}, {1.0, std::sqrt(2.0)}});
  const int k_range = static_cast<int>(r.integer("k_range", 6));
  const int points = static_cast<int>(r.integer("random_points", 10000));
  r.finish();
  if (k_range < 1 || k_range > 20) throw ConfigError("config: 'grid_props.k_range' must lie in [1, 20]");
  if (points < 1) throw ConfigError("config: 'grid_props.random_points' must be positive");
  std::vector<MonomialCurve> curves;
  for (const auto& a : alphas) {
    const auto n = static_cast<Eigen::Index>(a.size());
    Eigen::VectorXi minus = Eigen::VectorXi::Ones(n);
    if (n > 0) minus[0] = -1;
    try {
      curves.emplace_back(Eigen::Map<const Vector>(a.data(), n), Eigen::VectorXi::Ones(n), minus);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: 'grid_props.alphas': ") + e.what());
    }
  }

  Json report{{"k_range", k_range}, {"random_points", points}, {"curves", Json::array()}};
  std::string csv = "alpha,checks,violations,parent_volume_ratio_min,parent_volume_ratio_max,enclosing_ratio_max\n";
  std::size_t total = 0;
  for (const auto& curve : curves) {
    const auto rep = grid_property_suite(curve, k_range, points, cfg.seed);
    total += rep.violations;
    report["curves"].push_back({{"alpha", rep.alpha},
                                {"checks", rep.checks},
                                {"violations", rep.violations},
                                {"first_violations", rep.first_violations},
                                {"parent_volume_ratio_min", rep.parent_volume_ratio_min},
                                {"parent_volume_ratio_max", rep.parent_volume_ratio_max},
                                {"enclosing_ratio_max", rep.enclosing_ratio_max}});
    csv += "\"" + rep.alpha + "\"," + std::to_string(rep.checks) + "," + std::to_string(rep.violations) + "," +
           csv_number(rep.parent_volume_ratio_min) + "," + csv_number(rep.parent_volume_ratio_max) + "," +
           csv_number(rep.enclosing_ratio_max) + "\n";
  }
  report["violations"] = total;
  report["status"] = total == 0 ? "pass" : "fail";
  out.write("grid_props.csv", csv);
  return report;
}

Json run_support_check(const ExperimentConfig& cfg, OutputDir& out, bool refine) {
  const Json sec = section(cfg, "support_check");
  Reader r(sec, "support_check");
  const auto scales = r.integers("scales", {0, -1, -2});
  const int N = static_cast<int>(r.integer("N", 4));
  const int max_N = static_cast<int>(r.integer("max_N", 12));
  std::vector<int> default_counts(static_cast<std::size_t>(cfg.curve.dim()), 256);
  auto counts_v = r.integers("counts", default_counts);
  r.finish();
  if (static_cast<Eigen::Index>(counts_v.size()) != cfg.curve.dim())
    throw ConfigError("config: 'support_check.counts' needs one entry per dimension");
  if (N < 1 || max_N < 1) throw ConfigError("config: 'support_check.N' and 'max_N' must be positive");
  if (scales.empty()) throw ConfigError("config: 'support_check.scales' must not be empty");
  Eigen::VectorXi counts = Eigen::Map<const Eigen::VectorXi>(counts_v.data(), cfg.curve.dim());
  if (refine) counts *= 2;

  const auto cal = calibrate_support_constant(cfg.curve, cfg.domain, counts, scales, max_N, cfg.rule);
  const GridFunction one(cfg.domain, counts, 1.0);
  Json per_scale = Json::array();
  std::size_t violations = 0;
  std::string csv = "scale,cubes,violating_cells\n";
  for (int q : scales) {
    std::size_t v = 0, cubes = 0;
    for (const auto& [grid, Q] : localized_cubes(cfg.curve, cfg.domain, q)) {
      v += localized_unchecked(one, grid, Q, N, cfg.rule).violations.size();
      ++cubes;
    }
    violations += v;
    per_scale.push_back({{"scale", q}, {"cubes", cubes}, {"violating_cells", v}});
    csv += std::to_string(q) + "," + std::to_string(cubes) + "," + std::to_string(v) + "\n";
  }
  out.write("support_check.csv", csv);
  return Json{{"counts", to_json(counts)},
              {"calibrated_N", cal.N},
              {"violations_per_N", cal.violations_per_N},
              {"N", N},
              {"per_scale", per_scale},
              {"violating_cells", violations},
              {"status", violations == 0 ? "pass" : "fail"}};
}

Json run_decay(const ExperimentConfig& cfg, OutputDir& out) {
  const Json sec = section(cfg, "decay");
  Reader r(sec, "decay");
  const auto dims = r.integers("dimensions", {2, 3});
  const auto radii = r.numbers("radii", {10.0, 100.0, 1000.0});
  const int random_directions = static_cast<int>(r.integer("random_directions", 4));
  const double t0 = r.number("t0", 0.75);
  r.finish();
  for (int n : dims)
    if (n < 2 || n > 6) throw ConfigError("config: 'decay.dimensions' entries must lie in [2, 6]");
  for (double R : radii)
    if (!(R > 0.0)) throw ConfigError("config: 'decay.radii' must be positive");
  if (!(t0 > 0.5 && t0 < 1.0)) throw ConfigError("config: 'decay.t0' must lie in (1/2, 1)");
  if (radii.size() < 2) throw ConfigError("config: 'decay.radii' needs at least two entries");

  const auto study = decay_study(dims, radii, random_directions, t0, cfg.seed);
  std::string csv = "n,direction,radius,magnitude,normalized\n";
  for (const auto& row : study.rows)
    csv += std::to_string(row.n) + "," + row.direction + "," + csv_number(row.radius) + "," +
           csv_number(row.magnitude) + "," + csv_number(row.normalized) + "\n";
  out.write("decay.csv", csv);
  Json bands = Json::array();
  bool ok = true;
  for (const auto& [n, band] : study.band) {
    bands.push_back({{"n", n}, {"max_over_min", band}});
    ok = ok && band < 10.0;
  }
  return Json{{"t0", t0}, {"radii", to_json(radii)}, {"bands", bands}, {"status", ok ? "pass" : "fail"}};
}

Json run_continuity(const ExperimentConfig& cfg, OutputDir& out, bool refine) {
  const Json sec = section(cfg, "continuity");
  Reader r(sec, "continuity");
  const auto log2_y = r.integers("log2_y", {-3, -4, -5, -6, -7, -8});
  const double rr = r.number("r", 2.0);
  const double sd = r.number("s_dual", 2.0);
  double cells = r.number("cells_per_unit", 64.0);
  const int fields = static_cast<int>(r.integer("random_fields", 2));
  r.finish();
  if (!(rr >= 1.0) || !(sd >= 1.0)) throw ConfigError("config: 'continuity.r' and 's_dual' must be at least 1");
  if (!(cells >= 8.0)) throw ConfigError("config: 'continuity.cells_per_unit' must be at least 8");
  for (int j : log2_y)
    if (j > 0) throw ConfigError("config: 'continuity.log2_y' entries must be <= 0 (|y| <= 1)");
  if (refine) cells *= 2.0;
  const auto res = continuity_study(cfg.curve, log2_y, rr, sd, cells, fields, cfg.seed, cfg.rule);
  std::string csv = "y,estimate\n";
  for (std::size_t i = 0; i < res.y.size(); ++i) csv += csv_number(res.y[i]) + "," + csv_number(res.estimate[i]) + "\n";
  out.write("continuity.csv", csv);
  const bool positive = res.fit.slope - res.fit.slope_ci95 > 0.0;
  return Json{{"r", rr},
              {"s_dual", sd},
              {"cells_per_unit", cells},
              {"eta_hat", res.fit.slope},
              {"fit", to_json(res.fit)},
              {"status", positive ? "pass" : "fail"}};
}

Json domination_trial_json(const DominationReport& rep) {
  Json by_scale = Json::object();
  for (const auto& [k, v] : rep.pairing_by_scale) by_scale[std::to_string(k)] = v;
  Json per_depth = Json::object();
  for (const auto& [d, c] : rep.cubes_per_depth) per_depth[std::to_string(d)] = c;
  return Json{{"pairing", rep.pairing},
              {"pairing_by_scale", by_scale},
              {"lambda", rep.lambda},
              {"lambda_dyadic", rep.lambda_dyadic},
              {"ratio", rep.ratio},
              {"C", rep.C},
              {"doublings", rep.doublings},
              {"partial", rep.partial},
              {"cubes", rep.cubes},
              {"cubes_per_depth", per_depth},
              {"floor_residual", rep.floor_residual},
              {"retained_ratio_sup", rep.retained_ratio_sup},
              {"dyadic_certificate", to_json(rep.dyadic_certificate)},
              {"gamma_certificate", to_json(rep.gamma_certificate)}};
}

Json run_dominate(const ExperimentConfig& cfg, OutputDir& out) {
  const Json sec = section(cfg, "dominate");
  Reader r(sec, "dominate");
  const int trials = static_cast<int>(r.integer("trials", 100));
  const int bumps = static_cast<int>(r.integer("bumps", 3));
  const bool indicator = r.boolean("include_indicator", true);
  const bool stability = r.boolean("stability", false);
  r.finish();
  if (trials < 0 || bumps < 1) throw ConfigError("config: 'dominate.trials' must be >= 0 and 'bumps' >= 1");

  Json pairs = Json::array();
  std::string csv = "inv_r,inv_s_dual,trial,pairing,lambda,ratio,cubes,C,certificate\n";
  double overall = 0.0;
  bool all_pass = true;
  for (const auto& pair : cfg.pairs) {
    auto study = domination_study(cfg.curve, cfg.domain, cfg.counts, pair, cfg.window, cfg.rule, cfg.sparse, trials,
                                  cfg.seed, bumps);
    Json trial_list = Json::array();
    auto emit = [&](const std::string& label, const DominationReport& rep) {
      const bool pass = rep.dyadic_certificate.pass && rep.gamma_certificate.pass;
      csv += csv_number(1.0 / pair.r) + "," + csv_number(1.0 - 1.0 / pair.s) + "," + label + "," +
             csv_number(rep.pairing) + "," + csv_number(rep.lambda) + "," + csv_number(rep.ratio) + "," +
             std::to_string(rep.cubes) + "," + csv_number(rep.C) + "," + (pass ? "pass" : "fail") + "\n";
      Json t = domination_trial_json(rep);
      t["trial"] = label;
      trial_list.push_back(std::move(t));
    };
    for (const auto& t : study.trials) emit(std::to_string(t.trial), t.report);
    if (indicator) {
      const GridFunction chi(cfg.domain, cfg.counts, 1.0);
      const auto rep = domination_report(chi, chi, pair.r, pair.s, cfg.window, cfg.curve, cfg.rule, cfg.sparse);
      study.ratio_sup = std::max(study.ratio_sup, rep.ratio);
      study.certificates_pass = study.certificates_pass && rep.dyadic_certificate.pass && rep.gamma_certificate.pass;
      emit("indicator", rep);
    }
    Json entry = pair_json(pair);
    entry["ratio"] = study.ratio_sup;
    entry["certificate"] = study.certificates_pass ? "pass" : "fail";
    if (stability && trials > 0) {
      TruncationWindow wide{cfg.window.k_min - 2, cfg.window.k_max + 2};
      QuadratureRule fine{2 * cfg.rule.nodes_per_half};
      const auto extended = domination_study(cfg.curve, cfg.domain, cfg.counts, pair, wide, cfg.rule, cfg.sparse,
                                             trials, cfg.seed, bumps);
      const auto refined = domination_study(cfg.curve, cfg.domain, Eigen::VectorXi(2 * cfg.counts), pair, cfg.window,
                                            fine, cfg.sparse, trials, cfg.seed, bumps);
      double base = 0.0;
      for (const auto& t : study.trials) base = std::max(base, t.report.ratio);
      entry["stability"] = {{"ratio_sup_random", base},
                            {"ratio_sup_window_extended", extended.ratio_sup},
                            {"ratio_sup_refined", refined.ratio_sup},
                            {"relative_change_window", std::abs(extended.ratio_sup / base - 1.0)},
                            {"relative_change_refined", std::abs(refined.ratio_sup / base - 1.0)}};
    }
    entry["trials"] = std::move(trial_list);
    overall = std::max(overall, study.ratio_sup);
    all_pass = all_pass && study.certificates_pass;
    pairs.push_back(std::move(entry));
  }
  out.write("dominate.csv", csv);
  if (trials > 0) {
    // Trial 0 of the first pair as binary dumps for plotting.
    auto rf = seeded_rng(cfg.seed, 0, 0);
    auto rg = seeded_rng(cfg.seed, 1, 0);
    const std::pair<const char*, GridFunction> dumps[] = {
        {"dominate_f0", random_bump_function(cfg.curve, cfg.domain, cfg.counts, rf, bumps)},
        {"dominate_g0", random_bump_function(cfg.curve, cfg.domain, cfg.counts, rg, bumps)}};
    for (const auto& [stem, fn] : dumps) {
      save_grid_function(fn, out.dir() / stem);
      out.add_existing(std::string(stem) + ".bin");
      out.add_existing(std::string(stem) + ".json");
    }
  }
  return Json{{"ratio", overall}, {"certificate", all_pass ? "pass" : "fail"}, {"pairs", pairs}};
}

Json run_sharpness(const ExperimentConfig& cfg, OutputDir& out, bool refine) {
  const Json sec = section(cfg, "sharpness");
  Reader r(sec, "sharpness");
  const auto log2_eps = r.integers("log2_eps", {-2, -3, -4, -5, -6});
  const auto control = r.numbers("control", {});
  SharpnessOptions opt;
  opt.cells_per_eps = static_cast<int>(r.integer("cells_per_eps", 4));
  opt.oracle_cells = static_cast<int>(r.integer("oracle_cells", 8));
  opt.nodes_per_inverse_eps = r.number("nodes_per_inverse_eps", 24.0);
  r.finish();
  opt.sparse = cfg.sparse;
  if (refine) {
    opt.cells_per_eps *= 2;
    opt.nodes_per_inverse_eps *= 2.0;
  }
  const int n = static_cast<int>(cfg.curve.dim());
  const ExponentPair& pair = cfg.pairs.front();
  if (pair.admissible) {
    std::ostringstream os;
    os << "config: 'exponent_pairs[0]' = (" << 1.0 / pair.r << ", " << 1.0 - 1.0 / pair.s
       << ") lies inside the admissible region; the sharpness scan needs a pair outside it";
    throw ConfigError(os.str());
  }
  if (!control.empty() && control.size() != 2) throw ConfigError("config: 'sharpness.control' must be [1/r, 1/s']");
  std::vector<double> eps;
  for (int j : log2_eps) {
    if (j >= 0) throw ConfigError("config: 'sharpness.log2_eps' entries must be negative");
    eps.push_back(std::ldexp(1.0, j));
  }

  auto scan_json = [&](const SharpnessReport& rep, const std::string& csv_name) {
    std::string csv = "eps,pairing,lambda,ratio,oracle_coarse,oracle_fine\n";
    Json rows = Json::array();
    for (const auto& row : rep.rows) {
      csv += csv_number(row.eps) + "," + csv_number(row.pairing) + "," + csv_number(row.lambda) + "," +
             csv_number(row.ratio) + "," + csv_number(row.oracle_coarse) + "," + csv_number(row.oracle_fine) + "\n";
      rows.push_back({{"eps", row.eps}, {"pairing", row.pairing}, {"lambda", row.lambda}, {"ratio", row.ratio},
                      {"oracle_coarse", row.oracle_coarse}, {"oracle_fine", row.oracle_fine},
                      {"g_cells", row.g_cells}, {"cubes", row.cubes}});
    }
    out.write(csv_name, csv);
    return Json{{"inv_r", 1.0 / rep.r},
                {"inv_s_dual", 1.0 - 1.0 / rep.s},
                {"inside_region", rep.inside_region},
                {"sigma_hat", rep.sigma},
                {"oracle_sigma", rep.oracle_sigma},
                {"predicted_sigma", rep.predicted_sigma},
                {"pairing_fit", to_json(rep.pairing_fit)},
                {"oracle_fit", to_json(rep.oracle_fit)},
                {"pairing_increasing", rep.pairing_increasing},
                {"ratio_increasing", rep.ratio_increasing},
                {"lambda_spread", rep.lambda_spread},
                {"ratio_spread", rep.ratio_spread},
                {"rows", rows}};
  };
  const auto rep = sharpness_scan(cfg.curve, pair.r, pair.s, eps, opt);
  Json report{{"scan", scan_json(rep, "sharpness.csv")}};
  if (!control.empty()) {
    const ExponentPair c = make_pair_from_inverses(control[0], control[1], n, "sharpness.control");
    SharpnessOptions copt = opt;
    copt.control_run = true;
    report["control"] = scan_json(sharpness_scan(cfg.curve, c.r, c.s, eps, copt), "sharpness_control.csv");
  }
  return report;
}

Json run_weights(const ExperimentConfig& cfg, OutputDir& out, bool refine) {
  const Json sec = section(cfg, "weights");
  Reader r(sec, "weights");
  const double p = r.number("p", 2.0);
  const auto powers = r.numbers("powers", {0.25, 0.5, 1.0});
  const int j_min = static_cast<int>(r.integer("j_min", -4));
  const int j_max = static_cast<int>(r.integer("j_max", 0));
  const double w_min = r.number("w_min", 1e-6);
  const int functions = static_cast<int>(r.integer("test_functions", 20));
  r.finish();
  if (functions < 1) throw ConfigError("config: 'weights.test_functions' must be positive");
  const ExponentPair& pair = cfg.pairs.front();
  const double sd = dual_exponent(pair.s);
  if (!(pair.r < p && p < sd)) throw ConfigError("config: 'weights.p' must satisfy r < p < s' for exponent_pairs[0]");
  Eigen::VectorXi counts = cfg.counts;
  QuadratureRule rule = cfg.rule;
  if (refine) {
    counts *= 2;
    rule.nodes_per_half *= 2;
  }
  QuasiBallFamily balls;
  try {
    balls = QuasiBallFamily::build(cfg.curve, cfg.domain, j_min, j_max);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: 'weights': ") + e.what());
  }

  std::vector<GridFunction> fs;
  for (int i = 0; i < functions; ++i) {
    auto rng = seeded_rng(cfg.seed, 3, static_cast<unsigned long long>(i));
    fs.push_back(random_bump_function(cfg.curve, cfg.domain, counts, rng));
  }
  const auto family = WeightedTestFamily::make(std::move(fs), cfg.window, cfg.curve, rule);
  const GridFunction like(cfg.domain, counts, 1.0);
  const double rho_min = std::pow(like.mesh().maxCoeff(), 1.0 / cfg.curve.alpha()[0]);

  std::vector<std::pair<std::string, Weight>> weights{{"constant", Weight(like, w_min)}};
  for (double a : powers)
    weights.emplace_back("power " + csv_number(a),
                         Weight(power_weight(cfg.curve, like, cfg.domain.center(), a, rho_min).values(), w_min));

  Json list = Json::array();
  std::string csv = "weight,ap,rh,alpha,weight_factor,max_ratio\n";
  double cmin = std::numeric_limits<double>::infinity(), cmax = 0.0;
  for (const auto& [name, w] : weights) {
    const auto rep = weighted_bound_check(family, w, p, pair.r, pair.s, balls);
    const Weight doubled(w.values().with_values(2.0 * w.values().values()), 2.0 * w.floor());
    const auto rep2 = weighted_bound_check(family, doubled, p, pair.r, pair.s, balls);
    double drift = 0.0;
    for (std::size_t i = 0; i < rep.ratios.size(); ++i)
      drift = std::max(drift, std::abs(rep2.ratios[i] / rep.ratios[i] - 1.0));
    cmin = std::min(cmin, rep.max_ratio);
    cmax = std::max(cmax, rep.max_ratio);
    list.push_back({{"weight", name},
                    {"floored_cells", w.floored_cells()},
                    {"ap_index", rep.ap_index},
                    {"ap", rep.ap},
                    {"rh_index", rep.rh_index},
                    {"rh", rep.rh},
                    {"alpha", rep.alpha},
                    {"weight_factor", rep.weight_factor},
                    {"max_ratio", rep.max_ratio},
                    {"scale_drift", drift}});
    csv += "\"" + name + "\"," + csv_number(rep.ap) + "," + csv_number(rep.rh) + "," + csv_number(rep.alpha) + "," +
           csv_number(rep.weight_factor) + "," + csv_number(rep.max_ratio) + "\n";
  }
  out.write("weights.csv", csv);
  return Json{{"p", p},
              {"pair", pair_json(pair)},
              {"balls", balls.balls.size()},
              {"generations", {j_min, j_max}},
              {"w_min", w_min},
              {"weights", list},
              {"empirical_constant_spread", cmax / cmin}};
}

Json run_region(const ExperimentConfig& cfg, OutputDir& out) {
  const Json sec = section(cfg, "region");
  Reader r(sec, "region");
  const int n = static_cast<int>(r.integer("n", cfg.curve.dim()));
  std::vector<std::vector<double>> default_points;
  for (const auto& p : cfg.pairs) default_points.push_back({1.0 / p.r, 1.0 - 1.0 / p.s});
  const auto points = r.number_rows("points", default_points);
  r.finish();
  if (n < 2 || n > 64) throw ConfigError("config: 'region.n' must lie in [2, 64]");
  auto region_json = [](const SparseRegion& reg) {
    Json listed = Json::array(), hull = Json::array();
    for (const auto& v : reg.vertices())
      listed.push_back({{"x", rational_string(v.x)}, {"y", rational_string(v.y)}, {"xy", {v.x.value(), v.y.value()}}});
    for (const auto& v : reg.hull()) hull.push_back({v.x(), v.y()});
    return Json{{"listed_vertices", listed}, {"vertices", hull}};
  };
  const SparseRegion omega = omega_vertices(n);
  Json table = Json::array();
  std::string csv = "inv_r,inv_s_dual,inside\n";
  for (const auto& pt : points) {
    if (pt.size() != 2) throw ConfigError("config: 'region.points' entries must be [1/r, 1/s']");
    const bool inside = omega.contains_interior(pt[0], pt[1]);
    table.push_back({{"inv_r", pt[0]}, {"inv_s_dual", pt[1]}, {"inside", inside}});
    csv += csv_number(pt[0]) + "," + csv_number(pt[1]) + "," + (inside ? "true" : "false") + "\n";
  }
  out.write("region.csv", csv);
  Json omega_j = region_json(omega);
  omega_j["coordinates"] = "(1/r, 1/s')";
  Json dual = region_json(omega_prime_vertices(n));
  dual["coordinates"] = "(1/r, 1/s)";
  return Json{{"n", n}, {"omega", omega_j}, {"omega_prime", dual}, {"membership", table}};
}

}  // namespace

Json run_subcommand(const std::string& subcommand, ExperimentConfig config, const RunOptions& options) {
  const auto& names = subcommands();
  if (std::find(names.begin(), names.end(), subcommand) == names.end())
    throw ConfigError("unknown subcommand '" + subcommand + "'");
  if (options.seed) config.seed = *options.seed;
  if (options.workers) set_worker_count(options.workers);
  if (options.refine) {
    config.rule.nodes_per_half *= 2;
    config.counts *= 2;
  }
  OutputDir out(options.out.empty() ? std::filesystem::path(config.output) : options.out);

  Json report;
  if (subcommand == "grid-props") report = run_grid_props(config, out);
  else if (subcommand == "support-check") report = run_support_check(config, out, options.refine);
  else if (subcommand == "decay") report = run_decay(config, out);
  else if (subcommand == "continuity") report = run_continuity(config, out, options.refine);
  else if (subcommand == "dominate") report = run_dominate(config, out);
  else if (subcommand == "sharpness") report = run_sharpness(config, out, options.refine);
  else if (subcommand == "weights") report = run_weights(config, out, options.refine);
  else report = run_region(config, out);

  Json full{{"subcommand", subcommand},
            {"seed", config.seed},
            {"refine", options.refine},
            {"curve", config.canonical["curve"]},
            {"report", report}};
  out.write(std::string(subcommand == "grid-props" ? "grid_props" : subcommand) + ".json", full.dump(2) + "\n");

  Json canonical = config.canonical;
  canonical["seed"] = config.seed;
  Json manifest{{"tool", "curvesparse"},
                {"version", kVersion},
                {"subcommand", subcommand},
                {"config_sha256", sha256_hex(canonical.dump())},
                {"config", canonical},
                {"seed", config.seed},
                {"refine", options.refine},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"compiler", __VERSION__},
                {"files", out.manifest_files()}};
  std::ofstream mf(out.dir() / "manifest.json");
  mf << manifest.dump(2) << "\n";
  return full;
}

}  // namespace curvesparse
