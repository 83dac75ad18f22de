#include "curvesparse/weights_sharpness.hpp"

#include "curvesparse/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace curvesparse {

Weight::Weight(GridFunction w, double w_min) : w_(std::move(w)), floor_(w_min) {
  if (w_.size() == 0) throw std::invalid_argument("Weight: empty grid");
  if (!(w_min >= 0.0)) throw std::invalid_argument("Weight: floor must be nonnegative");
  for (Eigen::Index c = 0; c < w_.size(); ++c) {
    if (w_[c] < w_min) {
      w_[c] = w_min;
      ++floored_;
    }
  }
  if (!(w_.values().minCoeff() > 0.0))
    throw std::invalid_argument("Weight: samples must be strictly positive (set a positive floor)");
}

Weight power_weight(const MonomialCurve& curve, const GridFunction& like, const Vector& x0, double a,
                    double rho_min) {
  if (!(rho_min > 0.0)) throw std::invalid_argument("power_weight: rho_min must be positive");
  return Weight(GridFunction::sample(like.domain(), like.counts(), [&](const Vector& x) {
    return std::pow(std::max(quasi_metric(curve, x, x0), rho_min), a);
  }));
}

QuasiBallFamily QuasiBallFamily::build(const MonomialCurve& curve, const Box& domain, int j_min, int j_max) {
  if (j_max - j_min < 3) throw std::invalid_argument("QuasiBallFamily: need at least 4 dyadic generations");
  if (curve.dim() != domain.dim()) throw std::invalid_argument("QuasiBallFamily: dimension mismatch");
  const auto n = domain.dim();
  QuasiBallFamily fam;
  fam.j_min = j_min;
  fam.j_max = j_max;
  const Vector extent = domain.sides();
  for (int j = j_min; j <= j_max; ++j) {
    const double ell = std::ldexp(1.0, j);
    Vector sides(n);
    for (Eigen::Index d = 0; d < n; ++d) sides[d] = std::pow(ell, curve.alpha()[d]);
    if ((sides.array() > extent.array() * (1.0 + 1e-12)).any())
      throw std::invalid_argument("QuasiBallFamily: generation " + std::to_string(j) + " does not fit in the domain");
    // Lower corners per axis: half-side steps, plus a last cube flush with the far face.
    std::vector<std::vector<double>> corners(static_cast<std::size_t>(n));
    for (Eigen::Index d = 0; d < n; ++d) {
      auto& c = corners[static_cast<std::size_t>(d)];
      const double last = domain.hi[d] - sides[d];
      for (int m = 0;; ++m) {
        const double lo = domain.lo[d] + 0.5 * sides[d] * m;
        if (lo > last + 1e-12 * extent[d]) break;
        c.push_back(std::min(lo, last));
      }
      if (c.back() < last - 1e-12 * extent[d]) c.push_back(last);
    }
    std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
    while (true) {
      Vector lo(n);
      for (Eigen::Index d = 0; d < n; ++d) lo[d] = corners[static_cast<std::size_t>(d)][idx[static_cast<std::size_t>(d)]];
      fam.balls.emplace_back(lo, lo + sides);
      fam.generation.push_back(j);
      Eigen::Index d = 0;
      for (; d < n; ++d) {
        auto& i = idx[static_cast<std::size_t>(d)];
        if (++i < corners[static_cast<std::size_t>(d)].size()) break;
        i = 0;
      }
      if (d == n) break;
    }
  }
  return fam;
}

namespace {

/// Overlap-weighted mean over a ball; sum(phi v) / sum(phi), so a constant
/// grid averages to itself exactly.
double ball_mean(const GridFunction& v, const Box& B) {
  double num = 0.0, den = 0.0;
  const double* data = v.values().data();
  for_each_overlap(v, B, [&](Eigen::Index c, double w) {
    num += w * data[c];
    den += w;
  });
  if (!(den > 0.0)) throw std::invalid_argument("ball mean: ball misses the weight grid");
  return num / den;
}

/// w divided by its largest sample: the constants are scale invariant and
/// this makes that exact for power-of-two scalings.
Eigen::ArrayXd normalized(const Weight& w) { return w.values().values() / w.values().values().maxCoeff(); }

double max_over_balls(const QuasiBallFamily& balls, const std::function<double(const Box&)>& fn) {
  if (balls.balls.empty()) throw std::invalid_argument("weight constants: empty ball family");
  std::vector<double> vals(balls.balls.size());
  parallel_for(vals.size(), [&](std::size_t i) { vals[i] = fn(balls.balls[i]); });
  return *std::max_element(vals.begin(), vals.end());
}

}  // namespace

double ap_constant(const Weight& w, double p, const QuasiBallFamily& balls) {
  if (!(p > 1.0)) throw std::invalid_argument("ap_constant: p must exceed 1");
  const double p_dual = dual_exponent(p);
  const GridFunction u = w.values().with_values(normalized(w));
  const GridFunction v = u.with_values(u.values().pow(1.0 - p_dual));
  return max_over_balls(balls, [&](const Box& B) { return ball_mean(u, B) * std::pow(ball_mean(v, B), p - 1.0); });
}

double rh_constant(const Weight& w, double p, const QuasiBallFamily& balls) {
  if (!(p >= 1.0) || std::isinf(p)) throw std::invalid_argument("rh_constant: p must be finite and at least 1");
  const GridFunction u = w.values().with_values(normalized(w));
  const GridFunction up = p == 1.0 ? u : u.with_values(u.values().pow(p));
  return max_over_balls(balls, [&](const Box& B) {
    const double mp = ball_mean(up, B);
    return (p == 1.0 ? mp : std::pow(mp, 1.0 / p)) / ball_mean(u, B);
  });
}

double alpha_exponent(double p, double r, double s) {
  if (!(r >= 1.0) || !(s >= 1.0)) throw std::invalid_argument("alpha_exponent: r and s must be at least 1");
  const double sd = dual_exponent(s);
  if (!(p > r) || !(p < sd)) {
    std::ostringstream os;
    os << "alpha_exponent: need r < p < s', got r = " << r << ", p = " << p << ", s' = " << sd;
    throw std::invalid_argument(os.str());
  }
  const double second = std::isinf(sd) ? 1.0 : (sd - 1.0) / (sd - p);
  return std::max(1.0 / (p - r), second);
}

WeightedTestFamily WeightedTestFamily::make(std::vector<GridFunction> functions, const TruncationWindow& window,
                                            const MonomialCurve& curve, const QuadratureRule& rule) {
  WeightedTestFamily fam;
  fam.functions = std::move(functions);
  for (const auto& f : fam.functions)
    fam.transforms.push_back(truncated_hilbert(f, window, curve, rule, Padding::ZeroExtend));
  return fam;
}

WeightedBoundReport weighted_bound_check(const WeightedTestFamily& family, const Weight& w, double p, double r,
                                         double s, const QuasiBallFamily& balls) {
  WeightedBoundReport rep;
  rep.p = p;
  rep.r = r;
  rep.s = s;
  rep.alpha = alpha_exponent(p, r, s);
  const double sd = dual_exponent(s);
  rep.ap_index = p / r;
  rep.rh_index = std::isinf(sd) ? 1.0 : dual_exponent(sd / p);
  rep.ap = ap_constant(w, rep.ap_index, balls);
  rep.rh = rh_constant(w, rep.rh_index, balls);
  rep.weight_factor = std::pow(rep.ap * rep.rh, rep.alpha);
  rep.weight_floor = w.floor();

  auto weighted_norm = [&](const GridFunction& h) {
    if (!h.same_geometry(w.values())) throw std::invalid_argument("weighted_bound_check: grids differ");
    return std::pow((h.values().abs().pow(p) * w.values().values()).sum() * h.cell_volume(), 1.0 / p);
  };
  for (std::size_t i = 0; i < family.functions.size(); ++i) {
    const double denom = weighted_norm(family.functions[i]);
    if (!(denom > 0.0)) throw std::invalid_argument("weighted_bound_check: test function vanishes");
    rep.norm_ratios.push_back(weighted_norm(family.transforms[i]) / denom);
    rep.ratios.push_back(rep.norm_ratios.back() / rep.weight_factor);
    rep.max_ratio = std::max(rep.max_ratio, rep.ratios.back());
  }
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

/// Bounding box of gamma(t), 1/2 <= t <= 1.
Box positive_arc_box(const MonomialCurve& curve) {
  const Vector a = eval_curve(curve, 0.5), b = eval_curve(curve, 1.0);
  return Box(a.cwiseMin(b), a.cwiseMax(b));
}

/// Box snapped outward to multiples of h.
Box snapped(const Box& b, double h, Eigen::VectorXi& counts) {
  Box out = b;
  counts.resize(b.dim());
  for (Eigen::Index d = 0; d < b.dim(); ++d) {
    const double lo = std::floor(b.lo[d] / h), hi = std::ceil(b.hi[d] / h);
    out.lo[d] = lo * h;
    out.hi[d] = hi * h;
    counts[d] = static_cast<int>(hi - lo);
  }
  return out;
}

/// Length of {t in [1/2, 1] : |x_d - gamma_d(t)| < eps for all d}.
double arc_time_in_box(const MonomialCurve& curve, const Vector& x, double eps) {
  double lo = 0.5, hi = 1.0;
  for (Eigen::Index d = 0; d < x.size() && lo < hi; ++d) {
    const double a = curve.alpha()[d];
    // t^a must lie in [c - eps, c + eps] with c = x_d / eps_plus_d.
    const double c = curve.eps_plus()[d] * x[d];
    const double top = c + eps;
    if (top <= 0.0) return 0.0;
    const double bottom = std::max(c - eps, 0.0);
    lo = std::max(lo, std::pow(bottom, 1.0 / a));
    hi = std::min(hi, std::pow(top, 1.0 / a));
  }
  return std::max(0.0, hi - lo);
}

}  // namespace

BumpPair make_bump_pair(const MonomialCurve& curve, double r, double s, double eps, const SharpnessOptions& options) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("make_bump_pair: eps must lie in (0, 1)");
  if (options.cells_per_eps < 2) throw std::invalid_argument("make_bump_pair: need at least 2 cells per eps");
  const auto n = curve.dim();
  const double h = eps / options.cells_per_eps;
  const Box arc = positive_arc_box(curve);
  const Vector pad = Vector::Constant(n, eps + 2.0 * h);
  Box hull(arc.lo.cwiseMin(Vector::Constant(n, -eps)) - pad, arc.hi.cwiseMax(Vector::Constant(n, eps)) + pad);
  Eigen::VectorXi counts;
  hull = snapped(hull, h, counts);

  BumpPair pair;
  pair.eps = eps;
  const Box R(Vector::Constant(n, -eps), Vector::Constant(n, eps));
  pair.f = GridFunction::sample(hull, counts, [&](const Vector& x) { return R.contains(x) ? 1.0 : 0.0; });
  pair.f.values() /= lp_norm(pair.f, r);

  // Cells within eps (sup norm) of gamma([1/2, 1]).
  std::vector<bool> near(static_cast<std::size_t>(pair.f.size()), false);
  const double dt = 0.5 * h / std::max(1.0, curve.alpha().maxCoeff());
  const int steps = static_cast<int>(std::ceil(0.5 / dt));
  for (int i = 0; i <= steps; ++i) {
    const Vector c = eval_curve(curve, 0.5 + 0.5 * i / steps);
    for_each_overlap(pair.f, Box::centered(c, Vector::Constant(n, 2.0 * eps)), [&](Eigen::Index cell, double) {
      const Vector x = pair.f.cell_center(cell);
      if (((x - c).cwiseAbs().array() <= eps).all()) near[static_cast<std::size_t>(cell)] = true;
    });
  }

  QuadratureRule rule;
  rule.nodes_per_half = std::max(rule.nodes_per_half, static_cast<int>(std::ceil(options.nodes_per_inverse_eps / eps)));
  pair.averaged =
      single_scale_on(pair.f, pair.f, curve, 1.0, rule, Kernel::Hilbert, Padding::ZeroExtend, near);
  double peak = 0.0;
  for (Eigen::Index c = 0; c < pair.averaged.size(); ++c)
    if (near[static_cast<std::size_t>(c)]) peak = std::max(peak, pair.averaged[c]);
  if (!(peak > 0.0)) throw std::runtime_error("make_bump_pair: A_1 f_eps vanishes near the arc");

  pair.g = pair.f.zeros_like();
  for (Eigen::Index c = 0; c < pair.g.size(); ++c) {
    if (near[static_cast<std::size_t>(c)] && pair.averaged[c] > 0.5 * peak) {
      pair.g[c] = 1.0;
      ++pair.g_cells;
    }
  }
  pair.g.values() /= lp_norm(pair.g, s);
  return pair;
}

double box_oracle(const MonomialCurve& curve, double r, double s, double eps, double mesh) {
  if (!(eps > 0.0) || !(mesh > 0.0)) throw std::invalid_argument("box_oracle: eps and mesh must be positive");
  const auto n = curve.dim();
  const Box arc = positive_arc_box(curve);
  Eigen::VectorXi counts;
  const Box region = snapped(arc.expanded(Vector::Constant(n, eps)), mesh, counts);
  const double sd = dual_exponent(s);
  const double cell = std::pow(mesh, static_cast<double>(n));

  // Rows along axis 0 are independent.
  const Eigen::Index rows = counts.prod() / counts[0];
  std::vector<double> partial(static_cast<std::size_t>(rows), 0.0);
  parallel_for(partial.size(), [&](std::size_t row) {
    Vector x(n);
    std::size_t rest = row;
    for (Eigen::Index d = 1; d < n; ++d) {
      x[d] = region.lo[d] + (static_cast<double>(rest % static_cast<std::size_t>(counts[d])) + 0.5) * mesh;
      rest /= static_cast<std::size_t>(counts[d]);
    }
    double acc = 0.0;
    for (int i = 0; i < counts[0]; ++i) {
      x[0] = region.lo[0] + (i + 0.5) * mesh;
      const double v = arc_time_in_box(curve, x, eps);
      if (v > 0.0) acc = std::isinf(sd) ? std::max(acc, v) : acc + std::pow(v, sd);
    }
    partial[row] = acc;
  });
  double norm = 0.0;
  if (std::isinf(sd)) {
    norm = *std::max_element(partial.begin(), partial.end());
  } else {
    for (double v : partial) norm += v;
    norm = std::pow(norm * cell, 1.0 / sd);
  }
  return norm / std::pow(std::pow(2.0 * eps, static_cast<double>(n)), 1.0 / r);
}

SharpnessReport sharpness_scan(const MonomialCurve& curve, double r, double s, const std::vector<double>& eps_list,
                               const SharpnessOptions& options) {
  if (eps_list.size() < 3) throw std::invalid_argument("sharpness_scan: need at least three eps values");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1])) throw std::invalid_argument("sharpness_scan: eps_list must decrease");
  const auto n = curve.dim();
  SharpnessReport rep;
  rep.r = r;
  rep.s = s;
  rep.inside_region = in_omega_interior(omega_vertices(static_cast<int>(n)), r, s);
  if (rep.inside_region && !options.control_run) {
    std::ostringstream os;
    os << "sharpness_scan: (1/r, 1/s') = (" << 1.0 / r << ", " << 1.0 / dual_exponent(s)
       << ") lies inside the admissible region; the scan is only meaningful outside it";
    throw std::invalid_argument(os.str());
  }
  rep.predicted_sigma = static_cast<double>(n) / r - 1.0 - static_cast<double>(n - 1) / dual_exponent(s);

  for (double eps : eps_list) {
    const BumpPair pair = make_bump_pair(curve, r, s, eps, options);
    SharpnessRow row;
    row.eps = eps;
    row.pairing = pairing(pair.averaged, pair.g);
    const auto built = sparse_construct(pair.f, pair.g, r, s, curve, options.sparse);
    const SparseCollection gamma = to_gamma_collection(built.collection);
    row.lambda = sparse_form(gamma, pair.f, pair.g, r, s);
    row.ratio = row.lambda > 0.0 ? row.pairing / row.lambda : std::numeric_limits<double>::infinity();
    row.oracle_coarse = box_oracle(curve, r, s, eps, eps / options.oracle_cells);
    row.oracle_fine = box_oracle(curve, r, s, eps, eps / (2.0 * options.oracle_cells));
    row.g_cells = pair.g_cells;
    row.cubes = built.collection.entries.size();
    rep.rows.push_back(row);
  }

  const std::size_t skip = rep.rows.size() >= 4 ? 2 : 0;
  std::vector<double> e, pv, ov;
  for (std::size_t i = skip; i < rep.rows.size(); ++i) {
    e.push_back(rep.rows[i].eps);
    pv.push_back(rep.rows[i].pairing);
    ov.push_back(rep.rows[i].oracle_fine);
  }
  rep.pairing_fit = fit_power_law(e, pv);
  rep.oracle_fit = fit_power_law(e, ov);
  rep.sigma = -rep.pairing_fit.slope;
  rep.oracle_sigma = -rep.oracle_fit.slope;

  rep.pairing_increasing = rep.ratio_increasing = true;
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
  const double l0 = rep.rows.front().lambda;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& row = rep.rows[i];
    if (i > 0) {
      rep.pairing_increasing = rep.pairing_increasing && row.pairing > rep.rows[i - 1].pairing;
      rep.ratio_increasing = rep.ratio_increasing && row.ratio > rep.rows[i - 1].ratio;
    }
    rep.lambda_spread = std::max(rep.lambda_spread, std::max(row.lambda / l0, l0 / row.lambda));
    rmin = std::min(rmin, row.ratio);
    rmax = std::max(rmax, row.ratio);
  }
  rep.ratio_spread = rmax / rmin;
  return rep;
}

}  // namespace curvesparse
