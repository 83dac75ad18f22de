#include "curvesparse/operators.hpp"

#include "curvesparse/parallel.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace curvesparse {

namespace {

struct CurveNodes {
  std::vector<double> offset;  ///< node-major, gamma(t) / h_f per axis
  std::vector<double> weight;
  Vector lo;  ///< bounding box of gamma over the nodes
  Vector hi;
  std::size_t count = 0;
};

CurveNodes make_nodes(const GridFunction& f, const MonomialCurve& curve, double lambda, const QuadratureRule& rule,
                      Kernel kernel) {
  rule.validate();
  if (!(lambda > 0.0)) throw std::invalid_argument("single_scale: lambda must be positive");
  if (curve.dim() != f.dim()) throw std::invalid_argument("single_scale: curve and grid dimensions differ");
  const auto n = f.dim();
  const int M = rule.nodes_per_half;
  const double dt = 0.5 * lambda / M;
  CurveNodes nodes;
  nodes.lo = Vector::Constant(n, std::numeric_limits<double>::infinity());
  nodes.hi = Vector::Constant(n, -std::numeric_limits<double>::infinity());
  auto push = [&](double t, double w) {
    const Vector g = eval_curve(curve, t);
    for (Eigen::Index d = 0; d < n; ++d) nodes.offset.push_back(g[d] / f.mesh()[d]);
    nodes.weight.push_back(w);
    nodes.lo = nodes.lo.cwiseMin(g);
    nodes.hi = nodes.hi.cwiseMax(g);
    ++nodes.count;
  };
  for (int m = 0; m < M; ++m) {
    const double t = 0.5 * lambda + (m + 0.5) * dt;
    if (kernel == Kernel::Hilbert) {
      push(t, dt / t);
      push(-t, -dt / t);
    } else {
      push(t, dt);
    }
  }
  return nodes;
}

GridFunction evaluate(const GridFunction& f, const GridFunction& output, const CurveNodes& nodes, Padding padding,
                      const std::vector<bool>& mask) {
  const auto n = f.dim();
  if (output.dim() != n) throw std::invalid_argument("single_scale: output grid dimension differs");
  if (!mask.empty() && static_cast<Eigen::Index>(mask.size()) != output.size())
    throw std::invalid_argument("single_scale: mask size differs from the output grid");
  GridFunction out = output.zeros_like();
  const Box support = f.support_box();
  if (support.empty()) return out;
  // Image of supp f under x -> x + gamma(t), widened by the interpolation stencil.
  const Box image(support.lo + nodes.lo - f.mesh(), support.hi + nodes.hi + f.mesh());
  if (padding == Padding::Require && !output.domain().contains(image)) {
    const Vector margin = nodes.lo.cwiseAbs().cwiseMax(nodes.hi.cwiseAbs()) + f.mesh();
    std::ostringstream os;
    os << "single_scale: insufficient padding; the image of supp f is " << image.to_string()
       << " but the output domain is " << output.domain().to_string() << "; required margin around supp f:";
    for (Eigen::Index d = 0; d < n; ++d) os << ' ' << margin[d];
    throw PaddingError(os.str(), margin);
  }
  const auto overlaps = cell_overlaps(output, image);
  for (const auto& a : overlaps)
    if (a.fraction.empty()) return out;

  // Candidate output cells, grouped by rows along axis 0.
  std::vector<Eigen::Index> row_starts;
  const auto row_length = static_cast<Eigen::Index>(overlaps[0].fraction.size());
  {
    std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
    while (true) {
      Eigen::Index flat = overlaps[0].first;
      for (Eigen::Index d = 1; d < n; ++d)
        flat += (overlaps[static_cast<std::size_t>(d)].first + static_cast<Eigen::Index>(idx[static_cast<std::size_t>(d)])) *
                output.strides()[d];
      row_starts.push_back(flat);
      Eigen::Index d = 1;
      for (; d < n; ++d) {
        auto& i = idx[static_cast<std::size_t>(d)];
        if (++i < overlaps[static_cast<std::size_t>(d)].fraction.size()) break;
        i = 0;
      }
      if (d >= n) break;
    }
  }

  const double* offsets = nodes.offset.data();
  const double* weights = nodes.weight.data();
  const std::size_t count = nodes.count;
  double* result = out.values().data();
  parallel_for(row_starts.size(), [&](std::size_t r) {
    double base[8];
    double u[8];
    for (Eigen::Index i = 0; i < row_length; ++i) {
      const Eigen::Index cell = row_starts[r] + i;
      if (!mask.empty() && !mask[static_cast<std::size_t>(cell)]) continue;
      const Vector x = output.cell_center(cell);
      for (Eigen::Index d = 0; d < n; ++d) base[d] = (x[d] - f.domain().lo[d]) / f.mesh()[d] - 0.5;
      double acc = 0.0;
      if (n == 2) {
        for (std::size_t m = 0; m < count; ++m) {
          u[0] = base[0] - offsets[2 * m];
          u[1] = base[1] - offsets[2 * m + 1];
          acc += weights[m] * f.interpolate_index(u);
        }
      } else {
        for (std::size_t m = 0; m < count; ++m) {
          for (Eigen::Index d = 0; d < n; ++d) u[d] = base[d] - offsets[m * static_cast<std::size_t>(n) + static_cast<std::size_t>(d)];
          acc += weights[m] * f.interpolate_index(u);
        }
      }
      result[cell] = acc;
    }
  });
  return out;
}

}  // namespace

Vector curve_margin(const MonomialCurve& curve, double lambda) {
  Vector m(curve.dim());
  for (Eigen::Index d = 0; d < curve.dim(); ++d) m[d] = std::pow(lambda, curve.alpha()[d]);
  return m;
}

GridFunction single_scale(const GridFunction& f, const MonomialCurve& curve, double lambda, const QuadratureRule& rule,
                          Kernel kernel, Padding padding) {
  return evaluate(f, f, make_nodes(f, curve, lambda, rule, kernel), padding, {});
}

GridFunction single_scale_on(const GridFunction& f, const GridFunction& output, const MonomialCurve& curve,
                             double lambda, const QuadratureRule& rule, Kernel kernel, Padding padding,
                             const std::vector<bool>& mask) {
  return evaluate(f, output, make_nodes(f, curve, lambda, rule, kernel), padding, mask);
}

GridFunction truncated_hilbert(const GridFunction& f, const TruncationWindow& window, const MonomialCurve& curve,
                               const QuadratureRule& rule, Padding padding) {
  window.validate();
  GridFunction sum = f.zeros_like();
  for (int k = window.k_min; k <= window.k_max; ++k)
    sum.values() += single_scale(f, curve, std::ldexp(1.0, k), rule, Kernel::Hilbert, padding).values();
  return sum;
}

std::map<int, double> hilbert_pairing_by_scale(const GridFunction& f, const GridFunction& g,
                                               const TruncationWindow& window, const MonomialCurve& curve,
                                               const QuadratureRule& rule) {
  window.validate();
  if (!f.same_geometry(g)) throw std::invalid_argument("hilbert_pairing: f and g must share a grid");
  std::vector<bool> mask(static_cast<std::size_t>(g.size()));
  for (Eigen::Index c = 0; c < g.size(); ++c) mask[static_cast<std::size_t>(c)] = g[c] != 0.0;
  std::map<int, double> out;
  for (int k = window.k_min; k <= window.k_max; ++k) {
    const GridFunction a =
        single_scale_on(f, g, curve, std::ldexp(1.0, k), rule, Kernel::Hilbert, Padding::ZeroExtend, mask);
    out[k] = pairing(a, g);
  }
  return out;
}

double hilbert_pairing(const GridFunction& f, const GridFunction& g, const TruncationWindow& window,
                       const MonomialCurve& curve, const QuadratureRule& rule) {
  double total = 0.0;
  for (const auto& [k, v] : hilbert_pairing_by_scale(f, g, window, curve, rule)) total += v;
  return total;
}

// ---------------------------------------------------------------------------

LocalizedOutput localized_unchecked(const GridFunction& f, const DyadicGrid& grid, const DyadicCube& Q, int N,
                                    const QuadratureRule& rule) {
  if (N < 1) throw std::invalid_argument("localized: N must be at least 1");
  const Box qbox = grid.cube_box(Q);
  const GridFunction piece = restrict_to(f, qbox.scaled(1.0 / 3.0));
  LocalizedOutput out{single_scale(piece, grid.curve(), std::ldexp(1.0, Q.k - N), rule, Kernel::Hilbert,
                                   Padding::ZeroExtend),
                      {}};
  for (Eigen::Index c = 0; c < out.value.size(); ++c) {
    if (out.value[c] == 0.0) continue;
    const Vector x = out.value.cell_center(c);
    if (!qbox.contains(x)) out.violations.push_back({c, x, out.value[c]});
  }
  return out;
}

GridFunction localized(const GridFunction& f, const DyadicGrid& grid, const DyadicCube& Q, int N,
                       const QuadratureRule& rule) {
  auto out = localized_unchecked(f, grid, Q, N, rule);
  if (!out.violations.empty()) {
    const auto& v = out.violations.front();
    std::ostringstream os;
    os << "localized: output escapes Q = " << grid.cube_box(Q).to_string() << " at cell " << v.cell << " (center";
    for (Eigen::Index d = 0; d < v.center.size(); ++d) os << ' ' << v.center[d];
    os << ", value " << v.value << "); N = " << N << " is too small for this mesh";
    throw SupportViolationError(os.str(), v);
  }
  return std::move(out.value);
}

std::vector<std::pair<DyadicGrid, DyadicCube>> localized_cubes(const MonomialCurve& curve, const Box& region, int q) {
  std::vector<std::pair<DyadicGrid, DyadicCube>> out;
  for (const auto& shift : all_shifts(curve.dim())) {
    DyadicGrid grid(curve, shift);
    for (const auto& Q : grid.cubes_intersecting(region, q))
      if (third_cube(grid, Q).intersects(region)) out.emplace_back(grid, Q);
  }
  return out;
}

DecompositionCheck check_localized_decomposition(const GridFunction& f, const MonomialCurve& curve, int q, int N,
                                                 const QuadratureRule& rule) {
  const GridFunction global =
      single_scale(f, curve, std::ldexp(1.0, q - N), rule, Kernel::Hilbert, Padding::ZeroExtend);
  GridFunction sum = f.zeros_like();
  DecompositionCheck check;
  for (const auto& [grid, Q] : localized_cubes(curve, f.domain(), q)) {
    const auto piece = localized_unchecked(f, grid, Q, N, rule);
    sum.values() += piece.value.values();
    check.violating_cells += piece.violations.size();
    ++check.cubes;
  }
  const double denom = lp_norm(global, 1.0);
  const double err = lp_norm(sum.with_values(sum.values() - global.values()), 1.0);
  check.relative_l1_error = denom > 0.0 ? err / denom : err;
  return check;
}

SupportCalibration calibrate_support_constant(const MonomialCurve& curve, const Box& domain,
                                              const Eigen::VectorXi& counts, const std::vector<int>& scales,
                                              int max_N, const QuadratureRule& rule) {
  const GridFunction one(domain, counts, 1.0);
  SupportCalibration cal;
  for (int N = 1; N <= max_N; ++N) {
    int violations = 0;
    for (int q : scales)
      for (const auto& [grid, Q] : localized_cubes(curve, domain, q))
        violations += static_cast<int>(localized_unchecked(one, grid, Q, N, rule).violations.size());
    cal.violations_per_N.push_back(violations);
    if (violations == 0) {
      cal.N = N;
      return cal;
    }
  }
  throw std::runtime_error("calibrate_support_constant: no N up to " + std::to_string(max_N) +
                           " keeps the localized output inside its cube on this mesh");
}

// ---------------------------------------------------------------------------

double BumpProfile::operator()(double t) const {
  if (t <= lo || t >= hi) return 0.0;
  const double u = (t - lo) / (hi - lo);
  const double b = 4.0 * u * (1.0 - u);
  return b * b * b;
}

double BumpProfile::integral() const { return (hi - lo) * 16.0 / 35.0; }

namespace {

template <typename Position>
std::complex<double> fourier_of_arc(const Position& position, const BumpProfile& psi, const Vector& xi) {
  static const GaussLegendre gl = gauss_legendre(20);
  // Absolute floor: far from stationary points the transform sits below the
  // roundoff of the node sum.
  const double floor = 1e-13 * psi.integral();
  auto integrate = [&](int panels) {
    std::complex<double> acc = 0.0;
    const double width = (psi.hi - psi.lo) / panels;
    for (int p = 0; p < panels; ++p) {
      const double mid = psi.lo + (p + 0.5) * width;
      for (Eigen::Index i = 0; i < gl.nodes.size(); ++i) {
        const double t = mid + 0.5 * width * gl.nodes[i];
        const double phase = -xi.dot(position(t));
        acc += (0.5 * width * gl.weights[i] * psi(t)) * std::complex<double>(std::cos(phase), std::sin(phase));
      }
    }
    return acc;
  };
  int panels = 4;
  std::complex<double> prev = integrate(panels);
  while (panels < (1 << 16)) {
    panels *= 2;
    const std::complex<double> cur = integrate(panels);
    if (std::abs(cur - prev) <= std::max(1e-8 * std::abs(cur), floor)) return cur;
    prev = cur;
  }
  throw std::runtime_error("arclength_fourier: no convergence after 65536 panels");
}

}  // namespace

std::complex<double> arclength_fourier(const MonomialCurve& curve, const BumpProfile& psi, const Vector& xi) {
  if (xi.size() != curve.dim()) throw std::invalid_argument("arclength_fourier: frequency dimension mismatch");
  return fourier_of_arc([&](double t) { return eval_curve(curve, t); }, psi, xi);
}

std::complex<double> arclength_fourier(const TorsionCurve& curve, const BumpProfile& psi, const Vector& xi) {
  if (xi.size() != curve.dim()) throw std::invalid_argument("arclength_fourier: frequency dimension mismatch");
  return fourier_of_arc([&](double t) { return curve.position(t); }, psi, xi);
}

Vector degenerate_direction(const MonomialCurve& curve, double t0) {
  if (!(t0 > 0.0)) throw std::invalid_argument("degenerate_direction: t0 must be positive");
  const auto n = curve.dim();
  Matrix d(n - 1, n);
  for (Eigen::Index k = 1; k < n; ++k)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double a = curve.alpha()[j];
      double falling = 1.0;
      for (Eigen::Index m = 0; m < k; ++m) falling *= a - static_cast<double>(m);
      d(k - 1, j) = curve.eps_plus()[j] * falling * std::pow(t0, a - static_cast<double>(k));
    }
  Eigen::JacobiSVD<Matrix> svd(d, Eigen::ComputeFullV);
  Vector xi = svd.matrixV().col(n - 1);
  if (xi[n - 1] < 0.0) xi = -xi;
  return xi.normalized();
}

// ---------------------------------------------------------------------------

ContinuityFamily continuity_test_family(const MonomialCurve& curve, double cells_per_unit, unsigned long long seed,
                                        int random_fields) {
  const auto n = curve.dim();
  const Box core(Vector::Constant(n, -0.5), Vector::Constant(n, 0.5));
  const Vector margin = curve_margin(curve, 1.0) + Vector::Constant(n, 0.25);
  Box domain = core.expanded(margin);
  Eigen::VectorXi counts(n);
  for (Eigen::Index d = 0; d < n; ++d) {
    counts[d] = static_cast<int>(std::ceil(domain.sides()[d] * cells_per_unit));
    domain.hi[d] = domain.lo[d] + counts[d] / cells_per_unit;
  }

  ContinuityFamily family;
  auto bump = [&](const Vector& widths) {
    return GridFunction::sample(domain, counts, [widths](const Vector& x) {
      double v = 1.0;
      for (Eigen::Index d = 0; d < x.size(); ++d) {
        const double u = x[d] / widths[d];
        if (std::abs(u) >= 1.0) return 0.0;
        v *= (1.0 - u * u) * (1.0 - u * u);
      }
      return v;
    });
  };
  auto gamma_sides = [&](double ell) {
    Vector s(n);
    for (Eigen::Index d = 0; d < n; ++d) s[d] = std::pow(ell, curve.alpha()[d]);
    return s;
  };
  family.functions.push_back(bump(Vector::Constant(n, 0.4)));
  family.labels.emplace_back("isotropic bump");
  family.functions.push_back(bump(0.45 * gamma_sides(0.9)));
  family.labels.emplace_back("anisotropic bump");
  for (double ell : {0.8, 0.5}) {
    const Box cube = Box::centered(Vector::Zero(n), gamma_sides(ell));
    family.functions.push_back(restrict_to(GridFunction(domain, counts, 1.0), cube));
    family.labels.push_back("gamma-cube indicator ell=" + std::to_string(ell));
  }
  for (int r = 0; r < random_fields; ++r) {
    std::seed_seq seq{seed, static_cast<unsigned long long>(r), 0xC0FFEEull};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    constexpr int blocks = 8;
    std::vector<double> table(static_cast<std::size_t>(std::pow(blocks, static_cast<double>(n))));
    for (auto& v : table) v = u(rng);
    family.functions.push_back(GridFunction::sample(domain, counts, [&](const Vector& x) {
      std::size_t idx = 0, stride = 1;
      for (Eigen::Index d = 0; d < x.size(); ++d) {
        if (x[d] < -0.5 || x[d] >= 0.5) return 0.0;
        const auto b = static_cast<std::size_t>(std::floor((x[d] + 0.5) * blocks));
        idx += std::min<std::size_t>(b, blocks - 1) * stride;
        stride *= blocks;
      }
      return table[idx];
    }));
    family.labels.push_back("random field " + std::to_string(r));
  }
  return family;
}

ContinuityStudy::ContinuityStudy(const MonomialCurve& curve, ContinuityFamily family, const QuadratureRule& rule)
    : family_(std::move(family)) {
  for (const auto& f : family_.functions) averaged_.push_back(single_scale(f, curve, 1.0, rule));
}

double ContinuityStudy::estimate(const Vector& y, double r, double s_prime) const {
  for (Eigen::Index d = 0; d < y.size(); ++d)
    if (std::abs(y[d]) > 1.0) throw std::invalid_argument("continuity_norm_estimate: need |y_j| <= 1");
  double worst = 0.0;
  for (std::size_t i = 0; i < averaged_.size(); ++i) {
    const GridFunction& a = averaged_[i];
    const GridFunction diff = a.with_values(a.values() - translate(a, y).values());
    const double denom = lp_norm(family_.functions[i], r);
    if (denom > 0.0) worst = std::max(worst, lp_norm(diff, s_prime) / denom);
  }
  return worst;
}

double continuity_norm_estimate(const MonomialCurve& curve, const Vector& y, double r, double s_prime,
                                const ContinuityFamily& family, const QuadratureRule& rule) {
  return ContinuityStudy(curve, family, rule).estimate(y, r, s_prime);
}

}  // namespace curvesparse
