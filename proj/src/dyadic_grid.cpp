#include "curvesparse/dyadic_grid.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace curvesparse {

namespace {

constexpr long double kFloorGuard = 1e-9L;
constexpr int kMaxScaleWalk = 4096;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

__int128 shifted(std::int64_t value, int bits) {
  if (bits < 0 || bits > 62) throw std::overflow_error("DyadicGrid: scale separation too large for exact lattice test");
  return static_cast<__int128>(value) * (static_cast<__int128>(1) << bits);
}

}  // namespace

DyadicGrid::DyadicGrid(MonomialCurve curve, Eigen::VectorXi shift) : curve_(std::move(curve)), shift_(std::move(shift)) {
  if (shift_.size() != curve_.dim()) throw std::invalid_argument("DyadicGrid: shift dimension mismatch");
  for (Eigen::Index i = 0; i < shift_.size(); ++i)
    if (shift_[i] < 0 || shift_[i] > 2) throw std::invalid_argument("DyadicGrid: shift entries must be 0, 1 or 2");
}

DyadicGrid::DyadicGrid(MonomialCurve curve) : DyadicGrid(curve, Eigen::VectorXi::Zero(curve.dim())) {}

int DyadicGrid::axis_exponent(int k, Eigen::Index axis) const {
  if (k == 0) return 0;
  if (const auto& r = curve_.rational_alpha(axis)) {
    return static_cast<int>(floor_div(static_cast<std::int64_t>(k) * r->num, r->den));
  }
  const long double x = static_cast<long double>(k) * static_cast<long double>(curve_.alpha()[axis]);
  const long double nearest = std::round(x);
  if (std::abs(x - nearest) < kFloorGuard) {
    throw FloorAmbiguity("DyadicGrid: k*alpha_" + std::to_string(axis + 1) + " = " +
                         std::to_string(static_cast<double>(x)) + " is within 1e-9 of an integer at k = " +
                         std::to_string(k));
  }
  return static_cast<int>(std::floor(x));
}

Eigen::VectorXi DyadicGrid::exponents(int k) const {
  Eigen::VectorXi f(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) f[i] = axis_exponent(k, i);
  return f;
}

int DyadicGrid::canonical_scale(int k) const {
  const Eigen::VectorXi f = exponents(k);
  for (int steps = 0; steps < kMaxScaleWalk; ++steps) {
    if (exponents(k + 1) != f) return k;
    ++k;
  }
  throw std::runtime_error("DyadicGrid: canonical scale search did not terminate");
}

int DyadicGrid::next_finer_scale(int k) const {
  const Eigen::VectorXi f = exponents(k);
  for (int kk = k - 1; kk > k - kMaxScaleWalk; --kk)
    if (exponents(kk) != f) return kk;
  throw std::runtime_error("DyadicGrid: finer scale search did not terminate");
}

int DyadicGrid::next_coarser_scale(int k) const {
  const Eigen::VectorXi f = exponents(k);
  for (int kk = k + 1; kk < k + kMaxScaleWalk; ++kk)
    if (exponents(kk) != f) return canonical_scale(kk);
  throw std::runtime_error("DyadicGrid: coarser scale search did not terminate");
}

std::int64_t DyadicGrid::lattice_lo(const DyadicCube& c, Eigen::Index axis, int exponent) const {
  return 3 * c.m[axis] + offset_sign(exponent) * shift_[axis];
}

DyadicCube DyadicGrid::find_cube(const Vector& x, int k) const {
  if (x.size() != dim()) throw std::invalid_argument("find_cube: point dimension mismatch");
  DyadicCube c;
  c.k = canonical_scale(k);
  c.shift = shift_;
  c.m.resize(dim());
  const Eigen::VectorXi f = exponents(c.k);
  for (Eigen::Index i = 0; i < dim(); ++i) {
    const double side = std::ldexp(1.0, f[i]);
    const double offset = offset_sign(f[i]) * shift_[i] / 3.0;
    auto m = static_cast<std::int64_t>(std::floor(x[i] / side - offset));
    // Align with the box corners as cube_box computes them.
    for (int fix = 0; fix < 3; ++fix) {
      const double lo = side * static_cast<double>(3 * m + offset_sign(f[i]) * shift_[i]) / 3.0;
      if (x[i] < lo) {
        --m;
      } else if (x[i] >= lo + side) {
        ++m;
      } else {
        break;
      }
    }
    c.m[i] = m;
  }
  return c;
}

Box DyadicGrid::cube_box(const DyadicCube& c) const {
  const Eigen::VectorXi f = exponents(c.k);
  Vector lo(dim()), hi(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) {
    const double side = std::ldexp(1.0, f[i]);
    lo[i] = side * static_cast<double>(lattice_lo(c, i, f[i])) / 3.0;
    hi[i] = lo[i] + side;
  }
  return Box(lo, hi);
}

Vector DyadicGrid::cube_sides(const DyadicCube& c) const {
  const Eigen::VectorXi f = exponents(c.k);
  Vector s(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) s[i] = std::ldexp(1.0, f[i]);
  return s;
}

double DyadicGrid::volume(const DyadicCube& c) const { return std::ldexp(1.0, exponents(c.k).sum()); }

double DyadicGrid::ell(const DyadicCube& c) const { return std::ldexp(1.0, c.k); }

DyadicCube DyadicGrid::parent(const DyadicCube& c) const {
  return find_cube(cube_box(c).center(), next_coarser_scale(c.k));
}

std::vector<DyadicCube> DyadicGrid::children(const DyadicCube& c) const {
  const int kc = next_finer_scale(c.k);
  const Eigen::VectorXi fo = exponents(c.k);
  const Eigen::VectorXi fc = exponents(kc);
  IndexVector first(dim()), count(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) {
    const int d = fo[i] - fc[i];
    const __int128 lo = shifted(lattice_lo(c, i, fo[i]), d) - offset_sign(fc[i]) * shift_[i];
    if (lo % 3 != 0) throw std::logic_error("DyadicGrid::children: lattice misalignment");
    first[i] = static_cast<std::int64_t>(lo / 3);
    count[i] = std::int64_t{1} << d;
  }
  std::vector<DyadicCube> out;
  const std::int64_t total = count.prod();
  out.reserve(static_cast<std::size_t>(total));
  IndexVector offset = IndexVector::Zero(dim());
  for (std::int64_t idx = 0; idx < total; ++idx) {
    out.push_back(DyadicCube{kc, first + offset, shift_});
    for (Eigen::Index i = 0; i < dim(); ++i) {
      if (++offset[i] < count[i]) break;
      offset[i] = 0;
    }
  }
  return out;
}

std::vector<DyadicCube> DyadicGrid::cubes_intersecting(const Box& region, int k) const {
  const int kc = canonical_scale(k);
  if (region.empty()) return {};
  const DyadicCube lo = find_cube(region.lo, kc);
  // Nudge the upper corner inward so a face on a cube boundary does not pull in
  // an extra layer of cubes.
  Vector upper = region.hi;
  for (Eigen::Index i = 0; i < dim(); ++i) upper[i] = std::nextafter(upper[i], region.lo[i]);
  const DyadicCube hi = find_cube(upper, kc);
  const IndexVector count = (hi.m - lo.m).array() + 1;
  std::vector<DyadicCube> out;
  out.reserve(static_cast<std::size_t>(count.prod()));
  IndexVector offset = IndexVector::Zero(dim());
  for (std::int64_t idx = 0, total = count.prod(); idx < total; ++idx) {
    out.push_back(DyadicCube{kc, lo.m + offset, shift_});
    for (Eigen::Index i = 0; i < dim(); ++i) {
      if (++offset[i] < count[i]) break;
      offset[i] = 0;
    }
  }
  return out;
}

bool DyadicGrid::contains(const DyadicCube& outer, const DyadicCube& inner) const {
  const Eigen::VectorXi fo = exponents(outer.k);
  const Eigen::VectorXi fi = exponents(inner.k);
  for (Eigen::Index i = 0; i < dim(); ++i) {
    const int d = fo[i] - fi[i];
    if (d < 0) return false;
    const __int128 olo = shifted(lattice_lo(outer, i, fo[i]), d);
    const __int128 ohi = shifted(lattice_lo(outer, i, fo[i]) + 3, d);
    const __int128 ilo = lattice_lo(inner, i, fi[i]);
    if (ilo < olo || ilo + 3 > ohi) return false;
  }
  return true;
}

bool DyadicGrid::intersects(const DyadicCube& a, const DyadicCube& b) const {
  const Eigen::VectorXi fa = exponents(a.k);
  const Eigen::VectorXi fb = exponents(b.k);
  for (Eigen::Index i = 0; i < dim(); ++i) {
    const int base = std::min(fa[i], fb[i]);
    const __int128 alo = shifted(lattice_lo(a, i, fa[i]), fa[i] - base);
    const __int128 ahi = shifted(lattice_lo(a, i, fa[i]) + 3, fa[i] - base);
    const __int128 blo = shifted(lattice_lo(b, i, fb[i]), fb[i] - base);
    const __int128 bhi = shifted(lattice_lo(b, i, fb[i]) + 3, fb[i] - base);
    if (!(alo < bhi && blo < ahi)) return false;
  }
  return true;
}

GammaCube DyadicGrid::enclosing_gamma_cube(const DyadicCube& c) const {
  const Eigen::VectorXi f = exponents(c.k);
  double log_ell = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < dim(); ++i) log_ell = std::max(log_ell, f[i] / curve_.alpha()[i]);
  double ell = std::exp2(log_ell);
  // Guard against pow() rounding a side just below the dyadic side.
  const Vector sides = cube_sides(c);
  for (Eigen::Index i = 0; i < dim(); ++i)
    while (std::pow(ell, curve_.alpha()[i]) < sides[i]) ell = std::nextafter(ell, 2.0 * ell);
  return GammaCube::monomial(curve_, cube_box(c).center(), ell);
}

Box third_cube(const DyadicGrid& grid, const DyadicCube& c) { return grid.cube_box(c).scaled(1.0 / 3.0); }

Box scaled_cube(const DyadicGrid& grid, const DyadicCube& c, double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("scaled_cube: factor must be positive");
  return grid.cube_box(c).scaled(factor);
}

std::vector<Eigen::VectorXi> all_shifts(Eigen::Index n) {
  std::vector<Eigen::VectorXi> out;
  Eigen::VectorXi j = Eigen::VectorXi::Zero(n);
  while (true) {
    out.push_back(j);
    Eigen::Index i = 0;
    while (i < n && ++j[i] == 3) j[i++] = 0;
    if (i == n) break;
  }
  return out;
}

}  // namespace curvesparse
