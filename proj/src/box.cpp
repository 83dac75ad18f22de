#include "curvesparse/box.hpp"

#include <sstream>
#include <stdexcept>

namespace curvesparse {

Box::Box(Vector lo_, Vector hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size()) throw std::invalid_argument("Box: corner dimensions differ");
}

Box Box::centered(const Vector& center, const Vector& sides) {
  return Box(center - 0.5 * sides, center + 0.5 * sides);
}

double Box::volume() const {
  if (empty()) return 0.0;
  return (hi - lo).prod();
}

bool Box::empty() const { return ((hi - lo).array() <= 0.0).any(); }

bool Box::contains(const Vector& x) const {
  return (x.array() >= lo.array()).all() && (x.array() < hi.array()).all();
}

bool Box::contains(const Box& other) const {
  return (other.lo.array() >= lo.array()).all() && (other.hi.array() <= hi.array()).all();
}

bool Box::intersects(const Box& other) const {
  return (lo.array() < other.hi.array()).all() && (other.lo.array() < hi.array()).all();
}

Box Box::scaled(double factor) const { return Box::centered(center(), factor * sides()); }

Box Box::expanded(const Vector& margin) const { return Box(lo - margin, hi + margin); }

std::string Box::to_string() const {
  std::ostringstream os;
  for (Eigen::Index i = 0; i < dim(); ++i) {
    if (i) os << " x ";
    os << '[' << lo[i] << ", " << hi[i] << ')';
  }
  return os.str();
}

Box intersection(const Box& a, const Box& b) {
  return Box(a.lo.cwiseMax(b.lo), a.hi.cwiseMin(b.hi));
}

double overlap_volume(const Box& a, const Box& b) { return intersection(a, b).volume(); }

}  // namespace curvesparse
