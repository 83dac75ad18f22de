#include "curvesparse/grid_function.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace curvesparse {

namespace {

template <typename Fn>
void visit_overlaps(const GridFunction& f, const std::vector<AxisOverlap>& ov, Fn&& fn) {
  const auto n = f.dim();
  for (const auto& a : ov)
    if (a.fraction.empty()) return;
  if (n == 2) {
    const auto& ax = ov[0];
    const auto& ay = ov[1];
    const Eigen::Index stride = f.strides()[1];
    for (std::size_t j = 0; j < ay.fraction.size(); ++j) {
      const Eigen::Index row = (ay.first + static_cast<Eigen::Index>(j)) * stride + ax.first;
      const double wy = ay.fraction[j];
      for (std::size_t i = 0; i < ax.fraction.size(); ++i) fn(row + static_cast<Eigen::Index>(i), wy * ax.fraction[i]);
    }
    return;
  }
  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    Eigen::Index flat = 0;
    double w = 1.0;
    for (Eigen::Index d = 0; d < n; ++d) {
      const auto& a = ov[static_cast<std::size_t>(d)];
      flat += (a.first + static_cast<Eigen::Index>(idx[static_cast<std::size_t>(d)])) * f.strides()[d];
      w *= a.fraction[idx[static_cast<std::size_t>(d)]];
    }
    fn(flat, w);
    Eigen::Index d = 0;
    for (; d < n; ++d) {
      auto& i = idx[static_cast<std::size_t>(d)];
      if (++i < ov[static_cast<std::size_t>(d)].fraction.size()) break;
      i = 0;
    }
    if (d == n) return;
  }
}

}  // namespace

GridFunction::GridFunction(Box domain, Eigen::VectorXi counts, double fill)
    : domain_(std::move(domain)), counts_(std::move(counts)) {
  init_geometry();
  values_ = Eigen::ArrayXd::Constant(counts_.prod(), fill);
}

GridFunction::GridFunction(Box domain, Eigen::VectorXi counts, Eigen::ArrayXd values)
    : domain_(std::move(domain)), counts_(std::move(counts)), values_(std::move(values)) {
  init_geometry();
  if (values_.size() != counts_.prod()) throw std::invalid_argument("GridFunction: sample count mismatch");
  if (!values_.allFinite()) throw std::invalid_argument("GridFunction: samples must be finite");
}

void GridFunction::init_geometry() {
  if (counts_.size() != domain_.dim() || domain_.dim() == 0)
    throw std::invalid_argument("GridFunction: counts must match the domain dimension");
  if ((counts_.array() < 1).any()) throw std::invalid_argument("GridFunction: counts must be positive");
  if (domain_.empty()) throw std::invalid_argument("GridFunction: empty domain");
  mesh_ = domain_.sides().cwiseQuotient(counts_.cast<double>());
  if (!((mesh_.array() > 0.0).all())) throw std::invalid_argument("GridFunction: mesh widths must be positive");
  strides_.resize(counts_.size());
  strides_[0] = 1;
  for (Eigen::Index i = 1; i < counts_.size(); ++i) strides_[i] = strides_[i - 1] * counts_[i - 1];
  cell_volume_ = mesh_.prod();
}

GridFunction GridFunction::sample(Box domain, Eigen::VectorXi counts, const std::function<double(const Vector&)>& fn) {
  GridFunction f(std::move(domain), std::move(counts), 0.0);
  for (Eigen::Index c = 0; c < f.size(); ++c) f.values_[c] = fn(f.cell_center(c));
  if (!f.values_.allFinite()) throw std::invalid_argument("GridFunction::sample: non-finite sample");
  return f;
}

Eigen::VectorXi GridFunction::multi_index(Eigen::Index flat) const {
  Eigen::VectorXi idx(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) {
    idx[i] = static_cast<int>(flat % counts_[i]);
    flat /= counts_[i];
  }
  return idx;
}

Vector GridFunction::cell_center(Eigen::Index flat) const {
  const Eigen::VectorXi idx = multi_index(flat);
  return domain_.lo + mesh_.cwiseProduct(idx.cast<double>().array().matrix() + Vector::Constant(dim(), 0.5));
}

Box GridFunction::cell_box(Eigen::Index flat) const {
  const Eigen::VectorXi idx = multi_index(flat);
  const Vector lo = domain_.lo + mesh_.cwiseProduct(idx.cast<double>());
  return Box(lo, lo + mesh_);
}

bool GridFunction::same_geometry(const GridFunction& other) const {
  return counts_ == other.counts_ && domain_.lo == other.domain_.lo && domain_.hi == other.domain_.hi;
}

GridFunction GridFunction::with_values(Eigen::ArrayXd values) const {
  return GridFunction(domain_, counts_, std::move(values));
}

double GridFunction::interpolate_index(const double* u) const {
  const auto n = dim();
  if (n == 2) {
    const double fx = std::floor(u[0]);
    const double fy = std::floor(u[1]);
    const double ax = u[0] - fx;
    const double ay = u[1] - fy;
    const auto i0 = static_cast<Eigen::Index>(fx);
    const auto j0 = static_cast<Eigen::Index>(fy);
    const Eigen::Index nx = counts_[0];
    const Eigen::Index ny = counts_[1];
    if (i0 < -1 || i0 >= nx || j0 < -1 || j0 >= ny) return 0.0;
    const double* v = values_.data();
    double acc = 0.0;
    const bool xi0 = i0 >= 0, xi1 = i0 + 1 < nx, yj0 = j0 >= 0, yj1 = j0 + 1 < ny;
    if (yj0) {
      const double* row = v + j0 * nx;
      if (xi0) acc += (1.0 - ax) * (1.0 - ay) * row[i0];
      if (xi1) acc += ax * (1.0 - ay) * row[i0 + 1];
    }
    if (yj1) {
      const double* row = v + (j0 + 1) * nx;
      if (xi0) acc += (1.0 - ax) * ay * row[i0];
      if (xi1) acc += ax * ay * row[i0 + 1];
    }
    return acc;
  }
  double acc = 0.0;
  const int corners = 1 << n;
  for (int corner = 0; corner < corners; ++corner) {
    double w = 1.0;
    Eigen::Index flat = 0;
    bool inside = true;
    for (Eigen::Index d = 0; d < n && inside; ++d) {
      const double base = std::floor(u[d]);
      const double frac = u[d] - base;
      const auto i = static_cast<Eigen::Index>(base) + ((corner >> d) & 1);
      if (i < 0 || i >= counts_[d]) {
        inside = false;
      } else {
        w *= ((corner >> d) & 1) ? frac : 1.0 - frac;
        flat += i * strides_[d];
      }
    }
    if (inside && w != 0.0) acc += w * values_[flat];
  }
  return acc;
}

double GridFunction::interpolate(const Vector& x) const {
  double u[8];
  if (dim() > 8) throw std::invalid_argument("GridFunction::interpolate: dimension above 8");
  for (Eigen::Index d = 0; d < dim(); ++d) u[d] = (x[d] - domain_.lo[d]) / mesh_[d] - 0.5;
  return interpolate_index(u);
}

Box GridFunction::support_box() const {
  Eigen::VectorXi lo = counts_, hi = Eigen::VectorXi::Constant(dim(), -1);
  for (Eigen::Index c = 0; c < size(); ++c) {
    if (values_[c] == 0.0) continue;
    const Eigen::VectorXi idx = multi_index(c);
    lo = lo.cwiseMin(idx);
    hi = hi.cwiseMax(idx);
  }
  if ((hi.array() < 0).any()) return Box(domain_.lo, domain_.lo);
  return Box(domain_.lo + mesh_.cwiseProduct(lo.cast<double>()),
             domain_.lo + mesh_.cwiseProduct((hi.array() + 1).cast<double>().matrix()));
}

std::vector<AxisOverlap> cell_overlaps(const GridFunction& f, const Box& region) {
  std::vector<AxisOverlap> out(static_cast<std::size_t>(f.dim()));
  for (Eigen::Index d = 0; d < f.dim(); ++d) {
    const double h = f.mesh()[d];
    const double lo = std::max(region.lo[d], f.domain().lo[d]);
    const double hi = std::min(region.hi[d], f.domain().hi[d]);
    if (!(hi > lo)) continue;
    auto& a = out[static_cast<std::size_t>(d)];
    const Eigen::Index first = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor((lo - f.domain().lo[d]) / h)));
    const Eigen::Index last = std::min<Eigen::Index>(f.counts()[d] - 1,
                                                     static_cast<Eigen::Index>(std::ceil((hi - f.domain().lo[d]) / h)) - 1);
    a.first = first;
    for (Eigen::Index i = first; i <= last; ++i) {
      const double c0 = f.domain().lo[d] + h * static_cast<double>(i);
      const double overlap = std::min(hi, c0 + h) - std::max(lo, c0);
      a.fraction.push_back(overlap > 0.0 ? std::min(1.0, overlap / h) : 0.0);
    }
    if (a.fraction.empty()) a.fraction.clear();
  }
  return out;
}

void for_each_overlap(const GridFunction& f, const Box& region, const std::function<void(Eigen::Index, double)>& fn) {
  visit_overlaps(f, cell_overlaps(f, region), [&](Eigen::Index flat, double w) {
    if (w > 0.0) fn(flat, w);
  });
}

double lp_norm(const GridFunction& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be at least 1");
  if (std::isinf(p)) return f.values().abs().maxCoeff();
  if (p == 1.0) return f.values().abs().sum() * f.cell_volume();
  if (p == 2.0) return std::sqrt(f.values().square().sum() * f.cell_volume());
  return std::pow(f.values().abs().pow(p).sum() * f.cell_volume(), 1.0 / p);
}

CubeAverage average_flagged(const GridFunction& f, const Box& Q, double p) {
  if (!(p >= 1.0) || std::isinf(p)) throw std::invalid_argument("average: p must be finite and at least 1");
  if (Q.empty()) throw std::invalid_argument("average: empty cube");
  const auto ov = cell_overlaps(f, Q);
  for (const auto& a : ov)
    if (a.fraction.empty()) return {0.0, true};
  double acc = 0.0;
  const double* v = f.values().data();
  if (p == 1.0) {
    visit_overlaps(f, ov, [&](Eigen::Index c, double w) { acc += w * std::abs(v[c]); });
  } else if (p == 2.0) {
    visit_overlaps(f, ov, [&](Eigen::Index c, double w) { acc += w * v[c] * v[c]; });
  } else {
    visit_overlaps(f, ov, [&](Eigen::Index c, double w) {
      if (v[c] != 0.0) acc += w * std::pow(std::abs(v[c]), p);
    });
  }
  const double mean = acc * f.cell_volume() / Q.volume();
  return {p == 1.0 ? mean : std::pow(mean, 1.0 / p), false};
}

double average(const GridFunction& f, const Box& Q, double p) { return average_flagged(f, Q, p).value; }

GridFunction translate(const GridFunction& f, const Vector& y) {
  if (y.size() != f.dim()) throw std::invalid_argument("translate: dimension mismatch");
  Vector shift = y.cwiseQuotient(f.mesh());
  for (Eigen::Index d = 0; d < shift.size(); ++d) {
    const double r = std::round(shift[d]);
    if (std::abs(shift[d] - r) < 1e-9) shift[d] = r;
  }
  GridFunction out = f.zeros_like();
  double u[8];
  for (Eigen::Index c = 0; c < f.size(); ++c) {
    const Eigen::VectorXi idx = f.multi_index(c);
    for (Eigen::Index d = 0; d < f.dim(); ++d) u[d] = static_cast<double>(idx[d]) - shift[d];
    out[c] = f.interpolate_index(u);
  }
  return out;
}

GridFunction restrict_to(const GridFunction& f, const Box& E) {
  GridFunction out = f.zeros_like();
  const double* v = f.values().data();
  visit_overlaps(f, cell_overlaps(f, E), [&](Eigen::Index c, double w) { out[c] = w == 1.0 ? v[c] : w * v[c]; });
  return out;
}

double pairing(const GridFunction& f, const GridFunction& g) {
  if (!f.same_geometry(g)) throw std::invalid_argument("pairing: grids differ");
  return (f.values() * g.values()).sum() * f.cell_volume();
}

void save_grid_function(const GridFunction& f, const std::filesystem::path& stem) {
  auto bin = stem;
  bin += ".bin";
  auto sidecar = stem;
  sidecar += ".json";
  {
    std::ofstream os(bin, std::ios::binary);
    if (!os) throw std::runtime_error("save_grid_function: cannot open " + bin.string());
    os.write(reinterpret_cast<const char*>(f.values().data()),
             static_cast<std::streamsize>(f.size() * static_cast<Eigen::Index>(sizeof(double))));
  }
  nlohmann::json j;
  j["dim"] = f.dim();
  j["lo"] = std::vector<double>(f.domain().lo.data(), f.domain().lo.data() + f.dim());
  j["hi"] = std::vector<double>(f.domain().hi.data(), f.domain().hi.data() + f.dim());
  j["counts"] = std::vector<int>(f.counts().data(), f.counts().data() + f.dim());
  j["mesh"] = std::vector<double>(f.mesh().data(), f.mesh().data() + f.dim());
  j["dtype"] = "float64";
  j["layout"] = "axis0-fastest";
  j["centering"] = "cell";
  j["data"] = bin.filename().string();
  std::ofstream os(sidecar);
  if (!os) throw std::runtime_error("save_grid_function: cannot open " + sidecar.string());
  os << j.dump(2) << '\n';
}

GridFunction load_grid_function(const std::filesystem::path& stem) {
  auto sidecar = stem;
  sidecar += ".json";
  std::ifstream js(sidecar);
  if (!js) throw std::runtime_error("load_grid_function: cannot open " + sidecar.string());
  const auto j = nlohmann::json::parse(js);
  if (j.at("dtype") != "float64" || j.at("layout") != "axis0-fastest")
    throw std::runtime_error("load_grid_function: unsupported dtype or layout");
  const auto lo = j.at("lo").get<std::vector<double>>();
  const auto hi = j.at("hi").get<std::vector<double>>();
  const auto counts = j.at("counts").get<std::vector<int>>();
  Box domain(Eigen::Map<const Vector>(lo.data(), static_cast<Eigen::Index>(lo.size())),
             Eigen::Map<const Vector>(hi.data(), static_cast<Eigen::Index>(hi.size())));
  Eigen::VectorXi c = Eigen::Map<const Eigen::VectorXi>(counts.data(), static_cast<Eigen::Index>(counts.size()));
  Eigen::ArrayXd values(c.prod());
  auto bin = stem.parent_path() / j.at("data").get<std::string>();
  std::ifstream is(bin, std::ios::binary);
  if (!is) throw std::runtime_error("load_grid_function: cannot open " + bin.string());
  is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * 8));
  if (is.gcount() != values.size() * 8) throw std::runtime_error("load_grid_function: truncated data file");
  return GridFunction(std::move(domain), std::move(c), std::move(values));
}

void write_csv_slice(const GridFunction& f, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_csv_slice: cannot open " + path.string());
  os.precision(17);
  if (f.dim() == 1) {
    os << "x,value\n";
    for (Eigen::Index c = 0; c < f.size(); ++c) os << f.cell_center(c)[0] << ',' << f[c] << '\n';
    return;
  }
  os << "x,y,value\n";
  Eigen::Index offset = 0;
  for (Eigen::Index d = 2; d < f.dim(); ++d) offset += (f.counts()[d] / 2) * f.strides()[d];
  for (Eigen::Index j = 0; j < f.counts()[1]; ++j)
    for (Eigen::Index i = 0; i < f.counts()[0]; ++i) {
      const Eigen::Index c = offset + i + j * f.strides()[1];
      const Vector x = f.cell_center(c);
      os << x[0] << ',' << x[1] << ',' << f[c] << '\n';
    }
}

}  // namespace curvesparse
