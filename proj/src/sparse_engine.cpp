#include "curvesparse/sparse_engine.hpp"

#include "curvesparse/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace curvesparse {

namespace {

/// <f>_{Q,p} through a precomputed |f|^p grid.
class PowerMean {
 public:
  PowerMean(const GridFunction& f, double p) : p_(p) {
    if (!(p >= 1.0) || std::isinf(p)) throw std::invalid_argument("sparse engine: exponents must be finite and >= 1");
    power_ = f.with_values(p == 1.0 ? Eigen::ArrayXd(f.values().abs()) : Eigen::ArrayXd(f.values().abs().pow(p)));
  }

  double operator()(const Box& Q) const {
    const double m = average(power_, Q, 1.0);
    return p_ == 1.0 ? m : std::pow(m, 1.0 / p_);
  }

 private:
  double p_;
  GridFunction power_;
};

bool subdividable(const DyadicGrid& grid, const DyadicCube& c, const GridFunction& f, const StoppingFloor& floor) {
  if (c.k <= floor.floor_scale) return false;
  const Vector sides = grid.cube_sides(c);
  for (Eigen::Index d = 0; d < sides.size(); ++d)
    if (sides[d] < floor.min_cells_per_axis * f.mesh()[d] * (1.0 - 1e-12)) return false;
  return true;
}

struct Traversal {
  std::vector<DyadicCube> selected;
  double retained_ratio_sup = 0.0;
};

double safe_ratio(double v, double root) { return root > 0.0 ? v / root : 0.0; }

/// Top-down search for the maximal subcubes of Q0 where `stop(v1, v2)` holds.
template <typename Stop>
Traversal traverse(const DyadicGrid& grid, const DyadicCube& Q0, const GridFunction& mesh_ref, const PowerMean& m1,
                   const PowerMean& m2, double root1, double root2, const StoppingFloor& floor, const Stop& stop) {
  Traversal out;
  out.retained_ratio_sup = safe_ratio(root1, root1) + safe_ratio(root2, root2);
  if (!subdividable(grid, Q0, mesh_ref, floor)) return out;
  std::vector<DyadicCube> stack = grid.children(Q0);
  std::reverse(stack.begin(), stack.end());
  while (!stack.empty()) {
    const DyadicCube P = std::move(stack.back());
    stack.pop_back();
    const Box box = grid.cube_box(P);
    const double v1 = m1(box);
    const double v2 = m2(box);
    if (stop(v1, v2)) {
      out.selected.push_back(P);
      continue;
    }
    out.retained_ratio_sup = std::max(out.retained_ratio_sup, safe_ratio(v1, root1) + safe_ratio(v2, root2));
    // Descendants of a cube where both functions vanish cannot stop.
    if ((v1 > 0.0 || v2 > 0.0) && subdividable(grid, P, mesh_ref, floor)) {
      auto kids = grid.children(P);
      for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(std::move(*it));
    }
  }
  return out;
}

Traversal stopping_search(const DyadicGrid& grid, const DyadicCube& Q0, const GridFunction& mesh_ref,
                          const PowerMean& m1, const PowerMean& m2, double C, const StoppingFloor& floor) {
  const Box root = grid.cube_box(Q0);
  const double a1 = m1(root);
  const double a2 = m2(root);
  return traverse(grid, Q0, mesh_ref, m1, m2, a1, a2, floor,
                  [&](double v1, double v2) { return v1 > C * a1 || v2 > C * a2; });
}

bool box_within(const Box& inner, const Box& outer) {
  for (Eigen::Index d = 0; d < inner.dim(); ++d) {
    const double tol = 1e-12 * std::max(1.0, std::abs(outer.hi[d] - outer.lo[d]));
    if (inner.lo[d] < outer.lo[d] - tol || inner.hi[d] > outer.hi[d] + tol) return false;
  }
  return true;
}

}  // namespace

std::vector<DyadicCube> stopping_children(const DyadicGrid& grid, const DyadicCube& Q0, const GridFunction& f1,
                                          const GridFunction& f2, double r, double s, double C,
                                          const StoppingFloor& floor) {
  if (!(C > 1.0)) throw std::invalid_argument("stopping_children: C must exceed 1");
  if (!f1.same_geometry(f2)) throw std::invalid_argument("stopping_children: f1 and f2 must share a grid");
  return stopping_search(grid, Q0, f1, PowerMean(f1, r), PowerMean(f2, s), C, floor).selected;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<DyadicCube> orthant_roots(const DyadicGrid& grid, const Box& hull) {
  const auto n = grid.dim();
  std::vector<DyadicCube> roots;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    Box part = hull;
    for (Eigen::Index d = 0; d < n; ++d) {
      if (mask & (1u << d)) {
        part.hi[d] = std::min(part.hi[d], 0.0);
      } else {
        part.lo[d] = std::max(part.lo[d], 0.0);
      }
    }
    if (part.empty()) continue;
    double extent = 0.0;
    for (Eigen::Index d = 0; d < n; ++d) extent = std::max(extent, std::max(std::abs(part.lo[d]), std::abs(part.hi[d])));
    // Smallest canonical scale whose corner cube covers the piece.
    const double l = std::log2(extent);
    const auto& alpha = grid.curve().alpha();
    int k = static_cast<int>(std::floor(std::min(l / alpha.minCoeff(), l / alpha.maxCoeff()))) - 2;
    for (;; ++k) {
      DyadicCube c;
      c.k = grid.canonical_scale(k);
      c.shift = grid.shift();
      c.m = IndexVector::Zero(n);
      for (Eigen::Index d = 0; d < n; ++d)
        if (mask & (1u << d)) c.m[d] = -1;
      if (box_within(part, grid.cube_box(c))) {
        roots.push_back(c);
        break;
      }
      if (k > 4096) throw std::runtime_error("sparse_construct: support too large for a root cube");
    }
  }
  return roots;
}

}  // namespace

SparseConstruction sparse_construct(const GridFunction& f, const GridFunction& g, double r, double s,
                                    const MonomialCurve& curve, const SparseOptions& options) {
  if (!f.same_geometry(g)) throw std::invalid_argument("sparse_construct: f and g must share a grid");
  if (curve.dim() != f.dim()) throw std::invalid_argument("sparse_construct: curve and grid dimensions differ");
  const DyadicGrid grid(curve);
  const PowerMean m1(f, r), m2(g, s);

  Box hull;
  {
    const Box bf = f.support_box(), bg = g.support_box();
    if (bf.empty()) {
      hull = bg;
    } else if (bg.empty()) {
      hull = bf;
    } else {
      hull = Box(bf.lo.cwiseMin(bg.lo), bf.hi.cwiseMax(bg.hi));
    }
  }
  const std::vector<DyadicCube> roots = hull.empty() ? std::vector<DyadicCube>{} : orthant_roots(grid, hull);

  double C = options.C > 0.0 ? options.C : std::exp2(curve.homogeneous_dimension() + 3.0);
  if (!(C > 1.0)) throw std::invalid_argument("sparse_construct: C must exceed 1");
  StoppingTree tree;
  for (int attempt = 0;; ++attempt) {
    tree = StoppingTree{};
    tree.C = C;
    tree.doublings = attempt;
    bool measure_ok = true;
    for (const auto& root : roots) {
      tree.roots.push_back(static_cast<int>(tree.nodes.size()));
      tree.nodes.push_back(StoppingNode{root, -1, {}, 0, !subdividable(grid, root, f, options.floor), 0.0});
    }
    std::vector<int> frontier = tree.roots;
    while (!frontier.empty() && measure_ok) {
      std::vector<Traversal> found(frontier.size());
      parallel_for(frontier.size(), [&](std::size_t i) {
        found[i] = stopping_search(grid, tree.nodes[static_cast<std::size_t>(frontier[i])].cube, f, m1, m2, C,
                                   options.floor);
      });
      std::vector<int> next;
      for (std::size_t i = 0; i < frontier.size() && measure_ok; ++i) {
        const int id = frontier[i];
        const DyadicCube parent_cube = tree.nodes[static_cast<std::size_t>(id)].cube;
        tree.nodes[static_cast<std::size_t>(id)].retained_ratio_sup = found[i].retained_ratio_sup;
        double covered = 0.0;
        for (const auto& P : found[i].selected) covered += grid.volume(P);
        if (!(covered < 0.5 * grid.volume(parent_cube))) {
          std::ostringstream os;
          os << "stopping children cover " << covered / grid.volume(parent_cube) << " of "
             << grid.cube_box(parent_cube).to_string() << " at C = " << C << "; doubling C";
          tree.log.push_back(os.str());
          measure_ok = false;
          break;
        }
        for (const auto& P : found[i].selected) {
          if (tree.nodes.size() >= options.node_budget) {
            tree.partial = true;
            break;
          }
          const int child = static_cast<int>(tree.nodes.size());
          tree.nodes.push_back(StoppingNode{P, id, {}, tree.nodes[static_cast<std::size_t>(id)].depth + 1,
                                            !subdividable(grid, P, f, options.floor), 0.0});
          tree.nodes[static_cast<std::size_t>(id)].children.push_back(child);
          next.push_back(child);
        }
        if (tree.partial) break;
      }
      if (tree.partial) break;
      frontier = std::move(next);
    }
    if (measure_ok) break;
    if (attempt + 1 > options.max_doublings)
      throw std::runtime_error("sparse_construct: half-measure check still failing after " +
                               std::to_string(options.max_doublings) + " doublings of C");
    C *= 2.0;
  }
  if (tree.partial) tree.log.push_back("node budget exhausted; collection is partial");

  SparseCollection collection{grid, {}, false, tree.partial};
  collection.entries.reserve(tree.nodes.size());
  for (const auto& node : tree.nodes) {
    CollectionEntry e;
    e.cube = grid.cube_box(node.cube);
    e.base = node.cube;
    for (int c : node.children) e.removed.push_back(tree.nodes[static_cast<std::size_t>(c)].cube);
    e.depth = node.depth;
    e.at_floor = node.at_floor;
    collection.entries.push_back(std::move(e));
  }
  return {std::move(collection), std::move(tree)};
}

SparseCollection to_gamma_collection(const SparseCollection& collection) {
  SparseCollection out = collection;
  out.gamma_cubes = true;
  for (auto& e : out.entries) e.cube = collection.grid.enclosing_gamma_cube(e.base).as_box();
  return out;
}

SparsityCertificate verify_sparsity(const SparseCollection& collection, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("verify_sparsity: delta must lie in (0, 1)");
  const DyadicGrid& grid = collection.grid;
  const auto& entries = collection.entries;
  SparsityCertificate cert;
  cert.delta = delta;
  cert.min_ratio = std::numeric_limits<double>::infinity();
  auto fail = [&](std::size_t i, const std::string& why) {
    cert.pass = false;
    cert.worst_entry = i;
    cert.message = "S = " + entries[i].cube.to_string() + ": " + why;
    return cert;
  };

  std::vector<Box> bases;
  bases.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    bases.push_back(grid.cube_box(e.base));
    if (!box_within(bases.back(), e.cube)) return fail(i, "E_S is not contained in S");
    double removed = 0.0;
    for (std::size_t a = 0; a < e.removed.size(); ++a) {
      if (!grid.contains(e.base, e.removed[a]) || e.removed[a] == e.base)
        return fail(i, "a removed cube is not a proper subcube of the base");
      for (std::size_t b = a + 1; b < e.removed.size(); ++b)
        if (grid.intersects(e.removed[a], e.removed[b])) return fail(i, "removed cubes overlap");
      removed += grid.volume(e.removed[a]);
    }
    const double ratio = (grid.volume(e.base) - removed) / e.cube.volume();
    if (ratio < cert.min_ratio) {
      cert.min_ratio = ratio;
      cert.worst_entry = i;
    }
    if (!(ratio > delta)) {
      std::ostringstream os;
      os << "|E_S|/|S| = " << ratio << " does not exceed delta = " << delta;
      return fail(i, os.str());
    }
  }

  // Bases are nested or disjoint; nested pairs must sit inside a removed cube.
  auto inside_removed = [&](std::size_t outer, std::size_t inner) {
    for (const auto& R : entries[outer].removed)
      if (grid.contains(R, entries[inner].base)) return true;
    return false;
  };
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (std::size_t j = i + 1; j < entries.size(); ++j) {
      if (!bases[i].intersects(bases[j]) || !grid.intersects(entries[i].base, entries[j].base)) continue;
      const bool i_holds_j = grid.contains(entries[i].base, entries[j].base);
      const bool j_holds_i = grid.contains(entries[j].base, entries[i].base);
      if (i_holds_j && j_holds_i) return fail(j, "the same base cube appears twice");
      if (i_holds_j ? !inside_removed(i, j) : j_holds_i ? !inside_removed(j, i) : true)
        return fail(j, "E_S overlaps the set of another member");
    }
  }
  cert.pass = true;
  if (entries.empty()) cert.min_ratio = 1.0;
  cert.message = "pass";
  return cert;
}

double sparse_form(const SparseCollection& collection, const GridFunction& f, const GridFunction& g, double r,
                   double s) {
  const PowerMean m1(f, r), m2(g, s);
  double total = 0.0;
  for (const auto& e : collection.entries) {
    const double a = m1(e.cube);
    if (a == 0.0) continue;
    total += e.cube.volume() * a * m2(e.cube);
  }
  return total;
}

// ---------------------------------------------------------------------------

GridFunction CZDecomposition::reconstruct(int i) const {
  GridFunction out = good[i];
  for (const auto& piece : bad[i])
    for (std::size_t c = 0; c < piece.cells.size(); ++c) out[piece.cells[c]] += piece.values[c];
  return out;
}

GridFunction CZDecomposition::bad_at_scale(int i, int k) const {
  GridFunction out = good[i].zeros_like();
  for (std::size_t l = 0; l < stopping.size(); ++l) {
    if (stopping[l].k != k) continue;
    const auto& piece = bad[i][l];
    for (std::size_t c = 0; c < piece.cells.size(); ++c) out[piece.cells[c]] += piece.values[c];
  }
  return out;
}

std::vector<int> CZDecomposition::scales() const {
  std::vector<int> ks;
  for (const auto& L : stopping) ks.push_back(L.k);
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

std::pair<GridFunction, GridFunction> normalized_pair(const GridFunction& f1, const GridFunction& f2,
                                                      const DyadicGrid& grid, const DyadicCube& Q0, double r,
                                                      double s) {
  const Box root = grid.cube_box(Q0);
  const double a1 = average(f1, root, r);
  const double a2 = average(f2, root, s);
  if (!(a1 > 0.0) || !(a2 > 0.0)) throw std::invalid_argument("normalized_pair: both functions must be nonzero on Q0");
  return {f1.with_values(f1.values() / a1), f2.with_values(f2.values() / a2)};
}

CZDecomposition cz_decompose(const GridFunction& f1, const GridFunction& f2, const DyadicGrid& grid,
                             const DyadicCube& Q0, double r, double s, double C0, const StoppingFloor& floor) {
  if (!(C0 > 1.0)) throw std::invalid_argument("cz_decompose: C0 must exceed 1");
  if (!f1.same_geometry(f2)) throw std::invalid_argument("cz_decompose: f1 and f2 must share a grid");
  if (f1.values().minCoeff() < 0.0 || f2.values().minCoeff() < 0.0)
    throw std::invalid_argument("cz_decompose: inputs must be nonnegative");
  const Box root = grid.cube_box(Q0);
  const PowerMean m1(f1, r), m2(f2, s);
  const double a1 = m1(root), a2 = m2(root);
  if (std::abs(a1 - 1.0) > 1e-9 || std::abs(a2 - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "cz_decompose: expected <f1>_{Q0,r} = <f2>_{Q0,s} = 1, got " << a1 << " and " << a2
       << " (use normalized_pair)";
    throw std::invalid_argument(os.str());
  }
  const Traversal t = traverse(grid, Q0, f1, m1, m2, a1, a2, floor,
                               [&](double v1, double v2) { return v1 + v2 > 2.0 * C0; });

  CZDecomposition cz;
  cz.C0 = C0;
  cz.stopping = t.selected;
  cz.root_measure = grid.volume(Q0);
  const GridFunction* f[2] = {&f1, &f2};
  for (int i = 0; i < 2; ++i) {
    cz.good[i] = *f[i];
    cz.bad[i].resize(cz.stopping.size());
  }
  for (std::size_t l = 0; l < cz.stopping.size(); ++l) {
    const Box L = grid.cube_box(cz.stopping[l]);
    cz.stopping_measure += grid.volume(cz.stopping[l]);
    for (int i = 0; i < 2; ++i) {
      BadPiece& piece = cz.bad[i][l];
      piece.cube = cz.stopping[l];
      std::vector<double> weight;
      double mass = 0.0, total = 0.0;
      for_each_overlap(*f[i], L, [&](Eigen::Index c, double w) {
        piece.cells.push_back(c);
        weight.push_back(w);
        mass += w * (*f[i])[c];
        total += w;
      });
      piece.mean = total > 0.0 ? mass / total : 0.0;
      piece.values.resize(piece.cells.size());
      for (std::size_t c = 0; c < piece.cells.size(); ++c) {
        piece.values[c] = weight[c] * ((*f[i])[piece.cells[c]] - piece.mean);
        cz.good[i][piece.cells[c]] -= piece.values[c];
      }
    }
  }
  for (int i = 0; i < 2; ++i) cz.good_sup[i] = cz.good[i].values().abs().maxCoeff();
  return cz;
}

// ---------------------------------------------------------------------------

DominationReport domination_report(const GridFunction& f, const GridFunction& g, double r, double s,
                                   const TruncationWindow& window, const MonomialCurve& curve,
                                   const QuadratureRule& rule, const SparseOptions& options) {
  DominationReport rep;
  rep.r = r;
  rep.s = s;
  rep.admissible = in_omega_interior(omega_vertices(static_cast<int>(curve.dim())), r, s);
  rep.pairing_by_scale = hilbert_pairing_by_scale(f, g, window, curve, rule);
  for (const auto& [k, v] : rep.pairing_by_scale) rep.pairing += v;

  const auto built = sparse_construct(f, g, r, s, curve, options);
  const SparseCollection gamma = to_gamma_collection(built.collection);
  rep.C = built.tree.C;
  rep.doublings = built.tree.doublings;
  rep.partial = built.tree.partial;
  rep.cubes = built.collection.entries.size();
  for (const auto& node : built.tree.nodes) {
    ++rep.cubes_per_depth[node.depth];
    rep.retained_ratio_sup = std::max(rep.retained_ratio_sup, node.retained_ratio_sup);
  }
  rep.lambda_dyadic = sparse_form(built.collection, f, g, r, s);
  rep.lambda = sparse_form(gamma, f, g, r, s);
  rep.ratio = rep.lambda > 0.0 ? std::abs(rep.pairing) / rep.lambda : (rep.pairing == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());

  const double sum_alpha = std::max(curve.homogeneous_dimension(), static_cast<double>(curve.dim()));
  rep.dyadic_certificate = verify_sparsity(built.collection, 0.5);
  rep.gamma_certificate = verify_sparsity(gamma, 0.5 * std::exp2(-sum_alpha));

  const GridFunction fg = f.with_values((f.values() * g.values()).abs());
  const double mass = fg.values().sum() * fg.cell_volume();
  double residual = 0.0;
  for (const auto& e : built.collection.entries)
    if (e.at_floor) residual += average(fg, e.cube, 1.0) * e.cube.volume();
  rep.floor_residual = mass > 0.0 ? residual / mass : 0.0;
  return rep;
}

}  // namespace curvesparse
