#pragma once

// Stopping-time construction of sparse collections over the unshifted dyadic
// grid, sparsity certificates, the sparse form, the Calderon-Zygmund split
// used inside the iteration step, and the domination experiment.

#include "curvesparse/dyadic_grid.hpp"
#include "curvesparse/grid_function.hpp"
#include "curvesparse/operators.hpp"

#include <map>
#include <string>
#include <vector>

namespace curvesparse {

/// Limits on how deep the stopping recursion may look.
struct StoppingFloor {
  /// Cubes with fewer mesh cells than this along any axis are not subdivided.
  int min_cells_per_axis = 4;
  /// Cubes at canonical scale <= floor_scale are not subdivided.
  int floor_scale = -64;
};

/// Maximal dyadic P strictly inside Q0 with <f1>_{P,r} > C <f1>_{Q0,r} or
/// <f2>_{P,s} > C <f2>_{Q0,s}. Ties go to the larger cube.
std::vector<DyadicCube> stopping_children(const DyadicGrid& grid, const DyadicCube& Q0, const GridFunction& f1,
                                          const GridFunction& f2, double r, double s, double C,
                                          const StoppingFloor& floor = {});

/// One member S of a collection. E_S is `base` minus the `removed` cubes.
struct CollectionEntry {
  Box cube;                          ///< S itself: the dyadic box or its enclosing gamma-cube
  DyadicCube base;                   ///< dyadic cube carrying E_S
  std::vector<DyadicCube> removed;   ///< stopping children of base
  int depth = 0;
  bool at_floor = false;             ///< recursion could not look inside
};

struct SparseCollection {
  DyadicGrid grid;                   ///< all bases live in this grid
  std::vector<CollectionEntry> entries;
  bool gamma_cubes = false;          ///< entries converted to enclosing gamma-cubes
  bool partial = false;              ///< node budget exhausted
};

struct StoppingNode {
  DyadicCube cube;
  int parent = -1;
  std::vector<int> children;
  int depth = 0;
  bool at_floor = false;
  /// Largest sum of ratios <f1>_{Q',r}/<f1>_{Q0,r} + <f2>_{Q',s}/<f2>_{Q0,s}
  /// over the visited cubes Q' that were not cut off by a stopping child.
  double retained_ratio_sup = 0.0;
};

struct StoppingTree {
  std::vector<StoppingNode> nodes;
  std::vector<int> roots;
  double C = 0.0;
  int doublings = 0;
  bool partial = false;
  std::vector<std::string> log;
};

struct SparseOptions {
  /// Stopping constant; 0 selects 2^(sum alpha + 3).
  double C = 0.0;
  StoppingFloor floor;
  std::size_t node_budget = 200000;
  int max_doublings = 16;
};

struct SparseConstruction {
  SparseCollection collection;
  StoppingTree tree;
};

/// Roots are the unshifted dyadic cubes with a corner at the origin that hold
/// the orthant pieces of supp f and supp g; each root is recursed on
/// independently. C is doubled until every node's stopping children cover
/// less than half of it.
SparseConstruction sparse_construct(const GridFunction& f, const GridFunction& g, double r, double s,
                                    const MonomialCurve& curve, const SparseOptions& options = {});

/// Replaces every S by the gamma-cube enlarging it; bases are kept.
SparseCollection to_gamma_collection(const SparseCollection& collection);

struct SparsityCertificate {
  bool pass = false;
  double delta = 0.0;
  double min_ratio = 0.0;           ///< min |E_S| / |S|
  std::size_t worst_entry = 0;
  std::string message;
};

/// Checks E_S subset S, pairwise disjointness of the E_S and |E_S| > delta |S|.
SparsityCertificate verify_sparsity(const SparseCollection& collection, double delta);

/// sum_S |S| <f>_{S,r} <g>_{S,s}.
double sparse_form(const SparseCollection& collection, const GridFunction& f, const GridFunction& g, double r,
                   double s);

// ---------------------------------------------------------------------------

/// A bad piece stored on its own cells.
struct BadPiece {
  DyadicCube cube;
  std::vector<Eigen::Index> cells;
  std::vector<double> values;
  double mean = 0.0;
};

struct CZDecomposition {
  double C0 = 0.0;
  std::vector<DyadicCube> stopping;      ///< the family L
  GridFunction good[2];
  std::vector<BadPiece> bad[2];          ///< bad[i][l] lives on stopping[l]
  double good_sup[2] = {0.0, 0.0};
  double stopping_measure = 0.0;         ///< |union L|
  double root_measure = 0.0;

  /// f_i reassembled from g_i and the bad pieces.
  GridFunction reconstruct(int i) const;
  /// b_{i,k}: the sum of bad pieces on cubes with ell(L) = 2^k.
  GridFunction bad_at_scale(int i, int k) const;
  /// Scales k present in the stopping family.
  std::vector<int> scales() const;
};

/// Rescales f1, f2 so that <f1>_{Q0,r} = <f2>_{Q0,s} = 1.
std::pair<GridFunction, GridFunction> normalized_pair(const GridFunction& f1, const GridFunction& f2,
                                                      const DyadicGrid& grid, const DyadicCube& Q0, double r,
                                                      double s);

/// Splits normalized nonnegative f1, f2 along the maximal dyadic L strictly
/// inside Q0 with <f1>_{L,r} + <f2>_{L,s} > 2 C0. Bad parts use the cell mean
/// with partial-cell weights, so each integrates to zero on L.
CZDecomposition cz_decompose(const GridFunction& f1, const GridFunction& f2, const DyadicGrid& grid,
                             const DyadicCube& Q0, double r, double s, double C0,
                             const StoppingFloor& floor = {});

/// Default C0 for a stopping constant C: the retained family satisfies the
/// ratio bound with 2C, so 4C leaves room.
inline double default_c0(double C) { return 4.0 * C; }

// ---------------------------------------------------------------------------

struct DominationReport {
  double pairing = 0.0;                   ///< <H f, g>
  std::map<int, double> pairing_by_scale;
  double lambda = 0.0;                    ///< sparse form over the gamma-cube collection
  double lambda_dyadic = 0.0;
  double ratio = 0.0;                     ///< |pairing| / lambda (0 when both vanish)
  double r = 0.0;
  double s = 0.0;
  bool admissible = false;
  double C = 0.0;
  int doublings = 0;
  bool partial = false;
  std::size_t cubes = 0;
  std::map<int, std::size_t> cubes_per_depth;
  SparsityCertificate dyadic_certificate;
  SparsityCertificate gamma_certificate;
  /// int |f||g| over floor cubes, relative to int |f||g|.
  double floor_residual = 0.0;
  double retained_ratio_sup = 0.0;
};

DominationReport domination_report(const GridFunction& f, const GridFunction& g, double r, double s,
                                   const TruncationWindow& window, const MonomialCurve& curve,
                                   const QuadratureRule& rule = {}, const SparseOptions& options = {});

}  // namespace curvesparse
