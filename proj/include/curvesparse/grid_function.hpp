#pragma once

// Cell-centered samples of a real function on a box. Values outside the box
// are zero; off-grid evaluation is multilinear between cell centers.

#include "curvesparse/box.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace curvesparse {

class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(Box domain, Eigen::VectorXi counts, double fill = 0.0);
  GridFunction(Box domain, Eigen::VectorXi counts, Eigen::ArrayXd values);

  static GridFunction sample(Box domain, Eigen::VectorXi counts, const std::function<double(const Vector&)>& fn);

  const Box& domain() const { return domain_; }
  const Eigen::VectorXi& counts() const { return counts_; }
  const Vector& mesh() const { return mesh_; }
  const Eigen::VectorXi& strides() const { return strides_; }
  Eigen::Index dim() const { return domain_.dim(); }
  Eigen::Index size() const { return values_.size(); }
  double cell_volume() const { return cell_volume_; }

  const Eigen::ArrayXd& values() const { return values_; }
  Eigen::ArrayXd& values() { return values_; }
  double operator[](Eigen::Index flat) const { return values_[flat]; }
  double& operator[](Eigen::Index flat) { return values_[flat]; }

  Eigen::VectorXi multi_index(Eigen::Index flat) const;
  Vector cell_center(Eigen::Index flat) const;
  Box cell_box(Eigen::Index flat) const;

  bool same_geometry(const GridFunction& other) const;
  GridFunction with_values(Eigen::ArrayXd values) const;
  GridFunction zeros_like() const { return GridFunction(domain_, counts_, 0.0); }

  /// Multilinear interpolation between cell centers, zero beyond the box.
  double interpolate(const Vector& x) const;
  /// Same, on fractional cell indices (u_i = i means the center of cell i).
  double interpolate_index(const double* u) const;

  /// Smallest box made of whole cells that contains every nonzero sample;
  /// empty box when f vanishes.
  Box support_box() const;

 private:
  void init_geometry();

  Box domain_;
  Eigen::VectorXi counts_;
  Vector mesh_;
  Eigen::VectorXi strides_;
  double cell_volume_ = 0.0;
  Eigen::ArrayXd values_;
};

/// Per-axis overlap fractions of a box with the cells of a grid.
struct AxisOverlap {
  Eigen::Index first = 0;
  std::vector<double> fraction;
};

/// Empty `fraction` when the box misses the grid on that axis.
std::vector<AxisOverlap> cell_overlaps(const GridFunction& f, const Box& region);

/// Calls fn(flat_index, weight) for every cell meeting `region`, with weight
/// the fraction of the cell inside it.
void for_each_overlap(const GridFunction& f, const Box& region,
                      const std::function<void(Eigen::Index, double)>& fn);

/// (sum |f|^p cell volume)^(1/p); p = infinity gives max |f|.
double lp_norm(const GridFunction& f, double p);

struct CubeAverage {
  double value = 0.0;
  bool disjoint = false;  ///< region missed the domain; value is 0
};

/// <f>_{Q,p} = (|Q|^-1 int_Q |f|^p)^(1/p) with partial-cell weighting.
CubeAverage average_flagged(const GridFunction& f, const Box& Q, double p);
double average(const GridFunction& f, const Box& Q, double p);

/// (tau_y f)(x) = f(x - y); exact for lattice vectors y.
GridFunction translate(const GridFunction& f, const Vector& y);

/// f chi_E with partial-cell weighting. Idempotent when the faces of E lie on
/// cell faces.
GridFunction restrict_to(const GridFunction& f, const Box& E);

/// int f g for two functions on the same grid.
double pairing(const GridFunction& f, const GridFunction& g);

/// Writes <stem>.bin (raw float64, axis 0 fastest) and <stem>.json (geometry).
void save_grid_function(const GridFunction& f, const std::filesystem::path& stem);
GridFunction load_grid_function(const std::filesystem::path& stem);

/// CSV with header. 1-D: x,value. 2-D: x,y,value. Higher dimensions: the
/// 2-D slice through the middle cell of the remaining axes.
void write_csv_slice(const GridFunction& f, const std::filesystem::path& path);

}  // namespace curvesparse
