#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "ultra/geometry.hpp"

namespace ultra {

/// Quartic bell (1 - t^2)^2 on |t| <= 1, zero outside.
double bump_profile(double t);

/// Radial bump centered at a seed, equal to 1 at the center.
struct Bump {
  Point center{0.0, 0.0};
  double radius = 0.0;
  int cell = 0;

  double value(const Point& x, int dim) const;
  double derivative(const Point& x, int dim, int axis) const;
};

struct SeedSet {
  int per_axis = 0;
  double radius = 0.0;
  std::vector<Bump> bumps;
  std::vector<std::vector<int>> by_cell;

  const std::vector<int>& in_cell(int cell) const { return by_cell.at(cell); }
  std::size_t size() const { return bumps.size(); }
};

/// per_axis^d seeds per cell on the interior tensor points (j + 1/2) / per_axis,
/// radius one third of the smallest seed spacing.
SeedSet make_seeds(const Partition& partition, int per_axis);

int local_dim(int degree, int dim, int seeds_in_cell);

/// Basis of one cell: the cell's bumps first, then Legendre tensor modes of
/// degree <= k per axis in the cell's reference coordinates.
class LocalSpace {
 public:
  LocalSpace(const Partition& partition, int cell, int degree, const SeedSet& seeds);

  int cell_id() const { return cell_.id; }
  const Cell& cell() const { return cell_; }
  int space_dim() const { return static_cast<int>(bumps_.size() + modes_.size()); }
  int bump_count() const { return static_cast<int>(bumps_.size()); }
  int degree() const { return degree_; }
  const std::vector<Bump>& bumps() const { return bumps_; }
  const std::vector<std::array<int, 2>>& modes() const { return modes_; }
  /// Index in the local basis of the mode with these per-axis degrees.
  int mode_index(int deg_x, int deg_y = 0) const;

  /// Basis values at x with the cell's polynomial extended past its closure.
  Eigen::VectorXd values(const Point& x) const;
  Eigen::VectorXd derivatives(const Point& x, int axis) const;
  /// One row per point.
  Eigen::MatrixXd values(const std::vector<Point>& xs) const;
  Eigen::MatrixXd derivatives(const std::vector<Point>& xs, int axis) const;

  /// Exact integrals over the cell: Gram[i][j] = int b_i b_j, moments[i] = int b_i,
  /// stiffness(axis)[i][j] = int b_i d_axis b_j.
  const Eigen::MatrixXd& gram() const { return gram_; }
  const Eigen::VectorXd& moments() const { return moments_; }
  const Eigen::MatrixXd& stiffness(int axis) const { return stiffness_[axis]; }

  /// Member value at x, weighted by the cell's density (1/2 on facets, 0 outside).
  double eval(const Eigen::VectorXd& coeffs, const Point& x) const;

 private:
  Cell cell_;
  int dim_;
  int degree_;
  std::vector<Bump> bumps_;
  std::vector<std::array<int, 2>> modes_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd moments_;
  std::array<Eigen::MatrixXd, 2> stiffness_;

  void integrate();
};

}  // namespace ultra
