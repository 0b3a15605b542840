#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ultra/geometry.hpp"
#include "ultra/localspace.hpp"

namespace ultra {

struct BasisOptions {
  int degree = 2;
  int seeds_per_axis = 1;
  /// Add forced nodes on boundary facets (Gauss points of order k+1, the
  /// facet point itself in 1D). Used for Dirichlet rows.
  bool boundary_nodes = false;
  double pivot_threshold = 1e-8;
  double condition_threshold = 1e12;
};

/// Nodal data of one cell. Columns of `sigma` and `delta` are coefficients in
/// the cell's LocalSpace basis.
struct CellBlock {
  int offset = 0;
  int size = 0;
  std::vector<Point> points;
  std::vector<char> on_boundary;
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd delta;
  /// int sigma_a sigma_b over the cell
  Eigen::MatrixXd gram;
  double gram_condition = 0.0;
};

class GammaBasis {
 public:
  static std::shared_ptr<const GammaBasis> build(const Partition& partition, const BasisOptions& options = {});

  const Partition& partition() const { return partition_; }
  const BasisOptions& options() const { return options_; }
  const SeedSet& seeds() const { return seeds_; }
  int dim() const { return partition_.dim(); }
  int size() const { return static_cast<int>(points_.size()); }

  const std::vector<Point>& points() const { return points_; }
  const Point& point(int a) const { return points_.at(a); }
  int owner(int a) const { return owners_.at(a); }
  /// Weights eta_a = int sigma_a.
  const Eigen::VectorXd& eta() const { return eta_; }

  const LocalSpace& space(int cell) const { return spaces_.at(cell); }
  const CellBlock& block(int cell) const { return blocks_.at(cell); }

  /// Values of the cell's sigma functions at x without density weighting (one-sided trace).
  Eigen::VectorXd trace(int cell, const Point& x) const;
  /// sigma_a(x), density weighted at facets.
  double sigma(int a, const Point& x) const;
  double delta(int a, const Point& x) const { return sigma(a, x) / eta_[a]; }
  /// Member of the space with nodal values `values`, evaluated at x.
  double eval(const Eigen::VectorXd& values, const Point& x) const;

  /// Gamma points that are boundary nodes.
  std::vector<int> boundary_points() const;
  std::vector<int> nonpositive_eta() const;
  /// Index of the Gamma point at x, or -1.
  int find_point(const Point& x, double tol = 1e-12) const;

  nlohmann::json summary() const;

 private:
  Partition partition_;
  BasisOptions options_;
  SeedSet seeds_;
  std::vector<LocalSpace> spaces_;
  std::vector<CellBlock> blocks_;
  std::vector<Point> points_;
  std::vector<int> owners_;
  Eigen::VectorXd eta_;

  GammaBasis(const Partition& partition, const BasisOptions& options);
  void build_cell(int cell);
};

using BasisPtr = std::shared_ptr<const GammaBasis>;

/// A function of the space, stored as its values on Gamma.
struct UltraFun {
  BasisPtr basis;
  Eigen::VectorXd values;

  UltraFun() = default;
  explicit UltraFun(BasisPtr b);
  UltraFun(BasisPtr b, Eigen::VectorXd v);

  int size() const { return static_cast<int>(values.size()); }
  double operator[](int a) const { return values[a]; }
  double eval(const Point& x) const { return basis->eval(values, x); }

  UltraFun& operator+=(const UltraFun& o);
  UltraFun& operator-=(const UltraFun& o);
  UltraFun& operator*=(double s);
};

UltraFun operator+(UltraFun a, const UltraFun& b);
UltraFun operator-(UltraFun a, const UltraFun& b);
UltraFun operator*(double s, UltraFun a);
/// Pointwise product on Gamma.
UltraFun pointwise(const UltraFun& a, const UltraFun& b);

void require_same_basis(const UltraFun& a, const UltraFun& b);

using ScalarField = std::function<double(const Point&)>;

/// Values g(a) on Gamma. Points where `undefined` holds get 0; any other
/// non-finite value is an error.
UltraFun project(const BasisPtr& basis, const ScalarField& g, const std::function<bool(const Point&)>& undefined = {});

/// Nodal function sigma_a.
UltraFun sigma_function(const BasisPtr& basis, int a);
/// Dirac ultrafunction at the Gamma point q.
UltraFun delta_at(const BasisPtr& basis, int q);
UltraFun delta_at(const BasisPtr& basis, const Point& q);

/// Projection of the density of E.
UltraFun theta_of(const BasisPtr& basis, const CellSet& region);
/// Projection of the indicator of E (1 at points strictly inside E-cells).
UltraFun chi_of(const BasisPtr& basis, const CellSet& region);

/// Projection of the indicator of the closure of E.
UltraFun closure_chi_of(const BasisPtr& basis, const CellSet& region);

/// CSV with header x[,y],cell,value.
void write_csv(const UltraFun& u, std::ostream& os);

}  // namespace ultra
