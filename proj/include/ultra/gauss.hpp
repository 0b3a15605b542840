#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ultra/derivative.hpp"

namespace ultra {

/// Components of D theta_A, one per axis.
std::vector<UltraFun> theta_gradient(const Gradient& grad, const CellSet& region);

/// Pointwise integral of |D theta_A|.
double perimeter(const Gradient& grad, const CellSet& region);

/// -D theta_A / |D theta_A| where |D theta_A| > 1e-14, zero elsewhere.
std::vector<UltraFun> normal_field(const Gradient& grad, const CellSet& region);

struct GaussSides {
  /// pointwise integral of (div phi) theta_A
  double lhs = 0.0;
  /// sum over Gamma of phi . n_A |D theta_A| eta
  double rhs = 0.0;
  double residual() const;
};

GaussSides gauss_check(const Gradient& grad, const std::vector<UltraFun>& phi, const CellSet& region);

struct LevelRecord {
  int level = 0;
  int cells = 0;
  int points = 0;
  int region_cells = 0;
  double perimeter = 0.0;
  double lhs = 0.0;
  double residual = 0.0;
};

struct RegionMeasureReport {
  std::string region;
  std::vector<LevelRecord> history;

  /// CSV rows level,points,perimeter,residual plus cells and region size.
  void write_csv(std::ostream& os) const;
};

/// Region at a given refinement level of the study.
using RegionBuilder = std::function<CellSet(const Partition&, int level)>;
using VectorField = std::vector<ScalarField>;

/// Perimeter and Gauss residual of a region over `levels` uniform refinements.
/// Levels run concurrently; records come back in level order.
RegionMeasureReport region_study(const std::string& name, const Partition& base, int levels,
                                 const BasisOptions& options, const RegionBuilder& region, const VectorField& phi);

/// Cells whose centre lies in the disk.
CellSet disk_region(const Partition& p, const Point& center, double radius);

/// Koch polyline from (0, base) to (1, base) after `depth` substitutions.
std::vector<Point> koch_polyline(int depth, double base = 0.3);
/// Cells whose centre lies below the Koch polyline (inside the polygon it closes with the bottom edge).
CellSet koch_region(const Partition& p, int depth, double base = 0.3);

/// Even-odd test.
bool inside_polygon(const std::vector<Point>& poly, const Point& x);

}  // namespace ultra
