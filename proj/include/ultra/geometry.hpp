#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace ultra {

using Point = std::array<double, 2>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Marker used in place of a cell id for the region outside the domain.
inline constexpr int kExterior = -1;

struct Domain {
  int dim = 1;
  Point lo{0.0, 0.0};
  Point hi{1.0, 1.0};

  static Domain interval(double a, double b);
  static Domain rectangle(double x0, double x1, double y0, double y1);

  double extent(int axis) const { return hi[axis] - lo[axis]; }
  double measure() const;
  bool contains_closed(const Point& x) const;
};

struct Cell {
  int id = 0;
  std::array<int, 2> index{0, 0};
  Point lo{0.0, 0.0};
  Point hi{0.0, 0.0};
  double measure = 0.0;
  std::vector<int> facets;

  Point center() const { return {0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])}; }
  double width(int axis) const { return hi[axis] - lo[axis]; }
};

/// Axis-aligned facet. `left` is the cell the stored normal points away from.
struct Facet {
  int id = 0;
  int left = 0;
  int right = kExterior;
  int axis = 0;
  Point lo{0.0, 0.0};
  Point hi{0.0, 0.0};
  double measure = 1.0;
  Point normal{0.0, 0.0};

  bool exterior() const { return right == kExterior; }
  double position() const { return lo[axis]; }
  /// Normal seen from `cell`, which must be one of the two sides.
  Point normal_from(int cell) const;
};

class CellSet {
 public:
  CellSet() = default;
  CellSet(std::vector<int> ids, int cell_count);

  static CellSet all(int cell_count);

  bool contains(int id) const { return id >= 0 && id < static_cast<int>(mask_.size()) && mask_[id]; }
  const std::vector<int>& ids() const { return ids_; }
  bool empty() const { return ids_.empty(); }
  int cell_count() const { return static_cast<int>(mask_.size()); }
  CellSet complement() const;

 private:
  std::vector<int> ids_;
  std::vector<char> mask_;
};

class Partition {
 public:
  static Partition build(const Domain& domain, std::vector<int> cells_per_axis);

  const Domain& domain() const { return domain_; }
  int dim() const { return domain_.dim; }
  int level() const { return level_; }
  int cells_along(int axis) const { return n_[axis]; }
  double spacing(int axis) const { return h_[axis]; }
  double min_spacing() const;

  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<Facet>& facets() const { return facets_; }
  const Cell& cell(int id) const;
  const Facet& facet(int id) const { return facets_.at(id); }
  int cell_count() const { return static_cast<int>(cells_.size()); }

  int cell_at(int i, int j = 0) const { return j * n_[0] + i; }
  /// Facet of `cell` orthogonal to `axis` on the low (side 0) or high (side 1) end.
  int facet_of(int cell, int axis, int side) const;
  /// Neighbor across that facet, or kExterior.
  int neighbor(int cell, int axis, int side) const;

  /// Cells sharing a facet of positive measure, plus kExterior (once) on the boundary.
  std::vector<int> adjacency(int cell) const;
  bool touches_boundary(int cell) const;
  /// Number of cells between `cell` and the domain boundary (0 for boundary cells).
  int boundary_distance(int cell) const;

  /// Parent of each cell in the previous level, empty at level 0.
  const std::vector<int>& parents() const { return parents_; }

  Partition refine() const;
  nlohmann::json to_json() const;

 private:
  Domain domain_;
  std::array<int, 2> n_{1, 1};
  Point h_{1.0, 1.0};
  int level_ = 0;
  std::vector<Cell> cells_;
  std::vector<Facet> facets_;
  std::vector<int> parents_;
  // cell -> facet id for (axis, side)
  std::vector<std::array<int, 4>> cell_facets_;

  void assemble();
};

/// Small-ball volume fraction of E at x: 1 inside, 0 outside, the exact
/// angle fraction on facets and at vertices.
double density_at(const Partition& partition, const CellSet& region, const Point& x);

/// Density of a single cell at x (1 inside, 1/2 on a facet, 1/4 at a 2D corner, 0 outside).
double cell_density(const Cell& cell, int dim, const Point& x);

/// Cells whose center satisfies `inside`.
CellSet rasterize(const Partition& partition, const std::function<bool(const Point&)>& inside);

}  // namespace ultra
