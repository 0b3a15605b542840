#include "ultra/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace ultra {

namespace {

constexpr double kSnap = 1e-10;

struct AxisHit {
  int count = 0;
  int index[2] = {0, 0};
  double weight[2] = {0.0, 0.0};
};

// Cells along one axis whose closure contains coordinate x, with their angle share.
AxisHit locate_axis(double x, double lo, double h, int n) {
  AxisHit hit;
  double t = (x - lo) / h;
  double r = std::round(t);
  if (std::abs(t - r) < kSnap) {
    int line = static_cast<int>(r);
    for (int c : {line - 1, line}) {
      if (c >= 0 && c < n) {
        hit.index[hit.count] = c;
        hit.weight[hit.count] = 0.5;
        ++hit.count;
      }
    }
    return hit;
  }
  int c = std::clamp(static_cast<int>(std::floor(t)), 0, n - 1);
  hit.index[0] = c;
  hit.weight[0] = 1.0;
  hit.count = 1;
  return hit;
}

}  // namespace

Domain Domain::interval(double a, double b) {
  if (!(b > a)) throw std::invalid_argument("interval must have positive length");
  Domain d;
  d.dim = 1;
  d.lo = {a, 0.0};
  d.hi = {b, 1.0};
  return d;
}

Domain Domain::rectangle(double x0, double x1, double y0, double y1) {
  if (!(x1 > x0) || !(y1 > y0)) throw std::invalid_argument("rectangle must have positive extent");
  Domain d;
  d.dim = 2;
  d.lo = {x0, y0};
  d.hi = {x1, y1};
  return d;
}

double Domain::measure() const {
  double m = 1.0;
  for (int a = 0; a < dim; ++a) m *= extent(a);
  return m;
}

bool Domain::contains_closed(const Point& x) const {
  for (int a = 0; a < dim; ++a) {
    double tol = kSnap * extent(a);
    if (x[a] < lo[a] - tol || x[a] > hi[a] + tol) return false;
  }
  return true;
}

Point Facet::normal_from(int cell) const {
  if (cell == left) return normal;
  if (cell == right) return {-normal[0], -normal[1]};
  throw std::invalid_argument("cell is not a side of this facet");
}

CellSet::CellSet(std::vector<int> ids, int cell_count) : mask_(cell_count, 0) {
  for (int id : ids) {
    if (id < 0 || id >= cell_count) throw std::out_of_range("cell id outside partition");
    mask_[id] = 1;
  }
  for (int i = 0; i < cell_count; ++i)
    if (mask_[i]) ids_.push_back(i);
}

CellSet CellSet::all(int cell_count) {
  std::vector<int> ids(cell_count);
  for (int i = 0; i < cell_count; ++i) ids[i] = i;
  return CellSet(std::move(ids), cell_count);
}

CellSet CellSet::complement() const {
  std::vector<int> ids;
  for (int i = 0; i < cell_count(); ++i)
    if (!mask_[i]) ids.push_back(i);
  return CellSet(std::move(ids), cell_count());
}

Partition Partition::build(const Domain& domain, std::vector<int> cells_per_axis) {
  if (domain.dim != 1 && domain.dim != 2) throw std::invalid_argument("dimension must be 1 or 2");
  for (int a = 0; a < domain.dim; ++a)
    if (!(domain.extent(a) > 0.0)) throw std::invalid_argument("domain extent must be positive");
  if (static_cast<int>(cells_per_axis.size()) == 1 && domain.dim == 2)
    cells_per_axis.push_back(cells_per_axis[0]);
  if (static_cast<int>(cells_per_axis.size()) != domain.dim)
    throw std::invalid_argument("cells_per_axis must have one entry per axis");
  Partition p;
  p.domain_ = domain;
  for (int a = 0; a < domain.dim; ++a) {
    if (cells_per_axis[a] < 1) throw std::invalid_argument("cells_per_axis must be >= 1");
    p.n_[a] = cells_per_axis[a];
    p.h_[a] = domain.extent(a) / cells_per_axis[a];
  }
  p.assemble();
  return p;
}

void Partition::assemble() {
  const int d = domain_.dim;
  const int ny = d == 2 ? n_[1] : 1;
  cells_.clear();
  facets_.clear();
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < n_[0]; ++i) {
      Cell c;
      c.id = static_cast<int>(cells_.size());
      c.index = {i, j};
      c.lo = {domain_.lo[0] + i * h_[0], d == 2 ? domain_.lo[1] + j * h_[1] : 0.0};
      c.hi = {i + 1 == n_[0] ? domain_.hi[0] : domain_.lo[0] + (i + 1) * h_[0],
              d == 2 ? (j + 1 == ny ? domain_.hi[1] : domain_.lo[1] + (j + 1) * h_[1]) : 0.0};
      c.measure = d == 2 ? h_[0] * h_[1] : h_[0];
      cells_.push_back(c);
    }
  }
  cell_facets_.assign(cells_.size(), {-1, -1, -1, -1});
  for (int axis = 0; axis < d; ++axis) {
    const int other = 1 - axis;
    const int n_along = n_[axis];
    const int n_across = d == 2 ? n_[other] : 1;
    for (int q = 0; q < n_across; ++q) {
      for (int p = 0; p <= n_along; ++p) {
        auto cell_id = [&](int along) {
          std::array<int, 2> idx{0, 0};
          idx[axis] = along;
          idx[other] = q;
          return cell_at(idx[0], idx[1]);
        };
        Facet f;
        f.id = static_cast<int>(facets_.size());
        f.axis = axis;
        double pos = p == n_along ? domain_.hi[axis] : domain_.lo[axis] + p * h_[axis];
        f.lo[axis] = f.hi[axis] = pos;
        if (d == 2) {
          f.lo[other] = domain_.lo[other] + q * h_[other];
          f.hi[other] = q + 1 == n_across ? domain_.hi[other] : domain_.lo[other] + (q + 1) * h_[other];
          f.measure = h_[other];
        }
        if (p == 0) {
          f.left = cell_id(0);
          f.normal[axis] = -1.0;
          cell_facets_[f.left][2 * axis] = f.id;
        } else if (p == n_along) {
          f.left = cell_id(n_along - 1);
          f.normal[axis] = 1.0;
          cell_facets_[f.left][2 * axis + 1] = f.id;
        } else {
          f.left = cell_id(p - 1);
          f.right = cell_id(p);
          f.normal[axis] = 1.0;
          cell_facets_[f.left][2 * axis + 1] = f.id;
          cell_facets_[f.right][2 * axis] = f.id;
        }
        facets_.push_back(f);
      }
    }
  }
  for (auto& c : cells_) {
    c.facets.clear();
    for (int k = 0; k < 2 * d; ++k) c.facets.push_back(cell_facets_[c.id][k]);
  }
}

double Partition::min_spacing() const {
  double m = h_[0];
  for (int a = 1; a < dim(); ++a) m = std::min(m, h_[a]);
  return m;
}

const Cell& Partition::cell(int id) const {
  if (id < 0 || id >= cell_count()) throw std::out_of_range("unknown cell id " + std::to_string(id));
  return cells_[id];
}

int Partition::facet_of(int cell_id, int axis, int side) const {
  cell(cell_id);
  return cell_facets_[cell_id][2 * axis + side];
}

int Partition::neighbor(int cell_id, int axis, int side) const {
  const Facet& f = facets_[facet_of(cell_id, axis, side)];
  return f.left == cell_id ? f.right : f.left;
}

std::vector<int> Partition::adjacency(int cell_id) const {
  std::vector<int> out;
  bool exterior = false;
  for (int axis = 0; axis < dim(); ++axis) {
    for (int side = 0; side < 2; ++side) {
      int nb = neighbor(cell_id, axis, side);
      if (nb == kExterior)
        exterior = true;
      else if (std::find(out.begin(), out.end(), nb) == out.end())
        out.push_back(nb);
    }
  }
  std::sort(out.begin(), out.end());
  if (exterior) out.insert(out.begin(), kExterior);
  return out;
}

bool Partition::touches_boundary(int cell_id) const { return boundary_distance(cell_id) == 0; }

int Partition::boundary_distance(int cell_id) const {
  const Cell& c = cell(cell_id);
  int dist = n_[0];
  for (int a = 0; a < dim(); ++a) dist = std::min({dist, c.index[a], n_[a] - 1 - c.index[a]});
  return dist;
}

Partition Partition::refine() const {
  std::vector<int> n;
  for (int a = 0; a < dim(); ++a) n.push_back(2 * n_[a]);
  Partition child = build(domain_, n);
  child.level_ = level_ + 1;
  child.parents_.resize(child.cells_.size());
  for (const auto& c : child.cells_)
    child.parents_[c.id] = cell_at(c.index[0] / 2, dim() == 2 ? c.index[1] / 2 : 0);
  return child;
}

nlohmann::json Partition::to_json() const {
  nlohmann::json j;
  j["dimension"] = dim();
  j["level"] = level_;
  j["domain"] = {{"lo", std::vector<double>(domain_.lo.begin(), domain_.lo.begin() + dim())},
                 {"hi", std::vector<double>(domain_.hi.begin(), domain_.hi.begin() + dim())}};
  auto cut = [&](const Point& p) { return std::vector<double>(p.begin(), p.begin() + dim()); };
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : cells_) {
    cells.push_back({{"id", c.id}, {"lo", cut(c.lo)}, {"hi", cut(c.hi)}, {"measure", c.measure},
                     {"facets", c.facets}, {"adjacency", adjacency(c.id)}});
  }
  j["cells"] = std::move(cells);
  nlohmann::json facets = nlohmann::json::array();
  for (const auto& f : facets_) {
    facets.push_back({{"id", f.id}, {"left", f.left}, {"right", f.right}, {"axis", f.axis},
                      {"lo", cut(f.lo)}, {"hi", cut(f.hi)}, {"measure", f.measure},
                      {"normal", cut(f.normal)}});
  }
  j["facets"] = std::move(facets);
  if (!parents_.empty()) j["parents"] = parents_;
  return j;
}

double density_at(const Partition& partition, const CellSet& region, const Point& x) {
  const Domain& dom = partition.domain();
  if (!dom.contains_closed(x)) throw std::out_of_range("point outside the closed domain");
  if (region.cell_count() != partition.cell_count())
    throw std::invalid_argument("cell set does not belong to this partition");
  AxisHit hx = locate_axis(x[0], dom.lo[0], partition.spacing(0), partition.cells_along(0));
  AxisHit hy;
  if (partition.dim() == 2)
    hy = locate_axis(x[1], dom.lo[1], partition.spacing(1), partition.cells_along(1));
  else
    hy.count = 1, hy.weight[0] = 1.0;
  double fraction = 0.0;
  for (int a = 0; a < hx.count; ++a)
    for (int b = 0; b < hy.count; ++b)
      if (region.contains(partition.cell_at(hx.index[a], hy.index[b])))
        fraction += hx.weight[a] * hy.weight[b];
  return fraction;
}

double cell_density(const Cell& cell, int dim, const Point& x) {
  double w = 1.0;
  for (int a = 0; a < dim; ++a) {
    const double tol = kSnap * cell.width(a);
    if (x[a] < cell.lo[a] - tol || x[a] > cell.hi[a] + tol) return 0.0;
    if (std::abs(x[a] - cell.lo[a]) <= tol || std::abs(x[a] - cell.hi[a]) <= tol) w *= 0.5;
  }
  return w;
}

CellSet rasterize(const Partition& partition, const std::function<bool(const Point&)>& inside) {
  std::vector<int> ids;
  for (const auto& c : partition.cells())
    if (inside(c.center())) ids.push_back(c.id);
  return CellSet(std::move(ids), partition.cell_count());
}

}  // namespace ultra
