#include "ultra/gauss.hpp"

#include <cmath>
#include <cstdio>
#include <future>
#include <numbers>
#include <ostream>

#include "ultra/integral.hpp"

namespace ultra {

namespace {
constexpr double kZeroGradient = 1e-14;

Eigen::VectorXd magnitude(const std::vector<UltraFun>& comps) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(comps.front().size());
  for (const auto& c : comps) m += c.values.cwiseAbs2();
  return m.cwiseSqrt();
}
}  // namespace

std::vector<UltraFun> theta_gradient(const Gradient& grad, const CellSet& region) {
  UltraFun th = theta_of(grad.basis(), region);
  std::vector<UltraFun> out;
  for (int i = 0; i < grad.dim(); ++i) out.push_back(grad[i].apply(th));
  return out;
}

double perimeter(const Gradient& grad, const CellSet& region) {
  UltraFun one = project(grad.basis(), [](const Point&) { return 1.0; });
  return surface_integral(one, theta_gradient(grad, region));
}

std::vector<UltraFun> normal_field(const Gradient& grad, const CellSet& region) {
  std::vector<UltraFun> dt = theta_gradient(grad, region);
  Eigen::VectorXd mag = magnitude(dt);
  std::vector<UltraFun> n;
  for (const auto& c : dt) {
    UltraFun ni(grad.basis());
    for (int a = 0; a < ni.size(); ++a) ni.values[a] = mag[a] > kZeroGradient ? -c.values[a] / mag[a] : 0.0;
    n.push_back(std::move(ni));
  }
  return n;
}

double GaussSides::residual() const { return std::abs(lhs - rhs); }

GaussSides gauss_check(const Gradient& grad, const std::vector<UltraFun>& phi, const CellSet& region) {
  GaussSides s;
  s.lhs = sqint(pointwise(divergence(grad, phi), theta_of(grad.basis(), region)));
  std::vector<UltraFun> dt = theta_gradient(grad, region);
  std::vector<UltraFun> n = normal_field(grad, region);
  UltraFun flux(grad.basis());
  for (int i = 0; i < grad.dim(); ++i) flux += pointwise(phi.at(i), n[i]);
  UltraFun ds(grad.basis(), magnitude(dt));
  s.rhs = inner(flux, ds);
  return s;
}

void RegionMeasureReport::write_csv(std::ostream& os) const {
  os << "level,cells,points,region_cells,perimeter,residual\n";
  char buf[160];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%.12g,%.3e\n", r.level, r.cells, r.points, r.region_cells, r.perimeter,
                  r.residual);
    os << buf;
  }
}

RegionMeasureReport region_study(const std::string& name, const Partition& base, int levels,
                                 const BasisOptions& options, const RegionBuilder& region, const VectorField& phi) {
  if (levels < 1) throw std::invalid_argument("need at least one level");
  if (static_cast<int>(phi.size()) != base.dim()) throw std::invalid_argument("need one field component per axis");
  std::vector<Partition> parts{base};
  for (int l = 1; l < levels; ++l) parts.push_back(parts.back().refine());

  auto run = [&](int l) {
    const Partition& p = parts[l];
    BasisPtr b = GammaBasis::build(p, options);
    Gradient g = Gradient::assemble(b);
    CellSet A = region(p, l);
    std::vector<UltraFun> f;
    for (const auto& c : phi) f.push_back(project(b, c));
    GaussSides s = gauss_check(g, f, A);
    LevelRecord r;
    r.level = l;
    r.cells = p.cell_count();
    r.points = b->size();
    r.region_cells = static_cast<int>(A.ids().size());
    r.perimeter = perimeter(g, A);
    r.lhs = s.lhs;
    r.residual = s.residual();
    return r;
  };
  std::vector<std::future<LevelRecord>> jobs;
  for (int l = 0; l < levels; ++l) jobs.push_back(std::async(std::launch::async, run, l));
  RegionMeasureReport rep;
  rep.region = name;
  for (auto& j : jobs) rep.history.push_back(j.get());
  return rep;
}

CellSet disk_region(const Partition& p, const Point& center, double radius) {
  return rasterize(p, [&](const Point& x) { return std::hypot(x[0] - center[0], x[1] - center[1]) < radius; });
}

std::vector<Point> koch_polyline(int depth, double base) {
  if (depth < 0) throw std::invalid_argument("Koch depth must be >= 0");
  std::vector<Point> pts{{0.0, base}, {1.0, base}};
  const double c = std::cos(std::numbers::pi / 3), s = std::sin(std::numbers::pi / 3);
  for (int it = 0; it < depth; ++it) {
    std::vector<Point> next{pts.front()};
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const Point& a = pts[i];
      const Point& b = pts[i + 1];
      const double dx = (b[0] - a[0]) / 3, dy = (b[1] - a[1]) / 3;
      Point p1{a[0] + dx, a[1] + dy};
      Point p3{a[0] + 2 * dx, a[1] + 2 * dy};
      // apex: the middle third turned 60 degrees to the left
      Point p2{p1[0] + c * dx - s * dy, p1[1] + s * dx + c * dy};
      next.insert(next.end(), {p1, p2, p3, b});
    }
    pts = std::move(next);
  }
  return pts;
}

bool inside_polygon(const std::vector<Point>& poly, const Point& x) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point& a = poly[i];
    const Point& b = poly[j];
    if ((a[1] > x[1]) != (b[1] > x[1]) && x[0] < (b[0] - a[0]) * (x[1] - a[1]) / (b[1] - a[1]) + a[0]) in = !in;
  }
  return in;
}

CellSet koch_region(const Partition& p, int depth, double base) {
  std::vector<Point> poly = koch_polyline(depth, base);
  const Domain& d = p.domain();
  poly.push_back({d.hi[0], d.lo[1]});
  poly.push_back({d.lo[0], d.lo[1]});
  return rasterize(p, [&](const Point& x) { return inside_polygon(poly, x); });
}

}  // namespace ultra
