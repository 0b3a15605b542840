#include "ultra/basis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "ultra/quadrature.hpp"

namespace ultra {

namespace {

double scaled_condition(const Eigen::MatrixXd& gram) {
  Eigen::VectorXd s = gram.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd g = s.asDiagonal() * gram * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

// Candidate points for the extra nodes: forced boundary-facet points first, then the
// tensor Gauss grid of order k+2 minus any point that coincides with a seed.
std::vector<Point> candidates(const Partition& partition, const LocalSpace& space, bool boundary_nodes,
                              int& forced) {
  const Cell& cell = space.cell();
  const int d = partition.dim();
  const int k = space.degree();
  std::vector<Point> out;
  forced = 0;
  if (boundary_nodes) {
    Rule1D g = gauss_legendre(k + 1);
    for (int axis = 0; axis < d; ++axis) {
      for (int side = 0; side < 2; ++side) {
        if (partition.neighbor(cell.id, axis, side) != kExterior) continue;
        Point x0 = cell.center();
        x0[axis] = side ? cell.hi[axis] : cell.lo[axis];
        if (d == 1) {
          out.push_back(x0);
          continue;
        }
        const int o = 1 - axis;
        for (double t : g.nodes) {
          Point p = x0;
          p[o] = cell.center()[o] + t * 0.5 * cell.width(o);
          out.push_back(p);
        }
      }
    }
    forced = static_cast<int>(out.size());
  }
  Rule grid = cell_rule(cell, d, k + 2);
  const double tol = 1e-12 * cell.width(0);
  for (const Point& p : grid.points) {
    bool clash = false;
    for (const Bump& b : space.bumps())
      if (std::hypot(p[0] - b.center[0], p[1] - b.center[1]) < tol) clash = true;
    if (!clash) out.push_back(p);
  }
  return out;
}

}  // namespace

GammaBasis::GammaBasis(const Partition& partition, const BasisOptions& options)
    : partition_(partition), options_(options) {}

std::shared_ptr<const GammaBasis> GammaBasis::build(const Partition& partition, const BasisOptions& options) {
  if (options.degree < 1) throw std::invalid_argument("degree must be >= 1");
  std::shared_ptr<GammaBasis> gb(new GammaBasis(partition, options));
  gb->seeds_ = make_seeds(partition, options.seeds_per_axis);
  for (int c = 0; c < partition.cell_count(); ++c)
    gb->spaces_.emplace_back(partition, c, options.degree, gb->seeds_);
  gb->blocks_.resize(partition.cell_count());
  int offset = 0;
  for (int c = 0; c < partition.cell_count(); ++c) {
    gb->build_cell(c);
    CellBlock& blk = gb->blocks_[c];
    blk.offset = offset;
    offset += blk.size;
  }
  gb->eta_.resize(offset);
  for (int c = 0; c < partition.cell_count(); ++c) {
    const CellBlock& blk = gb->blocks_[c];
    const LocalSpace& sp = gb->spaces_[c];
    gb->eta_.segment(blk.offset, blk.size) = blk.sigma.transpose() * sp.moments();
    for (int j = 0; j < blk.size; ++j) {
      gb->points_.push_back(blk.points[j]);
      gb->owners_.push_back(c);
    }
  }
  for (int c = 0; c < partition.cell_count(); ++c) {
    CellBlock& blk = gb->blocks_[c];
    Eigen::VectorXd inv = gb->eta_.segment(blk.offset, blk.size).cwiseInverse();
    blk.delta = blk.sigma * inv.asDiagonal();
  }
  return gb;
}

void GammaBasis::build_cell(int cell) {
  const LocalSpace& sp = spaces_[cell];
  CellBlock& blk = blocks_[cell];
  const int n = sp.space_dim();
  const int nb = sp.bump_count();
  const int nm = n - nb;
  const Eigen::MatrixXd& G = sp.gram();

  blk.gram_condition = scaled_condition(G);
  if (!(blk.gram_condition <= options_.condition_threshold)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "cell %d: local Gram condition %.3e exceeds %.3e", cell, blk.gram_condition,
                  options_.condition_threshold);
    throw Error(buf);
  }

  // orthonormal basis: normalized bumps, then modes orthogonalized against them
  Eigen::MatrixXd tb = Eigen::MatrixXd::Zero(n, nb);
  for (int b = 0; b < nb; ++b) tb(b, b) = 1.0 / std::sqrt(G(b, b));
  Eigen::MatrixXd tm = Eigen::MatrixXd::Zero(n, nm);
  for (int j = 0; j < nm; ++j) {
    tm(nb + j, j) = 1.0;
    for (int b = 0; b < nb; ++b) tm(b, j) = -G(b, nb + j) / G(b, b);
  }
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::MatrixXd gm = tm.transpose() * G * tm;
    Eigen::LLT<Eigen::MatrixXd> llt(gm);
    if (llt.info() != Eigen::Success) throw Error("cell " + std::to_string(cell) + ": complement Gram not positive");
    Eigen::MatrixXd linv = llt.matrixL().solve(Eigen::MatrixXd::Identity(nm, nm));
    tm = tm * linv.transpose();
  }
  Eigen::MatrixXd T(n, n);
  T << tb, tm;

  int forced = 0;
  std::vector<Point> cand = candidates(partition_, sp, options_.boundary_nodes, forced);
  Eigen::MatrixXd resid = sp.values(cand) * tm;
  std::vector<int> chosen;
  std::vector<char> used(cand.size(), 0);
  for (int it = 0; it < nm; ++it) {
    int best = -1;
    double best_norm = -1.0;
    auto scan = [&](int lo, int hi) {
      for (int i = lo; i < hi; ++i) {
        if (used[i]) continue;
        double r = resid.row(i).norm();
        // symmetric candidates tie up to roundoff; keep the first so every cell picks alike
        if (r > best_norm * (1.0 + 1e-9)) best_norm = r, best = i;
      }
    };
    scan(0, forced);
    if (best_norm <= options_.pivot_threshold) {
      best = -1;
      best_norm = -1.0;
      scan(forced, static_cast<int>(cand.size()));
    }
    if (best < 0 || best_norm <= options_.pivot_threshold)
      throw Error("cell " + std::to_string(cell) + ": extra-point selection found no pivot above threshold");
    used[best] = 1;
    chosen.push_back(best);
    Eigen::RowVectorXd v = resid.row(best) / best_norm;
    resid -= (resid * v.transpose()) * v;
  }
  std::sort(chosen.begin(), chosen.end());

  blk.points.clear();
  blk.on_boundary.clear();
  for (const Bump& b : sp.bumps()) {
    blk.points.push_back(b.center);
    blk.on_boundary.push_back(0);
  }
  for (int i : chosen) {
    blk.points.push_back(cand[i]);
    blk.on_boundary.push_back(i < forced ? 1 : 0);
  }
  blk.size = n;

  Eigen::MatrixXd E = sp.values(blk.points) * T;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(E);
  if (!lu.isInvertible()) throw Error("cell " + std::to_string(cell) + ": nodal evaluation matrix is singular");
  blk.sigma = T * lu.inverse();
  blk.gram = blk.sigma.transpose() * G * blk.sigma;
}

Eigen::VectorXd GammaBasis::trace(int cell, const Point& x) const {
  return blocks_.at(cell).sigma.transpose() * spaces_.at(cell).values(x);
}

double GammaBasis::sigma(int a, const Point& x) const {
  const int c = owner(a);
  const CellBlock& blk = blocks_[c];
  return spaces_[c].eval(blk.sigma.col(a - blk.offset), x);
}

double GammaBasis::eval(const Eigen::VectorXd& values, const Point& x) const {
  if (values.size() != size()) throw std::invalid_argument("value vector does not match basis size");
  const Domain& dom = partition_.domain();
  if (!dom.contains_closed(x)) return 0.0;
  std::array<int, 2> lo{0, 0}, hi{0, 0};
  for (int a = 0; a < dim(); ++a) {
    int i = static_cast<int>(std::floor((x[a] - dom.lo[a]) / partition_.spacing(a)));
    lo[a] = std::max(0, i - 1);
    hi[a] = std::min(partition_.cells_along(a) - 1, i + 1);
  }
  double sum = 0.0;
  for (int j = lo[1]; j <= hi[1]; ++j) {
    for (int i = lo[0]; i <= hi[0]; ++i) {
      const int c = partition_.cell_at(i, j);
      const double theta = cell_density(partition_.cell(c), dim(), x);
      if (theta == 0.0) continue;
      const CellBlock& blk = blocks_[c];
      sum += theta * trace(c, x).dot(values.segment(blk.offset, blk.size));
    }
  }
  return sum;
}

std::vector<int> GammaBasis::boundary_points() const {
  std::vector<int> out;
  for (const auto& blk : blocks_)
    for (int j = 0; j < blk.size; ++j)
      if (blk.on_boundary[j]) out.push_back(blk.offset + j);
  return out;
}

std::vector<int> GammaBasis::nonpositive_eta() const {
  std::vector<int> out;
  for (int a = 0; a < size(); ++a)
    if (eta_[a] <= 0.0) out.push_back(a);
  return out;
}

int GammaBasis::find_point(const Point& x, double tol) const {
  for (int a = 0; a < size(); ++a) {
    double dist = 0.0;
    for (int i = 0; i < dim(); ++i) dist = std::max(dist, std::abs(points_[a][i] - x[i]));
    if (dist <= tol) return a;
  }
  return -1;
}

nlohmann::json GammaBasis::summary() const {
  double cond_max = 0.0, kron = 0.0;
  for (int c = 0; c < partition_.cell_count(); ++c) {
    const CellBlock& blk = blocks_[c];
    cond_max = std::max(cond_max, blk.gram_condition);
    Eigen::MatrixXd v = spaces_[c].values(blk.points) * blk.sigma;
    kron = std::max(kron, (v - Eigen::MatrixXd::Identity(blk.size, blk.size)).cwiseAbs().maxCoeff());
  }
  nlohmann::json j;
  j["points"] = size();
  j["cells"] = partition_.cell_count();
  j["degree"] = options_.degree;
  j["seeds_per_axis"] = options_.seeds_per_axis;
  j["boundary_nodes"] = options_.boundary_nodes;
  j["eta"] = {{"min", eta_.minCoeff()}, {"max", eta_.maxCoeff()}, {"sum", eta_.sum()}};
  j["nonpositive_eta"] = nonpositive_eta().size();
  j["gram_condition_max"] = cond_max;
  j["kronecker_error"] = kron;
  return j;
}

UltraFun::UltraFun(BasisPtr b) : basis(std::move(b)), values(Eigen::VectorXd::Zero(basis->size())) {}

UltraFun::UltraFun(BasisPtr b, Eigen::VectorXd v) : basis(std::move(b)), values(std::move(v)) {
  if (values.size() != basis->size()) throw std::invalid_argument("value vector does not match basis size");
}

void require_same_basis(const UltraFun& a, const UltraFun& b) {
  if (a.basis != b.basis) throw std::invalid_argument("ultrafunctions live on different bases");
}

UltraFun& UltraFun::operator+=(const UltraFun& o) {
  require_same_basis(*this, o);
  values += o.values;
  return *this;
}

UltraFun& UltraFun::operator-=(const UltraFun& o) {
  require_same_basis(*this, o);
  values -= o.values;
  return *this;
}

UltraFun& UltraFun::operator*=(double s) {
  values *= s;
  return *this;
}

UltraFun operator+(UltraFun a, const UltraFun& b) { return a += b; }
UltraFun operator-(UltraFun a, const UltraFun& b) { return a -= b; }
UltraFun operator*(double s, UltraFun a) { return a *= s; }

UltraFun pointwise(const UltraFun& a, const UltraFun& b) {
  require_same_basis(a, b);
  return UltraFun(a.basis, a.values.cwiseProduct(b.values));
}

UltraFun project(const BasisPtr& basis, const ScalarField& g, const std::function<bool(const Point&)>& undefined) {
  UltraFun u(basis);
  for (int a = 0; a < basis->size(); ++a) {
    const Point& x = basis->point(a);
    if (undefined && undefined(x)) continue;
    double v = g(x);
    if (!std::isfinite(v)) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "function is not finite at Gamma point %d (%.6g, %.6g)", a, x[0], x[1]);
      throw Error(buf);
    }
    u.values[a] = v;
  }
  return u;
}

UltraFun sigma_function(const BasisPtr& basis, int a) {
  if (a < 0 || a >= basis->size()) throw std::out_of_range("Gamma index out of range");
  UltraFun u(basis);
  u.values[a] = 1.0;
  return u;
}

UltraFun delta_at(const BasisPtr& basis, int q) {
  UltraFun u = sigma_function(basis, q);
  const double eta = basis->eta()[q];
  if (eta == 0.0) throw Error("delta at a point with zero weight");
  u.values[q] = 1.0 / eta;
  return u;
}

UltraFun delta_at(const BasisPtr& basis, const Point& q) {
  int a = basis->find_point(q);
  if (a < 0) throw std::invalid_argument("point is not in Gamma");
  return delta_at(basis, a);
}

UltraFun theta_of(const BasisPtr& basis, const CellSet& region) {
  const Partition& p = basis->partition();
  return project(basis, [&](const Point& x) { return density_at(p, region, x); });
}

UltraFun chi_of(const BasisPtr& basis, const CellSet& region) {
  const Partition& p = basis->partition();
  return project(basis, [&](const Point& x) { return density_at(p, region, x) == 1.0 ? 1.0 : 0.0; });
}

UltraFun closure_chi_of(const BasisPtr& basis, const CellSet& region) {
  const Partition& p = basis->partition();
  return project(basis, [&](const Point& x) { return density_at(p, region, x) > 0.0 ? 1.0 : 0.0; });
}

void write_csv(const UltraFun& u, std::ostream& os) {
  const GammaBasis& b = *u.basis;
  os << (b.dim() == 2 ? "x,y,cell,value\n" : "x,cell,value\n");
  char buf[128];
  for (int a = 0; a < b.size(); ++a) {
    const Point& x = b.point(a);
    if (b.dim() == 2)
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%.17g\n", x[0], x[1], b.owner(a), u.values[a]);
    else
      std::snprintf(buf, sizeof buf, "%.17g,%d,%.17g\n", x[0], b.owner(a), u.values[a]);
    os << buf;
  }
}

}  // namespace ultra
