#include "ultra/variational.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <thread>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <boost/math/tools/minima.hpp>

#include "ultra/quadrature.hpp"

namespace ultra {

void FunctionalSpec::validate() const {
  if (!(p > 1.0)) throw std::invalid_argument("gradient exponent p must exceed 1");
  if (!(p > q)) throw std::invalid_argument("non-coercive functional: need p > q");
  if (degenerate && degenerate->first > degenerate->second) throw std::invalid_argument("empty degenerate interval");
}

bool FunctionalSpec::quadratic() const { return !a && p == 2.0 && !f && !degenerate; }

std::vector<double> facet_weights(const FunctionalSpec& spec, const Gradient& grad, const UltraFun& u) {
  const GammaBasis& b = *grad.basis();
  const Partition& part = b.partition();
  std::vector<double> w(part.facets().size(), 1.0);
  if (!spec.degenerate) return w;
  const double lo = spec.degenerate->first - 1e-9, hi = spec.degenerate->second + 1e-9;
  auto inside = [&](int cell, const std::vector<Point>& pts) {
    const CellBlock& blk = b.block(cell);
    Eigen::VectorXd t = b.space(cell).values(pts) * (blk.sigma * u.values.segment(blk.offset, blk.size));
    return t.minCoeff() >= lo && t.maxCoeff() <= hi;
  };
  for (const Facet& f : part.facets()) {
    if (f.exterior()) continue;
    Rule r = facet_rule(f, b.dim(), b.options().degree + 2);
    if (inside(f.left, r.points) && inside(f.right, r.points)) w[f.id] = 0.0;
  }
  return w;
}

double energy(const FunctionalSpec& spec, const Gradient& grad, const UltraFun& u) {
  const GammaBasis& b = *grad.basis();
  if (u.basis != grad.basis()) throw std::invalid_argument("function lives on a different basis");
  std::vector<double> w = facet_weights(spec, grad, u);
  const bool all_kept = std::all_of(w.begin(), w.end(), [](double v) { return v == 1.0; });
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(b.size());
  for (int i = 0; i < grad.dim(); ++i) {
    Eigen::VectorXd du = all_kept ? Eigen::VectorXd(grad[i].matrix() * u.values)
                                  : Eigen::VectorXd(grad[i].matrix_with_weights(w) * u.values);
    sq += du.cwiseAbs2();
  }
  double s = 0.0;
  for (int a = 0; a < b.size(); ++a) {
    const double ua = u.values[a];
    const double coef = spec.a ? spec.a(ua) : 1.0;
    const double grad_term = spec.p == 2.0 ? sq[a] : std::pow(sq[a], 0.5 * spec.p);
    double lower = 0.0;
    if (spec.f) lower = spec.f(b.point(a), ua);
    else if (spec.linear_source) lower = spec.linear_source(b.point(a)) * ua;
    s += b.eta()[a] * (0.5 * coef * grad_term - lower);
  }
  return s;
}

namespace {

MinimizeResult direct_minimize(const FunctionalSpec& spec, const Gradient& grad) {
  const GammaBasis& b = *grad.basis();
  const int n = b.size();
  Eigen::SparseMatrix<double> k(n, n);
  for (int i = 0; i < grad.dim(); ++i) {
    const auto& m = grad[i].matrix();
    k += Eigen::SparseMatrix<double>(m.transpose()) * b.eta().asDiagonal() * m;
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  if (spec.linear_source)
    for (int a = 0; a < n; ++a) rhs[a] = b.eta()[a] * spec.linear_source(b.point(a));
  std::vector<char> fixed(n, 0);
  for (int a : spec.fixed) fixed.at(a) = 1;
  std::vector<Eigen::Triplet<double>> t;
  for (int c = 0; c < k.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(k, c); it; ++it)
      if (!fixed[it.row()]) t.emplace_back(it.row(), it.col(), it.value());
  for (int a = 0; a < n; ++a)
    if (fixed[a]) {
      t.emplace_back(a, a, 1.0);
      rhs[a] = 0.0;
    }
  Eigen::SparseMatrix<double> sys(n, n);
  sys.setFromTriplets(t.begin(), t.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(sys);
  if (lu.info() != Eigen::Success) throw Error("minimize: quadratic system is singular");
  MinimizeResult r;
  r.u = UltraFun(grad.basis(), lu.solve(rhs));
  for (int a : spec.fixed) r.u.values[a] = 0.0;
  r.energy = energy(spec, grad, r.u);
  r.converged = true;
  r.history.push_back(r.energy);
  return r;
}

struct Descent {
  UltraFun u;
  double e;
  bool converged;
  int sweeps;
  std::vector<double> history;
};

Descent descend(const FunctionalSpec& spec, const Gradient& grad, UltraFun u, const MinimizeOptions& o,
                const std::vector<int>& free) {
  Descent d{u, energy(spec, grad, u), false, 0, {}};
  d.history.push_back(d.e);
  double step = o.initial_step;
  while (d.sweeps < o.max_sweeps) {
    bool improved = false;
    for (int a : free) {
      for (double s : {step, -step}) {
        d.u.values[a] += s;
        const double e = energy(spec, grad, d.u);
        if (e < d.e - 1e-15 * (1.0 + std::abs(d.e))) {
          d.e = e;
          improved = true;
          break;
        }
        d.u.values[a] -= s;
      }
    }
    ++d.sweeps;
    if (improved) {
      d.history.push_back(d.e);
    } else {
      // no coordinate move of this size helps: stationary at this step
      if (step <= o.min_step) {
        d.converged = true;
        break;
      }
      step *= 0.5;
    }
  }
  return d;
}

}  // namespace

MinimizeResult minimize(const FunctionalSpec& spec, const Gradient& grad, const MinimizeOptions& options) {
  spec.validate();
  const BasisPtr& basis = grad.basis();
  if (spec.quadratic()) return direct_minimize(spec, grad);

  std::vector<char> fixed(basis->size(), 0);
  for (int a : spec.fixed) fixed.at(a) = 1;
  std::vector<int> free;
  for (int a = 0; a < basis->size(); ++a)
    if (!fixed[a]) free.push_back(a);

  UltraFun start = options.start ? *options.start : UltraFun(basis);
  if (start.basis != basis) throw std::invalid_argument("start lives on a different basis");
  for (int a : spec.fixed) start.values[a] = 0.0;

  Descent best = descend(spec, grad, start, options, free);
  MinimizeResult r;
  r.history = best.history;
  std::mt19937 rng(options.seed);
  std::normal_distribution<double> N;
  for (int t = 0; t < options.restarts; ++t) {
    UltraFun s = best.u;
    const double scale = 0.1 * (1.0 + s.values.cwiseAbs().maxCoeff());
    for (int a : free) s.values[a] += scale * N(rng);
    Descent d = descend(spec, grad, s, options, free);
    if (d.e < best.e) best = std::move(d);
  }
  r.u = best.u;
  r.energy = best.e;
  r.converged = best.converged;
  r.sweeps = best.sweeps;
  return r;
}

PoissonResult poisson_solve(const Gradient& grad, const UltraFun& source, const std::vector<int>& fixed,
                            LinearSolver solver) {
  if (fixed.empty()) throw std::invalid_argument("poisson_solve needs at least one fixed point");
  const BasisPtr& basis = grad.basis();
  if (source.basis != basis) throw std::invalid_argument("source lives on a different basis");
  const int n = basis->size();
  Eigen::SparseMatrix<double> a = -(basis->eta().asDiagonal() * laplacian_matrix(grad));
  Eigen::VectorXd rhs = basis->eta().cwiseProduct(source.values);
  std::vector<char> is_fixed(n, 0);
  for (int q : fixed) is_fixed.at(q) = 1;
  std::vector<Eigen::Triplet<double>> t;
  for (int c = 0; c < a.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, c); it; ++it)
      if (!is_fixed[it.row()]) t.emplace_back(it.row(), it.col(), it.value());
  for (int q = 0; q < n; ++q)
    if (is_fixed[q]) {
      t.emplace_back(q, q, 1.0);
      rhs[q] = 0.0;
    }
  Eigen::SparseMatrix<double> sys(n, n);
  sys.setFromTriplets(t.begin(), t.end());

  Eigen::VectorXd x;
  auto fail = [&](const char* what) {
    auto s = basis->summary();
    char buf[256];
    std::snprintf(buf, sizeof buf, "poisson_solve: %s (points %d, nonpositive eta %d, gram condition %.3e)", what, n,
                  s["nonpositive_eta"].get<int>(), s["gram_condition_max"].get<double>());
    throw Error(buf);
  };
  if (solver == LinearSolver::SparseLU) {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(sys);
    if (lu.info() != Eigen::Success) fail("system is singular");
    x = lu.solve(rhs);
  } else {
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> it;
    it.preconditioner().setDroptol(1e-12);
    it.preconditioner().setFillfactor(40);
    it.setTolerance(1e-15);
    it.setMaxIterations(20 * n);
    it.compute(sys);
    if (it.info() != Eigen::Success) fail("preconditioner setup failed");
    x = it.solve(rhs);
    // one refinement step against the assembled system
    x += it.solve(rhs - sys * x);
  }
  PoissonResult r;
  const double bn = rhs.norm();
  r.residual = (sys * x - rhs).norm() / (bn > 0.0 ? bn : 1.0);
  if (!(r.residual <= 1e-10)) {
    char what[64];
    std::snprintf(what, sizeof what, "relative residual %.3e above 1e-10", r.residual);
    fail(what);
  }
  for (int q : fixed) x[q] = 0.0;
  r.u = UltraFun(basis, x);
  return r;
}

Oracle1D::Oracle1D(double g) : gamma(g) {
  if (!(g > 0.0)) throw std::invalid_argument("gamma must be positive");
}

double Oracle1D::xi_candidate() const {
  if (!(gamma > 2.0)) throw std::invalid_argument("the jump candidate needs gamma > 2");
  return 1.0 - std::sqrt(1.0 - 2.0 / gamma);
}

double Oracle1D::F(double x) const {
  const double g = gamma, g2 = g * g;
  return g2 * x * x * x / 8 - g2 * x * x / 2 + g2 * x / 2 - g2 / 6 + 1.5 * g * x - 2 * g + 1 / (2 * x);
}

double Oracle1D::dF(double x) const {
  const double g = gamma, g2 = g * g;
  return 3 * g2 * x * x / 8 - g2 * x + g2 / 2 + 1.5 * g - 1 / (2 * x * x);
}

double Oracle1D::d2F(double x) const {
  const double g2 = gamma * gamma;
  return 0.75 * g2 * x - g2 + 1 / (x * x * x);
}

double Oracle1D::d3F(double x) const { return 0.75 * gamma * gamma - 3 / (x * x * x * x); }

double Oracle1D::M_of(double g) {
  Oracle1D o(g);
  return o.F(std::sqrt(2.0 / g)) - o.F(1.0);
}

double Oracle1D::M() const { return M_of(gamma); }

double Oracle1D::dM() const {
  const double g = gamma, r2 = std::sqrt(2.0), rg = std::sqrt(g);
  return 0.25 * (-g + 3 * r2 * rg + 4 * r2 / rg - 10);
}

double Oracle1D::Phi(double s) { return -s / 2 + s * s / 2 - s * s * s / 6; }

double Oracle1D::dPhi(double s) { return -0.5 * (s - 1) * (s - 1); }

double Oracle1D::gamma_star() { return 2.0 * (3.0 + 2.0 * std::sqrt(2.0)); }

double Oracle1D::argmin_F(int grid) const {
  int best = 1;
  double fb = F(1.0 / grid);
  for (int i = 2; i <= grid; ++i) {
    const double v = F(static_cast<double>(i) / grid);
    if (v < fb) fb = v, best = i;
  }
  if (best == grid) return 1.0;
  const double lo = static_cast<double>(best - 1) / grid, hi = static_cast<double>(best + 1) / grid;
  auto r = boost::math::tools::brent_find_minima([this](double x) { return F(x); }, std::max(lo, 1e-12), hi,
                                                 std::numeric_limits<double>::digits / 2);
  return r.first;
}

double Oracle1D::smooth(double x) const { return 0.5 * gamma * (2 * x - x * x); }

double Oracle1D::candidate(double x, double xi) const {
  const double g = gamma;
  if (x < xi || xi >= 1.0) return -g * x * x / 2 + (1 / xi + g * xi / 2) * x;
  return -g * x * x / 2 + g * x + 2 + g * xi * xi / 2 - g * xi;
}

double Oracle1D::competitor(double x, double xi, double eta) const {
  const double g = gamma;
  if (x < xi) return -g * x * x / 2 + (1 / xi + g * xi / 2) * x;
  if (x < eta) return 2.0;
  return g * eta * eta / 2 - g * eta - g * x * x / 2 + g * x + 2;
}

nlohmann::json Oracle1D::to_json() const {
  nlohmann::json j;
  j["gamma"] = gamma;
  j["gamma_star"] = gamma_star();
  j["M"] = M();
  j["F(1)"] = F(1.0);
  if (gamma > 2.0) {
    const double xi = xi_candidate();
    j["xi_candidate"] = xi;
    j["F(xi_candidate)"] = F(xi);
    const double am = argmin_F();
    j["argmin_F"] = am;
    j["min_F"] = F(am);
  }
  return j;
}

nlohmann::json DegenerateResult::to_json() const {
  nlohmann::json j;
  j["gamma"] = gamma;
  j["jump_location"] = jump_location;
  j["energy"] = energy;
  j["oracle_jump"] = oracle_jump;
  j["oracle_energy"] = oracle_energy;
  j["points"] = u.size();
  j["cells"] = u.basis ? u.basis->partition().cell_count() : 0;
  j["candidates"] = candidates.size();
  return j;
}

FunctionalSpec degenerate_spec(const BasisPtr& basis, double gamma) {
  FunctionalSpec s;
  s.a = [](double u) { return u >= 1.0 && u <= 2.0 ? 0.0 : 1.0; };
  s.f = [gamma](const Point&, double u) { return gamma * u; };
  s.q = 1.0;
  s.degenerate = std::make_pair(1.0, 2.0);
  const int origin = basis->find_point({basis->partition().domain().lo[0], 0.0});
  if (origin < 0) throw Error("degenerate problem needs a node at the left end");
  s.fixed = {origin};
  return s;
}

Degenerate1DSetup Degenerate1DSetup::make(int cells, int degree) {
  auto p = Partition::build(Domain::interval(0, 1), {cells});
  BasisPtr b = GammaBasis::build(p, {degree, 1, true});
  return {b, Gradient::assemble(b, {BoundaryMode::Natural, {}})};
}

double candidate_energy(const Degenerate1DSetup& s, double gamma, double xi) {
  Oracle1D o(gamma);
  UltraFun u = project(s.basis, [&](const Point& x) { return o.candidate(x[0], xi); });
  return energy(degenerate_spec(s.basis, gamma), s.grad, u);
}

double competitor_energy(const Degenerate1DSetup& s, double gamma, double xi, double eta) {
  Oracle1D o(gamma);
  UltraFun u = project(s.basis, [&](const Point& x) { return o.competitor(x[0], xi, eta); });
  return energy(degenerate_spec(s.basis, gamma), s.grad, u);
}

UltraFun smooth_1d(const Degenerate1DSetup& s, double gamma) {
  FunctionalSpec spec;
  spec.linear_source = [gamma](const Point&) { return gamma; };
  spec.fixed = {s.basis->find_point({0.0, 0.0})};
  if (spec.fixed[0] < 0) throw Error("smooth problem needs a node at the left end");
  return minimize(spec, s.grad).u;
}

DegenerateResult degenerate_1d(double gamma, int cells, int degree) {
  return degenerate_1d(gamma, Degenerate1DSetup::make(cells, degree));
}

DegenerateResult degenerate_1d(double gamma, const Degenerate1DSetup& setup) {
  if (!(gamma > 2.0)) throw std::invalid_argument("degenerate_1d needs gamma > 2; use minimize for the smooth regime");
  Oracle1D o(gamma);
  const Partition& p = setup.basis->partition();
  const int n = p.cell_count();
  std::vector<double> xis;
  for (int j = 1; j <= n; ++j) xis.push_back(j == n ? 1.0 : p.domain().lo[0] + j * p.spacing(0));
  std::vector<double> e(xis.size());

  const int workers = std::max(1u, std::min(std::thread::hardware_concurrency(), 8u));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < xis.size(); i += workers) e[i] = candidate_energy(setup, gamma, xis[i]);
    });
  for (auto& t : pool) t.join();

  DegenerateResult r;
  r.gamma = gamma;
  std::size_t best = 0;
  for (std::size_t i = 0; i < xis.size(); ++i) {
    r.candidates.push_back({xis[i], e[i]});
    if (e[i] < e[best]) best = i;  // strict: ties keep the smaller xi
  }
  r.jump_location = xis[best];
  r.energy = e[best];
  r.u = project(setup.basis, [&](const Point& x) { return o.candidate(x[0], r.jump_location); });
  r.oracle_jump = o.argmin_F();
  r.oracle_energy = o.F(r.oracle_jump);
  return r;
}

void write_oracle_curve(const Oracle1D& o, std::ostream& os, int samples, double lo) {
  os << "xi,F\n";
  char buf[96];
  for (int i = 0; i < samples; ++i) {
    const double x = lo + (1.0 - lo) * i / (samples - 1);
    std::snprintf(buf, sizeof buf, "%.10f,%.15g\n", x, o.F(x));
    os << buf;
  }
}

}  // namespace ultra
