#include "ultra/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "ultra/distrib.hpp"
#include "ultra/gauss.hpp"
#include "ultra/integral.hpp"
#include "ultra/quadrature.hpp"
#include "ultra/variational.hpp"

namespace ultra::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

const std::map<std::string, double>& RunConfig::default_tolerances() {
  static const std::map<std::string, double> t{
      {"duality", 1e-8},    {"delta", 1e-8},    {"delta_symmetry", 1e-10}, {"integration_by_parts", 1e-8},
      {"skew_matrix", 1e-10}, {"axiom_II", 1e-8}, {"axiom_IV", 1e-8},        {"gauss", 1e-9},
      {"poisson", 1e-8}};
  return t;
}

namespace {

const std::vector<std::string> kExperiments{"check", "degenerate1d", "poisson", "gauss", "refine-study"};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<int> default_cells(const std::string& e, int dim) {
  if (e == "degenerate1d") return {64};
  if (e == "gauss") return dim == 1 ? std::vector<int>{16} : std::vector<int>{16, 16};
  if (e == "refine-study") return dim == 1 ? std::vector<int>{4} : std::vector<int>{8, 8};
  if (e == "poisson") return dim == 1 ? std::vector<int>{8} : std::vector<int>{8, 8};
  return dim == 1 ? std::vector<int>{8} : std::vector<int>{4, 4};
}

int default_degree(const std::string& e, int dim) {
  if (e == "degenerate1d") return 3;
  if (e == "poisson") return dim == 1 ? 3 : 1;
  if (e == "gauss" || e == "refine-study") return 1;
  return 2;
}

int default_dim(const std::string& e, const std::string& quantity) {
  return e == "gauss" || (e == "refine-study" && quantity == "perimeter") ? 2 : 1;
}

}  // namespace

int RunConfig::dim() const {
  if (!lo.empty()) return static_cast<int>(lo.size());
  if (cells) return static_cast<int>(cells->size());
  return default_dim(experiment, quantity);
}

RunConfig RunConfig::resolved() const {
  RunConfig c = *this;
  if (std::find(kExperiments.begin(), kExperiments.end(), c.experiment) == kExperiments.end())
    throw std::invalid_argument("unknown experiment '" + c.experiment + "'");
  if (c.experiment == "degenerate1d" && c.dim() != 1) throw std::invalid_argument("degenerate1d is one-dimensional");
  if (c.experiment == "gauss" && c.dim() == 1 && c.region != "half")
    throw std::invalid_argument("region '" + c.region + "' needs a two-dimensional domain");
  if (c.lo.empty() && c.hi.empty()) {
    const int d = c.dim();
    c.lo.assign(d, 0.0);
    c.hi.assign(d, 1.0);
  }
  if (!c.cells) c.cells = default_cells(c.experiment, c.dim());
  if (!c.gamma) c.gamma = c.experiment == "refine-study" ? 1.5 : 4.0;
  if (c.experiment == "refine-study" && c.quantity == "solution_error" && c.dim() == 1 && *c.gamma > 2.0)
    throw std::invalid_argument("the 1D solution_error study is the smooth problem and needs gamma <= 2");
  if (!c.degree) c.degree = default_degree(c.experiment, c.dim());
  std::map<std::string, double> t = default_tolerances();
  for (const auto& [k, v] : c.tolerances) {
    if (!t.count(k)) throw std::invalid_argument("unknown tolerance '" + k + "'");
    t[k] = v;
  }
  c.tolerances = t;
  c.validate();
  return c;
}

void RunConfig::validate() const {
  if (lo.size() != hi.size() || lo.empty() || lo.size() > 2) throw std::invalid_argument("domain must be 1D or 2D");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (!(lo[i] < hi[i])) throw std::invalid_argument("domain needs lo < hi on every axis");
  if (cells) {
    if (static_cast<int>(cells->size()) != dim())
      throw std::invalid_argument("cells must give one count per axis (" + std::to_string(dim()) + ")");
    for (int n : *cells)
      if (n < 1) throw std::invalid_argument("cells must be positive");
  }
  if (degree && *degree < 1) throw std::invalid_argument("degree k must be at least 1");
  if (seeds < 1) throw std::invalid_argument("seeds per axis must be at least 1");
  if (levels < 1) throw std::invalid_argument("levels must be at least 1");
  if (gamma && !(*gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (region != "disk" && region != "koch" && region != "half") throw std::invalid_argument("unknown region '" + region + "'");
  if (quantity != "perimeter" && quantity != "pairing" && quantity != "solution_error")
    throw std::invalid_argument("unknown quantity '" + quantity + "'");
  if (solver != "sparselu" && solver != "bicgstab") throw std::invalid_argument("unknown solver '" + solver + "'");
  for (const auto& [k, v] : tolerances)
    if (!(v > 0.0)) throw std::invalid_argument("tolerance '" + k + "' must be positive");
}

json RunConfig::to_json() const {
  json j;
  j["experiment"] = experiment;
  j["lo"] = lo;
  j["hi"] = hi;
  if (cells) j["cells"] = *cells;
  if (degree) j["degree"] = *degree;
  j["seeds"] = seeds;
  j["levels"] = levels;
  if (gamma) j["gamma"] = *gamma;
  j["region"] = region;
  j["quantity"] = quantity;
  j["solver"] = solver;
  j["tolerances"] = tolerances;
  return j;
}

std::string RunConfig::hash() const {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json().dump())));
  return buf;
}

RunConfig RunConfig::merge_json(RunConfig c, const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  static const std::vector<std::string> keys{"experiment", "lo",       "hi",     "cells", "degree", "seeds", "levels",
                                             "gamma",      "region",   "quantity", "solver", "out",  "tolerances"};
  for (const auto& [k, v] : j.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw std::invalid_argument("unknown config key '" + k + "'");
  try {
    if (j.contains("experiment")) c.experiment = j["experiment"].get<std::string>();
    if (j.contains("lo")) c.lo = j["lo"].get<std::vector<double>>();
    if (j.contains("hi")) c.hi = j["hi"].get<std::vector<double>>();
    if (j.contains("cells")) c.cells = j["cells"].get<std::vector<int>>();
    if (j.contains("degree")) c.degree = j["degree"].get<int>();
    if (j.contains("seeds")) c.seeds = j["seeds"].get<int>();
    if (j.contains("levels")) c.levels = j["levels"].get<int>();
    if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
    if (j.contains("region")) c.region = j["region"].get<std::string>();
    if (j.contains("quantity")) c.quantity = j["quantity"].get<std::string>();
    if (j.contains("solver")) c.solver = j["solver"].get<std::string>();
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    if (j.contains("tolerances"))
      for (const auto& [k, v] : j["tolerances"].items()) c.tolerances[k] = v.get<double>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return c;
}

std::string provenance_csv(const RunConfig& cfg, const std::string& level) {
  std::ostringstream os;
  os << "# ultra " << cfg.experiment << "\n";
  os << "# config_hash: " << cfg.hash() << "\n";
  os << "# level: " << level << "\n";
  os << "# tolerances:";
  for (const auto& [k, v] : cfg.tolerances) os << " " << k << "=" << fmt("%.3g", v);
  os << "\n# config: " << cfg.to_json().dump() << "\n";
  return os.str();
}

json provenance_json(const RunConfig& cfg, const std::string& level) {
  return {{"config_hash", cfg.hash()}, {"level", level}, {"tolerances", cfg.tolerances}, {"config", cfg.to_json()}};
}

namespace {

Domain domain_of(const RunConfig& c) {
  return c.dim() == 1 ? Domain::interval(c.lo[0], c.hi[0]) : Domain::rectangle(c.lo[0], c.hi[0], c.lo[1], c.hi[1]);
}

Partition partition_of(const RunConfig& c) { return Partition::build(domain_of(c), *c.cells); }

BasisPtr basis_of(const RunConfig& c, bool boundary_nodes = false) {
  return GammaBasis::build(partition_of(c), {*c.degree, c.seeds, boundary_nodes});
}

UltraFun random_fun(const BasisPtr& b, std::mt19937& rng) {
  std::normal_distribution<double> N;
  UltraFun u(b);
  for (int a = 0; a < b->size(); ++a) u.values[a] = N(rng);
  return u;
}

double trace_value(const UltraFun& u, int cell, const Point& x) {
  const CellBlock& blk = u.basis->block(cell);
  return u.basis->trace(cell, x).dot(u.values.segment(blk.offset, blk.size));
}

// random continuous polynomial of total degree <= deg with its gradient
struct Poly {
  std::vector<std::array<double, 3>> terms;
  double operator()(const Point& x) const {
    double s = 0.0;
    for (const auto& t : terms) s += t[2] * std::pow(x[0], t[0]) * std::pow(x[1], t[1]);
    return s;
  }
  double d(const Point& x, int axis) const {
    double s = 0.0;
    for (const auto& t : terms) {
      if (t[axis] == 0.0) continue;
      s += t[2] * t[axis] *
           (axis == 0 ? std::pow(x[0], t[0] - 1) * std::pow(x[1], t[1]) : std::pow(x[0], t[0]) * std::pow(x[1], t[1] - 1));
    }
    return s;
  }
};

Poly random_poly(int dim, int deg, std::mt19937& rng) {
  std::normal_distribution<double> N;
  Poly p;
  for (int px = 0; px <= deg; ++px)
    for (int py = 0; px + py <= deg; ++py)
      if (dim == 2 || py == 0) p.terms.push_back({double(px), double(py), N(rng)});
  return p;
}

CellSet random_region(const Partition& p, std::mt19937& rng) {
  std::bernoulli_distribution coin(0.5);
  std::vector<int> ids;
  for (int c = 0; c < p.cell_count(); ++c)
    if (coin(rng)) ids.push_back(c);
  return CellSet(ids, p.cell_count());
}

double max_abs(const Eigen::SparseMatrix<double>& m) {
  double s = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) s = std::max(s, std::abs(it.value()));
  return s;
}

double suite_duality(const BasisPtr& b) {
  double err = 0.0;
  for (int a = 0; a < b->size(); ++a) {
    const int c = b->owner(a);
    const CellBlock& blk = b->block(c);
    UltraFun da(b);
    for (int q = blk.offset; q < blk.offset + blk.size; ++q)
      da.values[q] = b->space(c).values(b->point(q)).dot(blk.delta.col(a - blk.offset));
    for (int q = blk.offset; q < blk.offset + blk.size; ++q) {
      const double want = a == q ? 1.0 : 0.0;
      err = std::max(err, std::abs(inner(da, sigma_function(b, q)) - want));
      err = std::max(err, std::abs(b->trace(c, b->point(q))[a - blk.offset] - want));
    }
    const double eta = b->eta()[a];
    UltraFun s = sigma_function(b, a);
    err = std::max(err, std::abs(inner(s, s) - eta) / (1.0 + std::abs(eta)));
  }
  return err;
}

std::pair<double, double> suite_delta(const BasisPtr& b) {
  std::mt19937 rng(101);
  std::vector<UltraFun> deltas;
  for (int q = 0; q < b->size(); ++q) deltas.push_back(delta_at(b, q));
  double err = 0.0, sym = 0.0;
  for (int t = 0; t < 100; ++t) {
    UltraFun v = random_fun(b, rng);
    for (int q = 0; q < b->size(); ++q) err = std::max(err, std::abs(inner(v, deltas[q]) - v.values[q]));
  }
  for (int a = 0; a < b->size(); ++a)
    for (int q = 0; q < b->size(); ++q) sym = std::max(sym, std::abs(deltas[a].values[q] - deltas[q].values[a]));
  return {err, sym};
}

std::pair<double, double> suite_ibp(const Gradient& g) {
  const BasisPtr& b = g.basis();
  double skew = 0.0;
  for (int i = 0; i < g.dim(); ++i) {
    Eigen::SparseMatrix<double> hm = b->eta().asDiagonal() * g[i].matrix();
    Eigen::SparseMatrix<double> s = hm + Eigen::SparseMatrix<double>(hm.transpose());
    skew = std::max(skew, max_abs(s) / max_abs(hm));
  }
  std::mt19937 rng(103);
  double err = 0.0;
  for (int i = 0; i < g.dim(); ++i)
    for (int t = 0; t < 100; ++t) {
      UltraFun u = random_fun(b, rng), v = random_fun(b, rng);
      const double s = inner(g[i].apply(u), v) + inner(u, g[i].apply(v));
      const double scale = 1.0 + std::sqrt(std::abs(inner(u, u) * inner(v, v)));
      err = std::max(err, std::abs(s) / scale);
    }
  return {err, skew};
}

double suite_axiom2(const Gradient& g) {
  const BasisPtr& b = g.basis();
  const Partition& p = b->partition();
  std::mt19937 rng(107);
  double err = 0.0;
  for (int t = 0; t < 5; ++t) {
    Poly f = random_poly(b->dim(), b->options().degree - 1, rng);
    UltraFun u = project(b, f);
    for (int i = 0; i < g.dim(); ++i) {
      UltraFun du = g[i].apply(u);
      for (int a = 0; a < b->size(); ++a)
        if (!p.touches_boundary(b->owner(a))) err = std::max(err, std::abs(du.values[a] - f.d(b->point(a), i)));
    }
  }
  return err;
}

// inner(D(u theta), v) against the pointwise volume term plus the facet flux of {u v}
double suite_axiom4(const Gradient& g) {
  const BasisPtr& b = g.basis();
  const Partition& p = b->partition();
  const int m = (b->options().degree + 1) / 2;
  std::mt19937 rng(109);
  double err = 0.0;
  for (int t = 0; t < 20; ++t) {
    Poly f = random_poly(b->dim(), m, rng);
    CellSet E = random_region(p, rng);
    UltraFun u = project(b, f), th = theta_of(b, E), v = random_fun(b, rng);
    const int i = t % b->dim();
    const double lhs = inner(g[i].apply(pointwise(u, th)), v);
    double flux = 0.0;
    for (const Facet& fc : p.facets()) {
      if (fc.axis != i) continue;
      const bool in_l = E.contains(fc.left), in_r = !fc.exterior() && E.contains(fc.right);
      if (in_l == in_r) continue;
      const int inside = in_l ? fc.left : fc.right;
      Rule r = facet_rule(fc, b->dim(), b->options().degree + 3);
      double s = 0.0;
      for (std::size_t q = 0; q < r.points.size(); ++q) {
        const Point& x = r.points[q];
        const double ui = trace_value(u, inside, x), vi = trace_value(v, inside, x);
        // the exterior state is zero
        const double vo = fc.exterior() ? 0.0 : trace_value(v, in_l ? fc.right : fc.left, x);
        s += r.weights[q] * 0.5 * ui * (vi + vo);
      }
      flux -= fc.normal_from(inside)[i] * s;
    }
    const double rhs = sqint(pointwise(pointwise(project(b, [&](const Point& x) { return f.d(x, i); }), v), th)) + flux;
    err = std::max(err, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
  }
  return err;
}

double suite_gauss(const Gradient& g) {
  const BasisPtr& b = g.basis();
  const Partition& p = b->partition();
  std::mt19937 rng(113);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const Domain& d = p.domain();
  double err = 0.0;
  for (int t = 0; t < 50; ++t) {
    CellSet A;
    if (p.dim() == 2 && t % 2 == 0) {
      const Point c{d.lo[0] + U(rng) * d.extent(0), d.lo[1] + U(rng) * d.extent(1)};
      A = disk_region(p, c, (0.15 + 0.3 * U(rng)) * std::min(d.extent(0), d.extent(1)));
    } else {
      A = random_region(p, rng);
    }
    std::vector<UltraFun> phi;
    for (int i = 0; i < p.dim(); ++i) phi.push_back(random_fun(b, rng));
    GaussSides s = gauss_check(g, phi, A);
    err = std::max(err, s.residual() / (1.0 + std::abs(s.lhs)));
  }
  return err;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
}

void write_file(const RunConfig& cfg, const std::string& name, const std::string& body) {
  ensure_dir(cfg.out);
  std::ofstream f(fs::path(cfg.out) / name, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + (fs::path(cfg.out) / name).string());
  f << body;
}

void write_json(const RunConfig& cfg, const std::string& name, json j, const std::string& level) {
  j["provenance"] = provenance_json(cfg, level);
  write_file(cfg, name, j.dump(2) + "\n");
}

std::string profile_csv(const UltraFun& u, const std::function<double(double)>& exact) {
  std::vector<int> order(u.size());
  std::iota(order.begin(), order.end(), 0);
  const auto& b = *u.basis;
  std::stable_sort(order.begin(), order.end(), [&](int a, int c) { return b.point(a)[0] < b.point(c)[0]; });
  std::string s = exact ? "x,u,exact\n" : "x,u\n";
  char buf[128];
  for (int a : order) {
    const double x = b.point(a)[0];
    if (exact) std::snprintf(buf, sizeof buf, "%.12g,%.15g,%.15g\n", x, u.values[a], exact(x));
    else std::snprintf(buf, sizeof buf, "%.12g,%.15g\n", x, u.values[a]);
    s += buf;
  }
  return s;
}

std::string level_list(int levels) {
  std::string s;
  for (int l = 0; l < levels; ++l) s += (l ? "," : "") + std::to_string(l);
  return s;
}

}  // namespace

std::vector<SuiteResult> run_suites(const RunConfig& cfg) {
  BasisPtr b = basis_of(cfg);
  Gradient g = Gradient::assemble(b);
  const auto& t = cfg.tolerances;
  std::vector<SuiteResult> r;
  r.push_back({"duality", suite_duality(b), t.at("duality")});
  auto [d, sym] = suite_delta(b);
  r.push_back({"delta", d, t.at("delta")});
  r.push_back({"delta_symmetry", sym, t.at("delta_symmetry")});
  auto [ibp, skew] = suite_ibp(g);
  r.push_back({"integration_by_parts", ibp, t.at("integration_by_parts")});
  r.push_back({"skew_matrix", skew, t.at("skew_matrix")});
  r.push_back({"axiom_II", suite_axiom2(g), t.at("axiom_II")});
  r.push_back({"axiom_IV", suite_axiom4(g), t.at("axiom_IV")});
  r.push_back({"gauss", suite_gauss(g), t.at("gauss")});
  return r;
}

int cmd_check(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto suites = run_suites(cfg);
  json j;
  j["suites"] = json::array();
  const SuiteResult* first_fail = nullptr;
  for (const auto& s : suites) {
    j["suites"].push_back({{"suite", s.name}, {"max_error", s.max_error}, {"tolerance", s.tolerance}, {"pass", s.pass()}});
    out << (s.pass() ? "PASS " : "FAIL ") << s.name << " max_error=" << fmt("%.3e", s.max_error)
        << " tol=" << fmt("%.3e", s.tolerance) << "\n";
    if (!s.pass() && !first_fail) first_fail = &s;
  }
  j["pass"] = first_fail == nullptr;
  write_json(cfg, "check.json", j, "0");
  if (first_fail) {
    err << "check failed: suite " << first_fail->name << " max_error " << fmt("%.3e", first_fail->max_error)
        << " > tolerance " << fmt("%.3e", first_fail->tolerance) << "\n";
    return 1;
  }
  return 0;
}

int cmd_degenerate1d(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const int n = (*cfg.cells)[0];
  const double h = (cfg.hi[0] - cfg.lo[0]) / n;
  if (cfg.lo[0] != 0.0 || cfg.hi[0] != 1.0) throw std::invalid_argument("degenerate1d is posed on [0, 1]");
  auto setup = Degenerate1DSetup::make(n, *cfg.degree);
  Oracle1D o(*cfg.gamma);
  std::ostringstream curve;
  write_oracle_curve(o, curve);
  write_file(cfg, "oracle_curve.csv", provenance_csv(cfg, "0") + curve.str());
  json j;
  if (*cfg.gamma > 2.0) {
    DegenerateResult r = degenerate_1d(*cfg.gamma, setup);
    j = r.to_json();
    j["branch"] = "jump";
    j["h"] = h;
    j["jump_error"] = std::abs(r.jump_location - r.oracle_jump);
    j["jump_within_2h"] = std::abs(r.jump_location - r.oracle_jump) <= 2 * h;
    j["xi_candidate"] = o.xi_candidate();
    j["F_xi_candidate"] = o.F(o.xi_candidate());
    write_file(cfg, "profile.csv", provenance_csv(cfg, "0") + profile_csv(r.u, {}));
    out << "jump at " << fmt("%.6f", r.jump_location) << " (oracle " << fmt("%.6f", r.oracle_jump) << "), energy "
        << fmt("%.8f", r.energy) << " (oracle " << fmt("%.8f", r.oracle_energy) << ")\n";
  } else {
    UltraFun u = smooth_1d(setup, *cfg.gamma);
    double e = 0.0;
    for (int a = 0; a < u.size(); ++a) e = std::max(e, std::abs(u.values[a] - o.smooth(setup.basis->point(a)[0])));
    j["branch"] = "smooth";
    j["gamma"] = *cfg.gamma;
    j["h"] = h;
    j["points"] = u.size();
    j["cells"] = n;
    j["max_error"] = e;
    j["energy"] = energy(FunctionalSpec{{}, 2.0, {}, 1.0, {}, {}, [&](const Point&) { return *cfg.gamma; }}, setup.grad, u);
    write_file(cfg, "profile.csv", provenance_csv(cfg, "0") + profile_csv(u, [&](double x) { return o.smooth(x); }));
    out << "smooth branch, max error vs parabola " << fmt("%.3e", e) << "\n";
  }
  j["oracle"] = o.to_json();
  write_json(cfg, "summary.json", j, "0");
  return 0;
}

int cmd_poisson(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  BasisPtr b = basis_of(cfg, true);
  Gradient g = Gradient::assemble(b, {BoundaryMode::Natural, {}});
  const Domain& d = b->partition().domain();
  const double pi = std::acos(-1.0);
  ScalarField exact, src;
  if (cfg.dim() == 1) {
    exact = [&](const Point& x) { return (x[0] - d.lo[0]) * (d.hi[0] - x[0]) / 2; };
    src = [](const Point&) { return 1.0; };
  } else {
    exact = [&](const Point& x) {
      return std::sin(pi * (x[0] - d.lo[0]) / d.extent(0)) * std::sin(pi * (x[1] - d.lo[1]) / d.extent(1));
    };
    const double k2 = pi * pi * (1 / (d.extent(0) * d.extent(0)) + 1 / (d.extent(1) * d.extent(1)));
    src = [exact, k2](const Point& x) { return k2 * exact(x); };
  }
  auto r = poisson_solve(g, project(b, src), b->boundary_points(),
                         cfg.solver == "bicgstab" ? LinearSolver::BiCGSTAB : LinearSolver::SparseLU);
  double e = 0.0;
  for (int a = 0; a < b->size(); ++a) e = std::max(e, std::abs(r.u.values[a] - exact(b->point(a))));
  json j{{"problem", cfg.dim() == 1 ? "-u'' = 1" : "sine eigenfunction"},
         {"max_error", e},
         {"residual", r.residual},
         {"points", b->size()},
         {"cells", b->partition().cell_count()},
         {"within_tolerance", e <= cfg.tolerances.at("poisson")}};
  write_json(cfg, "poisson.json", j, "0");
  std::ostringstream csv;
  csv << (cfg.dim() == 1 ? "x,u,exact\n" : "x,y,u,exact\n");
  char buf[160];
  for (int a = 0; a < b->size(); ++a) {
    const Point& x = b->point(a);
    if (cfg.dim() == 1) std::snprintf(buf, sizeof buf, "%.12g,%.15g,%.15g\n", x[0], r.u.values[a], exact(x));
    else std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.15g,%.15g\n", x[0], x[1], r.u.values[a], exact(x));
    csv << buf;
  }
  write_file(cfg, "poisson_solution.csv", provenance_csv(cfg, "0") + csv.str());
  out << "max error " << fmt("%.3e", e) << " residual " << fmt("%.3e", r.residual) << "\n";
  return 0;
}

namespace {

RegionBuilder region_builder(const RunConfig& cfg) {
  if (cfg.region == "koch") return [](const Partition& p, int level) { return koch_region(p, level + 1); };
  if (cfg.region == "half")
    return [](const Partition& p, int) {
      std::vector<int> ids;
      const double mid = 0.5 * (p.domain().lo[0] + p.domain().hi[0]);
      for (const Cell& c : p.cells())
        if (c.center()[0] < mid) ids.push_back(c.id);
      return CellSet(ids, p.cell_count());
    };
  return [](const Partition& p, int) {
    const Domain& d = p.domain();
    const Point c{0.5 * (d.lo[0] + d.hi[0]), 0.5 * (d.lo[1] + d.hi[1])};
    return disk_region(p, c, 0.3 * std::min(d.extent(0), d.extent(1)));
  };
}

VectorField study_field(int dim) {
  if (dim == 1) return {[](const Point& x) { return x[0] * x[0] + 1.0; }};
  return {[](const Point& x) { return std::sin(3 * x[1]); }, [](const Point& x) { return x[0] * x[1]; }};
}

}  // namespace

int cmd_gauss(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  auto rep = region_study(cfg.region, partition_of(cfg), cfg.levels, {*cfg.degree, cfg.seeds}, region_builder(cfg),
                          study_field(cfg.dim()));
  std::ostringstream csv;
  rep.write_csv(csv);
  write_file(cfg, "gauss_" + cfg.region + ".csv", provenance_csv(cfg, level_list(cfg.levels)) + csv.str());
  int bad = -1;
  for (const auto& r : rep.history) {
    out << "level " << r.level << " perimeter " << fmt("%.6f", r.perimeter) << " residual " << fmt("%.3e", r.residual) << "\n";
    if (bad < 0 && !(r.residual <= cfg.tolerances.at("gauss") * (1.0 + std::abs(r.lhs)))) bad = r.level;
  }
  if (bad >= 0) {
    err << "gauss: residual above tolerance at level " << bad << "\n";
    return 1;
  }
  return 0;
}

int cmd_refine_study(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const std::string levels = level_list(cfg.levels);
  std::ostringstream csv;
  if (cfg.quantity == "perimeter") {
    auto rep = region_study(cfg.region, partition_of(cfg), cfg.levels, {*cfg.degree, cfg.seeds}, region_builder(cfg),
                            study_field(cfg.dim()));
    rep.write_csv(csv);
    for (const auto& r : rep.history) out << "level " << r.level << " perimeter " << fmt("%.6f", r.perimeter) << "\n";
  } else if (cfg.quantity == "pairing") {
    if (cfg.levels < 2) throw std::invalid_argument("pairing study needs at least two levels");
    // shrinking mollifier around the domain centre against exp(x)
    const Domain d = domain_of(cfg);
    const Point c{0.5 * (d.lo[0] + d.hi[0]), 0.5 * (d.lo[1] + d.hi[1])};
    Partition base = partition_of(cfg);
    const double w0 = 0.25 * std::min(d.extent(0), d.dim == 2 ? d.extent(1) : d.extent(0));
    const int dim = cfg.dim();
    auto build = [&](int level) {
      Partition p = base;
      for (int l = 0; l < level; ++l) p = p.refine();
      const double e = w0 / (1 << level);
      // (1 - r^2)^3 normalized over the ball
      const double mass = dim == 1 ? 32.0 / 35.0 * e : std::acos(-1.0) / 4.0 * e * e;
      return project(GammaBasis::build(p, {*cfg.degree, cfg.seeds}), [=](const Point& x) {
        double r2 = 0.0;
        for (int i = 0; i < dim; ++i) r2 += (x[i] - c[i]) * (x[i] - c[i]);
        r2 /= e * e;
        return r2 < 1.0 ? std::pow(1.0 - r2, 3) / mass : 0.0;
      });
    };
    StudyResult s = standard_part_study(build, [](const Point& x) { return std::exp(x[0]); }, cfg.levels);
    s.write_csv(csv);
    out << "extrapolated " << fmt("%.10f", s.extrapolated) << " estimate " << fmt("%.3e", s.error_estimate) << "\n";
  } else {
    // error of the smooth variational problem (1D) or the sine Poisson problem (2D)
    csv << "level,cells,points,max_error,ratio\n";
    Partition p = partition_of(cfg);
    double prev = 0.0;
    char buf[128];
    for (int l = 0; l < cfg.levels; ++l, p = p.refine()) {
      double e = 0.0;
      int points = 0;
      if (cfg.dim() == 1) {
        Degenerate1DSetup st{GammaBasis::build(p, {*cfg.degree, cfg.seeds, true}), {}};
        st.grad = Gradient::assemble(st.basis, {BoundaryMode::Natural, {}});
        Oracle1D o(*cfg.gamma);
        UltraFun u = smooth_1d(st, o.gamma);
        for (int a = 0; a < u.size(); ++a) e = std::max(e, std::abs(u.values[a] - o.smooth(st.basis->point(a)[0])));
        points = u.size();
      } else {
        auto b = GammaBasis::build(p, {*cfg.degree, cfg.seeds, true});
        const double pi = std::acos(-1.0);
        auto ex = [&](const Point& x) { return std::sin(pi * x[0]) * std::sin(pi * x[1]); };
        auto r = poisson_solve(Gradient::assemble(b, {BoundaryMode::Natural, {}}),
                               project(b, [&](const Point& x) { return 2 * pi * pi * ex(x); }), b->boundary_points());
        for (int a = 0; a < b->size(); ++a) e = std::max(e, std::abs(r.u.values[a] - ex(b->point(a))));
        points = b->size();
      }
      std::snprintf(buf, sizeof buf, "%d,%d,%d,%.6e,%.4f\n", l, p.cell_count(), points, e, l ? prev / e : 0.0);
      csv << buf;
      out << buf;
      prev = e;
    }
  }
  write_file(cfg, "refine_" + cfg.quantity + ".csv", provenance_csv(cfg, levels) + csv.str());
  return 0;
}

namespace {

std::vector<int> parse_cells(const std::string& s) {
  std::vector<int> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw std::invalid_argument("--cells expects N or N,N (got '" + s + "')");
    }
  }
  return v;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ultrafunction experiments"};
  app.require_subcommand(1);
  struct Flags {
    std::string config, cells, out, region, quantity, solver;
    std::optional<double> gamma;
    std::optional<int> levels, degree, seeds;
    std::vector<std::string> tol;
  } fl;
  std::map<std::string, std::string> help{
      {"check", "run the identity suites"},
      {"degenerate1d", "degenerate one-dimensional variational problem"},
      {"poisson", "Poisson problem with zero boundary values"},
      {"gauss", "Gauss identity over a rasterized region across levels"},
      {"refine-study", "per-level table of perimeter, pairing or solution error"}};
  for (const auto& name : kExperiments) {
    CLI::App* sc = app.add_subcommand(name, help[name]);
    sc->add_option("--config", fl.config, "JSON config file; flags override it");
    sc->add_option("--gamma", fl.gamma, "source strength");
    sc->add_option("--levels", fl.levels, "refinement levels");
    sc->add_option("--cells", fl.cells, "cells per axis: N or N,N");
    sc->add_option("--degree", fl.degree, "polynomial degree k");
    sc->add_option("--seeds", fl.seeds, "seeds per axis in each cell");
    sc->add_option("--out", fl.out, "output directory");
    sc->add_option("--region", fl.region, "disk, koch or half");
    sc->add_option("--quantity", fl.quantity, "perimeter, pairing or solution_error");
    sc->add_option("--solver", fl.solver, "sparselu or bicgstab");
    sc->add_option("--tol", fl.tol, "NAME=VAL tolerance override (repeatable)");
  }
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }
  const std::string name = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    if (!fl.config.empty()) {
      std::ifstream f(fl.config);
      if (!f) throw std::invalid_argument("cannot read config file '" + fl.config + "'");
      json j;
      try {
        f >> j;
      } catch (const json::exception& e) {
        throw std::invalid_argument("config file '" + fl.config + "': " + e.what());
      }
      cfg = RunConfig::merge_json(cfg, j);
    }
    cfg.experiment = name;
    if (fl.gamma) cfg.gamma = *fl.gamma;
    if (fl.levels) cfg.levels = *fl.levels;
    if (fl.degree) cfg.degree = *fl.degree;
    if (fl.seeds) cfg.seeds = *fl.seeds;
    if (!fl.cells.empty()) {
      cfg.cells = parse_cells(fl.cells);
    }
    if (!fl.out.empty()) cfg.out = fl.out;
    if (!fl.region.empty()) cfg.region = fl.region;
    if (!fl.quantity.empty()) cfg.quantity = fl.quantity;
    if (!fl.solver.empty()) cfg.solver = fl.solver;
    for (const auto& t : fl.tol) {
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--tol expects NAME=VAL (got '" + t + "')");
      try {
        cfg.tolerances[t.substr(0, eq)] = std::stod(t.substr(eq + 1));
      } catch (const std::logic_error&) {
        throw std::invalid_argument("--tol value is not a number: '" + t + "'");
      }
    }
    cfg = cfg.resolved();
  } catch (const std::invalid_argument& e) {
    err << name << ": invalid configuration: " << e.what() << "\n";
    return 2;
  }

  try {
    if (name == "check") return cmd_check(cfg, out, err);
    if (name == "degenerate1d") return cmd_degenerate1d(cfg, out, err);
    if (name == "poisson") return cmd_poisson(cfg, out, err);
    if (name == "gauss") return cmd_gauss(cfg, out, err);
    return cmd_refine_study(cfg, out, err);
  } catch (const std::invalid_argument& e) {
    err << name << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << name << ": " << e.what() << "\n";
    return 3;
  }
}

}  // namespace ultra::cli
