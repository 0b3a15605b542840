#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ultra/derivative.hpp"

namespace ultra {

/// J(u) = pointwise integral of  1/2 a(u) |Du|^p - f(x, u).
struct FunctionalSpec {
  /// coefficient a(u); empty means 1
  std::function<double(double)> a;
  double p = 2.0;
  /// lower-order term f(x, u); empty means 0
  std::function<double(const Point&, double)> f;
  /// growth exponent of f in u
  double q = 1.0;
  /// Gamma points held at zero
  std::vector<int> fixed;
  /// a facet whose one-sided traces all lie in this u-interval loses its jump term
  std::optional<std::pair<double, double>> degenerate;
  /// when set (and a, p, degenerate are trivial), f(x, u) = source(x) u and the
  /// minimizer solves a linear system
  std::function<double(const Point&)> linear_source;

  void validate() const;
  bool quadratic() const;
};

/// Per-facet weights (1 keep, 0 drop) from the degenerate rule.
std::vector<double> facet_weights(const FunctionalSpec& spec, const Gradient& grad, const UltraFun& u);

double energy(const FunctionalSpec& spec, const Gradient& grad, const UltraFun& u);

struct MinimizeOptions {
  int max_sweeps = 4000;
  double initial_step = 0.5;
  double min_step = 1e-7;
  int restarts = 3;
  unsigned seed = 12345;
  std::optional<UltraFun> start;
};

struct MinimizeResult {
  UltraFun u;
  double energy = 0.0;
  bool converged = false;
  int sweeps = 0;
  /// energy after each accepted sweep of the first descent run
  std::vector<double> history;
};

MinimizeResult minimize(const FunctionalSpec& spec, const Gradient& grad, const MinimizeOptions& options = {});

enum class LinearSolver { SparseLU, BiCGSTAB };

struct PoissonResult {
  UltraFun u;
  double residual = 0.0;
};

/// -Laplacian u = source at free points, u = 0 at `fixed`.
PoissonResult poisson_solve(const Gradient& grad, const UltraFun& source, const std::vector<int>& fixed,
                            LinearSolver solver = LinearSolver::SparseLU);

/// Closed-form quantities of the degenerate one-dimensional problem
///   minimize  int 1/2 a(u) u'^2 - gamma u,  u(0) = 0,  a = 0 on [1, 2], 1 elsewhere.
struct Oracle1D {
  double gamma;

  explicit Oracle1D(double g);

  double xi_candidate() const;
  double F(double xi) const;
  double dF(double xi) const;
  double d2F(double xi) const;
  double d3F(double xi) const;
  double M() const;
  double dM() const;
  static double M_of(double g);
  static double Phi(double s);
  static double dPhi(double s);
  static double gamma_star();

  /// argmin of F on (0, 1] by dense grid then Brent refinement
  double argmin_F(int grid = 20000) const;

  /// smooth solution for gamma < 2
  double smooth(double x) const;
  /// two-piece candidate jumping from 1 to 2 at xi; xi = 1 is the left piece alone
  double candidate(double x, double xi) const;
  /// left piece, flat 2 on [xi, eta], then the natural right piece
  double competitor(double x, double xi, double eta) const;

  nlohmann::json to_json() const;
};

struct CandidateEnergy {
  double xi;
  double energy;
};

struct DegenerateResult {
  UltraFun u;
  double jump_location = 0.0;
  double energy = 0.0;
  double oracle_jump = 0.0;
  double oracle_energy = 0.0;
  double gamma = 0.0;
  std::vector<CandidateEnergy> candidates;

  nlohmann::json to_json() const;
};

/// Functional of the degenerate problem on a basis (u = 0 at the x = 0 node).
FunctionalSpec degenerate_spec(const BasisPtr& basis, double gamma);

/// Basis and operators used by the degenerate solver: [0, 1], boundary nodes, natural ends.
struct Degenerate1DSetup {
  BasisPtr basis;
  Gradient grad;
  static Degenerate1DSetup make(int cells, int degree = 3);
};

DegenerateResult degenerate_1d(double gamma, int cells, int degree = 3);
DegenerateResult degenerate_1d(double gamma, const Degenerate1DSetup& setup);

/// J of the projected single-jump candidate and of the two-discontinuity competitor.
double candidate_energy(const Degenerate1DSetup& s, double gamma, double xi);
double competitor_energy(const Degenerate1DSetup& s, double gamma, double xi, double eta);

/// Smooth problem (a = 1, f = gamma u, u(0) = 0, natural at 1) by the direct solve.
UltraFun smooth_1d(const Degenerate1DSetup& s, double gamma);

/// (xi, F(xi)) samples on [lo, 1].
void write_oracle_curve(const Oracle1D& o, std::ostream& os, int samples = 400, double lo = 0.02);

}  // namespace ultra
