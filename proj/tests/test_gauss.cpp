#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "ultra/gauss.hpp"
#include "ultra/integral.hpp"

using namespace ultra;

namespace {

struct Setup {
  BasisPtr b;
  Gradient g;
};

Setup make(int dim, int cells, int k) {
  auto p = dim == 1 ? Partition::build(Domain::interval(0, 1), {cells})
                    : Partition::build(Domain::rectangle(0, 1, 0, 1), {cells, cells});
  auto b = GammaBasis::build(p, {k, 1});
  return {b, Gradient::assemble(b)};
}

double side_value(const UltraFun& u, int cell, const Point& x) {
  const CellBlock& blk = u.basis->block(cell);
  return u.basis->trace(cell, x).dot(u.values.segment(blk.offset, blk.size));
}

// classical outward flux of a continuous field through the facets of dE by Gauss
// quadrature; facets on the domain boundary count half (zero exterior state)
double classical_flux(const Partition& p, const CellSet& E, const std::vector<ScalarField>& phi) {
  double s = 0.0;
  for (const Facet& f : p.facets()) {
    const bool in_l = E.contains(f.left);
    const bool in_r = !f.exterior() && E.contains(f.right);
    if (in_l == in_r) continue;
    const int inside = in_l ? f.left : f.right;
    const double n = f.normal_from(inside)[f.axis];
    const int o = 1 - f.axis;
    double val = oracle::integrate_1d(
        [&](double t) {
          Point x = f.lo;
          x[o] = t;
          return phi[f.axis](x);
        },
        f.lo[o], f.hi[o], 10);
    s += (f.exterior() ? 0.5 : 1.0) * n * val;
  }
  return s;
}

}  // namespace

TEST_CASE("perimeter basics") {
  auto [b, g] = make(2, 4, 2);
  CHECK(perimeter(g, CellSet({}, 16)) == 0.0);
  CellSet A({5, 6, 9}, 16);
  UltraFun one = project(b, [](const Point&) { return 1.0; });
  CHECK(perimeter(g, A) == surface_integral(one, theta_gradient(g, A)));
  CHECK(perimeter(g, A) > 0.0);
}

TEST_CASE("1D single cell perimeter: identity, level invariance, lower bound") {
  for (int k : {1, 2, 3}) {
    std::vector<double> values;
    for (int level = 0; level < 4; ++level) {
      const int n = 4 << level;
      auto [b, g] = make(1, n, k);
      CellSet A({n / 2}, n);
      const double p = perimeter(g, A);
      UltraFun one = project(b, [](const Point&) { return 1.0; });
      CHECK(p == surface_integral(one, theta_gradient(g, A)));
      values.push_back(p);
    }
    for (double v : values) {
      CHECK(v > 2.0);
      CHECK(std::abs(v - values.front()) <= 1e-9 * values.front());
    }
    MESSAGE("k = " << k << ": single-cell perimeter " << values.front());
  }
}

TEST_CASE("1D single cell perimeter is 2 within 10% at level 2" * doctest::should_fail()) {
  // the value is h-independent and strictly above 2; see the ledger analysis
  for (int k : {1, 2, 3}) {
    auto [b, g] = make(1, 16, k);
    CHECK(std::abs(perimeter(g, CellSet({8}, 16)) - 2.0) <= 0.2);
  }
}

TEST_CASE("rasterized disk perimeter under refinement") {
  std::vector<double> per;
  for (int n : {8, 16, 32}) {
    auto [b, g] = make(2, n, 1);
    const Partition& p = b->partition();
    CellSet A = disk_region(p, {0.5, 0.5}, 0.3);
    double stair = 0.0;
    for (const Facet& f : p.facets()) {
      const bool l = A.contains(f.left), r = !f.exterior() && A.contains(f.right);
      if (l != r) stair += f.measure;
    }
    per.push_back(perimeter(g, A));
    CHECK(std::isfinite(per.back()));
    MESSAGE("n = " << n << ": perimeter " << per.back() << ", staircase " << stair);
  }
}

TEST_CASE("normal field") {
  SUBCASE("1D half interval") {
    auto [b, g] = make(1, 8, 2);
    CellSet A({0, 1, 2, 3}, 8);
    auto n = normal_field(g, A);
    REQUIRE(n.size() == 1);
    for (int a = 0; a < b->size(); ++a) {
      const double x = b->point(a)[0];
      if (std::abs(n[0].values[a]) > 0.0 && std::abs(x - 0.5) < 0.125) {
        const double d = theta_gradient(g, A)[0].values[a];
        CHECK(n[0].values[a] == (d < 0 ? 1.0 : -1.0));
      }
    }
    // the Gamma points straddling 0.5 see the outward direction
    int nearest_left = -1;
    for (int a = 0; a < b->size(); ++a)
      if (b->point(a)[0] < 0.5 && (nearest_left < 0 || b->point(a)[0] > b->point(nearest_left)[0])) nearest_left = a;
    CHECK(n[0].values[nearest_left] == 1.0);
  }
  SUBCASE("zero far from the boundary, unit elsewhere") {
    auto [b, g] = make(2, 6, 2);
    const Partition& p = b->partition();
    CellSet A({p.cell_at(1, 1), p.cell_at(2, 1), p.cell_at(2, 2)}, p.cell_count());
    auto n = normal_field(g, A);
    for (int a = 0; a < b->size(); ++a) {
      const double len = std::hypot(n[0].values[a], n[1].values[a]);
      CHECK((len == 0.0 || std::abs(len - 1.0) <= 1e-10));
      if (p.cell(b->owner(a)).center()[0] > 0.75 && p.cell(b->owner(a)).center()[1] > 0.75) CHECK(len == 0.0);
    }
  }
}

TEST_CASE("Gauss identity examples") {
  auto [b, g] = make(2, 6, 2);
  const Partition& p = b->partition();
  std::vector<UltraFun> phi{project(b, [](const Point& x) { return x[0]; }), project(b, [](const Point& x) { return x[1]; })};
  GaussSides empty = gauss_check(g, phi, CellSet({}, p.cell_count()));
  CHECK(empty.lhs == 0.0);
  CHECK(empty.rhs == 0.0);

  CellSet A({p.cell_at(2, 2), p.cell_at(3, 2), p.cell_at(2, 3)}, p.cell_count());
  GaussSides s = gauss_check(g, phi, A);
  CHECK(s.residual() <= 1e-9 * (1.0 + std::abs(s.lhs)));
  double measure = 0.0;
  for (int c : A.ids()) measure += p.cell(c).measure;
  CHECK(std::abs(s.lhs - 2.0 * measure) <= 1e-8);

  for (int n : {8, 16}) {
    auto [bd, gd] = make(2, n, 1);
    CellSet disk = disk_region(bd->partition(), {0.45, 0.55}, 0.3);
    std::vector<UltraFun> f{project(bd, [](const Point& x) { return std::sin(3 * x[1]); }),
                            project(bd, [](const Point& x) { return x[0] * x[1]; })};
    GaussSides r = gauss_check(gd, f, disk);
    CHECK(r.residual() <= 1e-9 * (1.0 + std::abs(r.lhs)));
  }
}

TEST_CASE("Gauss identity on 50 random fields and regions") {
  std::mt19937 rng(41);
  std::normal_distribution<double> N;
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<Setup> setups{make(2, 4, 1), make(2, 5, 2), make(2, 3, 3), make(1, 8, 2), make(2, 8, 1)};
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Setup& s = setups[t % setups.size()];
    const Partition& p = s.b->partition();
    CellSet A;
    if (t % 2 == 0 && p.dim() == 2) {
      A = disk_region(p, {U(rng), U(rng)}, 0.15 + 0.3 * U(rng));
    } else {
      std::vector<int> ids;
      for (int c = 0; c < p.cell_count(); ++c)
        if (coin(rng)) ids.push_back(c);
      A = CellSet(ids, p.cell_count());
    }
    std::vector<UltraFun> phi;
    for (int i = 0; i < p.dim(); ++i) {
      UltraFun f(s.b);
      for (int a = 0; a < s.b->size(); ++a) f.values[a] = N(rng);
      phi.push_back(f);
    }
    GaussSides r = gauss_check(s.g, phi, A);
    worst = std::max(worst, r.residual() / (1.0 + std::abs(r.lhs)));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("boundary flux matches facet quadrature of the classical flux") {
  std::mt19937 rng(5);
  std::normal_distribution<double> N;
  for (int k : {1, 2, 3}) {
    auto [b, g] = make(2, 5, k);
    const Partition& p = b->partition();
    const int m = (k + 1) / 2;
    for (int t = 0; t < 4; ++t) {
      // continuous polynomial field of total degree m
      std::vector<std::array<double, 3>> c0, c1;
      for (int px = 0; px <= m; ++px)
        for (int py = 0; px + py <= m; ++py) {
          c0.push_back({double(px), double(py), N(rng)});
          c1.push_back({double(px), double(py), N(rng)});
        }
      auto poly = [](const std::vector<std::array<double, 3>>& cs) {
        return [cs](const Point& x) {
          double s = 0.0;
          for (auto& c : cs) s += c[2] * std::pow(x[0], c[0]) * std::pow(x[1], c[1]);
          return s;
        };
      };
      std::vector<ScalarField> field{poly(c0), poly(c1)};
      std::vector<UltraFun> phi{project(b, field[0]), project(b, field[1])};
      CellSet A = t % 2 ? CellSet({p.cell_at(1, 1), p.cell_at(2, 1), p.cell_at(2, 2), p.cell_at(3, 3)}, p.cell_count())
                        : CellSet({p.cell_at(0, 0), p.cell_at(1, 0), p.cell_at(0, 1), p.cell_at(4, 2)}, p.cell_count());
      const double ref = classical_flux(p, A, field);
      const double got = gauss_check(g, phi, A).rhs;
      CHECK(std::abs(got - ref) <= 1e-8 * (1.0 + std::abs(ref)));
    }
  }
}

TEST_CASE("Koch refinement study") {
  auto base = Partition::build(Domain::rectangle(0, 1, 0, 1), {8, 8});
  RegionMeasureReport rep = region_study("koch", base, 3, {1, 1},
                                         [](const Partition& p, int level) { return koch_region(p, level + 1); },
                                         {[](const Point& x) { return x[0]; }, [](const Point& x) { return x[1]; }});
  REQUIRE(rep.history.size() == 3);
  for (std::size_t l = 0; l < rep.history.size(); ++l) {
    CHECK(rep.history[l].level == static_cast<int>(l));
    CHECK(rep.history[l].residual >= 0.0);
    CHECK(rep.history[l].residual <= 1e-9 * (1.0 + std::abs(rep.history[l].lhs)));
    CHECK(rep.history[l].cells == 64 << (2 * l));
  }
  std::ostringstream os;
  rep.write_csv(os);
  const std::string csv = os.str();
  CHECK(csv.rfind("level,cells,points,region_cells,perimeter,residual\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("Koch polyline and polygon test") {
  auto k1 = koch_polyline(1, 0.3);
  REQUIRE(k1.size() == 5);
  CHECK(k1[2][0] == doctest::Approx(0.5));
  CHECK(k1[2][1] == doctest::Approx(0.3 + std::sqrt(3.0) / 6.0));
  CHECK(koch_polyline(3).size() == 65);
  // length grows by 4/3 per substitution
  auto len = [](const std::vector<Point>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) s += std::hypot(v[i + 1][0] - v[i][0], v[i + 1][1] - v[i][1]);
    return s;
  };
  CHECK(len(koch_polyline(4)) == doctest::Approx(std::pow(4.0 / 3.0, 4)));
  std::vector<Point> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK(inside_polygon(sq, {0.5, 0.5}));
  CHECK(!inside_polygon(sq, {1.5, 0.5}));
}
