#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "ultra/distrib.hpp"
#include "ultra/integral.hpp"

using namespace ultra;

namespace {

BasisPtr make1(double lo, double hi, int cells, int k) {
  return GammaBasis::build(Partition::build(Domain::interval(lo, hi), {cells}), {k, 1});
}

// composite Gauss over a uniform split of [a, b]
double composite(const std::function<double(double)>& f, double a, double b, int pieces) {
  double s = 0.0;
  const double h = (b - a) / pieces;
  for (int i = 0; i < pieces; ++i) s += oracle::integrate_1d(f, a + i * h, a + (i + 1) * h);
  return s;
}

}  // namespace

TEST_CASE("pairing examples") {
  auto b = make1(0, 1, 8, 3);
  auto phi = [](const Point& x) { return std::cos(2.0 * x[0]) + x[0]; };
  for (int q = 0; q < b->size(); ++q) CHECK(std::abs(pair(delta_at(b, q), phi) - phi(b->point(q))) <= 1e-8);
  CHECK(pair(UltraFun(b), phi) == 0.0);

  // f phi of degree <= k per cell is integrated exactly
  auto f = [](const Point& x) { return 1.0 + 2.0 * x[0]; };
  auto psi = [](const Point& x) { return x[0] * x[0] - 0.5 * x[0]; };
  const double ref = composite([&](double x) { return f({x, 0}) * psi({x, 0}); }, 0.0, 1.0, 8);
  CHECK(std::abs(pair(project(b, f), psi) - ref) <= 1e-8);

  // smooth f and phi on a fine level
  auto fb = make1(0, 1, 64, 3);
  auto g = [](const Point& x) { return std::exp(x[0]); };
  const double ref2 = composite([&](double x) { return g({x, 0}) * phi({x, 0}); }, 0.0, 1.0, 16);
  CHECK(std::abs(pair(project(fb, g), phi) - ref2) <= 1e-8);
}

TEST_CASE("pairing is bilinear") {
  auto b = GammaBasis::build(Partition::build(Domain::rectangle(0, 1, 0, 1), {3, 3}), {2, 1});
  std::mt19937 rng(9);
  std::normal_distribution<double> N;
  auto battery = test_battery(b->partition().domain());
  for (int t = 0; t < 10; ++t) {
    UltraFun u(b), v(b);
    for (int a = 0; a < b->size(); ++a) u.values[a] = N(rng), v.values[a] = N(rng);
    const double s = N(rng), r = N(rng);
    const auto& p1 = battery[t];
    const auto& p2 = battery[19 - t];
    auto comb = [&](const Point& x) { return s * p1(x) + r * p2(x); };
    const double scale = 1.0 + u.values.norm() + v.values.norm();
    CHECK(std::abs(pair(s * u + r * v, p1) - (s * pair(u, p1) + r * pair(v, p1))) <= 1e-12 * scale);
    CHECK(std::abs(pair(u, comb) - (s * pair(u, p1) + r * pair(u, p2))) <= 1e-12 * scale);
  }
}

TEST_CASE("split examples") {
  SUBCASE("standard values are not singular") {
    auto b = make1(0, 1, 8, 2);
    UltraFun u = project(b, [](const Point& x) { return std::sin(5 * x[0]); });
    SplitResult s = split(u, 1e6);
    CHECK(s.singular.values.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.singular_set.empty());
    CHECK(s.infinite_set.empty());
    CHECK(((s.functional + s.singular).values - u.values).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("near-singular bump 1/(x^2 + eps^2)") {
    const int n = 400;
    auto b = make1(-1, 1, n, 2);
    const double eps = 2.0 / n;
    UltraFun u = project(b, [&](const Point& x) { return 1.0 / (x[0] * x[0] + eps * eps); });
    SplitResult s = split(u, 1.0 / (10.0 * eps));
    // infinite exactly where x^2 + eps^2 < 10 eps
    const double radius = std::sqrt(10.0 * eps - eps * eps);
    REQUIRE(!s.infinite_set.empty());
    for (int a = 0; a < b->size(); ++a) {
      const double x = b->point(a)[0];
      const bool inf = std::find(s.infinite_set.begin(), s.infinite_set.end(), a) != s.infinite_set.end();
      CHECK(inf == (std::abs(x) < radius));
    }
    for (int a : s.singular_set) CHECK(std::abs(b->point(a)[0]) < radius);
    CHECK(radius < 0.25);
    for (int a = 0; a < b->size(); ++a) {
      const double x = b->point(a)[0];
      if (std::abs(x) > 0.5) CHECK(std::abs(s.functional.values[a] * x * x - 1.0) <= eps * eps / (x * x));
    }
    CHECK(((s.functional + s.singular).values - u.values).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("Dirac") {
    auto b = make1(0, 1, 8, 3);
    const int q = 11;
    SplitResult s = split(delta_at(b, q), 0.5 / b->eta()[q]);
    CHECK(s.infinite_set == std::vector<int>{q});
    CHECK(s.singular_set == std::vector<int>{q});
  }
  auto b = make1(0, 1, 4, 1);
  CHECK_THROWS_AS(split(UltraFun(b), 0.0), std::invalid_argument);
  CHECK(default_infinite_threshold(b->partition()) == doctest::Approx(16.0));
}

TEST_CASE("standard part studies") {
  SUBCASE("fixed projected function, exact pairing") {
    auto phi = [](const Point& x) { return x[0] * (1.0 - x[0]); };
    StudyResult s = standard_part_study(
        [&](int level) { return project(make1(0, 1, 4 << level, 3), [](const Point& x) { return 2.0 - x[0]; }); }, phi, 4);
    REQUIRE(s.rows.size() == 4);
    for (const auto& r : s.rows) CHECK(std::abs(r.value - s.rows.front().value) <= 1e-8);
    CHECK(s.rows.front().value == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("pointwise integral of a continuous function") {
    auto w = [](const Point& x) { return std::sin(3.0 * x[0]) + 1.0; };
    const double exact = (1.0 - std::cos(3.0)) / 3.0 + 1.0;
    StudyResult s = standard_part_study([&](int level) { return project(make1(0, 1, 2 << level, 1), w); },
                                        [](const Point&) { return 1.0; }, 5);
    std::vector<double> err;
    for (const auto& r : s.rows) err.push_back(std::abs(r.value - exact));
    for (std::size_t i = 1; i < err.size(); ++i) CHECK(err[i] < err[i - 1]);
    CHECK(std::abs(s.extrapolated - exact) < err.back());
    CHECK(s.error_estimate == std::abs(s.rows.back().delta));
  }
  SUBCASE("shrinking mollifiers converge to a point value") {
    const double c = 0.4;
    auto phi = [](const Point& x) { return std::exp(x[0]); };
    auto build = [&](int level) {
      const double e = 0.2 / (1 << level);
      // (1 - t^2)^3 has integral 32/35 e
      return project(make1(0, 1, 8 << level, 3), [=](const Point& x) {
        const double t = (x[0] - c) / e;
        return std::abs(t) < 1.0 ? std::pow(1.0 - t * t, 3) * 35.0 / (32.0 * e) : 0.0;
      });
    };
    StudyResult s = standard_part_study(build, phi, 4);
    std::vector<double> err;
    for (const auto& r : s.rows) err.push_back(std::abs(r.value - phi({c, 0})));
    for (std::size_t i = 1; i < err.size(); ++i) CHECK(err[i] < err[i - 1]);
    CHECK(err.back() < 1e-3);
  }
  std::ostringstream os;
  StudyResult s = standard_part_study([](int l) { return project(make1(0, 1, 2 << l, 1), [](const Point&) { return 1.0; }); },
                                      [](const Point&) { return 1.0; }, 2);
  s.write_csv(os);
  const std::string csv = os.str();
  CHECK(csv.rfind("level,points,value,delta\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK_THROWS_AS(standard_part_study([](int l) { return project(make1(0, 1, 2 << l, 1), [](const Point&) { return 1.0; }); },
                                      [](const Point&) { return 1.0; }, 1),
                  std::invalid_argument);
}

TEST_CASE("test battery and observational equivalence") {
  for (auto d : {Domain::interval(0, 2), Domain::rectangle(0, 1, -1, 1)}) {
    auto bat = test_battery(d);
    REQUIRE(bat.size() == 20);
    // compact support inside the domain, smooth and not identically zero
    for (const auto& phi : bat) {
      CHECK(phi(d.lo) == 0.0);
      CHECK(phi(d.hi) == 0.0);
    }
  }
  auto b = make1(0, 1, 16, 2);
  auto bat = test_battery(b->partition().domain());
  UltraFun u = project(b, [](const Point& x) { return x[0]; });
  CHECK(battery_distance(u, u, bat) == 0.0);
  // changing one value far from every support is invisible to the battery
  UltraFun v = u;
  int far = -1;
  for (int a = 0; a < b->size(); ++a)
    if (b->point(a)[0] < 0.04) far = a;
  REQUIRE(far >= 0);
  v.values[far] += 1.0;
  CHECK(battery_distance(u, v, bat) == 0.0);
  UltraFun w = u;
  w.values[b->size() / 2] += 1.0;
  CHECK(battery_distance(u, w, bat) > 1e-6);
}
