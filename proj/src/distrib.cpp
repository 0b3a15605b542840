#include "ultra/distrib.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "ultra/integral.hpp"

namespace ultra {

double pair(const UltraFun& u, const ScalarField& phi) { return inner(u, project(u.basis, phi)); }

SplitResult split(const UltraFun& u, double infinite_threshold, double level_tolerance) {
  if (!(infinite_threshold > 0.0)) throw std::invalid_argument("threshold must be positive");
  SplitResult r;
  r.threshold = infinite_threshold;
  r.level_tolerance = level_tolerance;
  r.functional = u;
  for (int a = 0; a < u.size(); ++a) {
    if (std::abs(u.values[a]) > infinite_threshold) {
      r.infinite_set.push_back(a);
      r.functional.values[a] = 0.0;
    }
  }
  r.singular = u - r.functional;
  for (int a = 0; a < u.size(); ++a)
    if (std::abs(r.singular.values[a]) > level_tolerance) r.singular_set.push_back(a);
  return r;
}

double default_infinite_threshold(const Partition& p) {
  const double h = p.min_spacing();
  return 1.0 / (h * h);
}

void StudyResult::write_csv(std::ostream& os) const {
  os << "level,points,value,delta\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.15g,%.6e\n", r.level, r.points, r.value, r.delta);
    os << buf;
  }
}

StudyResult standard_part_study(const UltraBuilder& build, const ScalarField& phi, int levels) {
  if (levels < 2) throw std::invalid_argument("a study needs at least two levels");
  StudyResult s;
  for (int l = 0; l < levels; ++l) {
    UltraFun u = build(l);
    StudyRow row;
    row.level = l;
    row.points = u.size();
    row.value = pair(u, phi);
    row.delta = l ? row.value - s.rows.back().value : 0.0;
    s.rows.push_back(row);
  }
  const auto& last = s.rows.back();
  s.extrapolated = last.value;
  s.error_estimate = std::abs(last.delta);
  if (levels >= 3) {
    const double d1 = s.rows[levels - 2].delta, d2 = last.delta;
    // geometric contraction d2 = d1 / r with r > 1
    if (d2 != 0.0 && d1 / d2 > 1.0) s.extrapolated = last.value + d2 / (d1 / d2 - 1.0);
  }
  return s;
}

std::vector<ScalarField> test_battery(const Domain& domain) {
  std::vector<ScalarField> out;
  const int d = domain.dim;
  // bump centres at four relative positions, widths alternating
  const double rel[4][2] = {{0.5, 0.5}, {0.3, 0.6}, {0.7, 0.35}, {0.45, 0.25}};
  const int powers[5][2] = {{0, 0}, {1, 0}, {0, 1}, {2, 1}, {3, 0}};
  for (int j = 0; j < 20; ++j) {
    const int c = j % 4;
    const int p = j / 4;
    Point center{domain.lo[0] + rel[c][0] * domain.extent(0), d == 2 ? domain.lo[1] + rel[c][1] * domain.extent(1) : 0.0};
    const double width = c % 2 ? 0.15 : 0.25;
    Point half{width * domain.extent(0), d == 2 ? width * domain.extent(1) : 1.0};
    const int px = powers[p][0];
    const int py = d == 2 ? powers[p][1] : 0;
    out.push_back([=](const Point& x) {
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        const double t = (x[a] - center[a]) / half[a];
        r2 += t * t;
      }
      if (r2 >= 1.0) return 0.0;
      return std::pow(x[0], px) * (d == 2 ? std::pow(x[1], py) : 1.0) * std::exp(1.0 - 1.0 / (1.0 - r2));
    });
  }
  return out;
}

double battery_distance(const UltraFun& u, const UltraFun& v, const std::vector<ScalarField>& battery) {
  require_same_basis(u, v);
  double worst = 0.0;
  for (const auto& phi : battery) worst = std::max(worst, std::abs(pair(u, phi) - pair(v, phi)));
  return worst;
}

}  // namespace ultra
