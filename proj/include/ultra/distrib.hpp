#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "ultra/basis.hpp"

namespace ultra {

/// Pointwise integral of u times the projection of phi.
double pair(const UltraFun& u, const ScalarField& phi);

struct SplitResult {
  UltraFun functional;
  UltraFun singular;
  /// Gamma points where |singular| exceeds the level tolerance
  std::vector<int> singular_set;
  /// Gamma points classified infinite (|u| above the threshold)
  std::vector<int> infinite_set;
  double threshold = 0.0;
  double level_tolerance = 0.0;
};

/// Infinite means |u(a)| > threshold; the functional part zeroes those values.
SplitResult split(const UltraFun& u, double infinite_threshold, double level_tolerance = 1e-12);

/// 1 / h^2 with h the smallest cell width.
double default_infinite_threshold(const Partition& p);

struct StudyRow {
  int level = 0;
  int points = 0;
  double value = 0.0;
  /// value minus the previous level's value (0 on the first row)
  double delta = 0.0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  /// Aitken extrapolation of the last three values when they contract, else the last value.
  double extrapolated = 0.0;
  /// |last delta|
  double error_estimate = 0.0;

  void write_csv(std::ostream& os) const;
};

using UltraBuilder = std::function<UltraFun(int level)>;

StudyResult standard_part_study(const UltraBuilder& build, const ScalarField& phi, int levels);

/// 20 test functions: monomials of degree <= 3 times smooth compactly supported
/// bumps on sub-boxes of the domain.
std::vector<ScalarField> test_battery(const Domain& domain);

/// Largest |pair(u, phi) - pair(v, phi)| over the battery.
double battery_distance(const UltraFun& u, const UltraFun& v, const std::vector<ScalarField>& battery);

}  // namespace ultra
