#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace ultra::cli {

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

struct RunConfig {
  std::string experiment = "check";
  /// domain box; its length fixes the dimension. Empty means the unit box of the
  /// experiment's default dimension (or of the --cells count).
  std::vector<double> lo;
  std::vector<double> hi;
  /// unset entries take the experiment default in resolve()
  std::optional<std::vector<int>> cells;
  std::optional<int> degree;
  int seeds = 1;
  int levels = 3;
  std::optional<double> gamma;
  std::string region = "disk";
  std::string quantity = "perimeter";
  std::string solver = "sparselu";
  std::string out = "out";
  std::map<std::string, double> tolerances;

  static const std::map<std::string, double>& default_tolerances();

  int dim() const;
  /// Fills experiment defaults; throws std::invalid_argument on anything inconsistent.
  RunConfig resolved() const;
  void validate() const;

  /// Canonical form (output directory excluded so relocated runs hash alike).
  nlohmann::json to_json() const;
  std::string hash() const;

  /// Overlay the keys present in j onto base.
  static RunConfig merge_json(RunConfig base, const nlohmann::json& j);
};

struct SuiteResult {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool pass() const { return max_error <= tolerance; }
};

std::vector<SuiteResult> run_suites(const RunConfig& cfg);

/// Lines "# key: value" written at the top of every CSV file.
std::string provenance_csv(const RunConfig& cfg, const std::string& level);
nlohmann::json provenance_json(const RunConfig& cfg, const std::string& level);

int cmd_check(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_degenerate1d(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_poisson(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_gauss(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_refine_study(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Parses argv (program name first) and dispatches. Exit codes: 0 ok, 1 a check
/// failed, 2 bad arguments or configuration, 3 runtime error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ultra::cli
