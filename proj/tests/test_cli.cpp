#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ultra/cli.hpp"

using namespace ultra::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "ultra");
  std::ostringstream o, e;
  const int code = run(args, o, e);
  return {code, o.str(), e.str()};
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("ultra_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

// data rows of a provenance-prefixed CSV, header included
std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    rows.push_back(cols);
  }
  return rows;
}

}  // namespace

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("config resolution and validation") {
  RunConfig c;
  RunConfig r = c.resolved();
  CHECK(r.dim() == 1);
  CHECK(*r.cells == std::vector<int>{8});
  CHECK(*r.degree == 2);
  CHECK(r.tolerances.size() == RunConfig::default_tolerances().size());

  c.experiment = "gauss";
  CHECK(c.resolved().dim() == 2);
  c.experiment = "degenerate1d";
  CHECK(*c.resolved().degree == 3);
  CHECK(*c.resolved().gamma == 4.0);

  RunConfig bad;
  bad.degree = 0;
  CHECK_THROWS_AS(bad.resolved(), std::invalid_argument);
  bad = RunConfig{};
  bad.tolerances["nonsense"] = 1.0;
  CHECK_THROWS_AS(bad.resolved(), std::invalid_argument);
  bad = RunConfig{};
  bad.cells = std::vector<int>{4, 4};
  bad.lo = {0.0};
  bad.hi = {1.0};
  CHECK_THROWS_AS(bad.resolved(), std::invalid_argument);
  bad = RunConfig{};
  bad.experiment = "nope";
  CHECK_THROWS_AS(bad.resolved(), std::invalid_argument);

  // hash ignores the output directory but not the physics
  RunConfig a = RunConfig{}.resolved(), b = a;
  b.out = "elsewhere";
  CHECK(a.hash() == b.hash());
  b.gamma = 3.0;
  CHECK(a.hash() != b.hash());

  RunConfig m = RunConfig::merge_json(RunConfig{}, json{{"gamma", 3.0}, {"tolerances", {{"gauss", 1e-6}}}});
  CHECK(*m.gamma == 3.0);
  CHECK(m.resolved().tolerances.at("gauss") == 1e-6);
  CHECK_THROWS_AS(RunConfig::merge_json(RunConfig{}, json{{"gama", 3.0}}), std::invalid_argument);
  CHECK_THROWS_AS(RunConfig::merge_json(RunConfig{}, json{{"gamma", "x"}}), std::invalid_argument);
}

TEST_CASE("check command") {
  auto dir = scratch("check");
  Run r = invoke({"check", "--out", dir.string()});
  CHECK(r.code == 0);
  json j = read_json(dir / "check.json");
  CHECK(j["pass"].get<bool>());
  std::vector<std::string> names;
  for (const auto& s : j["suites"]) {
    names.push_back(s["suite"]);
    CHECK(s["pass"].get<bool>());
  }
  for (const char* n : {"duality", "delta", "integration_by_parts", "axiom_II", "axiom_IV", "gauss"})
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
  CHECK(j["provenance"]["config_hash"].get<std::string>().size() == 16);

  Run r2 = invoke({"check", "--cells", "4,4", "--out", (dir / "2d").string()});
  CHECK(r2.code == 0);

  Run k0 = invoke({"check", "--degree", "0", "--out", dir.string()});
  CHECK(k0.code == 2);
  CHECK(k0.err.find("degree") != std::string::npos);

  Run tight = invoke({"check", "--tol", "duality=1e-30", "--out", (dir / "tight").string()});
  CHECK(tight.code == 1);
  CHECK(tight.err.find("suite duality") != std::string::npos);
  CHECK_FALSE(read_json(dir / "tight" / "check.json")["pass"].get<bool>());

  CHECK(invoke({"check", "--tol", "duality"}).code == 2);
  CHECK(invoke({"check", "--tol", "duality=abc"}).code == 2);
  CHECK(invoke({"check", "--cells", "4,x"}).code == 2);
  CHECK(invoke({"frobnicate"}).code == 2);
  CHECK(invoke({}).code == 2);
}

TEST_CASE("degenerate1d command") {
  auto dir = scratch("deg4");
  Run r = invoke({"degenerate1d", "--gamma", "4", "--out", dir.string()});
  REQUIRE(r.code == 0);
  json s = read_json(dir / "summary.json");
  CHECK(s["branch"] == "jump");
  const double h = s["h"].get<double>();
  CHECK(std::abs(s["jump_location"].get<double>() - s["oracle_jump"].get<double>()) <= 2 * h);
  CHECK(s["jump_within_2h"].get<bool>());

  // profile: monotone rise to 1, a jump to 2, parabolic cap
  auto rows = csv_rows(dir / "profile.csv");
  REQUIRE(rows.front() == std::vector<std::string>{"x", "u"});
  const double xi = s["jump_location"].get<double>();
  double prev = -1.0;
  int after = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double x = std::stod(rows[i][0]), u = std::stod(rows[i][1]);
    if (x < xi) {
      CHECK(u >= prev);
      CHECK(u < 1.0);
    } else {
      CHECK(u >= 2.0 - 1e-12);
      ++after;
    }
    prev = u;
  }
  CHECK(after > 0);
  auto curve = csv_rows(dir / "oracle_curve.csv");
  CHECK(curve.front() == std::vector<std::string>{"xi", "F"});
  CHECK(curve.size() == 401);

  auto dir15 = scratch("deg15");
  REQUIRE(invoke({"degenerate1d", "--gamma", "1.5", "--out", dir15.string()}).code == 0);
  json s15 = read_json(dir15 / "summary.json");
  CHECK(s15["branch"] == "smooth");
  CHECK(s15["max_error"].get<double>() <= 1e-8);
  auto prof = csv_rows(dir15 / "profile.csv");
  CHECK(prof.front() == std::vector<std::string>{"x", "u", "exact"});

  CHECK(invoke({"degenerate1d", "--gamma", "-1"}).code == 2);
  CHECK(invoke({"degenerate1d", "--cells", "4,4"}).code == 2);
}

TEST_CASE("poisson, gauss and refine-study commands") {
  auto dir = scratch("misc");
  REQUIRE(invoke({"poisson", "--out", dir.string()}).code == 0);
  json p = read_json(dir / "poisson.json");
  CHECK(p["max_error"].get<double>() <= 1e-8);
  CHECK(p["residual"].get<double>() <= 1e-10);

  REQUIRE(invoke({"poisson", "--cells", "6,6", "--solver", "bicgstab", "--out", (dir / "p2").string()}).code == 0);
  CHECK(read_json(dir / "p2" / "poisson.json")["residual"].get<double>() <= 1e-10);

  REQUIRE(invoke({"gauss", "--region", "disk", "--cells", "8,8", "--out", dir.string()}).code == 0);
  auto g = csv_rows(dir / "gauss_disk.csv");
  REQUIRE(g.front().back() == "residual");
  CHECK(g.size() == 4);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(std::stod(g[i].back()) <= 1e-9);

  REQUIRE(invoke({"refine-study", "--quantity", "perimeter", "--region", "koch", "--levels", "3", "--out", dir.string()})
              .code == 0);
  auto k = csv_rows(dir / "refine_perimeter.csv");
  REQUIRE(k.size() == 4);
  const std::size_t col = std::find(k.front().begin(), k.front().end(), "perimeter") - k.front().begin();
  for (std::size_t i = 2; i < k.size(); ++i) CHECK(std::stod(k[i][col]) > std::stod(k[i - 1][col]));

  REQUIRE(invoke({"refine-study", "--quantity", "solution_error", "--out", dir.string()}).code == 0);
  auto e = csv_rows(dir / "refine_solution_error.csv");
  for (std::size_t i = 2; i < e.size(); ++i) CHECK(std::stod(e[i][4]) >= 3.0);

  REQUIRE(invoke({"refine-study", "--quantity", "pairing", "--levels", "3", "--out", dir.string()}).code == 0);
  CHECK(csv_rows(dir / "refine_pairing.csv").front() == std::vector<std::string>{"level", "points", "value", "delta"});
}

TEST_CASE("outputs are deterministic and carry provenance") {
  auto a = scratch("det_a"), b = scratch("det_b");
  for (const auto& d : {a, b}) {
    REQUIRE(invoke({"degenerate1d", "--gamma", "4", "--cells", "32", "--out", d.string()}).code == 0);
    REQUIRE(invoke({"gauss", "--cells", "6,6", "--levels", "2", "--out", d.string()}).code == 0);
  }
  for (const char* f : {"summary.json", "profile.csv", "oracle_curve.csv", "gauss_disk.csv"}) {
    CAPTURE(f);
    const std::string x = slurp(a / f);
    CHECK(x == slurp(b / f));
    CHECK(x.find('\r') == std::string::npos);
    if (std::string(f).ends_with(".csv")) {
      CHECK(x.rfind("# ultra ", 0) == 0);
      CHECK(x.find("# config_hash: ") != std::string::npos);
      CHECK(x.find("# level: ") != std::string::npos);
      CHECK(x.find("# tolerances:") != std::string::npos);
    }
  }
  json s = read_json(a / "summary.json");
  RunConfig c;
  c.experiment = "degenerate1d";
  c.gamma = 4.0;
  c.cells = std::vector<int>{32};
  CHECK(s["provenance"]["config_hash"] == c.resolved().hash());
}

TEST_CASE("config file with flag overrides") {
  auto dir = scratch("cfg");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "run.json");
    f << R"({"gamma": 3.0, "cells": [16], "tolerances": {"gauss": 1e-7}})";
  }
  REQUIRE(invoke({"degenerate1d", "--config", (dir / "run.json").string(), "--out", (dir / "a").string()}).code == 0);
  json a = read_json(dir / "a" / "summary.json");
  CHECK(a["gamma"].get<double>() == 3.0);
  CHECK(a["cells"].get<int>() == 16);
  CHECK(a["provenance"]["tolerances"]["gauss"].get<double>() == 1e-7);

  REQUIRE(invoke({"degenerate1d", "--config", (dir / "run.json").string(), "--gamma", "4", "--out", (dir / "b").string()})
              .code == 0);
  CHECK(read_json(dir / "b" / "summary.json")["gamma"].get<double>() == 4.0);

  {
    std::ofstream f(dir / "broken.json");
    f << "{ not json";
  }
  CHECK(invoke({"check", "--config", (dir / "broken.json").string()}).code == 2);
  CHECK(invoke({"check", "--config", (dir / "missing.json").string()}).code == 2);
}
