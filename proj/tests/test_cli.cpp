#include <doctest.h>

#include "sk/cli.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using sk::cli::dispatch;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("skcavity-cli-test-" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json summary(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "summary.json")); }

int run(std::vector<std::string> args) {
  std::ostringstream out, err;
  return dispatch(args, out, err);
}

}  // namespace

TEST_CASE("help and usage errors") {
  std::ostringstream out, err;
  CHECK(dispatch({"--help"}, out, err) == 0);
  CHECK(out.str().find("verify-cavity") != std::string::npos);
  CHECK(run({"frobnicate"}) == 2);
  CHECK(run({}) == 2);
  CHECK(run({"solve-q", "--beta", "abc"}) == 2);
  CHECK(run({"verify-cavity", "--backend", "gpu"}) == 2);
  CHECK(run({"verify-cavity", "--n-grid", "8,x", "--out", scratch("bad-grid").string()}) == 2);
  CHECK(run({"solve-q", "--beta", "0.7", "--out", scratch("bad-beta").string()}) == 2);
  CHECK(run({"solve-q", "--config", "/nonexistent/config.json"}) == 2);
}

TEST_CASE("solve-q writes the three output files") {
  const fs::path dir = scratch("solve-q");
  REQUIRE(run({"solve-q", "--beta", "0", "--h", "0.7", "--out", dir.string()}) == 0);
  CHECK(fs::exists(dir / "results.csv"));
  CHECK(fs::exists(dir / "config-echo.json"));
  const auto s = summary(dir);
  CHECK(std::abs(s["q"].get<double>() - std::tanh(0.7) * std::tanh(0.7)) < 1e-12);
  CHECK(std::abs(s["q"].get<double>() - 0.36526) < 1e-5);
  CHECK(s.contains("version"));
  CHECK(s.contains("wall_seconds"));
  CHECK(s["config"]["beta"].get<double>() == 0.0);
  CHECK(s["headline"]["name"] == "q");
}

TEST_CASE("config files, overrides and the environment default") {
  const fs::path dir = scratch("config");
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"beta": 0.3, "h": 0.2, "n_grid": [6, 7, 8], "samples": 20, "bootstrap_resamples": 200,
               "test_function": "linear", "acceptance": {"slope_min": -1.4, "slope_max": -0.6}})";
  }
  const fs::path out = dir / "out";
  CHECK(run({"verify-cavity", "--config", (dir / "cfg.json").string(), "--h", "0.25", "--out", out.string(),
             "--assert"}) == 0);
  const auto s = summary(out);
  CHECK(s["config"]["h"].get<double>() == 0.25);
  CHECK(s["config"]["beta"].get<double>() == 0.3);
  CHECK(s["acceptance"]["passed"].get<bool>());
  const std::string csv = slurp(out / "results.csv");
  CHECK(csv.rfind("N,M,k,moment,ci_low,ci_high,ks_median\n", 0) == 0);
  CHECK(csv.find("\n6,20,1,0,0,0,") != std::string::npos);

  {
    std::ofstream bad(dir / "bad.json");
    bad << R"({"betta": 0.3})";
  }
  CHECK(run({"verify-cavity", "--config", (dir / "bad.json").string()}) == 2);

  const fs::path env_dir = dir / "env";
  ::setenv(sk::cli::kOutputDirEnv, env_dir.c_str(), 1);
  CHECK(run({"check-qminus", "--beta", "0.4", "--h", "0.5"}) == 0);
  ::unsetenv(sk::cli::kOutputDirEnv);
  CHECK(fs::exists(env_dir / "check-qminus" / "summary.json"));
}

TEST_CASE("csv bodies are reproducible") {
  const fs::path a = scratch("repro-a"), b = scratch("repro-b");
  const std::vector<std::string> base{"verify-tap", "--n-grid", "6,8", "--samples", "20", "--seed", "4"};
  auto args_a = base, args_b = base;
  args_a.insert(args_a.end(), {"--out", a.string()});
  args_b.insert(args_b.end(), {"--out", b.string(), "--workers", "2"});
  REQUIRE(run(args_a) == 0);
  REQUIRE(run(args_b) == 0);
  CHECK(slurp(a / "results.csv") == slurp(b / "results.csv"));
}

TEST_CASE("assert turns out-of-band results into exit code 1") {
  const fs::path dir = scratch("assert");
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"acceptance": {"max_ratio": 1.0}})";
  }
  const std::vector<std::string> args{"check-qminus", "--config", (dir / "cfg.json").string(), "--n-grid",
                                      "10,100,1000", "--beta", "0.4", "--h", "0.5", "--out", dir.string()};
  CHECK(run(args) == 0);
  auto asserted = args;
  asserted.push_back("--assert");
  CHECK(run(asserted) == 1);
  CHECK_FALSE(summary(dir)["acceptance"]["passed"].get<bool>());
}

TEST_CASE("verify-overlap writes one csv per statistic") {
  const fs::path dir = scratch("overlap");
  REQUIRE(run({"verify-overlap", "--beta", "0", "--h", "0", "--n-grid", "4,6,8", "--samples", "20", "--out",
               dir.string()}) == 0);
  for (const char* f : {"results.csv", "results-t1.csv", "results-t11.csv", "results-t12.csv"}) {
    CHECK(fs::exists(dir / f));
  }
  CHECK(std::abs(summary(dir)["slope"].get<double>() + 1.0) < 1e-12);
}

TEST_CASE("site indices are 1-based") {
  CHECK(run({"verify-local", "--site", "0", "--out", scratch("site0").string()}) == 2);
  const fs::path dir = scratch("site");
  CHECK(run({"verify-local", "--site", "3", "--n-grid", "5,6,7", "--samples", "20", "--out", dir.string()}) == 0);
  CHECK(summary(dir)["config"]["site"].get<int>() == 3);
}

TEST_CASE("numerical checks through the front end") {
  const fs::path ident = scratch("identity");
  CHECK(run({"check-identity", "--n", "6", "--instances", "3", "--beta", "0.45", "--h", "1", "--out",
             ident.string(), "--assert"}) == 0);
  CHECK(summary(ident)["max_residual"].get<double>() < 1e-12);
  const fs::path interp = scratch("interpolation");
  CHECK(run({"check-interpolation", "--n", "5", "--mc-samples", "20000", "--out", interp.string(), "--assert"}) == 0);
  CHECK(fs::exists(interp / "results.csv"));
}

TEST_CASE("field sweep adds an h column") {
  const fs::path dir = scratch("h-grid");
  REQUIRE(run({"verify-tap", "--h-grid", "0.1,0.4", "--n-grid", "5,6,7", "--samples", "20", "--out",
               dir.string()}) == 0);
  const std::string csv = slurp(dir / "results.csv");
  CHECK(csv.rfind("h,N,M,k,moment,ci_low,ci_high,ks_median\n", 0) == 0);
  CHECK(csv.find("\n0.1,5,20,1,") != std::string::npos);
  CHECK(csv.find("\n0.4,7,20,1,") != std::string::npos);
  CHECK(summary(dir)["result"]["sweep"].size() == 2);
  CHECK(run({"solve-q", "--config", (dir / "config-echo.json").string()}) == 2);
  CHECK(run({"verify-tap", "--h-grid", "0.1,abc", "--out", dir.string()}) == 2);
}
