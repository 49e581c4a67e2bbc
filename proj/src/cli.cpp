#include "sk/cli.hpp"

#include "sk/core_model.hpp"
#include "sk/experiments.hpp"
#include "sk/gibbs_exact.hpp"
#include "sk/interpolation.hpp"
#include "sk/rng.hpp"
#include "sk/theory.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#ifndef SKCAVITY_VERSION
#define SKCAVITY_VERSION "0.1.0"
#endif

namespace sk::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Parsed flags; `given` tells which ones were set on the command line.
struct Flags {
  std::string config_path;
  std::string out_dir;
  double beta = 0.0;
  double h = 0.0;
  int k = 1;
  std::uint64_t seed = 1;
  std::string backend;
  std::string n_grid;
  std::string h_grid;
  std::size_t samples = 0;
  std::size_t workers = 0;
  std::string test_function;
  std::size_t site = 1;
  std::size_t sweeps = 0;
  std::size_t resamples = 0;
  bool assert_bands = false;
  bool all_sites = false;
  bool no_ks = false;
  bool allow_biased = false;
  std::size_t n = 0;
  std::size_t instances = 0;
  double t = 0.0;
  double dt = 0.0;
  std::size_t mc_samples = 0;
};

struct Settings {
  ExperimentConfig cfg;
  bool test_function_set = false;
  std::vector<double> h_grid;  // optional sweep over the field
  std::size_t n = 0;
  std::size_t instances = 20;
  double t = 0.25;
  double dt = 1e-4;
  std::size_t mc_samples = 1000000;
  json acceptance = json::object();
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Outcome {
  std::string csv;
  std::vector<std::pair<std::string, std::string>> extra_csv;
  json result = json::object();
  std::string headline_name;
  double headline = 0.0;
  std::vector<Check> checks;
};

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::vector<std::size_t> parse_grid(const std::string& text) {
  std::vector<std::size_t> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size() || item[0] == '-') throw UsageError("bad --n-grid entry '" + item + "'");
    grid.push_back(static_cast<std::size_t>(v));
  }
  if (grid.empty()) throw UsageError("--n-grid is empty");
  return grid;
}

std::vector<double> parse_reals(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw UsageError(std::string("bad ") + flag + " entry '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string(flag) + " is empty");
  return out;
}

std::size_t to_site_index(std::size_t one_based) {
  if (one_based == 0) throw UsageError("site indices are 1-based");
  return one_based - 1;
}

void apply_config_file(const std::string& path, Settings& s) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  auto& c = s.cfg;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "beta") c.beta = v.get<double>();
      else if (key == "h") c.h = v.get<double>();
      else if (key == "k") c.k = v.get<int>();
      else if (key == "n_grid") c.n_grid = v.get<std::vector<std::size_t>>();
      else if (key == "h_grid") s.h_grid = v.get<std::vector<double>>();
      else if (key == "samples") c.samples = v.get<std::size_t>();
      else if (key == "backend") c.backend = parse_backend(v.get<std::string>());
      else if (key == "seed" || key == "master_seed") c.master_seed = v.get<std::uint64_t>();
      else if (key == "quad_order") c.quad_order = v.get<int>();
      else if (key == "workers") c.workers = v.get<std::size_t>();
      else if (key == "bootstrap_resamples") c.bootstrap_resamples = v.get<std::size_t>();
      else if (key == "compute_ks") c.compute_ks = v.get<bool>();
      else if (key == "site") c.site = to_site_index(v.get<std::size_t>());
      else if (key == "average_sites") c.average_sites = v.get<bool>();
      else if (key == "allow_biased_backend") c.allow_biased_backend = v.get<bool>();
      else if (key == "test_function") {
        c.test_function = TestFunction::parse(v.get<std::string>());
        s.test_function_set = true;
      } else if (key == "chain") {
        for (const auto& [ck, cv] : v.items()) {
          if (ck == "burnin_sweeps") c.chain.burnin_sweeps = cv.get<std::size_t>();
          else if (ck == "thinning") c.chain.thinning = cv.get<std::size_t>();
          else if (ck == "n_samples") c.chain.n_samples = cv.get<std::size_t>();
          else if (ck == "seed") c.chain.seed = cv.get<std::uint64_t>();
          else throw UsageError("unknown chain key '" + ck + "'");
        }
      } else if (key == "n") s.n = v.get<std::size_t>();
      else if (key == "instances") s.instances = v.get<std::size_t>();
      else if (key == "t") s.t = v.get<double>();
      else if (key == "dt") s.dt = v.get<double>();
      else if (key == "mc_samples") s.mc_samples = v.get<std::size_t>();
      else if (key == "acceptance") {
        if (!v.is_object()) throw UsageError("'acceptance' must be an object");
        s.acceptance = v;
      } else throw UsageError("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw UsageError("config file '" + path + "': " + e.what());
  }
}

void apply_flags(const CLI::App& sub, const Flags& f, Settings& s) {
  auto& c = s.cfg;
  const auto given = [&](const char* name) { return sub.get_option_no_throw(name) && sub.count(name) > 0; };
  if (given("--beta")) c.beta = f.beta;
  if (given("--h")) c.h = f.h;
  if (given("--k")) c.k = f.k;
  if (given("--seed")) c.master_seed = f.seed;
  if (given("--backend")) c.backend = parse_backend(f.backend);
  if (given("--n-grid")) c.n_grid = parse_grid(f.n_grid);
  if (given("--h-grid")) s.h_grid = parse_reals(f.h_grid, "--h-grid");
  if (given("--samples")) c.samples = f.samples;
  if (given("--workers")) c.workers = f.workers;
  if (given("--test-function")) {
    c.test_function = TestFunction::parse(f.test_function);
    s.test_function_set = true;
  }
  if (given("--site")) c.site = to_site_index(f.site);
  if (given("--sweeps")) c.chain.n_samples = f.sweeps;
  if (given("--resamples")) c.bootstrap_resamples = f.resamples;
  if (given("--all-sites")) c.average_sites = true;
  if (given("--no-ks")) c.compute_ks = false;
  if (given("--allow-biased")) c.allow_biased_backend = true;
  if (given("--n")) s.n = f.n;
  if (given("--instances")) s.instances = f.instances;
  if (given("--t")) s.t = f.t;
  if (given("--dt")) s.dt = f.dt;
  if (given("--mc-samples")) s.mc_samples = f.mc_samples;
}

json config_json(const std::string& subcommand, const Settings& s) {
  const auto& c = s.cfg;
  json j;
  j["subcommand"] = subcommand;
  j["beta"] = c.beta;
  j["h"] = c.h;
  j["k"] = c.k;
  j["n_grid"] = c.n_grid;
  if (!s.h_grid.empty()) j["h_grid"] = s.h_grid;
  j["samples"] = c.samples;
  j["backend"] = std::string(to_string(c.backend));
  j["chain"] = {{"burnin_sweeps", c.chain.burnin_sweeps},
                {"thinning", c.chain.thinning},
                {"n_samples", c.chain.n_samples},
                {"seed", c.chain.seed}};
  j["test_function"] = c.test_function.describe();
  j["seed"] = c.master_seed;
  j["quad_order"] = c.quad_order;
  j["workers"] = c.workers;
  j["bootstrap_resamples"] = c.bootstrap_resamples;
  j["compute_ks"] = c.compute_ks;
  j["site"] = c.site + 1;
  j["average_sites"] = c.average_sites;
  j["allow_biased_backend"] = c.allow_biased_backend;
  if (subcommand == "check-identity") {
    j["n"] = s.n;
    j["instances"] = s.instances;
  }
  if (subcommand == "check-interpolation") {
    j["n"] = s.n;
    j["t"] = s.t;
    j["dt"] = s.dt;
    j["mc_samples"] = s.mc_samples;
  }
  j["acceptance"] = s.acceptance;
  return j;
}

double band(const Settings& s, const char* key, double fallback) {
  const auto it = s.acceptance.find(key);
  if (it == s.acceptance.end()) return fallback;
  if (!it->is_number()) throw UsageError(std::string("acceptance.") + key + " must be a number");
  return it->get<double>();
}

// ---------------------------------------------------------------- scaling runs

std::string scaling_csv(const ScalingReport& report) {
  std::ostringstream os;
  os << "N,M,k,moment,ci_low,ci_high,ks_median\n";
  for (const auto& r : report.records) {
    os << r.n << ',' << r.m << ',' << report.k << ',' << num(r.moment) << ',' << num(r.ci_low) << ','
       << num(r.ci_high) << ',' << (r.ks_median ? num(*r.ks_median) : std::string()) << '\n';
  }
  return os.str();
}

json scaling_json(const ScalingReport& report) {
  json j;
  j["statistic"] = report.statistic;
  j["k"] = report.k;
  if (report.fit) {
    j["fit"] = {{"slope", report.fit->slope},
                {"intercept", report.fit->intercept},
                {"slope_se", report.fit->slope_se},
                {"intercept_se", report.fit->intercept_se}};
  } else {
    j["fit"] = nullptr;
  }
  json rows = json::array();
  for (const auto& r : report.records) {
    json row = {{"N", r.n},
                {"M", r.m},
                {"moment", r.moment},
                {"ci_low", r.ci_low},
                {"ci_high", r.ci_high},
                {"standard_error", r.standard_error},
                {"n_effective", r.n_effective}};
    row["ks_median"] = r.ks_median ? json(*r.ks_median) : json(nullptr);
    rows.push_back(row);
  }
  j["records"] = rows;
  json diag = json::object();
  for (const auto& [key, value] : report.diagnostics) diag[key] = number_or_null(value);
  j["diagnostics"] = diag;
  j["warnings"] = report.warnings;
  return j;
}

bool identically_zero(const ScalingReport& report) {
  return !report.records.empty() &&
         std::all_of(report.records.begin(), report.records.end(), [](const auto& r) { return r.moment == 0.0; });
}

// A statistic without a fit passes only when every moment is exactly zero.
Check slope_check(const ScalingReport& report, const Settings& s) {
  const double lo = band(s, "slope_min", -1.4 * report.k);
  const double hi = band(s, "slope_max", -0.6 * report.k);
  Check c;
  c.name = report.statistic + " slope in [" + num(lo) + ", " + num(hi) + "]";
  if (report.fit) {
    c.passed = report.fit->slope >= lo && report.fit->slope <= hi;
    c.detail = "slope " + num(report.fit->slope) + " +- " + num(report.fit->slope_se);
  } else if (identically_zero(report)) {
    c.passed = true;
    c.detail = "moments identically zero";
  } else {
    c.detail = "no fit (a moment is zero or too few grid points)";
  }
  return c;
}

void add_ks_check(const ScalingReport& report, const Settings& s, Outcome& o) {
  const auto it = s.acceptance.find("ks_decreasing");
  if (it == s.acceptance.end() || !it->get<bool>()) return;
  Check c{"median KS decreases from first to last N", false, "KS not computed"};
  if (report.records.size() >= 2 && report.records.front().ks_median && report.records.back().ks_median) {
    const double first = *report.records.front().ks_median;
    const double last = *report.records.back().ks_median;
    c.passed = last < first;
    c.detail = num(first) + " -> " + num(last);
  }
  o.checks.push_back(c);
}

Outcome scaling_outcome(const ScalingReport& report, const Settings& s) {
  Outcome o;
  o.csv = scaling_csv(report);
  o.result = scaling_json(report);
  o.headline_name = "slope";
  o.headline = report.fit ? report.fit->slope : std::numeric_limits<double>::quiet_NaN();
  o.checks.push_back(slope_check(report, s));
  add_ks_check(report, s, o);
  return o;
}

Outcome run_solve_q(const Settings& s) {
  const TheoryConstants tc = solve_q(s.cfg.beta, s.cfg.h, SolveOptions{1e-14, 10000, s.cfg.quad_order});
  Outcome o;
  o.csv = "beta,h,q,residual,iterations\n" + num(tc.beta) + ',' + num(tc.h) + ',' + num(tc.q) + ',' +
          num(tc.residual) + ',' + std::to_string(tc.iterations) + '\n';
  o.result = {{"q", tc.q}, {"residual", tc.residual}, {"iterations", tc.iterations}};
  o.headline_name = "q";
  o.headline = tc.q;
  const double tol = band(s, "max_residual", 1e-12);
  o.checks.push_back({"fixed-point residual <= " + num(tol), tc.residual <= tol, "residual " + num(tc.residual)});
  return o;
}

Outcome run_local(const Settings& s) {
  const ScalingReport report = run_local_clt(s.cfg);
  Outcome o = scaling_outcome(report, s);
  const auto it = report.diagnostics.find("max_mixture_mass_error");
  if (it != report.diagnostics.end()) {
    const double tol = band(s, "max_mixture_mass_error", 1e-10);
    o.checks.push_back({"mixture mass error <= " + num(tol), it->second <= tol, num(it->second)});
  }
  return o;
}

Outcome run_overlap(const Settings& s) {
  const OverlapReport report = run_overlap_concentration(s.cfg);
  Outcome o = scaling_outcome(report.overlap, s);
  o.result = json::object();
  o.result["overlap"] = scaling_json(report.overlap);
  o.result["t1"] = scaling_json(report.t_i);
  o.result["t11"] = scaling_json(report.t_ii);
  o.result["t12"] = scaling_json(report.t_ij);
  o.extra_csv = {{"results-t1.csv", scaling_csv(report.t_i)},
                 {"results-t11.csv", scaling_csv(report.t_ii)},
                 {"results-t12.csv", scaling_csv(report.t_ij)}};
  o.checks.push_back(slope_check(report.t_i, s));
  o.checks.push_back(slope_check(report.t_ii, s));
  o.checks.push_back(slope_check(report.t_ij, s));
  return o;
}

Outcome run_identity(const Settings& s) {
  const std::size_t n = s.n ? s.n : 12;
  if (s.instances == 0) throw UsageError("--instances must be positive");
  const ModelParams params{n, s.cfg.beta, s.cfg.h};
  params.validate();
  std::ostringstream csv;
  csv << "instance,N,max_residual\n";
  double worst = 0.0;
  for (std::size_t i = 0; i < s.instances; ++i) {
    const std::uint64_t seed = sample_seed(s.cfg.master_seed, n, i);
    const Disorder disorder = Disorder::sample(n, derive_seed(seed, Stream::disorder, 0));
    const double residual = check_fundamental_identity(params, disorder);
    worst = std::max(worst, residual);
    csv << i << ',' << n << ',' << num(residual) << '\n';
  }
  Outcome o;
  o.csv = csv.str();
  o.result = {{"max_residual", worst}, {"instances", s.instances}, {"N", n}};
  o.headline_name = "max_residual";
  o.headline = worst;
  const double tol = band(s, "max_residual", 1e-10);
  o.checks.push_back({"max site residual <= " + num(tol), worst <= tol, num(worst)});
  return o;
}

json check_json(const IdentityCheck& c) {
  return {{"name", c.name},
          {"estimate", c.estimate},
          {"expected", c.expected},
          {"standard_error", c.standard_error},
          {"z", number_or_null(c.z())}};
}

Outcome run_interpolation(const Settings& s) {
  const std::size_t n = s.n ? s.n : 8;
  const ModelParams params{n, s.cfg.beta, s.cfg.h};
  params.validate();
  const std::uint64_t master = s.cfg.master_seed;
  const Disorder disorder = Disorder::sample(n, derive_seed(sample_seed(master, n, 0), Stream::disorder, 0));
  auto [a, b] = draw_replicas(params, disorder, derive_seed(master, Stream::replica_draw, 0));
  const InterpolationProbe probe{s.t, std::move(a), std::move(b), derive_seed(master, Stream::interpolation, 0)};
  const TestFunction u = s.test_function_set ? s.cfg.test_function : TestFunction::parse("square");

  const CovarianceReport cov = check_interpolation_covariances(probe, params, disorder, s.mc_samples);
  const DerivativeReport deriv =
      check_interpolation_derivative(params, disorder, u, probe, s.dt, s.mc_samples, s.cfg.quad_order);
  const DerivativeReport linear = check_interpolation_derivative(params, disorder, TestFunction::identity(), probe,
                                                                 s.dt, s.mc_samples, s.cfg.quad_order);

  std::vector<std::pair<std::string, IdentityCheck>> rows;
  for (const auto& c : cov.checks) rows.emplace_back("covariance", c);
  rows.emplace_back("derivative", deriv.difference);
  rows.emplace_back("linear", linear.phi);
  rows.emplace_back("linear", linear.finite_difference);
  rows.emplace_back("linear", linear.lemma_rhs);

  Outcome o;
  std::ostringstream csv;
  csv << "group,check,estimate,expected,standard_error,z\n";
  double worst = 0.0;
  json checks = json::array();
  for (const auto& [group, c] : rows) {
    csv << group << ",\"" << c.name << "\"," << num(c.estimate) << ',' << num(c.expected) << ','
        << num(c.standard_error) << ',' << num(c.z()) << '\n';
    worst = std::max(worst, std::abs(c.z()));
    json jc = check_json(c);
    jc["group"] = group;
    checks.push_back(jc);
  }
  o.csv = csv.str();
  const auto& ts = cov.t_stats;
  o.result = {{"q", cov.q},
              {"t_statistics", {{"T1", ts.t1}, {"T2", ts.t2}, {"T11", ts.t11}, {"T22", ts.t22}, {"T12", ts.t12}}},
              {"test_function", u.describe()},
              {"derivative",
               {{"finite_difference", check_json(deriv.finite_difference)},
                {"lemma_rhs", check_json(deriv.lemma_rhs)},
                {"difference", check_json(deriv.difference)}}},
              {"checks", checks}};
  o.headline_name = "max_abs_z";
  o.headline = worst;
  const double tol = band(s, "max_abs_z", 4.0);
  o.checks.push_back({"all identities within " + num(tol) + " SE", worst <= tol, "max |z| " + num(worst)});
  return o;
}

Outcome run_qminus(const Settings& s, bool grid_given) {
  const std::vector<std::size_t> grid = grid_given ? s.cfg.n_grid : std::vector<std::size_t>{10, 100, 1000, 10000};
  const auto rows = check_q_minus(s.cfg.beta, s.cfg.h, grid);
  std::ostringstream csv;
  csv << "N,q,q_minus,scaled_gap\n";
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  json table = json::array();
  for (const auto& r : rows) {
    csv << r.n << ',' << num(r.q) << ',' << num(r.q_minus) << ',' << num(r.scaled_gap) << '\n';
    lo = std::min(lo, r.scaled_gap);
    hi = std::max(hi, r.scaled_gap);
    table.push_back({{"N", r.n}, {"q", r.q}, {"q_minus", r.q_minus}, {"scaled_gap", r.scaled_gap}});
  }
  // 0/0 counts as flat: both q and q_minus coincide on the whole grid.
  const double ratio = hi == 0.0 ? 1.0 : hi / lo;
  Outcome o;
  o.csv = csv.str();
  o.result = {{"rows", table}, {"max_over_min", number_or_null(ratio)}};
  o.headline_name = "max_over_min";
  o.headline = ratio;
  const double tol = band(s, "max_ratio", 2.0);
  o.checks.push_back({"max/min of N|q - q_minus| < " + num(tol), ratio < tol, num(ratio)});
  return o;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  os << text;
  if (!os) throw std::runtime_error("write failed for '" + path.string() + "'");
}

fs::path output_directory(const Flags& f, const std::string& subcommand) {
  if (!f.out_dir.empty()) return f.out_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return fs::path(env) / subcommand;
  return fs::path("skcavity-output") / subcommand;
}

struct Subcommand {
  const char* name;
  const char* help;
};

constexpr Subcommand kSubcommands[] = {
    {"solve-q", "solve q = E tanh^2(beta z sqrt(q) + h)"},
    {"verify-cavity", "moments of <U(l)> - E U(N(r, 1-q)) across an N grid"},
    {"verify-cavity-centered", "moments of <U(l - r)> - E U(N(0, 1-q)) across an N grid"},
    {"verify-local", "moments of <U(l_i)> against the two-Gaussian mixture across an N grid"},
    {"verify-tap", "moments of the TAP residual at a site across an N grid"},
    {"verify-overlap", "second moments of R - q and the T statistics across an N grid"},
    {"check-identity", "<s_i> = <tanh(beta l_i + h)> on random instances"},
    {"check-interpolation", "Gaussian interpolation covariances and derivative by Monte Carlo"},
    {"check-qminus", "N |q - q_minus| over an N grid"},
};

void add_options(CLI::App& sub, Flags& f, const std::string& name) {
  sub.add_option("--config", f.config_path, "JSON config file (keys mirror the flags)");
  sub.add_option("--out", f.out_dir, "output directory (default: $SKCAVITY_OUTPUT_DIR/<subcommand>)");
  sub.add_option("--beta", f.beta, "inverse temperature, 0 <= beta < 0.5");
  sub.add_option("--h", f.h, "external field");
  sub.add_option("--seed", f.seed, "master seed");
  sub.add_option("--workers", f.workers, "worker threads (0 = all cores)");
  sub.add_flag("--assert", f.assert_bands, "exit 1 when an acceptance band is violated");
  sub.add_option("--test-function", f.test_function, "cos:w, sin:w, exp:a, tanh:a,b, poly:c0,c1,..., linear, square, one");
  if (name == "solve-q") return;
  sub.add_option("--n-grid", f.n_grid, "comma-separated system sizes");
  if (name == "check-qminus") return;
  if (name == "check-identity" || name == "check-interpolation") {
    sub.add_option("--n", f.n, "system size");
  }
  if (name == "check-identity") {
    sub.add_option("--instances", f.instances, "number of disorder draws");
    return;
  }
  if (name == "check-interpolation") {
    sub.add_option("--t", f.t, "interpolation time in (0, 1)");
    sub.add_option("--dt", f.dt, "finite-difference half step");
    sub.add_option("--mc-samples", f.mc_samples, "Monte Carlo samples");
    return;
  }
  sub.add_option("--k", f.k, "moment order 2k");
  sub.add_option("--h-grid", f.h_grid, "comma-separated fields; repeats the run for each h");
  sub.add_option("--backend", f.backend, "exact or mcmc")->check(CLI::IsMember({"exact", "mcmc"}));
  sub.add_option("--samples", f.samples, "disorder draws per N");
  sub.add_option("--sweeps", f.sweeps, "retained MCMC sweeps per chain");
  sub.add_option("--resamples", f.resamples, "bootstrap resamples");
  if (name == "verify-local" || name == "verify-tap") {
    sub.add_option("--site", f.site, "site index, 1-based");
    sub.add_flag("--all-sites", f.all_sites, "average the statistic over all sites");
    sub.add_flag("--allow-biased", f.allow_biased, "allow the mcmc backend for magnetizations");
  }
  if (name == "verify-cavity") sub.add_flag("--no-ks", f.no_ks, "skip KS distances");
}

Outcome run(const std::string& name, const Settings& s, bool grid_given) {
  if (name == "solve-q") return run_solve_q(s);
  if (name == "check-identity") return run_identity(s);
  if (name == "check-interpolation") return run_interpolation(s);
  if (name == "check-qminus") return run_qminus(s, grid_given);
  s.cfg.validate();
  if (name == "verify-cavity") return scaling_outcome(run_cavity_clt(s.cfg), s);
  if (name == "verify-cavity-centered") return scaling_outcome(run_centered_cavity_clt(s.cfg), s);
  if (name == "verify-local") return run_local(s);
  if (name == "verify-tap") return scaling_outcome(run_tap_residual(s.cfg), s);
  if (name == "verify-overlap") return run_overlap(s);
  throw UsageError("unknown subcommand '" + name + "'");
}

bool is_scaling(const std::string& name) { return name.rfind("verify-", 0) == 0; }

// Prefixes every CSV line with the field value ("h" in the header).
std::string with_h_column(const std::string& csv, double h, bool header) {
  std::istringstream in(csv);
  std::string line, out;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      if (header) out += "h," + line + "\n";
      first = false;
      continue;
    }
    out += num(h) + "," + line + "\n";
  }
  return out;
}

// One scaling run per field value; the headline is the largest (least negative) slope.
Outcome run_h_sweep(const std::string& name, const Settings& s, bool grid_given) {
  Outcome combined;
  combined.headline_name = "max_slope";
  combined.headline = -std::numeric_limits<double>::infinity();
  json sweep = json::array();
  for (std::size_t k = 0; k < s.h_grid.size(); ++k) {
    Settings one = s;
    one.cfg.h = s.h_grid[k];
    Outcome o = run(name, one, grid_given);
    combined.csv += with_h_column(o.csv, one.cfg.h, k == 0);
    if (k == 0) {
      for (const auto& [file, body] : o.extra_csv) combined.extra_csv.emplace_back(file, with_h_column(body, one.cfg.h, true));
    } else {
      for (std::size_t e = 0; e < o.extra_csv.size(); ++e) {
        combined.extra_csv[e].second += with_h_column(o.extra_csv[e].second, one.cfg.h, false);
      }
    }
    if (std::isfinite(o.headline)) combined.headline = std::max(combined.headline, o.headline);
    for (auto& c : o.checks) {
      c.name = "h=" + num(one.cfg.h) + ": " + c.name;
      combined.checks.push_back(c);
    }
    sweep.push_back({{"h", one.cfg.h}, {"result", o.result}});
  }
  if (!std::isfinite(combined.headline)) combined.headline = std::numeric_limits<double>::quiet_NaN();
  combined.result = {{"sweep", sweep}};
  return combined;
}

}  // namespace

std::string version() { return SKCAVITY_VERSION; }

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"SK spin glass high-temperature verification toolkit", "skcavity"};
  // "-h" would collide with the field flag --h.
  app.set_help_flag("--help", "print this help and exit");
  app.set_version_flag("--version", version());
  app.require_subcommand(1);
  Flags flags;
  for (const auto& sc : kSubcommands) add_options(*app.add_subcommand(sc.name, sc.help), flags, sc.name);
  app.footer(std::string("Outputs go to --out, else $") + kOutputDirEnv +
             "/<subcommand>, else ./skcavity-output/<subcommand>.\n"
             "Exit codes: 0 success, 1 numerical failure or --assert violation, 2 usage error.");

  std::vector<const char*> argv{"skcavity"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  Settings settings;
  fs::path dir;
  try {
    if (!flags.config_path.empty()) apply_config_file(flags.config_path, settings);
    apply_flags(*sub, flags, settings);
    dir = output_directory(flags, name);
  } catch (const std::invalid_argument& e) {
    err << "skcavity: " << e.what() << '\n';
    return kExitUsage;
  }
  const bool grid_given = (sub->get_option_no_throw("--n-grid") && sub->count("--n-grid") > 0) || !flags.config_path.empty();

  const auto start = std::chrono::steady_clock::now();
  Outcome outcome;
  try {
    if (!settings.h_grid.empty() && !is_scaling(name)) throw UsageError("--h-grid applies to verify-* subcommands");
    outcome = settings.h_grid.empty() ? run(name, settings, grid_given) : run_h_sweep(name, settings, grid_given);
  } catch (const std::invalid_argument& e) {
    err << "skcavity " << name << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::length_error& e) {
    err << "skcavity " << name << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "skcavity " << name << ": numerical failure: " << e.what() << '\n';
    return kExitFailure;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  bool all_passed = true;
  json checks = json::array();
  for (const auto& c : outcome.checks) {
    all_passed = all_passed && c.passed;
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }

  const json effective = config_json(name, settings);
  json summary;
  summary["subcommand"] = name;
  summary["version"] = version();
  summary["wall_seconds"] = seconds;
  summary["config"] = effective;
  summary["headline"] = {{"name", outcome.headline_name}, {"value", number_or_null(outcome.headline)}};
  summary[outcome.headline_name] = number_or_null(outcome.headline);
  summary["result"] = outcome.result;
  summary["acceptance"] = {{"passed", all_passed}, {"asserted", flags.assert_bands}, {"checks", checks}};

  json echo;
  echo["arguments"] = args;
  echo["config_file"] = flags.config_path.empty() ? json(nullptr) : json(flags.config_path);
  echo["effective"] = effective;

  try {
    fs::create_directories(dir);
    write_file(dir / "results.csv", outcome.csv);
    for (const auto& [file, body] : outcome.extra_csv) write_file(dir / file, body);
    write_file(dir / "summary.json", summary.dump(2) + "\n");
    write_file(dir / "config-echo.json", echo.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "skcavity " << name << ": " << e.what() << '\n';
    return kExitFailure;
  }

  out << name << ": " << outcome.headline_name << " = " << num(outcome.headline) << " (" << num(seconds)
      << " s) -> " << dir.string() << '\n';
  for (const auto& c : outcome.checks) {
    out << "  [" << (c.passed ? "ok" : "out of band") << "] " << c.name << ": " << c.detail << '\n';
  }
  if (flags.assert_bands && !all_passed) return kExitFailure;
  return kExitOk;
}

int dispatch(const std::vector<std::string>& args) { return dispatch(args, std::cout, std::cerr); }

}  // namespace sk::cli
