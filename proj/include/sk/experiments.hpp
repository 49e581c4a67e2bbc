#pragma once

// Verification harness: disorder ensembles over an N grid, moment-of-error
// estimates with bootstrap intervals, and log-log scaling fits.

#include "sk/core_model.hpp"
#include "sk/mcmc.hpp"
#include "sk/test_function.hpp"
#include "sk/theory.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sk {

enum class Backend { exact, mcmc };

std::string_view to_string(Backend backend);
Backend parse_backend(std::string_view name);

struct ExperimentConfig {
  double beta = 0.3;
  double h = 0.3;
  int k = 1;  // the moment order is 2k
  std::vector<std::size_t> n_grid{8, 10, 12, 14, 16, 18, 20};
  std::size_t samples = 400;  // disorder draws per N
  Backend backend = Backend::exact;
  ChainConfig chain{0, 1, 100000, 0, false};
  TestFunction test_function = TestFunction::cosine(1.0);
  std::uint64_t master_seed = 1;
  int quad_order = kDefaultQuadratureOrder;
  std::size_t workers = 0;  // 0 = hardware concurrency
  std::size_t bootstrap_resamples = 1000;
  bool compute_ks = true;  // exact cavity statistics only

  // Local-field and TAP statistics.
  std::size_t site = 0;
  bool average_sites = false;
  bool allow_biased_backend = false;  // permits mcmc where exact magnetizations are expected

  void validate() const;
};

// Seed of disorder sample `index` at size n.
std::uint64_t sample_seed(std::uint64_t master_seed, std::size_t n, std::size_t index);

struct ScalingPoint {
  double n = 0.0;
  double moment = 0.0;
  double standard_error = 0.0;
};

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double intercept_se = 0.0;
};

// Weighted least squares of log(moment) on log(N); weights are the inverse
// delta-method variances (se / moment)^2. Falls back to ordinary least squares
// (residual-based errors) when any standard error is zero.
ScalingFit fit_scaling(std::span<const ScalingPoint> points);

struct ScalingRecord {
  std::size_t n = 0;
  std::size_t m = 0;
  double moment = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double standard_error = 0.0;
  std::size_t n_effective = 0;
  std::optional<double> ks_median;
};

struct ScalingReport {
  std::string statistic;
  int k = 1;
  std::vector<ScalingRecord> records;
  std::optional<ScalingFit> fit;  // absent when fewer than 3 points or a moment is zero
  std::map<std::string, double> diagnostics;
  std::vector<std::string> warnings;
};

// E[<U(l)> - int U dN(r, 1 - q)]^{2k}.
ScalingReport run_cavity_clt(const ExperimentConfig& cfg);
// E[<U(l - r)> - int U dN(0, 1 - q)]^{2k}.
ScalingReport run_centered_cavity_clt(const ExperimentConfig& cfg);
// E[<U(l_i)> - int U d nu_i]^{2k}.
ScalingReport run_local_clt(const ExperimentConfig& cfg);
// E[<s_i> - tap_rhs(i)]^{2k}.
ScalingReport run_tap_residual(const ExperimentConfig& cfg);

struct OverlapReport {
  ScalingReport overlap;  // E<(R_{1,2} - q)^2>
  ScalingReport t_i;      // E<T_1^2>
  ScalingReport t_ii;     // E<T_{1,1}^2>
  ScalingReport t_ij;     // E<T_{1,2}^2>
};

// Second-moment (k = 1) concentration of the overlap and T statistics; exact backend only.
OverlapReport run_overlap_concentration(const ExperimentConfig& cfg);

// max_i |<s_i> - <tanh(beta l_i + h)>| for one instance, N <= 14.
double check_fundamental_identity(const ModelParams& params, const Disorder& disorder);

struct QMinusRow {
  std::size_t n = 0;
  double q = 0.0;
  double q_minus = 0.0;
  double scaled_gap = 0.0;  // N |q - q_minus|
};

std::vector<QMinusRow> check_q_minus(double beta, double h, std::span<const std::size_t> n_grid);

}  // namespace sk
