#include "sk/experiments.hpp"

#include "sk/gibbs_exact.hpp"
#include "sk/parallel.hpp"
#include "sk/rng.hpp"
#include "sk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sk {

std::string_view to_string(Backend backend) { return backend == Backend::exact ? "exact" : "mcmc"; }

Backend parse_backend(std::string_view name) {
  if (name == "exact") return Backend::exact;
  if (name == "mcmc") return Backend::mcmc;
  throw std::invalid_argument("unknown backend '" + std::string(name) + "' (expected exact or mcmc)");
}

void ExperimentConfig::validate() const {
  if (!(beta >= 0.0 && beta < kHighTemperatureLimit)) {
    throw std::invalid_argument("experiment: beta must lie in [0, 0.5)");
  }
  if (!std::isfinite(h)) throw std::invalid_argument("experiment: h must be finite");
  if (k < 1) throw std::invalid_argument("experiment: k must be a positive integer");
  if (n_grid.empty()) throw std::invalid_argument("experiment: empty N grid");
  if (!std::is_sorted(n_grid.begin(), n_grid.end())) throw std::invalid_argument("experiment: N grid must be sorted");
  if (n_grid.front() < 2) throw std::invalid_argument("experiment: grid values must be at least 2");
  if (samples < 20) throw std::invalid_argument("experiment: need at least 20 disorder samples per N");
  if (backend == Backend::exact && n_grid.back() > kMaxEnumerationSpins) {
    throw CapacityError("experiment: exact backend supports N <= 24; use the mcmc backend");
  }
  if (backend == Backend::mcmc) chain.validate();
  if (quad_order < 2) throw std::invalid_argument("experiment: quadrature order must be >= 2");
}

std::uint64_t sample_seed(std::uint64_t master_seed, std::size_t n, std::size_t index) {
  return derive_seed(master_seed, Stream::sample, (static_cast<std::uint64_t>(n) << 32) ^ index);
}

ScalingFit fit_scaling(std::span<const ScalingPoint> points) {
  if (points.size() < 3) throw std::invalid_argument("fit_scaling: need at least 3 points");
  bool weighted = true;
  for (const auto& p : points) {
    if (!(p.moment > 0.0) || !(p.n > 0.0)) {
      throw std::invalid_argument("fit_scaling: moments must be positive (increase the sample count)");
    }
    if (!(p.standard_error > 0.0) || !std::isfinite(p.standard_error)) weighted = false;
  }
  const std::size_t count = points.size();
  std::vector<double> x(count), y(count), w(count, 1.0);
  for (std::size_t i = 0; i < count; ++i) {
    x[i] = std::log(points[i].n);
    y[i] = std::log(points[i].moment);
    if (weighted) {
      const double rel = points[i].standard_error / points[i].moment;
      w[i] = 1.0 / (rel * rel);
    }
  }
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double xbar = sx / sw;
  const double ybar = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    sxx += w[i] * (x[i] - xbar) * (x[i] - xbar);
    sxy += w[i] * (x[i] - xbar) * (y[i] - ybar);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_scaling: need at least two distinct N values");

  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  double scale = 1.0;
  if (!weighted) {
    double rss = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      const double e = y[i] - fit.intercept - fit.slope * x[i];
      rss += e * e;
    }
    scale = rss / static_cast<double>(count - 2);
  }
  fit.slope_se = std::sqrt(scale / sxx);
  fit.intercept_se = std::sqrt(scale * (1.0 / sw + xbar * xbar / sxx));
  return fit;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double power_2k(double x, int k) {
  const double sq = x * x;
  double out = 1.0;
  for (int i = 0; i < k; ++i) out *= sq;
  return out;
}

// Per-sample outcome: the contribution averaged into the moment, plus extras.
struct SampleOutcome {
  double contribution = 0.0;
  double ks = 0.0;
  double mass_error = 0.0;
};

ScalingRecord summarize(const ExperimentConfig& cfg, std::size_t n, const std::vector<SampleOutcome>& out,
                        bool with_ks) {
  std::vector<double> contributions(out.size());
  for (std::size_t s = 0; s < out.size(); ++s) contributions[s] = out[s].contribution;
  const BootstrapOptions opts{cfg.bootstrap_resamples, derive_seed(cfg.master_seed, Stream::bootstrap, n), 0.95};
  const MomentEstimate est = bootstrap_mean(contributions, opts);
  ScalingRecord rec;
  rec.n = n;
  rec.m = out.size();
  rec.moment = est.estimate;
  rec.ci_low = est.ci_low;
  rec.ci_high = est.ci_high;
  rec.standard_error = est.standard_error;
  rec.n_effective = est.n;
  if (with_ks) {
    std::vector<double> ks(out.size());
    for (std::size_t s = 0; s < out.size(); ++s) ks[s] = out[s].ks;
    rec.ks_median = median(std::move(ks));
  }
  return rec;
}

void attach_fit(ScalingReport& report) {
  if (report.records.size() < 3) return;
  std::vector<ScalingPoint> pts;
  for (const auto& r : report.records) {
    if (!(r.moment > 0.0)) return;
    pts.push_back({static_cast<double>(r.n), r.moment, r.standard_error});
  }
  report.fit = fit_scaling(pts);
}

// A weighted sample of field values: either the exact Gibbs law (log weights =
// minus energies) or equally weighted chain draws.
struct FieldSample {
  std::vector<double> values;
  std::vector<double> log_weights;
};

std::vector<double> normalized_weights(const std::vector<double>& log_weights) {
  const double shift = *std::max_element(log_weights.begin(), log_weights.end());
  std::vector<double> w(log_weights.size());
  double z = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    w[k] = std::exp(log_weights[k] - shift);
    z += w[k];
  }
  for (double& x : w) x /= z;
  return w;
}

// <U(X - center)> for the weighted sample. Polynomials go through raw moments
// so that the linear part cancels exactly when center equals the sample mean.
double weighted_expectation(const TestFunction& u, const FieldSample& sample, const std::vector<double>& w,
                            double center) {
  if (const auto coeffs = u.polynomial_coefficients()) {
    const std::size_t degree = coeffs->size() - 1;
    std::vector<double> raw(degree + 1, 0.0);
    raw[0] = 1.0;
    for (std::size_t p = 1; p <= degree; ++p) {
      double s = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * std::pow(sample.values[k], static_cast<double>(p));
      raw[p] = s;
    }
    std::vector<double> shifted(degree + 1, 0.0);
    shifted[0] = 1.0;
    for (std::size_t p = 1; p <= degree; ++p) {
      double s = 0.0;
      double binom = 1.0;
      for (std::size_t j = 0; j <= p; ++j) {
        s += binom * raw[j] * std::pow(-center, static_cast<double>(p - j));
        binom = binom * static_cast<double>(p - j) / static_cast<double>(j + 1);
      }
      shifted[p] = s;
    }
    return polynomial_expectation(*coeffs, shifted);
  }
  double s = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * u.value(sample.values[k] - center);
  return s;
}

double weighted_mean(const FieldSample& sample, const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * sample.values[k];
  return s;
}

FieldSample exact_cavity_field(const ModelParams& params, const Disorder& disorder, const AuxGaussians& aux) {
  const std::size_t total = std::size_t{1} << params.n;
  FieldSample out{std::vector<double>(total), std::vector<double>(total)};
  double raw = 0.0;
  for (std::size_t j = 0; j < params.n; ++j) raw -= aux[j];
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(params.n));
  for_each_configuration(params, disorder, [&](std::uint32_t bits, int flipped, double me, std::span<const double>) {
    if (flipped >= 0) {
      const double spin = (bits >> flipped) & 1U ? 1.0 : -1.0;
      raw += 2.0 * spin * aux[static_cast<std::size_t>(flipped)];
    }
    out.values[bits] = raw * inv_sqrt_n;
    out.log_weights[bits] = me;
  });
  return out;
}

FieldSample chain_cavity_field(const ModelParams& params, const Disorder& disorder, const AuxGaussians& aux,
                               const ChainConfig& chain) {
  GlauberChain state(params, disorder, chain.seed);
  for (std::size_t s = 0; s < chain.effective_burnin(params.n); ++s) state.sweep();
  FieldSample out{std::vector<double>(chain.n_samples), std::vector<double>(chain.n_samples, 0.0)};
  for (std::size_t t = 0; t < chain.n_samples; ++t) {
    for (std::size_t s = 0; s < chain.thinning; ++s) state.sweep();
    out.values[t] = cavity_field(state.config(), aux);
  }
  return out;
}

ScalingReport run_cavity_family(const ExperimentConfig& cfg, bool centered) {
  cfg.validate();
  const TheoryConstants theory = solve_q(cfg.beta, cfg.h, {1e-14, 10000, cfg.quad_order});
  const double variance = 1.0 - theory.q;
  const bool with_ks = cfg.backend == Backend::exact && cfg.compute_ks;

  ScalingReport report;
  report.statistic = centered ? "centered_cavity_clt" : "cavity_clt";
  report.k = cfg.k;
  report.diagnostics["q"] = theory.q;
  for (const std::size_t n : cfg.n_grid) {
    const ModelParams params{n, cfg.beta, cfg.h};
    std::vector<SampleOutcome> out(cfg.samples);
    parallel_for(cfg.samples, cfg.workers, [&](std::size_t s) {
      const std::uint64_t seed = sample_seed(cfg.master_seed, n, s);
      const Disorder disorder = Disorder::sample(n, derive_seed(seed, Stream::disorder, 0));
      const AuxGaussians aux = AuxGaussians::sample(n, derive_seed(seed, Stream::aux_gaussians, 0));
      FieldSample field;
      if (cfg.backend == Backend::exact) {
        field = exact_cavity_field(params, disorder, aux);
      } else {
        ChainConfig chain = cfg.chain;
        chain.seed = derive_seed(seed, Stream::chain, 0);
        field = chain_cavity_field(params, disorder, aux, chain);
      }
      const std::vector<double> w = normalized_weights(field.log_weights);
      const double r = weighted_mean(field, w);
      const double gibbs = weighted_expectation(cfg.test_function, field, w, centered ? r : 0.0);
      const double gauss = gaussian_expectation(cfg.test_function, centered ? 0.0 : r, variance, cfg.quad_order);
      out[s].contribution = power_2k(gibbs - gauss, cfg.k);
      if (with_ks) {
        const DiscreteFieldLaw law = DiscreteFieldLaw::from_log_weights(field.values, field.log_weights);
        out[s].ks = ks_distance(law, [&](double x) { return gaussian_cdf(x, r, variance); });
      }
    });
    report.records.push_back(summarize(cfg, n, out, with_ks));
  }
  attach_fit(report);
  return report;
}

// Magnetizations and, per requested site, <U(l_i)> under one disorder sample.
struct LocalAverages {
  std::vector<double> magnetizations;
  std::vector<double> field_averages;  // aligned with the requested sites
};

std::vector<std::size_t> requested_sites(const ExperimentConfig& cfg, std::size_t n) {
  if (cfg.average_sites) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    return all;
  }
  if (cfg.site >= n) throw std::out_of_range("experiment: site out of range for N = " + std::to_string(n));
  return {cfg.site};
}

LocalAverages exact_local_averages(const ModelParams& params, const Disorder& disorder, const TestFunction* u,
                                   std::span<const std::size_t> sites) {
  const std::size_t n = params.n;
  const std::size_t per_site = u ? 1 : 0;
  WeightedSums acc(n + per_site * sites.size());
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  for_each_configuration(params, disorder, [&](std::uint32_t bits, int, double me, std::span<const double> sums) {
    const double w = acc.push(me);
    for (std::size_t i = 0; i < n; ++i) acc.add(i, (bits >> i) & 1U ? w : -w);
    if (u) {
      for (std::size_t k = 0; k < sites.size(); ++k) acc.add(n + k, w * u->value(sums[sites[k]] * inv_sqrt_n));
    }
  });
  LocalAverages out;
  out.magnetizations.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.magnetizations[i] = acc.mean(i);
  out.field_averages.resize(per_site * sites.size());
  for (std::size_t k = 0; k < out.field_averages.size(); ++k) out.field_averages[k] = acc.mean(n + k);
  return out;
}

LocalAverages chain_local_averages(const ModelParams& params, const Disorder& disorder, const TestFunction* u,
                                   std::span<const std::size_t> sites, const ChainConfig& chain) {
  const std::size_t n = params.n;
  GlauberChain state(params, disorder, chain.seed);
  for (std::size_t s = 0; s < chain.effective_burnin(n); ++s) state.sweep();
  LocalAverages out;
  out.magnetizations.assign(n, 0.0);
  out.field_averages.assign(u ? sites.size() : 0, 0.0);
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t t = 0; t < chain.n_samples; ++t) {
    for (std::size_t s = 0; s < chain.thinning; ++s) state.sweep();
    for (std::size_t i = 0; i < n; ++i) out.magnetizations[i] += state.config()[i];
    for (std::size_t k = 0; k < out.field_averages.size(); ++k) {
      out.field_averages[k] += u->value(state.coupling_sum(sites[k]) * inv_sqrt_n);
    }
  }
  const double count = static_cast<double>(chain.n_samples);
  for (double& m : out.magnetizations) m /= count;
  for (double& f : out.field_averages) f /= count;
  return out;
}

void check_biased_backend(const ExperimentConfig& cfg, ScalingReport& report) {
  if (cfg.backend != Backend::mcmc) return;
  if (!cfg.allow_biased_backend) {
    throw std::invalid_argument(report.statistic +
                                ": the mcmc backend biases this statistic; set allow_biased_backend to use it");
  }
  report.warnings.push_back("mcmc magnetizations carry sampling error that biases the moment upward");
}

LocalAverages local_averages(const ExperimentConfig& cfg, const ModelParams& params, const Disorder& disorder,
                             const TestFunction* u, std::span<const std::size_t> sites, std::uint64_t seed) {
  if (cfg.backend == Backend::exact) return exact_local_averages(params, disorder, u, sites);
  ChainConfig chain = cfg.chain;
  chain.seed = derive_seed(seed, Stream::chain, 0);
  return chain_local_averages(params, disorder, u, sites, chain);
}

}  // namespace

ScalingReport run_cavity_clt(const ExperimentConfig& cfg) { return run_cavity_family(cfg, false); }

ScalingReport run_centered_cavity_clt(const ExperimentConfig& cfg) { return run_cavity_family(cfg, true); }

ScalingReport run_local_clt(const ExperimentConfig& cfg) {
  cfg.validate();
  ScalingReport report;
  report.statistic = "local_clt";
  report.k = cfg.k;
  check_biased_backend(cfg, report);
  const TheoryConstants theory = solve_q(cfg.beta, cfg.h, {1e-14, 10000, cfg.quad_order});
  report.diagnostics["q"] = theory.q;
  double worst_mass_error = 0.0;

  for (const std::size_t n : cfg.n_grid) {
    const ModelParams params{n, cfg.beta, cfg.h};
    const std::vector<std::size_t> sites = requested_sites(cfg, n);
    std::vector<SampleOutcome> out(cfg.samples);
    parallel_for(cfg.samples, cfg.workers, [&](std::size_t s) {
      const std::uint64_t seed = sample_seed(cfg.master_seed, n, s);
      const Disorder disorder = Disorder::sample(n, derive_seed(seed, Stream::disorder, 0));
      const LocalAverages avg = local_averages(cfg, params, disorder, &cfg.test_function, sites, seed);
      double total = 0.0;
      double mass_error = 0.0;
      for (std::size_t k = 0; k < sites.size(); ++k) {
        const double gamma = gamma_of_site(params, disorder, avg.magnetizations, theory.q, sites[k]);
        const MixturePrediction mp = MixturePrediction::from_gamma(gamma, theory.q, cfg.beta, cfg.h);
        mass_error = std::max(mass_error, std::abs(mixture_mass(mp) - 1.0));
        const double predicted = mixture_expectation(cfg.test_function, mp, cfg.quad_order);
        total += power_2k(avg.field_averages[k] - predicted, cfg.k);
      }
      out[s].contribution = total / static_cast<double>(sites.size());
      out[s].mass_error = mass_error;
    });
    for (const auto& o : out) worst_mass_error = std::max(worst_mass_error, o.mass_error);
    report.records.push_back(summarize(cfg, n, out, false));
  }
  report.diagnostics["max_mixture_mass_error"] = worst_mass_error;
  attach_fit(report);
  return report;
}

ScalingReport run_tap_residual(const ExperimentConfig& cfg) {
  cfg.validate();
  ScalingReport report;
  report.statistic = "tap_residual";
  report.k = cfg.k;
  check_biased_backend(cfg, report);
  const TheoryConstants theory = solve_q(cfg.beta, cfg.h, {1e-14, 10000, cfg.quad_order});
  report.diagnostics["q"] = theory.q;

  for (const std::size_t n : cfg.n_grid) {
    const ModelParams params{n, cfg.beta, cfg.h};
    const std::vector<std::size_t> sites = requested_sites(cfg, n);
    std::vector<SampleOutcome> out(cfg.samples);
    parallel_for(cfg.samples, cfg.workers, [&](std::size_t s) {
      const std::uint64_t seed = sample_seed(cfg.master_seed, n, s);
      const Disorder disorder = Disorder::sample(n, derive_seed(seed, Stream::disorder, 0));
      const LocalAverages avg = local_averages(cfg, params, disorder, nullptr, sites, seed);
      double total = 0.0;
      for (const std::size_t i : sites) {
        const double rhs = tap_rhs(params, disorder, avg.magnetizations, theory.q, i);
        total += power_2k(avg.magnetizations[i] - rhs, cfg.k);
      }
      out[s].contribution = total / static_cast<double>(sites.size());
    });
    report.records.push_back(summarize(cfg, n, out, false));
  }
  attach_fit(report);
  return report;
}

OverlapReport run_overlap_concentration(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.backend != Backend::exact) {
    throw std::invalid_argument("overlap concentration: exact backend only");
  }
  if (cfg.k != 1) {
    throw std::invalid_argument("overlap concentration: only second moments (k = 1) are computed exactly");
  }
  const TheoryConstants theory = solve_q(cfg.beta, cfg.h, {1e-14, 10000, cfg.quad_order});
  OverlapReport report;
  report.overlap.statistic = "overlap";
  report.t_i.statistic = "t_i";
  report.t_ii.statistic = "t_ii";
  report.t_ij.statistic = "t_ij";
  for (ScalingReport* r : {&report.overlap, &report.t_i, &report.t_ii, &report.t_ij}) {
    r->diagnostics["q"] = theory.q;
  }
  double min_value = 0.0;

  for (const std::size_t n : cfg.n_grid) {
    const ModelParams params{n, cfg.beta, cfg.h};
    std::vector<ReplicaSecondMoments> values(cfg.samples);
    parallel_for(cfg.samples, cfg.workers, [&](std::size_t s) {
      const std::uint64_t seed = sample_seed(cfg.master_seed, n, s);
      const Disorder disorder = Disorder::sample(n, derive_seed(seed, Stream::disorder, 0));
      values[s] = replica_second_moments(params, disorder, theory.q);
    });
    std::vector<SampleOutcome> overlap(cfg.samples), ti(cfg.samples), tii(cfg.samples), tij(cfg.samples);
    for (std::size_t s = 0; s < cfg.samples; ++s) {
      overlap[s].contribution = values[s].overlap_m2;
      ti[s].contribution = values[s].t_stats.t_i;
      tii[s].contribution = values[s].t_stats.t_ii;
      tij[s].contribution = values[s].t_stats.t_ij;
      min_value = std::min({min_value, values[s].overlap_m2, values[s].t_stats.t_i, values[s].t_stats.t_ii,
                            values[s].t_stats.t_ij});
    }
    report.overlap.records.push_back(summarize(cfg, n, overlap, false));
    report.t_i.records.push_back(summarize(cfg, n, ti, false));
    report.t_ii.records.push_back(summarize(cfg, n, tii, false));
    report.t_ij.records.push_back(summarize(cfg, n, tij, false));
  }
  for (ScalingReport* r : {&report.overlap, &report.t_i, &report.t_ii, &report.t_ij}) {
    r->diagnostics["min_sample_value"] = min_value;
    attach_fit(*r);
  }
  return report;
}

double check_fundamental_identity(const ModelParams& params, const Disorder& disorder) {
  if (params.n > 14) throw CapacityError("check_fundamental_identity: N <= 14");
  const std::size_t n = params.n;
  WeightedSums acc(2 * n);
  const double scale = params.beta / std::sqrt(static_cast<double>(n));
  for_each_configuration(params, disorder, [&](std::uint32_t bits, int, double me, std::span<const double> sums) {
    const double w = acc.push(me);
    for (std::size_t i = 0; i < n; ++i) {
      acc.add(i, (bits >> i) & 1U ? w : -w);
      acc.add(n + i, w * std::tanh(scale * sums[i] + params.h));
    }
  });
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(acc.mean(i) - acc.mean(n + i)));
  return worst;
}

std::vector<QMinusRow> check_q_minus(double beta, double h, std::span<const std::size_t> n_grid) {
  const TheoryConstants full = solve_q(beta, h);
  std::vector<QMinusRow> rows;
  rows.reserve(n_grid.size());
  for (const std::size_t n : n_grid) {
    if (n < 2) throw std::invalid_argument("check_q_minus: N must be at least 2");
    const double beta_minus = beta * std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n));
    const TheoryConstants reduced = solve_q(beta_minus, h);
    rows.push_back({n, full.q, reduced.q, static_cast<double>(n) * std::abs(full.q - reduced.q)});
  }
  return rows;
}

}  // namespace sk
