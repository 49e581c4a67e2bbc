#include "sk/interpolation.hpp"

#include "sk/gibbs_exact.hpp"
#include "sk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sk {

namespace {

class RunningMean {
 public:
  void add(double x) noexcept {
    ++count_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(count_);
    m2_ += d * (x - mean_);
  }
  double mean() const noexcept { return mean_; }
  double standard_error() const noexcept {
    if (count_ < 2) return 0.0;
    return std::sqrt(m2_ / static_cast<double>(count_ - 1) / static_cast<double>(count_));
  }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

IdentityCheck make_check(std::string name, const RunningMean& acc, double expected) {
  return {std::move(name), acc.mean(), expected, acc.standard_error()};
}

void check_probe(const InterpolationProbe& probe, const ModelParams& params, const Disorder& disorder) {
  if (!(probe.t > 0.0 && probe.t < 1.0)) {
    throw std::invalid_argument("interpolation: t must lie strictly inside (0, 1)");
  }
  if (probe.sigma1.size() != params.n || probe.sigma2.size() != params.n || disorder.size() != params.n) {
    throw std::invalid_argument("interpolation: dimension mismatch");
  }
}

// Centered replica spins s_j - m_j, scaled by N^{-1/2}.
std::vector<double> scaled_fluctuations(const SpinConfig& sigma, std::span<const double> m) {
  const double inv = 1.0 / std::sqrt(static_cast<double>(m.size()));
  std::vector<double> out(m.size());
  for (std::size_t j = 0; j < m.size(); ++j) out[j] = (sigma[j] - m[j]) * inv;
  return out;
}

struct Setup {
  double q;
  std::vector<double> m;
};

Setup exact_setup(const ModelParams& params, const Disorder& disorder) {
  const TheoryConstants theory = solve_q(params.beta, params.h);
  return {theory.q, enumerate(params, disorder).magnetizations};
}

}  // namespace

double IdentityCheck::z() const {
  const double dev = estimate - expected;
  if (standard_error > 0.0) return dev / standard_error;
  return dev == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), dev);
}

double CovarianceReport::max_abs_z() const {
  double worst = 0.0;
  for (const auto& c : checks) worst = std::max(worst, std::abs(c.z()));
  return worst;
}

ReplicaTStatistics replica_t_statistics(const SpinConfig& sigma1, const SpinConfig& sigma2,
                                        std::span<const double> m, double q) {
  const std::size_t n = m.size();
  if (sigma1.size() != n || sigma2.size() != n) throw std::invalid_argument("replica_t_statistics: size mismatch");
  ReplicaTStatistics t;
  for (std::size_t j = 0; j < n; ++j) {
    const double d1 = sigma1[j] - m[j];
    const double d2 = sigma2[j] - m[j];
    t.t1 += d1 * m[j];
    t.t2 += d2 * m[j];
    t.t11 += d1 * d1;
    t.t22 += d2 * d2;
    t.t12 += d1 * d2;
  }
  const double nn = static_cast<double>(n);
  t.t1 /= nn;
  t.t2 /= nn;
  t.t11 = t.t11 / nn - (1.0 - q);
  t.t22 = t.t22 / nn - (1.0 - q);
  t.t12 /= nn;
  return t;
}

std::pair<SpinConfig, SpinConfig> draw_replicas(const ModelParams& params, const Disorder& disorder,
                                                std::uint64_t seed) {
  std::vector<double> cdf = gibbs_probabilities(params, disorder);
  for (std::size_t k = 1; k < cdf.size(); ++k) cdf[k] += cdf[k - 1];
  Rng rng(seed);
  const auto draw = [&] {
    const double u = rng.uniform() * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const auto index = static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), cdf.size() - 1));
    return SpinConfig::from_bits(params.n, index);
  };
  SpinConfig a = draw();
  SpinConfig b = draw();
  return {std::move(a), std::move(b)};
}

CovarianceReport check_interpolation_covariances(const InterpolationProbe& probe, const ModelParams& params,
                                                 const Disorder& disorder, std::size_t mc_samples) {
  check_probe(probe, params, disorder);
  if (mc_samples < 2) throw std::invalid_argument("interpolation: need at least 2 Monte Carlo samples");
  const Setup setup = exact_setup(params, disorder);
  const std::size_t n = params.n;
  const double t = probe.t;
  const double sd_xi = std::sqrt(1.0 - setup.q);
  const auto d1 = scaled_fluctuations(probe.sigma1, setup.m);
  const auto d2 = scaled_fluctuations(probe.sigma2, setup.m);
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));

  RunningMean u1u1, u2u2, u1u2, u2u1, u1r, u2r;
  Rng rng(probe.seed);
  for (std::size_t s = 0; s < mc_samples; ++s) {
    double a1 = 0.0, a2 = 0.0, r = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double g = rng.normal();
      a1 += g * d1[j];
      a2 += g * d2[j];
      r += g * setup.m[j] * inv_sqrt_n;
    }
    const double xi1 = sd_xi * rng.normal();
    const double xi2 = sd_xi * rng.normal();
    const double u1 = std::sqrt(t) * a1 + std::sqrt(1.0 - t) * xi1;
    const double u2 = std::sqrt(t) * a2 + std::sqrt(1.0 - t) * xi2;
    const double du1 = a1 / (2.0 * std::sqrt(t)) - xi1 / (2.0 * std::sqrt(1.0 - t));
    const double du2 = a2 / (2.0 * std::sqrt(t)) - xi2 / (2.0 * std::sqrt(1.0 - t));
    u1u1.add(du1 * u1);
    u2u2.add(du2 * u2);
    u1u2.add(du1 * u2);
    u2u1.add(du2 * u1);
    u1r.add(du1 * r);
    u2r.add(du2 * r);
  }

  CovarianceReport report;
  report.q = setup.q;
  report.t_stats = replica_t_statistics(probe.sigma1, probe.sigma2, setup.m, setup.q);
  const auto& ts = report.t_stats;
  report.checks.push_back(make_check("E0[u1' u1] = T11/2", u1u1, ts.t11 / 2.0));
  report.checks.push_back(make_check("E0[u2' u2] = T22/2", u2u2, ts.t22 / 2.0));
  report.checks.push_back(make_check("E0[u1' u2] = T12/2", u1u2, ts.t12 / 2.0));
  report.checks.push_back(make_check("E0[u2' u1] = T12/2", u2u1, ts.t12 / 2.0));
  report.checks.push_back(make_check("E0[u1' r] = T1/(2 sqrt t)", u1r, ts.t1 / (2.0 * std::sqrt(t))));
  report.checks.push_back(make_check("E0[u2' r] = T2/(2 sqrt t)", u2r, ts.t2 / (2.0 * std::sqrt(t))));
  return report;
}

DerivativeReport check_interpolation_derivative(const ModelParams& params, const Disorder& disorder,
                                                const TestFunction& u, const InterpolationProbe& probe, double dt,
                                                std::size_t mc_samples, int quad_order) {
  check_probe(probe, params, disorder);
  const double t = probe.t;
  if (!(dt > 0.0) || !(t - dt > 0.0) || !(t + dt < 1.0)) {
    throw std::invalid_argument("interpolation: need 0 < t - dt and t + dt < 1");
  }
  if (mc_samples < 2) throw std::invalid_argument("interpolation: need at least 2 Monte Carlo samples");
  const Setup setup = exact_setup(params, disorder);
  const std::size_t n = params.n;
  const double var_xi = 1.0 - setup.q;
  const double sd_xi = std::sqrt(var_xi);
  const auto d1 = scaled_fluctuations(probe.sigma1, setup.m);
  const auto d2 = scaled_fluctuations(probe.sigma2, setup.m);
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  const ReplicaTStatistics ts = replica_t_statistics(probe.sigma1, probe.sigma2, setup.m, setup.q);

  const auto coeffs = u.polynomial_coefficients();
  const TestFunction du = coeffs ? TestFunction::polynomial(polynomial_derivative(*coeffs)) : u;
  const auto shifted_mean = [&](double y) { return gaussian_expectation(u, y, var_xi, quad_order); };
  const auto shifted_mean_derivative = [&](double y) {
    if (coeffs) return gaussian_expectation(du, y, var_xi, quad_order);
    return gaussian_expectation_of([&](double x) { return u.derivative(x); }, y, var_xi, quad_order);
  };

  RunningMean phi, fd, rhs, diff;
  Rng rng(probe.seed);
  const double inv_root_t = 1.0 / (2.0 * std::sqrt(t));
  for (std::size_t s = 0; s < mc_samples; ++s) {
    double a1 = 0.0, a2 = 0.0, r = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double g = rng.normal();
      a1 += g * d1[j];
      a2 += g * d2[j];
      r += g * setup.m[j] * inv_sqrt_n;
    }
    const double xi1 = sd_xi * rng.normal();
    const double xi2 = sd_xi * rng.normal();
    const double eu = shifted_mean(r);
    const double eu1 = shifted_mean_derivative(r);

    const auto v = [&](double x) { return u.value(x + r) - eu; };
    const auto path = [&](double tau, double a, double xi) { return std::sqrt(tau) * a + std::sqrt(1.0 - tau) * xi; };
    const auto product = [&](double tau) { return v(path(tau, a1, xi1)) * v(path(tau, a2, xi2)); };

    const double u1 = path(t, a1, xi1);
    const double u2 = path(t, a2, xi2);
    const double v1 = v(u1), v2 = v(u2);
    const double vx1 = u.derivative(u1 + r), vx2 = u.derivative(u2 + r);
    const double vxx1 = u.second_derivative(u1 + r), vxx2 = u.second_derivative(u2 + r);
    const double vy1 = vx1 - eu1, vy2 = vx2 - eu1;

    const double lemma = 0.5 * (ts.t11 * vxx1 * v2 + ts.t22 * vxx2 * v1) + ts.t12 * vx1 * vx2 +
                         inv_root_t * (ts.t1 * vxx1 * v2 + ts.t2 * vxx2 * v1) +
                         inv_root_t * (ts.t1 * vx1 * vy2 + ts.t2 * vx2 * vy1);
    const double central = (product(t + dt) - product(t - dt)) / (2.0 * dt);
    phi.add(v1 * v2);
    fd.add(central);
    rhs.add(lemma);
    diff.add(central - lemma);
  }

  DerivativeReport report;
  report.t_stats = ts;
  report.q = setup.q;
  report.t = t;
  report.dt = dt;
  const bool linear = coeffs && coeffs->size() <= 2;
  const double slope = linear && coeffs->size() == 2 ? (*coeffs)[1] : 0.0;
  report.phi = make_check("phi(t)", phi, linear ? slope * slope * t * ts.t12 : phi.mean());
  report.finite_difference = make_check("finite difference", fd, linear ? slope * slope * ts.t12 : rhs.mean());
  report.lemma_rhs = make_check("integration by parts", rhs, linear ? slope * slope * ts.t12 : fd.mean());
  report.difference = make_check("difference", diff, 0.0);
  return report;
}

DerivativeReport check_interpolation_derivative(const ModelParams& params, const Disorder& disorder,
                                                const TestFunction& u, double t, double dt,
                                                std::size_t mc_samples, std::uint64_t seed, int quad_order) {
  auto [a, b] = draw_replicas(params, disorder, derive_seed(seed, Stream::replica_draw, 0));
  const InterpolationProbe probe{t, std::move(a), std::move(b), derive_seed(seed, Stream::interpolation, 0)};
  return check_interpolation_derivative(params, disorder, u, probe, dt, mc_samples, quad_order);
}

}  // namespace sk
