#include "sk/theory.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace sk {

double q_map(double beta, double h, double q, int quad_order) {
  const double scale = beta * std::sqrt(q);
  return cached_gauss_hermite(quad_order).expect([&](double z) {
    const double t = std::tanh(scale * z + h);
    return t * t;
  });
}

TheoryConstants solve_q(double beta, double h, const SolveOptions& options) {
  if (!(beta >= 0.0 && beta < kHighTemperatureLimit)) {
    throw std::invalid_argument("solve_q: beta must lie in [0, 0.5)");
  }
  if (!std::isfinite(h)) throw std::invalid_argument("solve_q: h must be finite");
  if (!(options.tol > 0.0)) throw std::invalid_argument("solve_q: tol must be positive");

  const double t0 = std::tanh(h);
  double q = t0 * t0;
  for (int it = 1; it <= options.max_iter; ++it) {
    const double next = q_map(beta, h, q, options.quad_order);
    const double step = std::abs(next - q);
    q = next;
    if (step < options.tol) {
      TheoryConstants out{q, beta, h, 0.0, it};
      out.residual = std::abs(q - q_map(beta, h, q, options.quad_order));
      return out;
    }
  }
  throw ConvergenceError("solve_q: no convergence after " + std::to_string(options.max_iter) + " iterations", q);
}

double gaussian_pdf(double x, double mean, double variance) {
  if (!(variance > 0.0)) throw std::invalid_argument("gaussian_pdf: variance must be positive");
  const double d = x - mean;
  return std::exp(-0.5 * d * d / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

double gaussian_cdf(double x, double mean, double variance) {
  if (!(variance > 0.0)) throw std::invalid_argument("gaussian_cdf: variance must be positive");
  return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * variance));
}

double p_of_gamma(double gamma, double beta, double h) { return 0.5 * (1.0 + std::tanh(beta * gamma + h)); }

MixturePrediction MixturePrediction::from_gamma(double gamma, double q, double beta, double h) {
  MixturePrediction mp{gamma, p_of_gamma(gamma, beta, h), q, beta, h};
  mp.validate();
  return mp;
}

void MixturePrediction::validate() const {
  if (!(q >= 0.0 && q < 1.0)) throw std::invalid_argument("MixturePrediction: q must lie in [0, 1)");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("MixturePrediction: p must lie in [0, 1]");
}

double gamma_of_site(const ModelParams& params, const Disorder& disorder,
                     std::span<const double> magnetizations, double q, std::size_t site) {
  const std::size_t n = params.n;
  if (disorder.size() != n || magnetizations.size() != n) {
    throw std::invalid_argument("gamma_of_site: dimension mismatch");
  }
  if (site >= n) throw std::out_of_range("gamma_of_site: site out of range");
  if (!(q >= 0.0 && q < 1.0)) throw std::invalid_argument("gamma_of_site: q must lie in [0, 1)");
  const auto row = disorder.row(site);
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j != site) s += row[j] * magnetizations[j];
  }
  return s / std::sqrt(static_cast<double>(n)) - params.beta * (1.0 - q) * magnetizations[site];
}

double mixture_density(double x, const MixturePrediction& mp) {
  mp.validate();
  return mp.p * gaussian_pdf(x, mp.upper_mean(), mp.variance()) +
         (1.0 - mp.p) * gaussian_pdf(x, mp.lower_mean(), mp.variance());
}

double gaussian_expectation(const TestFunction& u, double mean, double variance, int quad_order) {
  if (!(variance > 0.0)) throw std::invalid_argument("gaussian_expectation: variance must be positive");
  if (quad_order < 2) throw std::invalid_argument("gaussian_expectation: quadrature order must be >= 2");
  if (const auto coeffs = u.polynomial_coefficients()) {
    const auto moments = gaussian_raw_moments(mean, variance, coeffs->size() - 1);
    return polynomial_expectation(*coeffs, moments);
  }
  return gaussian_expectation_of([&](double x) { return u.value(x); }, mean, variance, quad_order);
}

double mixture_expectation(const TestFunction& u, const MixturePrediction& mp, int quad_order) {
  mp.validate();
  if (quad_order < 2) throw std::invalid_argument("mixture_expectation: quadrature order must be >= 2");
  return mp.p * gaussian_expectation(u, mp.upper_mean(), mp.variance(), quad_order) +
         (1.0 - mp.p) * gaussian_expectation(u, mp.lower_mean(), mp.variance(), quad_order);
}

double mixture_mass(const MixturePrediction& mp) {
  mp.validate();
  const double sd = std::sqrt(mp.variance());
  const double lo = mp.lower_mean() - 14.0 * sd;
  const double hi = mp.upper_mean() + 14.0 * sd;
  const double step = sd / 8.0;
  const auto points = static_cast<std::size_t>(std::ceil((hi - lo) / step));
  const double dx = (hi - lo) / static_cast<double>(points);
  double s = 0.5 * (mixture_density(lo, mp) + mixture_density(hi, mp));
  for (std::size_t k = 1; k < points; ++k) s += mixture_density(lo + dx * static_cast<double>(k), mp);
  return s * dx;
}

MixtureTanh mixture_tanh_closed_form(const MixturePrediction& mp) {
  mp.validate();
  if (mp.p <= 0.0 || mp.p >= 1.0) {
    throw std::invalid_argument("mixture_tanh_closed_form: p must lie strictly inside (0, 1)");
  }
  const double var = mp.variance();
  const double mu1 = mp.upper_mean();
  const double mu2 = mp.lower_mean();
  MixtureTanh out;
  out.a = (mu1 - mu2) / (2.0 * var);
  out.b = 0.5 * (std::log(mp.p) - std::log1p(-mp.p)) - (mu1 * mu1 - mu2 * mu2) / (4.0 * var);
  out.value = std::tanh(out.a * mp.mean() + out.b - (2.0 * mp.p - 1.0) * out.a * out.a * var);
  return out;
}

double tap_rhs(const ModelParams& params, const Disorder& disorder,
               std::span<const double> magnetizations, double q, std::size_t site) {
  const double gamma = gamma_of_site(params, disorder, magnetizations, q, site);
  return std::tanh(params.beta * gamma + params.h);
}

double smoothed_ratio(const TestFunction& u, double r, double beta, double h, double q, int quad_order) {
  if (!(q >= 0.0 && q < 1.0)) throw std::invalid_argument("smoothed_ratio: q must lie in [0, 1)");
  if (quad_order < 2) throw std::invalid_argument("smoothed_ratio: quadrature order must be >= 2");
  const double var = 1.0 - q;
  const double sd = std::sqrt(var);
  // cosh(beta(xi + r) + h) / cosh(beta r + h)
  //   = e^{beta xi} / (1 + e^{-2(beta r + h)}) + e^{-beta xi} / (1 + e^{2(beta r + h)})
  const double x = beta * r + h;
  const double up = 1.0 / (1.0 + std::exp(-2.0 * x));
  const double down = 1.0 / (1.0 + std::exp(2.0 * x));
  const double tilted = cached_gauss_hermite(quad_order).expect([&](double z) {
    const double xi = sd * z;
    return u.value(xi + r) * (up * std::exp(beta * xi) + down * std::exp(-beta * xi));
  });
  return tilted * std::exp(-0.5 * beta * beta * var);
}

}  // namespace sk
