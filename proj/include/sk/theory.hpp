#pragma once

// Limiting objects of the high-temperature SK model, evaluated in closed form
// or by Gauss-Hermite quadrature.

#include "sk/core_model.hpp"
#include "sk/stats.hpp"
#include "sk/test_function.hpp"

#include <cmath>
#include <span>
#include <stdexcept>

namespace sk {

inline constexpr int kDefaultQuadratureOrder = 40;
// Upper end (exclusive) of the inverse temperatures handled here.
inline constexpr double kHighTemperatureLimit = 0.5;

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_iterate)
      : std::runtime_error(what), last_iterate_(last_iterate) {}
  double last_iterate() const noexcept { return last_iterate_; }

 private:
  double last_iterate_;
};

struct SolveOptions {
  double tol = 1e-14;
  int max_iter = 10000;
  int quad_order = kDefaultQuadratureOrder;
};

struct TheoryConstants {
  double q = 0.0;
  double beta = 0.0;
  double h = 0.0;
  double residual = 0.0;  // |q - E tanh^2(beta z sqrt(q) + h)|
  int iterations = 0;
};

// Fixed point of q = E tanh^2(beta z sqrt(q) + h), iterated from tanh^2(h).
TheoryConstants solve_q(double beta, double h, const SolveOptions& options = {});

// E tanh^2(beta z sqrt(q) + h) by Gauss-Hermite.
double q_map(double beta, double h, double q, int quad_order = kDefaultQuadratureOrder);

double gaussian_pdf(double x, double mean, double variance);
double gaussian_cdf(double x, double mean, double variance);

// Two-Gaussian law p N(gamma + beta(1-q), 1-q) + (1-p) N(gamma - beta(1-q), 1-q).
struct MixturePrediction {
  double gamma = 0.0;
  double p = 0.5;
  double q = 0.0;
  double beta = 0.0;
  double h = 0.0;

  // Builds the prediction with p = e^{beta gamma + h} / (e^{beta gamma + h} + e^{-beta gamma - h}).
  static MixturePrediction from_gamma(double gamma, double q, double beta, double h);

  double variance() const noexcept { return 1.0 - q; }
  double upper_mean() const noexcept { return gamma + beta * (1.0 - q); }
  double lower_mean() const noexcept { return gamma - beta * (1.0 - q); }
  double mean() const noexcept { return gamma + (2.0 * p - 1.0) * beta * (1.0 - q); }
  void validate() const;
};

// gamma_i = N^{-1/2} sum_{j != i} g_ij m_j - beta (1 - q) m_i.
double gamma_of_site(const ModelParams& params, const Disorder& disorder,
                     std::span<const double> magnetizations, double q, std::size_t site);
double p_of_gamma(double gamma, double beta, double h);

double mixture_density(double x, const MixturePrediction& mp);
double mixture_expectation(const TestFunction& u, const MixturePrediction& mp,
                           int quad_order = kDefaultQuadratureOrder);
// Total mass of mixture_density by trapezoidal integration on a wide grid.
double mixture_mass(const MixturePrediction& mp);

// E U(X), X ~ N(mean, variance). Polynomials are integrated in closed form.
double gaussian_expectation(const TestFunction& u, double mean, double variance,
                            int quad_order = kDefaultQuadratureOrder);

template <class F>
double gaussian_expectation_of(F&& f, double mean, double variance, int quad_order = kDefaultQuadratureOrder) {
  if (!(variance > 0.0)) throw std::invalid_argument("gaussian_expectation: variance must be positive");
  if (quad_order < 2) throw std::invalid_argument("gaussian_expectation: quadrature order must be >= 2");
  const double sd = std::sqrt(variance);
  return cached_gauss_hermite(quad_order).expect([&](double z) { return f(mean + sd * z); });
}

struct MixtureTanh {
  double a = 0.0;
  double b = 0.0;
  double value = 0.0;  // E tanh(aX + b)
};

// Closed form E tanh(aX + b) = tanh(a E X + b - (2p - 1) a^2 sigma^2), with
// (a, b) derived from the mixture's own means, variance and weight.
MixtureTanh mixture_tanh_closed_form(const MixturePrediction& mp);

// tanh(beta/sqrt(N) sum_{j != i} g_ij m_j + h - beta^2 (1 - q) m_i).
double tap_rhs(const ModelParams& params, const Disorder& disorder,
               std::span<const double> magnetizations, double q, std::size_t site);

// E_xi[U(xi + r) cosh(beta(xi + r) + h)] / (exp(beta^2 (1-q) / 2) cosh(beta r + h)),
// xi ~ N(0, 1 - q).
double smoothed_ratio(const TestFunction& u, double r, double beta, double h, double q,
                      int quad_order = kDefaultQuadratureOrder);

}  // namespace sk
