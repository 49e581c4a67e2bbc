#pragma once

// Monte Carlo checks of the Gaussian-interpolation machinery
//   u_i(t) = sqrt(t) (l^i - r) + sqrt(1 - t) xi^i,   i = 1, 2,
// at frozen replica configurations. E_0 averages over the cavity Gaussians
// g_1..g_N and xi^1, xi^2 ~ N(0, 1 - q).

#include "sk/core_model.hpp"
#include "sk/test_function.hpp"
#include "sk/theory.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sk {

struct InterpolationProbe {
  double t = 0.5;
  SpinConfig sigma1;
  SpinConfig sigma2;
  std::uint64_t seed = 0;  // Monte Carlo stream for (g, xi^1, xi^2)
};

// T statistics of two frozen replicas given exact magnetizations and q.
struct ReplicaTStatistics {
  double t1 = 0.0;   // T_1
  double t2 = 0.0;   // T_2
  double t11 = 0.0;  // T_{1,1}
  double t22 = 0.0;  // T_{2,2}
  double t12 = 0.0;  // T_{1,2}
};

ReplicaTStatistics replica_t_statistics(const SpinConfig& sigma1, const SpinConfig& sigma2,
                                        std::span<const double> magnetizations, double q);

// Two independent exact draws from G_N (N <= 24).
std::pair<SpinConfig, SpinConfig> draw_replicas(const ModelParams& params, const Disorder& disorder,
                                                std::uint64_t seed);

struct IdentityCheck {
  std::string name;
  double estimate = 0.0;
  double expected = 0.0;
  double standard_error = 0.0;

  // Deviation in standard errors; 0 when both deviation and error vanish.
  double z() const;
};

struct CovarianceReport {
  ReplicaTStatistics t_stats;
  double q = 0.0;
  std::vector<IdentityCheck> checks;
  double max_abs_z() const;
};

// E_0[u_i' u_i] = T_{i,i}/2, E_0[u_i' u_j] = T_{i,j}/2, E_0[u_i' r] = T_i / (2 sqrt t).
CovarianceReport check_interpolation_covariances(const InterpolationProbe& probe, const ModelParams& params,
                                                 const Disorder& disorder, std::size_t mc_samples);

struct DerivativeReport {
  ReplicaTStatistics t_stats;
  double q = 0.0;
  double t = 0.0;
  double dt = 0.0;
  IdentityCheck phi;                // phi(t) (expected filled for linear U only: t T_{1,2})
  IdentityCheck finite_difference;  // central difference of phi (expected: T_{1,2} for linear U)
  IdentityCheck lemma_rhs;          // Gaussian integration-by-parts form of phi'(t)
  IdentityCheck difference;         // finite_difference - lemma_rhs on common random numbers
};

// Compares (phi(t+dt) - phi(t-dt)) / 2dt, phi(t) = E_0[V(u_1(t), r) V(u_2(t), r)],
// V(x, y) = U(x + y) - E_xi U(xi + y), against the integration-by-parts formula
// built from dV terms and the T statistics. Both use the same random draws.
DerivativeReport check_interpolation_derivative(const ModelParams& params, const Disorder& disorder,
                                                const TestFunction& u, const InterpolationProbe& probe, double dt,
                                                std::size_t mc_samples, int quad_order = kDefaultQuadratureOrder);

// As above with replicas drawn exactly from G_N using derive_seed(seed, Stream::replica_draw, 0).
DerivativeReport check_interpolation_derivative(const ModelParams& params, const Disorder& disorder,
                                                const TestFunction& u, double t, double dt,
                                                std::size_t mc_samples, std::uint64_t seed,
                                                int quad_order = kDefaultQuadratureOrder);

}  // namespace sk
