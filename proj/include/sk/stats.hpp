#pragma once

// Shared numerical statistics: Gauss-Hermite rules, bootstrap moment
// estimates, and the Kolmogorov-Smirnov distance of a discrete law.

#include "sk/gibbs_exact.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace sk {

inline constexpr int kMaxQuadratureOrder = 200;

// Probabilists' convention: nodes and weights integrate against the standard
// normal density, so the weights sum to one.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t order() const noexcept { return nodes.size(); }

  // E f(Z), Z ~ N(0, 1). Symmetric node pairs are summed together.
  template <class F>
  double expect(F&& f) const {
    const std::size_t n = nodes.size();
    double s = 0.0;
    for (std::size_t k = 0; k < n / 2; ++k) {
      s += weights[k] * (f(nodes[k]) + f(nodes[n - 1 - k]));
    }
    if (n % 2 == 1) s += weights[n / 2] * f(nodes[n / 2]);
    return s;
  }
};

// Golub-Welsch initial nodes, Newton-polished on the orthonormal Hermite
// recurrence, weights from the Christoffel function.
QuadratureRule gauss_hermite(int order);

// Thread-safe memoized gauss_hermite().
const QuadratureRule& cached_gauss_hermite(int order);

struct BootstrapOptions {
  std::size_t resamples = 1000;
  std::uint64_t seed = 0;
  double level = 0.95;
};

struct MomentEstimate {
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double standard_error = 0.0;  // sample sd / sqrt(n)
  std::size_t n = 0;
};

// Mean of `values` with a percentile bootstrap interval. Needs >= 20 values
// and >= 200 resamples.
MomentEstimate bootstrap_mean(std::span<const double> values, const BootstrapOptions& options = {});

// Mean of x^order with a percentile bootstrap interval; order must be even.
MomentEstimate empirical_moment(std::span<const double> samples, int order,
                                const BootstrapOptions& options = {});

// sup_x |F_law(x) - cdf(x)|, evaluated on both sides of every atom.
double ks_distance(const DiscreteFieldLaw& law, const std::function<double(double)>& cdf);

}  // namespace sk
