#include "sk/stats.hpp"

#include "sk/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace sk {

namespace {

// Orthonormal Hermite values p_0..p_{n-1} at x and p_n; returns (p_{n-1}, p_n).
// p_{k+1} = (x p_k - sqrt(k) p_{k-1}) / sqrt(k + 1).
struct HermiteTail {
  double prev;
  double last;
  double christoffel;  // sum_{k<n} p_k(x)^2
};

HermiteTail orthonormal_hermite(int n, double x) {
  double p_prev = 0.0;
  double p = 1.0;
  double sum_sq = 0.0;
  for (int k = 0; k < n; ++k) {
    sum_sq += p * p;
    const double next = (x * p - std::sqrt(static_cast<double>(k)) * p_prev) / std::sqrt(k + 1.0);
    p_prev = p;
    p = next;
  }
  return {p_prev, p, sum_sq};
}

}  // namespace

QuadratureRule gauss_hermite(int order) {
  if (order < 1) throw std::invalid_argument("gauss_hermite: order must be at least 1");
  if (order > kMaxQuadratureOrder) {
    throw std::invalid_argument("gauss_hermite: order above 200 is ill-conditioned");
  }
  const int n = order;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);

  std::vector<double> x(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
  std::sort(x.begin(), x.end());
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    // Newton on p_n; p_n'(x) = sqrt(n) p_{n-1}(x).
    for (int it = 0; it < 8; ++it) {
      const HermiteTail t = orthonormal_hermite(n, x[i]);
      const double step = t.last / (std::sqrt(static_cast<double>(n)) * t.prev);
      x[i] -= step;
      if (std::abs(step) < 1e-16 * (1.0 + std::abs(x[i]))) break;
    }
    w[i] = 1.0 / orthonormal_hermite(n, x[i]).christoffel;
  }
  // Enforce exact symmetry.
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double node = 0.5 * (x[j] - x[i]);
    const double weight = 0.5 * (w[i] + w[j]);
    x[i] = -node;
    x[j] = node;
    w[i] = weight;
    w[j] = weight;
  }
  if (n % 2 == 1) x[n / 2] = 0.0;

  double total = 0.0;
  for (int i = 0; i < n / 2; ++i) total += 2.0 * w[i];
  if (n % 2 == 1) total += w[n / 2];
  for (double& wi : w) wi /= total;
  return {std::move(x), std::move(w)};
}

const QuadratureRule& cached_gauss_hermite(int order) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<QuadratureRule>(gauss_hermite(order));
  return *slot;
}

MomentEstimate bootstrap_mean(std::span<const double> values, const BootstrapOptions& options) {
  const std::size_t n = values.size();
  if (n < 20) throw std::invalid_argument("bootstrap_mean: need at least 20 samples");
  if (options.resamples < 200) throw std::invalid_argument("bootstrap_mean: need at least 200 resamples");
  if (!(options.level > 0.0 && options.level < 1.0)) {
    throw std::invalid_argument("bootstrap_mean: level must lie in (0, 1)");
  }
  MomentEstimate out;
  out.n = n;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.estimate = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - out.estimate) * (v - out.estimate);
  out.standard_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));

  Rng rng(options.seed);
  std::vector<double> means(options.resamples);
  for (double& m : means) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += values[rng.below(n)];
    m = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double alpha = 0.5 * (1.0 - options.level);
  const auto pick = [&](double p) {
    const double pos = p * static_cast<double>(means.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, means.size() - 1);
    return means[lo] + (pos - static_cast<double>(lo)) * (means[hi] - means[lo]);
  };
  out.ci_low = std::min(pick(alpha), out.estimate);
  out.ci_high = std::max(pick(1.0 - alpha), out.estimate);
  return out;
}

MomentEstimate empirical_moment(std::span<const double> samples, int order, const BootstrapOptions& options) {
  if (order < 2 || order % 2 != 0) throw std::invalid_argument("empirical_moment: order must be even and >= 2");
  std::vector<double> powered(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) powered[k] = std::pow(samples[k], order);
  return bootstrap_mean(powered, options);
}

double ks_distance(const DiscreteFieldLaw& law, const std::function<double(double)>& cdf) {
  if (law.atoms.empty()) throw std::invalid_argument("ks_distance: empty law");
  double below = 0.0;
  double worst = 0.0;
  for (const Atom& a : law.atoms) {
    const double f = cdf(a.value);
    const double above = below + a.weight;
    worst = std::max({worst, std::abs(below - f), std::abs(above - f)});
    below = above;
  }
  return std::min(worst, 1.0);
}

}  // namespace sk
