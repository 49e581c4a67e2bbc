#pragma once

// Exact Gibbs-measure quantities by exhaustive enumeration of {-1,+1}^N.

#include "sk/core_model.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sk {

inline constexpr std::size_t kMaxEnumerationSpins = 24;

class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

void check_enumeration_capacity(std::size_t n);

struct GibbsSummary {
  double log_z = 0.0;
  std::vector<double> magnetizations;      // <s_i>
  std::vector<double> pair_correlations;  // <s_i s_j>, row-major N x N, unit diagonal

  std::size_t size() const noexcept { return magnetizations.size(); }
  double pair(std::size_t i, std::size_t j) const noexcept {
    return pair_correlations[i * size() + j];
  }
};

struct Atom {
  double value;
  double weight;
};

// Exact law of a scalar observable: values strictly increasing, weights sum to 1.
struct DiscreteFieldLaw {
  std::vector<Atom> atoms;

  // Sorts, merges equal values, drops zero weights and normalizes. Weights are
  // given as logs so that unnormalized Gibbs weights can be passed directly.
  static DiscreteFieldLaw from_log_weights(std::span<const double> values,
                                           std::span<const double> log_weights);
  double mean() const;
};

struct TStatisticMoments {
  double t_i = 0.0;   // <T_1^2>
  double t_ii = 0.0;  // <T_{1,1}^2>
  double t_ij = 0.0;  // <T_{1,2}^2>
};

struct ReplicaSecondMoments {
  double overlap_m2 = 0.0;  // <(R_{1,2} - q)^2>
  TStatisticMoments t_stats;
};

// Streaming log-sum-exp: weights are kept relative to the running maximum log
// weight, and every registered sum is rescaled when the maximum moves.
class WeightedSums {
 public:
  explicit WeightedSums(std::size_t count) : sums_(count, 0.0) {}

  // Registers one log weight; returns its weight relative to the current shift.
  double push(double log_weight) {
    if (empty_) {
      shift_ = log_weight;
      empty_ = false;
    } else if (log_weight > shift_) {
      const double f = std::exp(shift_ - log_weight);
      total_ *= f;
      for (double& s : sums_) s *= f;
      shift_ = log_weight;
    }
    const double w = std::exp(log_weight - shift_);
    total_ += w;
    return w;
  }

  void add(std::size_t index, double weighted_value) noexcept { sums_[index] += weighted_value; }
  double mean(std::size_t index) const noexcept { return sums_[index] / total_; }
  double log_total() const noexcept { return shift_ + std::log(total_); }
  std::size_t count() const noexcept { return sums_.size(); }

 private:
  std::vector<double> sums_;
  double total_ = 0.0;
  double shift_ = 0.0;
  bool empty_ = true;
};

// Visits all 2^N configurations in Gray-code order. For each one the visitor
// receives (bits, flipped_site, minus_energy, coupling_sums) where bit i set
// means s_i = +1, flipped_site is the site changed since the previous visit
// (-1 on the first), minus_energy is -H_N, and coupling_sums[i] = sum_j g_ij s_j.
template <class Visitor>
void for_each_configuration(const ModelParams& params, const Disorder& disorder, Visitor&& visit) {
  params.validate();
  const std::size_t n = params.n;
  if (disorder.size() != n) throw std::invalid_argument("enumeration: dimension mismatch");
  check_enumeration_capacity(n);

  const double scale = params.beta / std::sqrt(static_cast<double>(n));
  std::vector<double> sums(n, 0.0);
  double upper = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = disorder.row(i);
    for (std::size_t j = 0; j < n; ++j) sums[i] -= row[j];
    for (std::size_t j = i + 1; j < n; ++j) upper += row[j];
  }
  double minus_energy = scale * upper - params.h * static_cast<double>(n);
  std::uint32_t bits = 0;
  const std::span<const double> view(sums);
  visit(bits, -1, minus_energy, view);

  const std::uint64_t total = 1ULL << n;
  for (std::uint64_t step = 1; step < total; ++step) {
    const int k = std::countr_zero(step);
    const double old_spin = ((bits >> k) & 1U) ? 1.0 : -1.0;
    minus_energy -= 2.0 * old_spin * (scale * sums[k] + params.h);
    bits ^= 1U << k;
    const double delta = -2.0 * old_spin;
    const double* row = disorder.row(static_cast<std::size_t>(k)).data();
    for (std::size_t j = 0; j < n; ++j) sums[j] += delta * row[j];
    visit(bits, k, minus_energy, view);
  }
}

// logZ, magnetizations and pair correlations. Memory is O(2^N) doubles.
GibbsSummary enumerate(const ModelParams& params, const Disorder& disorder);

// Reference implementation re-evaluating energy() on every configuration.
GibbsSummary enumerate_naive(const ModelParams& params, const Disorder& disorder);

double quenched_average(const ModelParams& params, const Disorder& disorder,
                        const std::function<double(const SpinConfig&)>& observable);

ReplicaSecondMoments replica_second_moments(const GibbsSummary& summary, double q);
ReplicaSecondMoments replica_second_moments(const ModelParams& params, const Disorder& disorder,
                                            double q);

DiscreteFieldLaw field_law(const ModelParams& params, const Disorder& disorder,
                           const std::function<double(const SpinConfig&)>& field);

// Normalized Gibbs probabilities indexed by the configuration bit mask.
std::vector<double> gibbs_probabilities(const ModelParams& params, const Disorder& disorder);

}  // namespace sk
