#include "sk/gibbs_exact.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace sk {

void check_enumeration_capacity(std::size_t n) {
  if (n > kMaxEnumerationSpins) {
    throw CapacityError("exact enumeration supports N <= " + std::to_string(kMaxEnumerationSpins) +
                        " (got N = " + std::to_string(n) + "); use the mcmc backend instead");
  }
}

namespace {

// In place: v[S] <- sum_x v[x] * (-1)^{popcount(x & S)}.
void walsh_hadamard(std::vector<double>& v) {
  const std::size_t size = v.size();
  for (std::size_t len = 1; len < size; len <<= 1) {
    for (std::size_t block = 0; block < size; block += 2 * len) {
      for (std::size_t j = block; j < block + len; ++j) {
        const double a = v[j];
        const double b = v[j + len];
        v[j] = a + b;
        v[j + len] = a - b;
      }
    }
  }
}

GibbsSummary summarize_weights(std::size_t n, std::vector<double> minus_energy) {
  const double shift = *std::max_element(minus_energy.begin(), minus_energy.end());
  for (double& x : minus_energy) x = std::exp(x - shift);
  std::vector<double>& w = minus_energy;

  GibbsSummary out;
  out.log_z = shift + std::log(std::accumulate(w.begin(), w.end(), 0.0));
  walsh_hadamard(w);
  const double z = w[0];
  out.magnetizations.resize(n);
  out.pair_correlations.assign(n * n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    // A set bit is spin +1, which the transform counts with sign -1.
    out.magnetizations[i] = -w[std::size_t{1} << i] / z;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = w[(std::size_t{1} << i) | (std::size_t{1} << j)] / z;
      out.pair_correlations[i * n + j] = c;
      out.pair_correlations[j * n + i] = c;
    }
  }
  return out;
}

}  // namespace

GibbsSummary enumerate(const ModelParams& params, const Disorder& disorder) {
  check_enumeration_capacity(params.n);
  std::vector<double> minus_energy(std::size_t{1} << params.n);
  for_each_configuration(params, disorder,
                         [&](std::uint32_t bits, int, double me, std::span<const double>) {
                           minus_energy[bits] = me;
                         });
  return summarize_weights(params.n, std::move(minus_energy));
}

GibbsSummary enumerate_naive(const ModelParams& params, const Disorder& disorder) {
  params.validate();
  check_enumeration_capacity(params.n);
  const std::size_t n = params.n;
  const std::size_t total = std::size_t{1} << n;
  std::vector<double> log_w(total);
  for (std::size_t bits = 0; bits < total; ++bits) {
    log_w[bits] = energy(params, disorder, SpinConfig::from_bits(n, bits));
  }
  const double shift = *std::max_element(log_w.begin(), log_w.end());
  GibbsSummary out;
  out.magnetizations.assign(n, 0.0);
  out.pair_correlations.assign(n * n, 0.0);
  double z = 0.0;
  for (std::size_t bits = 0; bits < total; ++bits) {
    const double w = std::exp(log_w[bits] - shift);
    z += w;
    for (std::size_t i = 0; i < n; ++i) {
      const double si = (bits >> i) & 1U ? 1.0 : -1.0;
      out.magnetizations[i] += w * si;
      for (std::size_t j = 0; j < n; ++j) {
        const double sj = (bits >> j) & 1U ? 1.0 : -1.0;
        out.pair_correlations[i * n + j] += w * si * sj;
      }
    }
  }
  for (double& m : out.magnetizations) m /= z;
  for (double& c : out.pair_correlations) c /= z;
  out.log_z = shift + std::log(z);
  return out;
}

double quenched_average(const ModelParams& params, const Disorder& disorder,
                        const std::function<double(const SpinConfig&)>& observable) {
  WeightedSums acc(1);
  const std::size_t n = params.n;
  for_each_configuration(params, disorder,
                         [&](std::uint32_t bits, int, double me, std::span<const double>) {
                           const double w = acc.push(me);
                           acc.add(0, w * observable(SpinConfig::from_bits(n, bits)));
                         });
  return acc.mean(0);
}

ReplicaSecondMoments replica_second_moments(const GibbsSummary& summary, double q) {
  if (!(q >= 0.0 && q < 1.0)) throw std::invalid_argument("replica_second_moments: q must lie in [0, 1)");
  const std::size_t n = summary.size();
  const double nn = static_cast<double>(n);
  const auto& m = summary.magnetizations;

  double sum_c2 = 0.0;
  double sum_m2 = 0.0;
  double sum_t1 = 0.0;
  double sum_t12 = 0.0;
  double sum_mcm = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    sum_m2 += m[j] * m[j];
    for (std::size_t k = 0; k < n; ++k) {
      const double c = summary.pair(j, k);
      const double trunc = c - m[j] * m[k];
      sum_c2 += c * c;
      sum_t1 += trunc * m[j] * m[k];
      sum_t12 += trunc * trunc;
      sum_mcm += m[j] * m[k] * c;
    }
  }
  ReplicaSecondMoments out;
  out.overlap_m2 = sum_c2 / (nn * nn) - 2.0 * q * sum_m2 / nn + q * q;
  out.t_stats.t_i = sum_t1 / (nn * nn);
  out.t_stats.t_ij = sum_t12 / (nn * nn);
  // s_j^2 = 1 makes (s_j - m_j)^2 = 1 + m_j^2 - 2 m_j s_j linear in the spin, so
  // T_{1,1} = a - (2/N) sum_j m_j s_j and its second moment needs only <s_j s_k>.
  const double a = (nn + sum_m2) / nn - (1.0 - q);
  out.t_stats.t_ii = a * a - 4.0 * a * sum_m2 / nn + 4.0 * sum_mcm / (nn * nn);
  return out;
}

ReplicaSecondMoments replica_second_moments(const ModelParams& params, const Disorder& disorder,
                                            double q) {
  return replica_second_moments(enumerate(params, disorder), q);
}

DiscreteFieldLaw DiscreteFieldLaw::from_log_weights(std::span<const double> values,
                                                    std::span<const double> log_weights) {
  if (values.size() != log_weights.size() || values.empty()) {
    throw std::invalid_argument("DiscreteFieldLaw: need matching, non-empty value and weight lists");
  }
  const double shift = *std::max_element(log_weights.begin(), log_weights.end());
  std::vector<Atom> raw(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    raw[k] = {values[k], std::exp(log_weights[k] - shift)};
  }
  std::sort(raw.begin(), raw.end(), [](const Atom& a, const Atom& b) { return a.value < b.value; });

  DiscreteFieldLaw law;
  double total = 0.0;
  for (const Atom& a : raw) {
    if (a.weight <= 0.0) continue;
    total += a.weight;
    if (!law.atoms.empty() && law.atoms.back().value == a.value) {
      law.atoms.back().weight += a.weight;
    } else {
      law.atoms.push_back(a);
    }
  }
  for (Atom& a : law.atoms) a.weight /= total;
  return law;
}

double DiscreteFieldLaw::mean() const {
  double s = 0.0;
  for (const Atom& a : atoms) s += a.value * a.weight;
  return s;
}

DiscreteFieldLaw field_law(const ModelParams& params, const Disorder& disorder,
                           const std::function<double(const SpinConfig&)>& field) {
  check_enumeration_capacity(params.n);
  const std::size_t total = std::size_t{1} << params.n;
  std::vector<double> values(total);
  std::vector<double> log_w(total);
  const std::size_t n = params.n;
  for_each_configuration(params, disorder,
                         [&](std::uint32_t bits, int, double me, std::span<const double>) {
                           values[bits] = field(SpinConfig::from_bits(n, bits));
                           log_w[bits] = me;
                         });
  return DiscreteFieldLaw::from_log_weights(values, log_w);
}

std::vector<double> gibbs_probabilities(const ModelParams& params, const Disorder& disorder) {
  check_enumeration_capacity(params.n);
  std::vector<double> p(std::size_t{1} << params.n);
  for_each_configuration(params, disorder,
                         [&](std::uint32_t bits, int, double me, std::span<const double>) {
                           p[bits] = me;
                         });
  const double shift = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (double& x : p) {
    x = std::exp(x - shift);
    z += x;
  }
  for (double& x : p) x /= z;
  return p;
}

}  // namespace sk
