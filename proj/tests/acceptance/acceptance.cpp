// Acceptance suite: one PASS/FAIL line per criterion. Every tolerance is fixed
// here. Pass criterion numbers as arguments to run a subset.

#include "sk/core_model.hpp"
#include "sk/experiments.hpp"
#include "sk/gibbs_exact.hpp"
#include "sk/interpolation.hpp"
#include "sk/mcmc.hpp"
#include "sk/rng.hpp"
#include "sk/theory.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace sk;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool passed = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) passed = false;
    detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [violated]");
  }
};

std::string fmt(double x, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_runtime(Verdict& v, double seconds, double limit) {
  v.require(seconds < limit, "runtime " + fmt(seconds, "%.1f") + " s < " + fmt(limit, "%.0f") + " s");
}

// Slope band check on a report; the fit must exist.
void require_slope(Verdict& v, const ScalingReport& r, double lo, double hi) {
  if (!r.fit) {
    v.require(false, r.statistic + " has no fit");
    return;
  }
  const double s = r.fit->slope;
  v.require(s >= lo && s <= hi, r.statistic + " (k=" + std::to_string(r.k) + ") slope " + fmt(s, "%.3f") + " +- " +
                                    fmt(r.fit->slope_se, "%.3f") + " in [" + fmt(lo) + ", " + fmt(hi) + "]");
}

ExperimentConfig protocol() {
  ExperimentConfig cfg;
  cfg.beta = 0.3;
  cfg.h = 0.3;
  cfg.k = 1;
  cfg.n_grid = {8, 10, 12, 14, 16, 18, 20};
  cfg.samples = 400;
  cfg.backend = Backend::exact;
  cfg.test_function = TestFunction::cosine(1.0);
  cfg.master_seed = 1;
  cfg.bootstrap_resamples = 1000;
  cfg.compute_ks = false;
  return cfg;
}

void criterion_1(Verdict& v) {
  const auto start = Clock::now();
  double worst = 0.0, worst_independent = 0.0;
  for (double beta : {0.0, 0.1, 0.2, 0.3, 0.4, 0.45}) {
    for (double h : {0.0, 0.3, 1.0, 3.0}) {
      const TheoryConstants tc = solve_q(beta, h);
      worst = std::max(worst, tc.residual);
      // Residual re-evaluated with a different quadrature order.
      worst_independent = std::max(worst_independent, std::abs(tc.q - q_map(beta, h, tc.q, 80)));
    }
  }
  const double q07 = solve_q(0.0, 0.7).q;
  const double closed = std::tanh(0.7) * std::tanh(0.7);
  const double elapsed = seconds_since(start);
  v.require(worst < 1e-12, "max residual " + fmt(worst) + " < 1e-12");
  v.require(worst_independent < 1e-12, "max residual at order 80 " + fmt(worst_independent) + " < 1e-12");
  v.require(std::abs(q07 - closed) <= 1e-12, "q(0, 0.7) = " + fmt(q07, "%.12f") + " vs tanh^2(0.7) within 1e-12");
  require_runtime(v, elapsed, 1.0);
}

void criterion_2(Verdict& v) {
  const auto start = Clock::now();
  const ModelParams p{12, 0.45, 1.0};
  double worst = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    const Disorder d = Disorder::sample(12, derive_seed(sample_seed(2, 12, i), Stream::disorder, 0));
    worst = std::max(worst, check_fundamental_identity(p, d));
  }
  v.require(worst <= 1e-10, "max site residual " + fmt(worst) + " <= 1e-10 over 20 instances");
  require_runtime(v, seconds_since(start), 60.0);
}

void criterion_3(Verdict& v) {
  const auto start = Clock::now();
  const ModelParams p{12, 0.4, 0.3};
  const Disorder d = Disorder::sample(12, derive_seed(sample_seed(3, 12, 0), Stream::disorder, 0));
  const GibbsSummary exact = enumerate(p, d);
  const ChainEstimate est = run_chain(p, d, ChainConfig{0, 1, 100000, derive_seed(3, Stream::chain, 0), false});
  double worst_z = 0.0;
  for (std::size_t i = 0; i < 12; ++i) {
    worst_z = std::max(worst_z, std::abs(est.magnetizations[i] - exact.magnetizations[i]) / est.standard_errors[i]);
  }
  v.require(worst_z <= 4.0, "max |m_mcmc - m_exact| / SE = " + fmt(worst_z, "%.2f") + " <= 4");

  const ModelParams p4{4, 0.4, 0.3};
  const Disorder d4 = Disorder::sample(4, derive_seed(sample_seed(3, 4, 0), Stream::disorder, 0));
  const auto g = gibbs_probabilities(p4, d4);
  double worst_balance = 0.0;
  for (std::size_t site = 0; site < 4; ++site) {
    const auto kernel = heat_bath_transition_matrix(p4, d4, site);
    for (std::size_t a = 0; a < 16; ++a) {
      for (std::size_t b = 0; b < 16; ++b) {
        worst_balance = std::max(worst_balance, std::abs(g[a] * kernel[a * 16 + b] - g[b] * kernel[b * 16 + a]));
      }
    }
  }
  v.require(worst_balance <= 1e-12, "detailed balance at N=4 max violation " + fmt(worst_balance) + " <= 1e-12");
  require_runtime(v, seconds_since(start), 120.0);
}

void require_zero_moments(Verdict& v, const ScalingReport& r) {
  double worst = 0.0;
  for (const auto& rec : r.records) worst = std::max(worst, std::abs(rec.moment));
  v.require(worst == 0.0, "linear-U null max moment " + fmt(worst) + " == 0");
}

void criterion_4(Verdict& v) {
  const auto start = Clock::now();
  ExperimentConfig cfg = protocol();
  require_slope(v, run_cavity_clt(cfg), -1.4, -0.6);
  cfg.test_function = TestFunction::identity();
  require_zero_moments(v, run_cavity_clt(cfg));
  require_runtime(v, seconds_since(start), 600.0);
}

void criterion_5(Verdict& v) {
  const auto start = Clock::now();
  ExperimentConfig cfg = protocol();
  require_slope(v, run_centered_cavity_clt(cfg), -1.4, -0.6);
  cfg.test_function = TestFunction::identity();
  require_zero_moments(v, run_centered_cavity_clt(cfg));
  require_runtime(v, seconds_since(start), 600.0);
}

void criterion_6(Verdict& v) {
  const auto start = Clock::now();
  const ScalingReport r = run_local_clt(protocol());
  require_slope(v, r, -1.4, -0.6);
  const double mass = r.diagnostics.at("max_mixture_mass_error");
  v.require(mass <= 1e-10, "max |mixture mass - 1| " + fmt(mass) + " <= 1e-10 over all samples");
  require_runtime(v, seconds_since(start), 600.0);
}

void criterion_7(Verdict& v) {
  const auto start = Clock::now();
  ExperimentConfig cfg = protocol();
  require_slope(v, run_tap_residual(cfg), -1.4, -0.6);
  cfg.k = 2;
  cfg.samples = 1000;
  require_slope(v, run_tap_residual(cfg), -2.8, -1.2);
  require_runtime(v, seconds_since(start), 1200.0);
}

void criterion_8(Verdict& v) {
  ExperimentConfig cfg = protocol();
  cfg.beta = 0.0;
  cfg.h = 0.0;
  const OverlapReport free = run_overlap_concentration(cfg);
  double worst = 0.0;
  for (const auto& rec : free.overlap.records) worst = std::max(worst, std::abs(rec.moment * rec.n - 1.0));
  v.require(worst <= 1e-12, "beta=0,h=0: max |N E<R^2> - 1| " + fmt(worst) + " <= 1e-12");
  const bool exact_slope = free.overlap.fit && std::abs(free.overlap.fit->slope + 1.0) <= 1e-12;
  v.require(exact_slope, "beta=0,h=0: slope " + (free.overlap.fit ? fmt(free.overlap.fit->slope, "%.15f") : "none") +
                             " = -1 within 1e-12");
  const OverlapReport warm = run_overlap_concentration(protocol());
  for (const ScalingReport* r : {&warm.overlap, &warm.t_i, &warm.t_ii, &warm.t_ij}) require_slope(v, *r, -1.4, -0.6);
}

void criterion_9(Verdict& v) {
  const auto start = Clock::now();
  const std::size_t n = 8;
  const ModelParams p{n, 0.3, 0.3};
  const std::uint64_t seed = 9;
  const Disorder d = Disorder::sample(n, derive_seed(sample_seed(seed, n, 0), Stream::disorder, 0));
  auto [a, b] = draw_replicas(p, d, derive_seed(seed, Stream::replica_draw, 0));
  const InterpolationProbe probe{0.25, a, b, derive_seed(seed, Stream::interpolation, 0)};
  const std::size_t mc = 1000000;

  const CovarianceReport cov = check_interpolation_covariances(probe, p, d, mc);
  v.require(cov.max_abs_z() <= 4.0, "covariance identities max |z| " + fmt(cov.max_abs_z(), "%.2f") + " <= 4");

  const DerivativeReport sq = check_interpolation_derivative(p, d, TestFunction::parse("square"), probe, 1e-4, mc);
  v.require(std::abs(sq.difference.z()) <= 4.0,
            "U=x^2 finite difference - lemma |z| " + fmt(std::abs(sq.difference.z()), "%.2f") + " <= 4");

  const DerivativeReport lin = check_interpolation_derivative(p, d, TestFunction::identity(), probe, 1e-4, mc);
  v.require(std::abs(lin.phi.z()) <= 4.0, "U=x phi(t) vs t*T12 |z| " + fmt(std::abs(lin.phi.z()), "%.2f") + " <= 4");
  v.require(std::abs(lin.finite_difference.z()) <= 4.0,
            "U=x finite difference vs T12 |z| " + fmt(std::abs(lin.finite_difference.z()), "%.2f") + " <= 4");
  require_runtime(v, seconds_since(start), 300.0);
}

void criterion_10(Verdict& v) {
  Rng rng(derive_seed(10, Stream::sample, 0));
  double worst_ratio = 0.0, worst_tanh = 0.0, worst_ab = 0.0;
  for (int c = 0; c < 100; ++c) {
    const double beta = 0.49 * rng.uniform();
    const double h = 6.0 * rng.uniform() - 3.0;
    const double q = solve_q(beta, h).q;
    const double r = 3.0 * rng.normal();
    TestFunction u = TestFunction::cosine(1.0);
    switch (c % 5) {
      case 0: u = TestFunction::cosine(2.0 * rng.uniform()); break;
      case 1: u = TestFunction::sine(2.0 * rng.uniform()); break;
      case 2: u = TestFunction::exp_linear(2.0 * rng.uniform() - 1.0); break;
      case 3: u = TestFunction::tanh_affine(rng.normal(), rng.normal()); break;
      default: u = TestFunction::polynomial({rng.normal(), rng.normal(), rng.normal(), rng.normal()}); break;
    }
    const MixturePrediction mp = MixturePrediction::from_gamma(r, q, beta, h);
    // Steep tanh test functions need the full rule for 1e-10 agreement.
    const double lhs = smoothed_ratio(u, r, beta, h, q, kMaxQuadratureOrder);
    const double rhs = mixture_expectation(u, mp, kMaxQuadratureOrder);
    worst_ratio = std::max(worst_ratio, std::abs(lhs - rhs));

    if (beta > 0.0 && mp.p > 0.0 && mp.p < 1.0) {
      const MixtureTanh mt = mixture_tanh_closed_form(mp);
      worst_ab = std::max({worst_ab, std::abs(mt.a - beta), std::abs(mt.b - h)});
      const double quad = mixture_expectation(TestFunction::tanh_affine(mt.a, mt.b), mp, 100);
      worst_tanh = std::max(worst_tanh, std::abs(mt.value - quad));
    }
  }
  v.require(worst_ratio <= 1e-10, "smoothed ratio vs mixture max diff " + fmt(worst_ratio) + " <= 1e-10 (100 cases)");
  v.require(worst_tanh <= 1e-8, "mixture tanh closed form vs quadrature " + fmt(worst_tanh) + " <= 1e-8");
  v.require(worst_ab <= 1e-12, "derived (a, b) vs (beta, h) " + fmt(worst_ab) + " <= 1e-12");
}

void criterion_11(Verdict& v) {
  const auto start = Clock::now();
  const std::vector<std::size_t> grid{10, 100, 1000, 10000};
  const auto rows = check_q_minus(0.4, 0.5, grid);
  double lo = INFINITY, hi = 0.0;
  for (const auto& row : rows) {
    lo = std::min(lo, row.scaled_gap);
    hi = std::max(hi, row.scaled_gap);
  }
  v.require(lo > 0.0 && hi / lo < 2.0, "max/min N|q - q_minus| = " + fmt(hi / lo, "%.4f") + " < 2");
  require_runtime(v, seconds_since(start), 1.0);
}

void criterion_12(Verdict& v) {
  ExperimentConfig cfg = protocol();
  cfg.samples = 100;
  cfg.compute_ks = true;
  const ScalingReport r = run_cavity_clt(cfg);
  const auto& first = r.records.front();
  const auto& last = r.records.back();
  if (!first.ks_median || !last.ks_median) {
    v.require(false, "KS medians missing");
    return;
  }
  std::string seq;
  for (const auto& rec : r.records) seq += (seq.empty() ? "" : " ") + fmt(*rec.ks_median, "%.4f");
  v.require(*last.ks_median < *first.ks_median,
            "median KS N=20 " + fmt(*last.ks_median, "%.4f") + " < N=8 " + fmt(*first.ks_median, "%.4f") +
                " (grid: " + seq + ")");
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Verdict&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "fixed point q", criterion_1},
      {2, "fundamental identity", criterion_2},
      {3, "MCMC correctness", criterion_3},
      {4, "cavity CLT", criterion_4},
      {5, "centered cavity CLT", criterion_5},
      {6, "local-field CLT", criterion_6},
      {7, "TAP residual", criterion_7},
      {8, "overlap and T concentration", criterion_8},
      {9, "interpolation identities", criterion_9},
      {10, "smoothed ratio and mixture tanh", criterion_10},
      {11, "q minus boundedness", criterion_11},
      {12, "KS distributional signal", criterion_12},
  };
  std::set<int> selected;
  for (int k = 1; k < argc; ++k) selected.insert(std::atoi(argv[k]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = Clock::now();
    Verdict v;
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    if (!v.passed) ++failures;
    std::printf("%s criterion %2d (%s): %s [%.1f s]\n", v.passed ? "PASS" : "FAIL", c.id, c.name,
                v.detail.str().c_str(), seconds_since(start));
    std::fflush(stdout);
  }
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
