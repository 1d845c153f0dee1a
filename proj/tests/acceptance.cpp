// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ergorate/cli.hpp"
#include "ergorate/drift.hpp"
#include "ergorate/families.hpp"
#include "ergorate/htransform.hpp"
#include "ergorate/montecarlo.hpp"
#include "ergorate/semigroup.hpp"
#include "ergorate/spectral.hpp"

using namespace ergorate;

namespace {

using Rng = std::mt19937_64;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

// Largest excess of a decay curve over its envelope.
double envelope_excess(const DecayCurve<double>& curve) {
  double worst = -INFINITY;
  for (std::size_t k = 0; k < curve.times.size(); ++k) {
    worst = std::max(worst, curve.fnorms[k] - curve.envelope[k]);
  }
  return worst;
}

Outcome example21_gap() {
  Rng rng(101);
  double gap_err = 0, fit_err = 0;
  int chains = 0;
  for (Index n : {3, 10, 50}) {
    for (int rep = 0; rep < 5; ++rep, ++chains) {
      const auto spec = build_example21(random_distribution<double>(n, rng), 2.0);
      const auto report = theorem11_report(spec);
      gap_err = std::max(gap_err, std::abs(report.gap - 1.0));
      const Semigroup<double> sg(spec);
      const auto grid = default_time_grid(report.gap);
      for (Index i = 0; i < n; ++i) {
        const auto fit = fit_rate(decay_curve<double>(spec, report, sg, i, grid));
        fit_err = std::max(fit_err, std::abs(fit.rate - 1.0));
      }
    }
  }
  return {gap_err <= 1e-9 && fit_err <= 1e-6,
          std::to_string(chains) + " chains, max |gap-1| = " + fmt("%.2e", gap_err) +
              ", max |fit-1| = " + fmt("%.2e", fit_err) + " (all start states)"};
}

Outcome example21_constant() {
  Rng rng(102);
  const double beta = 2.0;
  double const_err = 0, excess = -INFINITY;
  for (Index n : {3, 10, 50}) {
    for (int rep = 0; rep < 5; ++rep) {
      const auto spec = build_example21(random_distribution<double>(n, rng), beta);
      const auto report = theorem11_report(spec);
      const Semigroup<double> sg(spec);
      const auto grid = default_time_grid(report.gap);
      const double pi0 = spec.stationary(0);
      for (Index i = 0; i < n; ++i) {
        const double pi_i = spec.stationary(i);
        const double expected =
            std::sqrt(pi0 + beta * beta * (1 - pi0)) * std::sqrt(1 / pi_i - 1);
        const_err = std::max(const_err, std::abs(report.constants(i) - expected));
        excess = std::max(excess, envelope_excess(decay_curve<double>(spec, report, sg, i, grid)));
      }
    }
  }
  return {const_err <= 1e-12 && excess <= 0,
          "max |C - closed form| = " + fmt("%.2e", const_err) +
              ", max (fnorm - envelope) = " + fmt("%.2e", excess)};
}

Outcome example21_drift() {
  Rng rng(103);
  double err = 0, worst_ratio = 0;
  bool below = true;
  for (Index n : {3, 10, 50}) {
    for (double beta : {1.5, 2.0, 5.0}) {
      const auto pi = random_distribution<double>(n, rng);
      cli::RunConfig cfg;
      cfg.command = "drift";
      cfg.family = "example21";
      cfg.pi = std::vector<double>(pi.values().begin(), pi.values().end());
      cfg.beta = beta;
      const auto doc = cli::cmd_drift(cfg);
      const double c = doc["c_max"].get<double>();
      const double rate = doc["gap_rate"].get<double>();
      err = std::max(err, std::abs(c - pi(0) * (1 - 1 / beta)));
      below = below && c < rate;
      worst_ratio = std::max(worst_ratio, c / rate);
    }
  }
  return {err <= 1e-12 && below,
          "max |c_max - pi0(1-1/beta)| = " + fmt("%.2e", err) +
              ", largest c_max / gap = " + fmt("%.3f", worst_ratio)};
}

Outcome example22() {
  Rng rng(104);
  const auto spec = build_example22<double>();
  Vector<double> expected(3);
  expected << 0.5, 0.25, 0.25;
  const double stat_err = (spec.stationary.values() - expected).cwiseAbs().maxCoeff();
  const auto values = eigenvalues(spec.rate_matrix);
  const double r7 = std::sqrt(7.0) / 4;
  const std::vector<std::complex<double>> target{{0, 0}, {-1.25, -r7}, {-1.25, r7}};
  double eig_err = 0;
  for (std::size_t k = 0; k < 3; ++k) eig_err = std::max(eig_err, std::abs(values[k] - target[k]));
  const double gap_err = std::abs(gap(spec.rate_matrix, spec.stationary) - 1.0);

  std::vector<WeightFunction<double>> weights{WeightFunction<double>::ones(3)};
  for (int rep = 0; rep < 3; ++rep) weights.push_back(random_weight<double>(3, rng, 3.0));
  const auto grid = linear_grid(0.5, 20.0, 1000);
  double fit_err = 0;
  for (const auto& f : weights) {
    const auto weighted = build_example22<double>(f);
    const auto curve = decay_curve<double>(weighted, 0, grid);
    const auto fit = fit_rate(curve, 0.5, 20.0, FitMode::PeakEnvelope);
    fit_err = std::max(fit_err, std::abs(fit.rate - 1.25));
  }
  return {stat_err <= 1e-12 && eig_err <= 1e-9 && gap_err <= 1e-9 && fit_err <= 1e-3,
          "stationary err " + fmt("%.1e", stat_err) + ", eigenvalue err " + fmt("%.1e", eig_err) +
              ", |gap-1| " + fmt("%.1e", gap_err) + ", max |peak fit - 5/4| " +
              fmt("%.2e", fit_err) + " over 4 weights"};
}

Outcome reversible_equality() {
  Rng rng(105);
  std::uniform_int_distribution<Index> size(5, 30);
  double worst_rel = 0, excess = -INFINITY;
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = size(rng);
    auto spec = rep % 2 ? random_sparse_reversible<double>(n, rng) : random_birth_death<double>(n, rng);
    spec = with_weight(spec, random_weight<double>(n, rng, 4.0));
    const auto report = theorem11_report(spec);
    const Semigroup<double> sg(spec);
    // Deep window: the second mode has died out relative to the slowest one.
    const double lo = 100 / report.gap, hi = 300 / report.gap;
    const auto fit = fit_rate(decay_curve<double>(spec, report, sg, 0, linear_grid(lo, hi, 200)), lo, hi);
    worst_rel = std::max(worst_rel, std::abs(fit.rate - report.gap) / report.gap);
    const auto grid = default_time_grid(report.gap);
    for (Index i = 0; i < n; ++i) {
      excess = std::max(excess, envelope_excess(decay_curve<double>(spec, report, sg, i, grid)));
    }
  }
  return {worst_rel <= 1e-4 && excess <= 1e-9,
          "20 chains, max |fit - gap| / gap = " + fmt("%.2e", worst_rel) +
              ", max (fnorm - envelope) = " + fmt("%.2e", excess)};
}

ChainSpec<double> weighted_reversible(Index n, Rng& rng, int rep) {
  auto spec = rep % 2 ? random_sparse_reversible<double>(n, rng) : random_birth_death<double>(n, rng);
  return with_weight(spec, random_weight<double>(n, rng, 4.0));
}

Outcome lemma_suite() {
  Rng rng(106);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto gaussian = [&](Index n) {
    Vector<double> g(n);
    for (Index i = 0; i < n; ++i) g(i) = normal(rng);
    return g;
  };
  double r31 = 0, r32 = 0, r33 = 0, r34 = 0, rh = 0;
  for (int rep = 0; rep < 14; ++rep) {
    const Index n = 2 + rep % 7;
    const auto transformed = transform(weighted_reversible(n, rng, rep));
    const double t = 0.05 + 3 * unif(rng), s = 3 * unif(rng);
    r31 = std::max(r31, check_lemma31(transformed, t, s, gaussian(n), gaussian(n)).max());
    r32 = std::max(r32, check_lemma32(transformed, t).residual);
    r33 = std::max(r33, check_lemma33(transformed, t).residual);
    for (Index i = 0; i < n; ++i) {
      const auto h = h_function(transformed, i, 0.1 + unif(rng));
      rh = std::max(rh, std::abs(h.norm_sq - *h.norm_sq_closed_form));
    }
  }
  for (int rep = 0; rep < 20; ++rep) {
    const Index n = 3 + rep % 6;
    auto spec = rep % 2 ? random_irreversible<double>(n, rng) : random_birth_death<double>(n, rng);
    spec = with_weight(spec, random_weight<double>(n, rng, 4.0));
    Vector<double> mu(n);
    for (Index i = 0; i < n; ++i) mu(i) = unif(rng);
    mu /= mu.sum();
    r34 = std::max(r34, mu_ft_norm(mu, spec, 4 * unif(rng)).residual);
  }
  return {r31 <= 1e-9 && r32 <= 1e-9 && r33 <= 1e-9 && r34 <= 1e-10 && rh <= 1e-10,
          "max residuals: semigroup/conjugacy " + fmt("%.1e", r31) + ", inf->2 vs inf->1 " +
              fmt("%.1e", r32) + ", averaged bound " + fmt("%.1e", r33) + ", dual " +
              fmt("%.1e", r34) + ", h closed form " + fmt("%.1e", rh)};
}

Outcome irreversible_bound() {
  Rng rng(107);
  double rate_slack = INFINITY, excess = -INFINITY;
  for (int rep = 0; rep < 10; ++rep) {
    const Index n = 3 + rep % 8;
    auto spec = random_irreversible<double>(n, rng);
    spec = with_weight(spec, random_weight<double>(n, rng, 4.0));
    const auto report = theorem11_report(spec);
    rate_slack = std::min(rate_slack, report.true_decay_rate - report.gap);
    const Semigroup<double> sg(spec);
    const auto grid = default_time_grid(report.gap);
    for (Index i = 0; i < n; ++i) {
      excess = std::max(excess, envelope_excess(decay_curve<double>(spec, report, sg, i, grid)));
    }
  }
  return {rate_slack >= -1e-9 && excess <= 1e-9,
          "min (true rate - gap) = " + fmt("%.3e", rate_slack) +
              ", max (fnorm - envelope) = " + fmt("%.2e", excess)};
}

Outcome montecarlo() {
  Rng rng(108);
  std::vector<ChainSpec<double>> chains;
  chains.push_back(build_example22<double>());
  chains.push_back(build_example21(random_distribution<double>(4, rng), 2.0));
  chains.push_back(with_weight(random_birth_death<double>(6, rng), random_weight<double>(6, rng, 3.0)));
  chains.push_back(
      with_weight(random_sparse_reversible<double>(8, rng), random_weight<double>(8, rng, 3.0)));
  chains.push_back(with_weight(random_irreversible<double>(5, rng), random_weight<double>(5, rng, 3.0)));
  std::size_t inside = 0, cells = 0;
  std::uint64_t seed = 2024;
  for (const auto& spec : chains) {
    const double rate = true_decay_rate(spec.rate_matrix);
    const auto times = linear_grid(0.3 / rate, 3.0 / rate, 10);
    const auto ens = sample_paths<double>(spec, 0, times, 100000, seed++);
    const Semigroup<double> sg(spec);
    for (const auto& e : empirical_fnorm(ens, spec.stationary, spec.weight)) {
      const double exact = f_norm(sg.deviation(e.t).row(0), spec.weight);
      inside += std::abs(e.estimate - exact) <= 4 * e.std_error ? 1 : 0;
      ++cells;
    }
  }
  const double share = static_cast<double>(inside) / static_cast<double>(cells);
  return {share >= 0.95, std::to_string(inside) + "/" + std::to_string(cells) +
                             " (chain, time) cells within 4 standard errors, 1e5 paths each"};
}

Outcome example22_limit() {
  const Semigroup<double> sg(build_example22<double>());
  Vector<double> row(3);
  row << 0.5, 0.25, 0.25;
  const Matrix<double> p = sg.at(40.0).P;
  double err = 0;
  for (Index i = 0; i < 3; ++i) err = std::max(err, (p.row(i) - row.transpose()).cwiseAbs().maxCoeff());
  return {err <= 1e-9, "max |P_40 - 1 pi| = " + fmt("%.2e", err)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"example21 gap and fitted rate", example21_gap},
      {"example21 constant and envelope", example21_constant},
      {"example21 drift constant below gap", example21_drift},
      {"example22 stationary law, spectrum, gap, oscillating rate", example22},
      {"reversible chains: fitted rate equals gap, envelope bound", reversible_equality},
      {"lemma suite", lemma_suite},
      {"irreversible chains: decay rate and gap envelope", irreversible_bound},
      {"Monte-Carlo cross-check", montecarlo},
      {"example22 limit matrix at t = 40", example22_limit},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[k].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %zu: %s | %s | %.2fs\n", outcome.pass ? "PASS" : "FAIL", k + 1,
                criteria[k].first.c_str(), outcome.detail.c_str(), secs);
    std::fflush(stdout);
    failures += outcome.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
