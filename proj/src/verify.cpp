#include "ergorate/verify.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <random>

#include "ergorate/drift.hpp"
#include "ergorate/families.hpp"
#include "ergorate/htransform.hpp"
#include "ergorate/montecarlo.hpp"
#include "ergorate/semigroup.hpp"
#include "ergorate/spectral.hpp"

namespace ergorate {

bool VerifyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

const CheckResult* VerifyReport::first_failure() const {
  for (const auto& c : checks) {
    if (!c.pass) return &c;
  }
  return nullptr;
}

namespace {

using Rng = std::mt19937_64;

CheckResult bounded(std::string name, std::string subject, double residual, double tolerance) {
  return {std::move(name), std::move(subject), residual, tolerance, residual <= tolerance};
}

Vector<double> random_vector(Index n, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector<double> g(n);
  for (Index i = 0; i < n; ++i) g(i) = normal(rng);
  return g;
}

ChainSpec<double> lemma_chain(Index n, Rng& rng) {
  Vector<double> f = Vector<double>::Constant(n, 3.0);
  f(0) = 1.0;
  return with_weight(random_birth_death<double>(n, rng), WeightFunction<double>::validate(f));
}

ChainSpec<double> example21_chain(Index n, Rng& rng) {
  return build_example21(random_distribution<double>(n, rng), 2.0);
}

struct Context {
  const VerifyOptions& options;
  Rng rng;
  std::vector<CheckResult>& out;
};

void check_stationary(Context& ctx) {
  const auto spec = build_example22<double>();
  Vector<double> expected(3);
  expected << 0.5, 0.25, 0.25;
  ctx.out.push_back(bounded("stationary", "example22",
                            (spec.stationary.values() - expected).cwiseAbs().maxCoeff(), 1e-12));
}

void check_reversibility(Context& ctx) {
  auto bd = random_birth_death<double>(ctx.options.n, ctx.rng);
  if (ctx.options.inject_asymmetry) {
    Matrix<double> q = bd.rate_matrix.matrix();
    q(0, ctx.options.n - 1) += 0.5;
    auto rates = RateMatrix<double>::validate(q, ValidateMode::Repair);
    bd = make_chain_spec(std::move(rates), bd.weight, std::optional<Distribution<double>>{},
                         "birth_death+asymmetric_fault");
  }
  const auto verdict = is_reversible(bd.rate_matrix, bd.stationary, ctx.options.tol);
  ctx.out.push_back({"reversibility", bd.label, verdict.max_violation, 0.0, verdict.reversible});

  const auto ex21 = example21_chain(5, ctx.rng);
  const auto v21 = is_reversible(ex21.rate_matrix, ex21.stationary, ctx.options.tol);
  ctx.out.push_back({"reversibility", "example21", v21.max_violation, 0.0, v21.reversible});

  const auto ex22 = build_example22<double>();
  const auto v22 = is_reversible(ex22.rate_matrix, ex22.stationary, ctx.options.tol);
  ctx.out.push_back({"reversibility", "example22 (expected irreversible)", v22.max_violation, 0.0,
                     !v22.reversible});
}

void check_dual(Context& ctx) {
  for (const auto& spec : {build_example22<double>(), random_irreversible<double>(6, ctx.rng)}) {
    const auto twice = dual(dual(spec.rate_matrix, spec.stationary), spec.stationary);
    const double err = (twice.matrix() - spec.rate_matrix.matrix()).cwiseAbs().maxCoeff() /
                       spec.rate_matrix.max_abs_rate();
    ctx.out.push_back(bounded("dual", spec.label, err, 1e-12));
  }
}

void check_reversibilize(Context& ctx) {
  const auto spec = build_example22<double>();
  const auto bar = reversibilize(spec.rate_matrix, spec.stationary);
  Matrix<double> expected(3, 3);
  expected << -0.5, 0.25, 0.25, 0.5, -1, 0.5, 0.5, 0.5, -1;
  ctx.out.push_back(bounded("reversibilize", "example22",
                            (bar.matrix() - expected).cwiseAbs().maxCoeff(), 1e-12));
  const auto verdict = is_reversible(bar, spec.stationary, ctx.options.tol);
  ctx.out.push_back({"reversibilize", "example22 Qbar detailed balance", verdict.max_violation,
                     0.0, verdict.reversible});
}

void check_gap(Context& ctx) {
  const auto ex21 = example21_chain(10, ctx.rng);
  ctx.out.push_back(bounded("gap", "example21 n=10",
                            std::abs(gap(ex21.rate_matrix, ex21.stationary) - 1.0), 1e-9));
  const auto ex22 = build_example22<double>();
  ctx.out.push_back(bounded("gap", "example22",
                            std::abs(gap(ex22.rate_matrix, ex22.stationary) - 1.0), 1e-9));
}

void check_spectrum(Context& ctx) {
  const auto ex22 = build_example22<double>();
  const auto values = eigenvalues(ex22.rate_matrix);
  const double r7 = std::sqrt(7.0) / 4.0;
  const std::vector<std::complex<double>> expected{{0, 0}, {-1.25, -r7}, {-1.25, r7}};
  double err = 0;
  for (std::size_t k = 0; k < 3; ++k) err = std::max(err, std::abs(values[k] - expected[k]));
  ctx.out.push_back(bounded("spectrum", "example22 eigenvalues", err, 1e-9));
  ctx.out.push_back(bounded("spectrum", "example22 true decay rate",
                            std::abs(true_decay_rate(ex22.rate_matrix) - 1.25), 1e-9));
}

void check_semigroup(Context& ctx) {
  std::uniform_real_distribution<double> time(0.0, 5.0);
  for (const auto& spec : {build_example22<double>(), random_birth_death<double>(ctx.options.n, ctx.rng)}) {
    const Semigroup<double> sg(spec);
    double ck = 0, stat = 0, rows = 0;
    for (int rep = 0; rep < 5; ++rep) {
      const double t = time(ctx.rng), s = time(ctx.rng);
      const Matrix<double> pt = sg.at(t).P;
      ck = std::max(ck, (pt * sg.at(s).P - sg.at(t + s).P).cwiseAbs().maxCoeff());
      stat = std::max(stat, (spec.stationary.values().transpose() * pt -
                             spec.stationary.values().transpose()).cwiseAbs().maxCoeff());
      rows = std::max(rows, (pt.rowwise().sum().array() - 1.0).abs().maxCoeff());
    }
    ctx.out.push_back(bounded("semigroup", spec.label + " Chapman-Kolmogorov", ck, 1e-8));
    ctx.out.push_back(bounded("semigroup", spec.label + " pi P_t = pi", stat, 1e-10));
    ctx.out.push_back(bounded("semigroup", spec.label + " row sums", rows, 1e-10));
  }
}

void check_envelope(Context& ctx) {
  auto bd = random_birth_death<double>(ctx.options.n, ctx.rng);
  bd = with_weight(bd, random_weight<double>(bd.size(), ctx.rng, 4.0));
  for (const auto& spec : {example21_chain(6, ctx.rng), bd}) {
    const auto report = theorem11_report(spec);
    const Semigroup<double> sg(spec);
    const auto grid = default_time_grid(report.gap);
    double excess = 0;
    for (Index i = 0; i < spec.size(); ++i) {
      const auto curve = decay_curve<double>(spec, report, sg, i, grid);
      for (std::size_t k = 0; k < grid.size(); ++k) {
        excess = std::max(excess, curve.fnorms[k] - curve.envelope[k]);
      }
    }
    ctx.out.push_back(bounded("envelope", spec.label, excess, 1e-9));
  }
}

void check_lemma31_battery(Context& ctx) {
  const auto spec = lemma_chain(ctx.options.n, ctx.rng);
  const auto transformed = transform(spec);
  const auto r = check_lemma31(transformed, 0.7, 0.3, random_vector(spec.size(), ctx.rng),
                               random_vector(spec.size(), ctx.rng));
  ctx.out.push_back(bounded("lemma31", spec.label, r.max(), 1e-9));
}

void check_lemma32_battery(Context& ctx) {
  const auto spec = lemma_chain(ctx.options.n, ctx.rng);
  const auto c = check_lemma32(transform(spec), 1.0);
  ctx.out.push_back(bounded("lemma32", spec.label + " t=1", c.residual, 1e-9));
}

void check_lemma33_battery(Context& ctx) {
  const auto spec = lemma_chain(ctx.options.n, ctx.rng);
  const auto c = check_lemma33(transform(spec), 0.5);
  ctx.out.push_back(bounded("lemma33", spec.label + " t=0.5", c.residual, 1e-9));
}

void check_lemma34_battery(Context& ctx) {
  const auto spec = random_irreversible<double>(5, ctx.rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double worst = 0;
  for (int rep = 0; rep < 5; ++rep) {
    Vector<double> mu(spec.size());
    for (Index i = 0; i < spec.size(); ++i) mu(i) = unif(ctx.rng);
    mu /= mu.sum();
    worst = std::max(worst, mu_ft_norm(mu, spec, 3.0 * unif(ctx.rng)).residual);
  }
  ctx.out.push_back(bounded("lemma34", spec.label, worst, 1e-10));
}

void check_h_function(Context& ctx) {
  const auto spec = lemma_chain(ctx.options.n, ctx.rng);
  const auto transformed = transform(spec);
  double closed = 0, proj = 0;
  for (Index i = 0; i < spec.size(); ++i) {
    const auto h = h_function(transformed, i, 0.5);
    closed = std::max(closed, std::abs(h.norm_sq - *h.norm_sq_closed_form));
    proj = std::max(proj, h.projection_residual);
  }
  ctx.out.push_back(bounded("h_function", spec.label + " closed form", closed, 1e-10));
  ctx.out.push_back(bounded("h_function", spec.label + " pi^f h = 0", proj, 1e-12));
}

void check_l2_contraction(Context& ctx) {
  const auto spec = lemma_chain(ctx.options.n, ctx.rng);
  const auto transformed = transform(spec);
  const double spectral_gap = gap(spec.rate_matrix, spec.stationary);
  double excess = 0;
  for (double t : {0.1, 0.5, 1.0, 3.0}) {
    const auto g = random_vector(spec.size(), ctx.rng);
    const double lhs = transformed.l2_norm(transformed.centered(t) * g);
    const double rhs = std::exp(-spectral_gap * t) * transformed.l2_norm(g - transformed.project(g));
    excess = std::max(excess, lhs - rhs);
  }
  ctx.out.push_back(bounded("l2_contraction", spec.label, std::max(excess, 0.0), 1e-9));
}

void check_drift(Context& ctx) {
  const auto spec = example21_chain(8, ctx.rng);
  const auto report = drift_condition(spec);
  const double pi0 = spec.stationary(0);
  ctx.out.push_back(bounded("drift", "example21 c_max", std::abs(report.c_max - pi0 * 0.5), 1e-12));
  ctx.out.push_back({"drift", "example21 c_max < gap", report.c_max, 1.0, report.c_max < 1.0});
}

void check_montecarlo(Context& ctx) {
  const auto spec = build_example22<double>();
  const std::vector<double> times{0.0, 0.4, 0.8, 1.2, 1.6};
  const auto ens = sample_paths<double>(spec, 0, times, 20000, ctx.options.seed);
  const auto est = empirical_fnorm(ens, spec.stationary, spec.weight);
  const Semigroup<double> sg(spec);
  std::size_t inside = 0;
  for (const auto& e : est) {
    const double exact = f_norm(sg.deviation(e.t).row(0), spec.weight);
    if (std::abs(e.estimate - exact) <= 4.0 * e.std_error + 1e-12) ++inside;
  }
  const double miss = 1.0 - static_cast<double>(inside) / static_cast<double>(est.size());
  ctx.out.push_back(bounded("montecarlo", "example22 20000 paths", miss, 0.05));
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

struct NamedCheck {
  std::string name;
  std::function<void(Context&)> run;
};

const std::vector<NamedCheck>& battery() {
  static const std::vector<NamedCheck> checks{
      {"stationary", check_stationary},       {"reversibility", check_reversibility},
      {"dual", check_dual},                   {"reversibilize", check_reversibilize},
      {"gap", check_gap},                     {"spectrum", check_spectrum},
      {"semigroup", check_semigroup},         {"envelope", check_envelope},
      {"lemma31", check_lemma31_battery},     {"lemma32", check_lemma32_battery},
      {"lemma33", check_lemma33_battery},     {"lemma34", check_lemma34_battery},
      {"h_function", check_h_function},       {"l2_contraction", check_l2_contraction},
      {"drift", check_drift},                 {"montecarlo", check_montecarlo},
  };
  return checks;
}

}  // namespace

const std::vector<std::string>& verify_check_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& c : battery()) out.push_back(c.name);
    return out;
  }();
  return names;
}

VerifyReport run_verify(const VerifyOptions& options) {
  for (const auto& name : options.only) {
    const auto& names = verify_check_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw Error(ErrorKind::InvalidInput, "unknown check \"" + name + "\"");
    }
  }
  if (options.n < 2 || options.n > kMaxBruteForceStates) {
    throw Error(ErrorKind::InvalidInput, "--n must lie in [2, 20]");
  }
  VerifyReport report;
  for (const auto& check : battery()) {
    if (!options.only.empty() &&
        std::find(options.only.begin(), options.only.end(), check.name) == options.only.end()) {
      continue;
    }
    // Each check gets its own stream so filtering does not shift the others.
    Context ctx{options, Rng(options.seed ^ fnv1a(check.name)), report.checks};
    try {
      check.run(ctx);
    } catch (const Error& e) {
      report.checks.push_back({check.name, std::string("error: ") + e.what(), 0.0, 0.0, false});
    }
  }
  return report;
}

}  // namespace ergorate
