#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ergorate/families.hpp"
#include "ergorate/semigroup.hpp"
#include "ergorate/spectral.hpp"

using namespace ergorate;

namespace {

Vector<double> vec(std::initializer_list<double> values) {
  Vector<double> v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

ChainSpec<double> two_state(double a, double b) {
  Matrix<double> q(2, 2);
  q << -a, a, b, -b;
  return make_chain_spec(RateMatrix<double>::validate(q), WeightFunction<double>::ones(2));
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an ergorate::Error");
  return ErrorKind::InvalidInput;
}

}  // namespace

TEST_CASE("two-state semigroup on both routes") {
  const auto spec = two_state(1, 1);
  const Semigroup<double> sg(spec);
  CHECK(sg.route() == ExpmRoute::Spectral);
  const double expected = 0.5 + std::exp(-2.0) / 2;
  CHECK(sg.at(1.0).P(0, 0) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(expm(spec.rate_matrix, 1.0).P(0, 0) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(expm(spec.rate_matrix, 1.0).route == ExpmRoute::Pade);
}

TEST_CASE("deviation keeps relative precision far below machine epsilon") {
  const auto spec = two_state(1, 1);
  const Semigroup<double> sg(spec);
  const double t = 20;
  CHECK(sg.deviation(t)(0, 0) == doctest::Approx(std::exp(-2 * t) / 2).epsilon(1e-12));
  CHECK(sg.deviation(t)(0, 1) == doctest::Approx(-std::exp(-2 * t) / 2).epsilon(1e-12));
  CHECK(sg.noise_floor() < 1e-250);
}

TEST_CASE("irreversible chains use the Pade route") {
  const Semigroup<double> sg(build_example22<double>());
  CHECK(sg.route() == ExpmRoute::Pade);
  CHECK(sg.noise_floor() == 1e-14);
  const Matrix<double> limit = sg.at(40.0).P;
  for (Index i = 0; i < 3; ++i) {
    CHECK((limit.row(i) - vec({0.5, 0.25, 0.25}).transpose()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("Chapman-Kolmogorov, stationarity and stochasticity") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> time(0.0, 4.0);
  for (int rep = 0; rep < 12; ++rep) {
    const auto spec = rep % 2 ? random_irreversible<double>(3 + rep % 6, rng)
                              : random_birth_death<double>(3 + rep, rng);
    const Semigroup<double> sg(spec);
    const double t = time(rng), s = time(rng);
    const Matrix<double> pt = sg.at(t).P;
    CHECK((pt * sg.at(s).P - sg.at(t + s).P).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((spec.stationary.values().transpose() * pt - spec.stationary.values().transpose())
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK((pt.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(pt.minCoeff() >= 0.0);
  }
}

TEST_CASE("spectral and Pade routes agree on reversible chains") {
  std::mt19937_64 rng(32);
  for (int rep = 0; rep < 10; ++rep) {
    const auto spec = random_sparse_reversible<double>(4 + rep, rng);
    const Semigroup<double> sg(spec);
    REQUIRE(sg.route() == ExpmRoute::Spectral);
    for (double t : {0.0, 0.05, 1.0, 7.0}) {
      CHECK((sg.at(t).P - expm(spec.rate_matrix, t).P).cwiseAbs().maxCoeff() < 1e-11);
    }
  }
}

TEST_CASE("t = 0 gives the identity") {
  const Semigroup<double> sg(build_example22<double>());
  CHECK(sg.at(0.0).P.isIdentity(1e-15));
}

TEST_CASE("time and overflow errors") {
  const auto spec = build_example22<double>();
  const Semigroup<double> sg(spec);
  CHECK(kind_of([&] { sg.at(-1.0); }) == ErrorKind::InvalidInput);
  CHECK(kind_of([&] { sg.at(std::nan("")); }) == ErrorKind::InvalidInput);
  CHECK(kind_of([&] { expm(spec.rate_matrix, 1e20); }) == ErrorKind::Overflow);
}

TEST_CASE("f-norm") {
  const auto f = WeightFunction<double>::validate(vec({1, 2, 2}));
  CHECK(f_norm(vec({0.5, -0.25, -0.25}), f) == doctest::Approx(1.5));
  CHECK(f_norm(vec({0.0, 0.0, 0.0}), f) == 0.0);
  CHECK(kind_of([&] { f_norm(vec({1, 2}), f); }) == ErrorKind::InvalidInput);
}

TEST_CASE("grids") {
  const auto lin = linear_grid(1.0, 3.0, 5);
  CHECK(lin.front() == 1.0);
  CHECK(lin.back() == 3.0);
  CHECK(lin[1] == doctest::Approx(1.5));
  const auto log_grid = default_time_grid(2.0);
  CHECK(log_grid.size() == 60);
  CHECK(log_grid.front() == doctest::Approx(0.01));
  CHECK(log_grid.back() == doctest::Approx(5.0));
}

TEST_CASE("example21 decay curve has the closed form 1.5 e^{-t} at state 0") {
  const auto spec = build_example21(Distribution<double>::validate(vec({0.5, 0.25, 0.25})), 2.0);
  const auto grid = default_time_grid(1.0);
  const auto curve = decay_curve<double>(spec, 0, grid);
  CHECK(curve.constant == doctest::Approx(std::sqrt(2.5)));
  CHECK(curve.rate == doctest::Approx(1.0));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(curve.fnorms[k] == doctest::Approx(1.5 * std::exp(-grid[k])).epsilon(1e-12));
    CHECK(curve.fnorms[k] <= curve.envelope[k]);
  }
  const auto fit = fit_rate(curve);
  CHECK(fit.mode == FitMode::LeastSquares);
  CHECK(fit.rate == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(fit.intercept == doctest::Approx(std::log(1.5)).epsilon(1e-10));
}

TEST_CASE("decay curve input checks") {
  const auto spec = build_example22<double>();
  const std::vector<double> bad{0.0, 1.0, 0.5};
  CHECK(kind_of([&] { decay_curve<double>(spec, 0, bad); }) == ErrorKind::InvalidInput);
  const std::vector<double> good{0.0, 1.0};
  CHECK(kind_of([&] { decay_curve<double>(spec, 3, good); }) == ErrorKind::InvalidInput);
}

TEST_CASE("example22 oscillates and the peak envelope recovers 5/4") {
  const auto spec = build_example22<double>();
  const auto grid = linear_grid(0.5, 20.0, 1000);
  const auto curve = decay_curve<double>(spec, 0, grid);
  const auto fit = fit_rate(curve, 0.5, 20.0);
  CHECK(fit.mode == FitMode::PeakEnvelope);
  CHECK(fit.rate == doctest::Approx(1.25).epsilon(1e-3));
  CHECK(fit.points >= 2);
  // Plain least squares is biased by the troughs.
  const auto ls = fit_rate(curve, 0.5, 20.0, FitMode::LeastSquares);
  CHECK(ls.mode == FitMode::LeastSquares);
}

TEST_CASE("fit errors") {
  const auto spec = build_example22<double>();
  const auto grid = linear_grid(0.1, 2.0, 4);
  const auto curve = decay_curve<double>(spec, 0, grid);
  CHECK(kind_of([&] { fit_rate(curve, 0.1, 2.0); }) == ErrorKind::InsufficientData);

  const auto deep = decay_curve<double>(spec, 0, linear_grid(30.0, 60.0, 20));
  CHECK(kind_of([&] { fit_rate(deep, 30.0, 60.0); }) == ErrorKind::NoiseFloor);

  const auto bd = build_birth_death<double>(vec({1, 1, 0}), vec({0, 1, 1}));
  const auto smooth = decay_curve<double>(bd, 0, linear_grid(0.0, 1.0, 10));
  CHECK(kind_of([&] { fit_rate(smooth, 0.0, 1.0, FitMode::PeakEnvelope); }) ==
        ErrorKind::InsufficientData);
}

TEST_CASE("upper hull helper") {
  const std::vector<double> x{0, 1, 2, 3, 4};
  const std::vector<double> y{0, 1, 0.5, 1.5, 0};
  const auto hull = detail::upper_hull(x, y);
  CHECK(hull == std::vector<std::size_t>{0, 1, 3, 4});
}

TEST_CASE("sign-vector operator norms") {
  Matrix<double> a = Matrix<double>::Identity(3, 3);
  const Vector<double> nu = vec({0.2, 0.3, 0.5});
  CHECK(opnorm_inf_to_1(a, nu) == doctest::Approx(1.0));
  CHECK(opnorm_inf_to_2_squared(a, nu) == doctest::Approx(1.0));
  Matrix<double> rank_one = Matrix<double>::Ones(3, 3);
  // Sum of all three signs is at most 3 in absolute value.
  CHECK(opnorm_inf_to_1(rank_one, nu) == doctest::Approx(3.0));
  CHECK(kind_of([] {
          opnorm_inf_to_1(Matrix<double>(Matrix<double>::Zero(21, 21)),
                          Vector<double>(Vector<double>::Ones(21)));
        }) == ErrorKind::TooLarge);
}

TEST_CASE("sign-vector brute force matches plain enumeration") {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> normal;
  for (Index n : {2, 5, 12}) {
    Matrix<double> a(n, n);
    Vector<double> nu(n);
    for (Index i = 0; i < n; ++i) {
      nu(i) = std::abs(normal(rng)) + 0.1;
      for (Index j = 0; j < n; ++j) a(i, j) = normal(rng);
    }
    double best = 0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
      Vector<double> g(n);
      for (Index b = 0; b < n; ++b) g(b) = (mask >> b) & 1U ? -1.0 : 1.0;
      best = std::max(best, nu.dot((a * g).cwiseAbs()));
    }
    CHECK(opnorm_inf_to_1(a, nu) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("direct and dual routes of |mu P_t - pi|_f agree") {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    auto spec = random_irreversible<double>(3 + rep % 5, rng);
    spec = with_weight(spec, random_weight<double>(spec.size(), rng, 3.0));
    Vector<double> mu(spec.size());
    for (Index i = 0; i < mu.size(); ++i) mu(i) = unif(rng);
    mu /= mu.sum();
    const auto c = mu_ft_norm(mu, spec, 2.0 * unif(rng));
    CHECK(c.residual < 1e-12);
    CHECK(c.direct == doctest::Approx(c.via_dual).epsilon(1e-10));
  }
  const auto spec = build_example22<double>();
  CHECK(kind_of([&] { mu_ft_norm(vec({0.5, 0.6, 0.1}), spec, 1.0); }) ==
        ErrorKind::InvalidDistribution);
}

TEST_CASE("long double semigroup") {
  Matrix<long double> q(2, 2);
  q << -1, 1, 1, -1;
  const auto spec = make_chain_spec(RateMatrix<long double>::validate(q),
                                    WeightFunction<long double>::ones(2));
  const Semigroup<long double> sg(spec);
  CHECK(std::abs(sg.at(1.0L).P(0, 0) - (0.5L + std::exp(-2.0L) / 2)) < 1e-17L);
}
