#ifndef ERGORATE_FAMILIES_HPP
#define ERGORATE_FAMILIES_HPP

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ergorate/chain.hpp"

namespace ergorate {

// Random chain families for property checks. Each takes a caller-owned
// engine so batteries stay reproducible from one seed.

template <typename Scalar, typename Rng>
Distribution<Scalar> random_distribution(Index n, Rng& rng, Scalar lo = Scalar(0.2),
                                         Scalar hi = Scalar(1)) {
  std::uniform_real_distribution<double> unif(static_cast<double>(lo), static_cast<double>(hi));
  Vector<Scalar> p(n);
  for (Index i = 0; i < n; ++i) p(i) = Scalar(unif(rng));
  p /= p.sum();
  return Distribution<Scalar>::validate(std::move(p));
}

template <typename Scalar, typename Rng>
WeightFunction<Scalar> random_weight(Index n, Rng& rng, Scalar hi) {
  std::uniform_real_distribution<double> unif(1.0, static_cast<double>(hi));
  Vector<Scalar> f(n);
  for (Index i = 0; i < n; ++i) f(i) = Scalar(unif(rng));
  return WeightFunction<Scalar>::validate(std::move(f));
}

template <typename Scalar, typename Rng>
ChainSpec<Scalar> random_birth_death(Index n, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.5, 2.0);
  Vector<Scalar> birth = Vector<Scalar>::Zero(n);
  Vector<Scalar> death = Vector<Scalar>::Zero(n);
  for (Index i = 0; i + 1 < n; ++i) birth(i) = Scalar(unif(rng));
  for (Index i = 1; i < n; ++i) death(i) = Scalar(unif(rng));
  auto spec = build_birth_death(birth, death);
  spec.label = "random_birth_death";
  return spec;
}

/// Detailed-balance chain on a sparse random conductance graph (a random
/// spanning tree plus n/3 extra edges, log-normal conductances):
/// q_ij = c_ij / pi_i, so pi_i q_ij = c_ij is symmetric.
template <typename Scalar, typename Rng>
ChainSpec<Scalar> random_sparse_reversible(Index n, Rng& rng) {
  const auto pi = random_distribution<Scalar>(n, rng);
  std::lognormal_distribution<double> conductance(0.0, 1.0);
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);

  Matrix<Scalar> c = Matrix<Scalar>::Zero(n, n);
  for (Index a = 1; a < n; ++a) {
    std::uniform_int_distribution<Index> parent(0, a - 1);
    const Index u = order[static_cast<std::size_t>(a)];
    const Index v = order[static_cast<std::size_t>(parent(rng))];
    c(u, v) = c(v, u) = Scalar(conductance(rng));
  }
  std::uniform_int_distribution<Index> any(0, n - 1);
  for (Index e = 0; e < n / 3; ++e) {
    const Index u = any(rng);
    const Index v = any(rng);
    if (u != v) c(u, v) = c(v, u) = Scalar(conductance(rng));
  }
  Matrix<Scalar> q = pi.values().cwiseInverse().asDiagonal() * c;
  auto rates = RateMatrix<Scalar>::validate(std::move(q), ValidateMode::Repair);
  return make_chain_spec(std::move(rates), WeightFunction<Scalar>::ones(n),
                         std::optional<Distribution<Scalar>>(pi), "random_sparse_reversible");
}

/// Dense random rates plus a directed cycle 0 -> 1 -> ... -> 0; irreversible
/// with probability one.
template <typename Scalar, typename Rng>
ChainSpec<Scalar> random_irreversible(Index n, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix<Scalar> q(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) q(i, j) = i == j ? Scalar(0) : Scalar(unif(rng));
  }
  for (Index i = 0; i < n; ++i) q(i, (i + 1) % n) += Scalar(1.5);
  auto rates = RateMatrix<Scalar>::validate(std::move(q), ValidateMode::Repair);
  return make_chain_spec(std::move(rates), WeightFunction<Scalar>::ones(n),
                         std::optional<Distribution<Scalar>>{}, "random_irreversible");
}

template <typename Scalar>
ChainSpec<Scalar> with_weight(ChainSpec<Scalar> spec, WeightFunction<Scalar> f) {
  if (f.size() != spec.size()) throw Error(ErrorKind::InvalidInput, "weight length mismatch");
  spec.weight = std::move(f);
  return spec;
}

}  // namespace ergorate

#endif  // ERGORATE_FAMILIES_HPP
