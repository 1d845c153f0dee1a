#ifndef ERGORATE_SPECTRAL_HPP
#define ERGORATE_SPECTRAL_HPP

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "ergorate/chain.hpp"

namespace ergorate {

/// Eigen-decomposition of S = D^{1/2} (-Q) D^{-1/2}, D = diag(pi), for a
/// generator reversible with respect to pi. Eigenvalues ascend from 0.
template <typename Scalar>
struct SymmetricSpectrum {
  Vector<Scalar> eigenvalues;
  Matrix<Scalar> eigenvectors;
  Vector<Scalar> sqrt_pi;
};

template <typename Scalar>
SymmetricSpectrum<Scalar> symmetric_spectrum(const RateMatrix<Scalar>& q,
                                             const Distribution<Scalar>& pi) {
  const Vector<Scalar> root = pi.values().cwiseSqrt();
  Matrix<Scalar> s = -(root.asDiagonal() * q.matrix() *
                       root.cwiseInverse().asDiagonal());
  const Matrix<Scalar> sym = (s + s.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::EigenFailure, "symmetric eigen-solve did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors(), root};
}

/// Variational spectral gap inf{(-Qg, g)_pi : pi(g) = 0, |g|_{L2(pi)} = 1}.
/// The quadratic form only sees the reversibilized generator, so the
/// symmetric solve always runs on (Q + Q^)/2 (equal to Q when reversible).
template <typename Scalar>
Scalar gap(const RateMatrix<Scalar>& q, const Distribution<Scalar>& pi,
           const Tolerances& tol = {}) {
  const auto spectrum = symmetric_spectrum(reversibilize(q, pi, tol), pi);
  return std::max(spectrum.eigenvalues(1), Scalar(0));
}

namespace detail {

template <typename Scalar>
void sort_spectrum(std::vector<std::complex<Scalar>>& values) {
  std::stable_sort(values.begin(), values.end(),
                   [](const std::complex<Scalar>& a, const std::complex<Scalar>& b) {
                     if (a.real() != b.real()) return a.real() > b.real();
                     return a.imag() < b.imag();
                   });
}

}  // namespace detail

/// Full spectrum of Q, sorted by descending real part then ascending
/// imaginary part.
template <typename Scalar>
std::vector<std::complex<Scalar>> eigenvalues(const RateMatrix<Scalar>& q,
                                              const Tolerances& tol = {}) {
  Eigen::EigenSolver<Matrix<Scalar>> solver(q.matrix(), false);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::EigenFailure, "eigen-solve did not converge");
  }
  std::vector<std::complex<Scalar>> values(solver.eigenvalues().data(),
                                           solver.eigenvalues().data() + q.size());
  detail::sort_spectrum(values);

  const Scalar zero_tol = Scalar(tol.eig) * q.max_abs_rate();
  const auto zeros = std::count_if(values.begin(), values.end(), [&](const auto& v) {
    return std::abs(v) <= zero_tol;
  });
  if (zeros != 1) {
    throw Error(ErrorKind::EigenFailure,
                "expected exactly one zero eigenvalue, found " + std::to_string(zeros));
  }
  // Snap the stationary eigenvalue so the ordering is deterministic.
  for (auto& v : values) {
    if (std::abs(v) <= zero_tol) v = std::complex<Scalar>(0, 0);
  }
  detail::sort_spectrum(values);
  return values;
}

template <typename Scalar>
Scalar true_decay_rate(const std::vector<std::complex<Scalar>>& spectrum,
                       Scalar zero_tol) {
  Scalar best = -std::numeric_limits<Scalar>::infinity();
  for (const auto& v : spectrum) {
    if (std::abs(v) > zero_tol) best = std::max(best, v.real());
  }
  return -best;
}

/// -max{Re lambda : lambda != 0}, the asymptotic decay rate of P_t - pi.
template <typename Scalar>
Scalar true_decay_rate(const RateMatrix<Scalar>& q, const Tolerances& tol = {}) {
  return true_decay_rate(eigenvalues(q, tol), Scalar(tol.eig) * q.max_abs_rate());
}

/// C(i, f) = pi(f^2)^{1/2} (1/pi_i - 1)^{1/2}.
template <typename Scalar>
Vector<Scalar> ergodicity_constant(const Distribution<Scalar>& pi,
                                   const WeightFunction<Scalar>& f) {
  const auto& p = pi.values();
  const Scalar second_moment = p.dot(f.values().cwiseAbs2());
  return (p.cwiseInverse().array() - Scalar(1)).cwiseMax(Scalar(0)).sqrt().matrix() *
         std::sqrt(second_moment);
}

template <typename Scalar>
struct SpectralReport {
  Scalar gap;
  std::vector<std::complex<Scalar>> eigenvalues;
  bool reversible;
  Scalar reversibility_violation;
  // Equal to gap; exact when reversible, a certified lower bound otherwise.
  Scalar rate_epsilon_max;
  Scalar true_decay_rate;
  Vector<Scalar> constants;
};

template <typename Scalar>
SpectralReport<Scalar> theorem11_report(const ChainSpec<Scalar>& spec,
                                        const Tolerances& tol = {}) {
  const auto& q = spec.rate_matrix;
  const auto& pi = spec.stationary;
  const auto check = is_reversible(q, pi, tol);
  const Scalar spectral_gap = gap(q, pi, tol);
  auto spectrum = eigenvalues(q, tol);
  const Scalar decay = true_decay_rate(spectrum, Scalar(tol.eig) * q.max_abs_rate());
  return SpectralReport<Scalar>{spectral_gap,
                                std::move(spectrum),
                                check.reversible,
                                check.max_violation,
                                spectral_gap,
                                decay,
                                ergodicity_constant(pi, spec.weight)};
}

}  // namespace ergorate

#endif  // ERGORATE_SPECTRAL_HPP
