#ifndef ERGORATE_CHAIN_HPP
#define ERGORATE_CHAIN_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ergorate/errors.hpp"

namespace ergorate {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Numerical tolerances shared by the chain, spectral and semigroup code.
/// row and stat are scaled by max|q_ij|; rev is relative to the largest
/// probability flux; eig is scaled by max|q_ij|.
struct Tolerances {
  double row = 1e-10;
  double stat = 1e-10;
  double rev = 1e-9;
  double sum = 1e-10;
  double eig = 1e-9;
};

enum class ValidateMode { Strict, Repair };

namespace detail {

template <typename Scalar>
Scalar max_abs(const Matrix<Scalar>& q) {
  return q.cwiseAbs().maxCoeff();
}

// True when every state reaches every other along positive rates. Two
// breadth-first sweeps from state 0 (forward and reversed edges) decide
// strong connectivity exactly.
template <typename Scalar>
bool strongly_connected(const Matrix<Scalar>& q) {
  const Index n = q.rows();
  auto sweep = [&](bool reversed) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Index> stack{0};
    seen[0] = 1;
    Index visited = 1;
    while (!stack.empty()) {
      const Index u = stack.back();
      stack.pop_back();
      for (Index v = 0; v < n; ++v) {
        if (v == u || seen[static_cast<std::size_t>(v)]) continue;
        const Scalar rate = reversed ? q(v, u) : q(u, v);
        if (rate > Scalar(0)) {
          seen[static_cast<std::size_t>(v)] = 1;
          ++visited;
          stack.push_back(v);
        }
      }
    }
    return visited == n;
  };
  return sweep(false) && sweep(true);
}

}  // namespace detail

/// Conservative, irreducible Q-matrix on a finite state set.
template <typename Scalar = double>
class RateMatrix {
 public:
  using MatrixType = Matrix<Scalar>;

  static RateMatrix validate(MatrixType raw,
                             ValidateMode mode = ValidateMode::Strict,
                             const Tolerances& tol = {}) {
    if (raw.rows() != raw.cols()) {
      throw Error(ErrorKind::InvalidInput, "rate matrix must be square");
    }
    const Index n = raw.rows();
    if (n < 2) throw Error(ErrorKind::InvalidInput, "rate matrix needs n >= 2");
    if (!raw.allFinite()) {
      throw Error(ErrorKind::InvalidInput, "rate matrix has non-finite entries");
    }
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        if (i != j && raw(i, j) < Scalar(0)) {
          std::ostringstream msg;
          msg << "negative rate q(" << i << "," << j << ") = " << raw(i, j);
          throw Error(ErrorKind::NegativeRate, msg.str(),
                      static_cast<std::size_t>(i));
        }
      }
    }
    if (mode == ValidateMode::Repair) {
      raw.diagonal().setZero();
      raw.diagonal() = -raw.rowwise().sum();
    }
    const Scalar scale = detail::max_abs(raw);
    for (Index i = 0; i < n; ++i) {
      const Scalar row_sum = raw.row(i).sum();
      if (std::abs(row_sum) > Scalar(tol.row) * scale) {
        std::ostringstream msg;
        msg << "row " << i << " sums to " << row_sum;
        throw Error(ErrorKind::NonConservative, msg.str(),
                    static_cast<std::size_t>(i));
      }
    }
    if (!detail::strongly_connected(raw)) {
      throw Error(ErrorKind::Reducible,
                  "positive-rate graph is not strongly connected");
    }
    return RateMatrix(std::move(raw));
  }

  Index size() const { return q_.rows(); }
  const MatrixType& matrix() const { return q_; }
  Scalar operator()(Index i, Index j) const { return q_(i, j); }
  Scalar max_abs_rate() const { return detail::max_abs(q_); }

 private:
  explicit RateMatrix(MatrixType q) : q_(std::move(q)) {}
  MatrixType q_;
};

/// Strictly positive probability vector.
template <typename Scalar = double>
class Distribution {
 public:
  using VectorType = Vector<Scalar>;

  static Distribution validate(VectorType p, const Tolerances& tol = {}) {
    if (p.size() < 1 || !p.allFinite()) {
      throw Error(ErrorKind::InvalidDistribution,
                  "distribution must be a finite non-empty vector");
    }
    for (Index i = 0; i < p.size(); ++i) {
      if (!(p(i) > Scalar(0))) {
        throw Error(ErrorKind::InvalidDistribution,
                    "distribution entry " + std::to_string(i) + " is not positive",
                    static_cast<std::size_t>(i));
      }
    }
    if (std::abs(p.sum() - Scalar(1)) > Scalar(tol.sum)) {
      throw Error(ErrorKind::InvalidDistribution,
                  "distribution does not sum to 1");
    }
    return Distribution(std::move(p));
  }

  Index size() const { return p_.size(); }
  const VectorType& values() const { return p_; }
  Scalar operator()(Index i) const { return p_(i); }

 private:
  explicit Distribution(VectorType p) : p_(std::move(p)) {}
  VectorType p_;
};

/// Weight vector f >= 1 defining the f-norm.
template <typename Scalar = double>
class WeightFunction {
 public:
  using VectorType = Vector<Scalar>;

  static WeightFunction validate(VectorType f) {
    for (Index i = 0; i < f.size(); ++i) {
      if (!(f(i) >= Scalar(1)) || !std::isfinite(static_cast<double>(f(i)))) {
        throw Error(ErrorKind::InvalidWeight,
                    "weight entry " + std::to_string(i) + " is below 1",
                    static_cast<std::size_t>(i));
      }
    }
    return WeightFunction(std::move(f));
  }

  static WeightFunction ones(Index n) {
    return WeightFunction(VectorType::Ones(n));
  }

  Index size() const { return f_.size(); }
  const VectorType& values() const { return f_; }
  Scalar operator()(Index i) const { return f_(i); }

 private:
  explicit WeightFunction(VectorType f) : f_(std::move(f)) {}
  VectorType f_;
};

template <typename Scalar = double>
struct ChainSpec {
  RateMatrix<Scalar> rate_matrix;
  WeightFunction<Scalar> weight;
  Distribution<Scalar> stationary;
  std::string label;
  bool stationary_supplied = false;

  Index size() const { return rate_matrix.size(); }
};

/// Solves pi Q = 0, sum(pi) = 1 by replacing the last balance equation with
/// the normalization row.
template <typename Scalar>
Distribution<Scalar> stationary(const RateMatrix<Scalar>& q,
                                const Tolerances& tol = {}) {
  const Index n = q.size();
  Matrix<Scalar> system = q.matrix().transpose();
  system.row(n - 1).setOnes();
  Vector<Scalar> rhs = Vector<Scalar>::Zero(n);
  rhs(n - 1) = Scalar(1);

  Eigen::FullPivLU<Matrix<Scalar>> lu(system);
  if (!lu.isInvertible()) {
    throw Error(ErrorKind::SingularSystem,
                "stationary system is rank deficient");
  }
  Vector<Scalar> pi = lu.solve(rhs);
  const Scalar residual =
      (pi.transpose() * q.matrix()).cwiseAbs().maxCoeff();
  if (!pi.allFinite() || pi.minCoeff() <= Scalar(0) ||
      residual > Scalar(tol.stat) * q.max_abs_rate()) {
    throw Error(ErrorKind::SingularSystem,
                "stationary solve is numerically unreliable");
  }
  pi /= pi.sum();
  return Distribution<Scalar>::validate(std::move(pi), tol);
}

template <typename Scalar>
struct ReversibilityCheck {
  bool reversible;
  Scalar max_violation;
};

template <typename Scalar>
ReversibilityCheck<Scalar> is_reversible(const RateMatrix<Scalar>& q,
                                         const Distribution<Scalar>& pi,
                                         const Tolerances& tol = {}) {
  const Index n = q.size();
  Scalar violation(0);
  Scalar flux(0);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const Scalar forward = pi(i) * q(i, j);
      violation = std::max(violation, std::abs(forward - pi(j) * q(j, i)));
      flux = std::max(flux, forward);
    }
  }
  return {violation <= Scalar(tol.rev) * flux, violation};
}

/// Time-reversed generator: q^_ij = pi_j q_ji / pi_i.
template <typename Scalar>
RateMatrix<Scalar> dual(const RateMatrix<Scalar>& q,
                        const Distribution<Scalar>& pi,
                        const Tolerances& tol = {}) {
  const auto& p = pi.values();
  Matrix<Scalar> hat = p.cwiseInverse().asDiagonal() *
                       q.matrix().transpose() * p.asDiagonal();
  return RateMatrix<Scalar>::validate(std::move(hat), ValidateMode::Repair, tol);
}

/// Additive reversibilization (Q + Q^)/2.
template <typename Scalar>
RateMatrix<Scalar> reversibilize(const RateMatrix<Scalar>& q,
                                 const Distribution<Scalar>& pi,
                                 const Tolerances& tol = {}) {
  Matrix<Scalar> bar =
      (q.matrix() + dual(q, pi, tol).matrix()) / Scalar(2);
  return RateMatrix<Scalar>::validate(std::move(bar), ValidateMode::Repair, tol);
}

template <typename Scalar>
ChainSpec<Scalar> make_chain_spec(RateMatrix<Scalar> q,
                                  WeightFunction<Scalar> f,
                                  std::optional<Distribution<Scalar>> pi = {},
                                  std::string label = {},
                                  const Tolerances& tol = {}) {
  if (f.size() != q.size()) {
    throw Error(ErrorKind::InvalidInput, "weight length does not match state count");
  }
  const bool supplied = pi.has_value();
  if (supplied) {
    if (pi->size() != q.size()) {
      throw Error(ErrorKind::InvalidInput,
                  "stationary length does not match state count");
    }
    const Scalar residual =
        (pi->values().transpose() * q.matrix()).cwiseAbs().maxCoeff();
    if (residual > Scalar(tol.stat) * q.max_abs_rate()) {
      throw Error(ErrorKind::InvalidDistribution,
                  "supplied pi is not stationary for Q");
    }
  }
  Distribution<Scalar> stat = supplied ? *pi : stationary(q, tol);
  return ChainSpec<Scalar>{std::move(q), std::move(f), std::move(stat),
                           std::move(label), supplied};
}

// ---------------------------------------------------------------------------
// Builders

/// Complete-graph chain q_ij = pi_j (j != i) with f = (1, beta, ..., beta).
template <typename Scalar>
ChainSpec<Scalar> build_example21(const Distribution<Scalar>& pi, Scalar beta) {
  if (!(beta > Scalar(1))) {
    throw Error(ErrorKind::InvalidBeta, "beta must exceed 1");
  }
  const Index n = pi.size();
  if (n < 2) throw Error(ErrorKind::InvalidInput, "example21 needs n >= 2");
  Matrix<Scalar> q = pi.values().transpose().replicate(n, 1);
  auto rates = RateMatrix<Scalar>::validate(std::move(q), ValidateMode::Repair);
  Vector<Scalar> f = Vector<Scalar>::Constant(n, beta);
  f(0) = Scalar(1);
  return make_chain_spec(std::move(rates),
                         WeightFunction<Scalar>::validate(std::move(f)),
                         std::optional<Distribution<Scalar>>(pi), "example21");
}

template <typename Scalar = double>
Matrix<Scalar> example22_matrix() {
  Matrix<Scalar> q(3, 3);
  q << Scalar(-0.5), Scalar(0.5), Scalar(0),  //
      Scalar(0), Scalar(-1), Scalar(1),       //
      Scalar(1), Scalar(0), Scalar(-1);
  return q;
}

/// Fixed three-state irreversible chain.
template <typename Scalar = double>
ChainSpec<Scalar> build_example22(
    std::optional<WeightFunction<Scalar>> f = std::nullopt) {
  auto rates = RateMatrix<Scalar>::validate(example22_matrix<Scalar>());
  auto weight = f ? *f : WeightFunction<Scalar>::ones(3);
  return make_chain_spec(std::move(rates), std::move(weight),
                         std::optional<Distribution<Scalar>>{}, "example22");
}

/// Tridiagonal chain with birth[i] = q(i, i+1), death[i] = q(i, i-1).
/// Both vectors have length n; birth[n-1] and death[0] are ignored.
template <typename Scalar>
ChainSpec<Scalar> build_birth_death(
    const Vector<Scalar>& birth, const Vector<Scalar>& death,
    std::optional<WeightFunction<Scalar>> f = std::nullopt) {
  const Index n = birth.size();
  if (death.size() != n || n < 2) {
    throw Error(ErrorKind::InvalidInput,
                "birth and death vectors must have equal length >= 2");
  }
  Matrix<Scalar> q = Matrix<Scalar>::Zero(n, n);
  for (Index i = 0; i + 1 < n; ++i) {
    if (!(birth(i) > Scalar(0))) {
      throw Error(ErrorKind::ZeroRate, "birth rate " + std::to_string(i) + " is not positive",
                  static_cast<std::size_t>(i));
    }
    q(i, i + 1) = birth(i);
  }
  for (Index i = 1; i < n; ++i) {
    if (!(death(i) > Scalar(0))) {
      throw Error(ErrorKind::ZeroRate, "death rate " + std::to_string(i) + " is not positive",
                  static_cast<std::size_t>(i));
    }
    q(i, i - 1) = death(i);
  }
  auto rates = RateMatrix<Scalar>::validate(std::move(q), ValidateMode::Repair);

  // Detailed-balance recursion pi_{i+1} = pi_i birth_i / death_{i+1}.
  Vector<Scalar> pi(n);
  pi(0) = Scalar(1);
  for (Index i = 0; i + 1 < n; ++i) pi(i + 1) = pi(i) * birth(i) / death(i + 1);
  pi /= pi.sum();

  auto weight = f ? *f : WeightFunction<Scalar>::ones(n);
  return make_chain_spec(std::move(rates), std::move(weight),
                         std::optional<Distribution<Scalar>>(
                             Distribution<Scalar>::validate(std::move(pi))),
                         "birth_death");
}

/// Generator rule for a chain on {0, 1, 2, ...}: off-diagonal rates, the
/// weight function, and optionally the untruncated stationary law.
template <typename Scalar = double>
struct CountableChain {
  std::function<Scalar(std::size_t, std::size_t)> rate;
  std::function<Scalar(std::size_t)> weight;
  std::function<Scalar(std::size_t)> stationary;  // may be empty
  std::string label;
};

template <typename Scalar>
struct TruncatedChain {
  ChainSpec<Scalar> spec;
  std::size_t window;
  std::optional<Scalar> retained_mass;
};

/// Reflecting truncation onto {0, ..., N-1}: rates leaving the window are
/// dropped and the diagonal is recomputed from the remaining rates.
template <typename Scalar>
TruncatedChain<Scalar> truncate(const CountableChain<Scalar>& rule,
                                std::size_t window) {
  if (window < 2) throw Error(ErrorKind::InvalidInput, "truncation needs N >= 2");
  const auto n = static_cast<Index>(window);
  Matrix<Scalar> q = Matrix<Scalar>::Zero(n, n);
  Vector<Scalar> f(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i != j) q(i, j) = rule.rate(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
    f(i) = rule.weight ? rule.weight(static_cast<std::size_t>(i)) : Scalar(1);
  }
  auto rates = RateMatrix<Scalar>::validate(std::move(q), ValidateMode::Repair);
  std::optional<Scalar> mass;
  if (rule.stationary) {
    Scalar total(0);
    for (std::size_t i = 0; i < window; ++i) total += rule.stationary(i);
    mass = total;
  }
  std::string label = rule.label.empty() ? "truncated" : rule.label;
  label += " (reflecting truncation, N=" + std::to_string(window) + ")";
  return {make_chain_spec(std::move(rates),
                          WeightFunction<Scalar>::validate(std::move(f)),
                          std::optional<Distribution<Scalar>>{}, std::move(label)),
          window, mass};
}

/// Complete-graph rule q_ij = pi_j on the non-negative integers, f = (1, beta, beta, ...).
template <typename Scalar>
CountableChain<Scalar> example21_rule(std::function<Scalar(std::size_t)> pi,
                                      Scalar beta) {
  if (!(beta > Scalar(1))) throw Error(ErrorKind::InvalidBeta, "beta must exceed 1");
  CountableChain<Scalar> rule;
  rule.rate = [pi](std::size_t, std::size_t j) { return pi(j); };
  rule.weight = [beta](std::size_t i) { return i == 0 ? Scalar(1) : beta; };
  rule.stationary = pi;
  rule.label = "example21";
  return rule;
}

}  // namespace ergorate

#endif  // ERGORATE_CHAIN_HPP
