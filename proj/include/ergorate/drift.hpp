#ifndef ERGORATE_DRIFT_HPP
#define ERGORATE_DRIFT_HPP

#include <algorithm>
#include <limits>
#include <vector>

#include "ergorate/chain.hpp"

namespace ergorate {

/// Sharpest constants of the Foster-Lyapunov condition
///   (Qf)_i <= -c f_i + b 1_C(i)
/// for the chain's own weight f and a small set C.
template <typename Scalar>
struct DriftReport {
  Scalar c_max;  // min over i outside C of -(Qf)_i / f_i
  Scalar b_min;  // max over i in C of (Qf)_i + c_max f_i
  std::vector<Index> small_set;
  Vector<Scalar> qf;
};

template <typename Scalar>
DriftReport<Scalar> drift_condition(const ChainSpec<Scalar>& spec,
                                    std::vector<Index> small_set = {0}) {
  const Index n = spec.size();
  std::vector<char> in_set(static_cast<std::size_t>(n), 0);
  for (Index i : small_set) {
    if (i < 0 || i >= n) throw Error(ErrorKind::InvalidInput, "small-set state out of range");
    in_set[static_cast<std::size_t>(i)] = 1;
  }
  std::sort(small_set.begin(), small_set.end());
  small_set.erase(std::unique(small_set.begin(), small_set.end()), small_set.end());
  if (small_set.empty() || static_cast<Index>(small_set.size()) == n) {
    throw Error(ErrorKind::InvalidInput, "small set must be a non-empty proper subset");
  }

  const auto& f = spec.weight.values();
  Vector<Scalar> qf = spec.rate_matrix.matrix() * f;
  Scalar c = std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < n; ++i) {
    if (!in_set[static_cast<std::size_t>(i)]) c = std::min(c, -qf(i) / f(i));
  }
  // Exact cancellation (f constant) leaves rounding dust around zero.
  const Scalar dust = Scalar(64) * std::numeric_limits<Scalar>::epsilon() *
                      spec.rate_matrix.max_abs_rate() * f.maxCoeff();
  if (!(c > dust)) {
    throw Error(ErrorKind::NoDrift, "no positive drift constant exists for this f and small set");
  }
  Scalar b = -std::numeric_limits<Scalar>::infinity();
  for (Index i : small_set) b = std::max(b, qf(i) + c * f(i));
  return {c, b, std::move(small_set), std::move(qf)};
}

}  // namespace ergorate

#endif  // ERGORATE_DRIFT_HPP
