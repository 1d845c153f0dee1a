#ifndef ERGORATE_SEMIGROUP_HPP
#define ERGORATE_SEMIGROUP_HPP

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ergorate/chain.hpp"
#include "ergorate/parallel.hpp"
#include "ergorate/spectral.hpp"

namespace ergorate {

enum class ExpmRoute { Spectral, Pade };

inline const char* to_string(ExpmRoute route) {
  return route == ExpmRoute::Spectral ? "spectral" : "pade13_scaling_squaring";
}

/// Entries of exp(tQ) in [-kClampTol, 0) are floating-point dust.
inline constexpr double kClampTol = 1e-12;

template <typename Scalar>
struct SemigroupSnapshot {
  Scalar t;
  Matrix<Scalar> P;
  ExpmRoute route;
  Scalar min_entry;          // before clamping
  bool negative_diagnostic;  // some entry fell below -kClampTol
};

namespace detail {

template <typename Scalar>
SemigroupSnapshot<Scalar> finish_snapshot(Scalar t, Matrix<Scalar> p, ExpmRoute route) {
  if (!p.allFinite()) throw Error(ErrorKind::Overflow, "matrix exponential overflowed");
  const Scalar lowest = p.minCoeff();
  const bool diagnostic = lowest < -Scalar(kClampTol);
  p = p.unaryExpr([](Scalar x) {
    return (x < Scalar(0) && x >= -Scalar(kClampTol)) ? Scalar(0) : x;
  });
  return {t, std::move(p), route, lowest, diagnostic};
}

template <typename Scalar>
void require_time(Scalar t) {
  if (!(t >= Scalar(0)) || !std::isfinite(static_cast<double>(t))) {
    throw Error(ErrorKind::InvalidInput, "time must be finite and non-negative");
  }
}

}  // namespace detail

/// P_t = exp(tQ) by scaling-and-squaring with a degree-13 Padé approximant.
template <typename Scalar>
SemigroupSnapshot<Scalar> expm(const RateMatrix<Scalar>& q, Scalar t) {
  detail::require_time(t);
  const Scalar scaled = t * q.max_abs_rate();
  if (!std::isfinite(static_cast<double>(scaled)) || scaled > Scalar(1e15)) {
    throw Error(ErrorKind::Overflow, "t * max|q| too large for scaling-and-squaring");
  }
  Matrix<Scalar> tq = q.matrix() * t;
  Matrix<Scalar> p = tq.exp();
  return detail::finish_snapshot(t, std::move(p), ExpmRoute::Pade);
}

/// Evaluator of t -> P_t for one chain. Reversible chains use the symmetric
/// spectral decomposition; everything else falls back to Padé.
template <typename Scalar>
class Semigroup {
 public:
  Semigroup(RateMatrix<Scalar> q, Distribution<Scalar> pi, const Tolerances& tol = {})
      : q_(std::move(q)), pi_(std::move(pi)) {
    if (is_reversible(q_, pi_, tol).reversible) {
      spectrum_ = symmetric_spectrum(q_, pi_);
    }
  }

  explicit Semigroup(const ChainSpec<Scalar>& spec, const Tolerances& tol = {})
      : Semigroup(spec.rate_matrix, spec.stationary, tol) {}

  ExpmRoute route() const { return spectrum_ ? ExpmRoute::Spectral : ExpmRoute::Pade; }
  const RateMatrix<Scalar>& rate_matrix() const { return q_; }
  const Distribution<Scalar>& stationary() const { return pi_; }

  SemigroupSnapshot<Scalar> at(Scalar t) const {
    detail::require_time(t);
    if (!spectrum_) return expm(q_, t);
    return detail::finish_snapshot(t, spectral_sum(t, 0), ExpmRoute::Spectral);
  }

  /// P_t - 1 pi. On the spectral route the stationary mode is dropped from
  /// the sum instead of subtracted, so tiny deviations keep full relative
  /// precision.
  Matrix<Scalar> deviation(Scalar t) const {
    detail::require_time(t);
    if (spectrum_) return spectral_sum(t, 1);
    Matrix<Scalar> p = expm(q_, t).P;
    p.rowwise() -= pi_.values().transpose();
    return p;
  }

  /// Smallest deviation magnitude this route resolves.
  Scalar noise_floor() const {
    if (spectrum_) {
      return std::numeric_limits<Scalar>::min() / std::numeric_limits<Scalar>::epsilon();
    }
    return Scalar(1e-14);
  }

 private:
  Matrix<Scalar> spectral_sum(Scalar t, Index first_mode) const {
    const auto& s = *spectrum_;
    const Index n = q_.size();
    const Index modes = n - first_mode;
    const auto v = s.eigenvectors.rightCols(modes);
    const Vector<Scalar> decay =
        (-t * s.eigenvalues.tail(modes).cwiseMax(Scalar(0))).array().exp().matrix();
    Matrix<Scalar> core = v * decay.asDiagonal() * v.transpose();
    return s.sqrt_pi.cwiseInverse().asDiagonal() * core * s.sqrt_pi.asDiagonal();
  }

  RateMatrix<Scalar> q_;
  Distribution<Scalar> pi_;
  std::optional<SymmetricSpectrum<Scalar>> spectrum_;
};

/// |nu|_f = sum_i f_i |nu_i|.
template <typename Derived, typename Scalar>
Scalar f_norm(const Eigen::MatrixBase<Derived>& nu, const WeightFunction<Scalar>& f) {
  const auto& v = nu.derived();
  if (v.size() != f.size()) {
    throw Error(ErrorKind::InvalidInput, "measure and weight lengths differ");
  }
  Scalar total(0);
  for (Index k = 0; k < v.size(); ++k) total += f(k) * std::abs(Scalar(v(k)));
  return total;
}

template <typename Scalar>
std::vector<Scalar> linear_grid(Scalar from, Scalar to, std::size_t points) {
  std::vector<Scalar> grid(points);
  for (std::size_t k = 0; k < points; ++k) {
    grid[k] = points == 1 ? from
                          : from + (to - from) * Scalar(k) / Scalar(points - 1);
  }
  return grid;
}

/// Log-spaced points on [t_min, 10 / rate].
template <typename Scalar>
std::vector<Scalar> default_time_grid(Scalar rate, std::size_t points = 60,
                                      Scalar t_min = Scalar(0.01)) {
  const Scalar t_max = Scalar(10) / rate;
  std::vector<Scalar> grid(points);
  const Scalar lo = std::log(t_min);
  const Scalar hi = std::log(t_max);
  for (std::size_t k = 0; k < points; ++k) {
    grid[k] = std::exp(points == 1 ? lo : lo + (hi - lo) * Scalar(k) / Scalar(points - 1));
  }
  return grid;
}

template <typename Scalar>
struct DecayCurve {
  Index state;
  std::vector<Scalar> times;
  std::vector<Scalar> fnorms;
  std::vector<Scalar> envelope;
  Scalar rate;      // envelope exponent
  Scalar constant;  // envelope prefactor C(i, f)
  bool reversible;
  ExpmRoute route;
  Scalar noise_floor;
};

template <typename Scalar>
DecayCurve<Scalar> decay_curve(const ChainSpec<Scalar>& spec,
                               const SpectralReport<Scalar>& report,
                               const Semigroup<Scalar>& semigroup, Index state,
                               std::span<const Scalar> grid) {
  if (state < 0 || state >= spec.size()) {
    throw Error(ErrorKind::InvalidInput, "state index out of range");
  }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] >= Scalar(0)) || (k > 0 && !(grid[k] > grid[k - 1]))) {
      throw Error(ErrorKind::InvalidInput,
                  "time grid must be non-negative and strictly increasing");
    }
  }
  DecayCurve<Scalar> curve{state, {grid.begin(), grid.end()}, {}, {},
                           report.rate_epsilon_max, report.constants(state),
                           report.reversible, semigroup.route(), semigroup.noise_floor()};
  curve.fnorms.resize(grid.size());
  curve.envelope.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Matrix<Scalar> dev = semigroup.deviation(grid[k]);
    curve.fnorms[k] = f_norm(dev.row(state), spec.weight);
    curve.envelope[k] = curve.constant * std::exp(-curve.rate * grid[k]);
  }
  return curve;
}

template <typename Scalar>
DecayCurve<Scalar> decay_curve(const ChainSpec<Scalar>& spec, Index state,
                               std::span<const Scalar> grid,
                               const Tolerances& tol = {}) {
  return decay_curve(spec, theorem11_report(spec, tol), Semigroup<Scalar>(spec, tol),
                     state, grid);
}

enum class FitMode { Auto, LeastSquares, PeakEnvelope };

inline const char* to_string(FitMode mode) {
  switch (mode) {
    case FitMode::Auto: return "auto";
    case FitMode::LeastSquares: return "least_squares";
    case FitMode::PeakEnvelope: return "peak_envelope";
  }
  return "unknown";
}

template <typename Scalar>
struct RateFit {
  Scalar rate;
  Scalar intercept;  // of log fnorm at t = 0
  Scalar t_min;
  Scalar t_max;
  Scalar residual;  // max |log fnorm - line| over the window
  FitMode mode;     // never Auto
  std::size_t points;
};

namespace detail {

template <typename Scalar>
std::pair<Scalar, Scalar> line_fit(const std::vector<Scalar>& x, const std::vector<Scalar>& y) {
  const auto n = static_cast<Scalar>(x.size());
  Scalar mx(0), my(0);
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  Scalar sxx(0), sxy(0);
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  const Scalar slope = sxy / sxx;
  return {slope, my - slope * mx};
}

// Indices of the upper convex hull of (x, y), x increasing.
template <typename Scalar>
std::vector<std::size_t> upper_hull(const std::vector<Scalar>& x, const std::vector<Scalar>& y) {
  std::vector<std::size_t> hull;
  for (std::size_t k = 0; k < x.size(); ++k) {
    while (hull.size() >= 2) {
      const std::size_t a = hull[hull.size() - 2];
      const std::size_t b = hull.back();
      if ((y[b] - y[a]) * (x[k] - x[a]) <= (y[k] - y[a]) * (x[b] - x[a])) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(k);
  }
  return hull;
}

// Successive maxima of the detrended curve: interior upper-hull vertices
// that bound a long hull edge. Edges spanning a full oscillation period all
// share the decay slope; short edges only trace the shape of one peak.
template <typename Scalar>
std::vector<std::size_t> envelope_peaks(const std::vector<Scalar>& x, const std::vector<Scalar>& y) {
  auto hull = upper_hull(x, y);
  if (hull.size() <= 3) return {};
  hull = std::vector<std::size_t>(hull.begin() + 1, hull.end() - 1);
  Scalar longest(0);
  for (std::size_t k = 0; k + 1 < hull.size(); ++k) {
    longest = std::max(longest, x[hull[k + 1]] - x[hull[k]]);
  }
  std::vector<std::size_t> peaks;
  for (std::size_t k = 0; k + 1 < hull.size(); ++k) {
    if (x[hull[k + 1]] - x[hull[k]] >= longest / Scalar(2)) {
      if (peaks.empty() || peaks.back() != hull[k]) peaks.push_back(hull[k]);
      peaks.push_back(hull[k + 1]);
    }
  }
  return peaks;
}

}  // namespace detail

/// Least-squares exponential rate of a decay curve over [t_min, t_max].
/// Auto mode switches to the peak envelope when the curve oscillates (has
/// interior local maxima) or comes from an irreversible chain.
template <typename Scalar>
RateFit<Scalar> fit_rate(const DecayCurve<Scalar>& curve, Scalar t_min, Scalar t_max,
                         FitMode mode = FitMode::Auto) {
  std::vector<Scalar> t, y;
  for (std::size_t k = 0; k < curve.times.size(); ++k) {
    if (curve.times[k] < t_min || curve.times[k] > t_max) continue;
    if (!(curve.fnorms[k] > curve.noise_floor)) {
      throw Error(ErrorKind::NoiseFloor, "f-norm below the noise floor inside the fit window");
    }
    t.push_back(curve.times[k]);
    y.push_back(std::log(curve.fnorms[k]));
  }
  if (t.size() < 5) {
    throw Error(ErrorKind::InsufficientData, "fewer than 5 grid points in the fit window");
  }
  if (mode == FitMode::Auto) {
    bool oscillates = false;
    for (std::size_t k = 1; k + 1 < y.size(); ++k) {
      if (y[k] > y[k - 1] && y[k] >= y[k + 1]) oscillates = true;
    }
    mode = (oscillates || !curve.reversible) ? FitMode::PeakEnvelope : FitMode::LeastSquares;
  }

  std::pair<Scalar, Scalar> line;
  std::size_t used = t.size();
  if (mode == FitMode::PeakEnvelope) {
    const auto peaks = detail::envelope_peaks(t, y);
    if (peaks.size() < 2) {
      throw Error(ErrorKind::InsufficientData,
                  "peak-envelope fit needs at least two envelope peaks in the window");
    }
    std::vector<Scalar> pt, py;
    for (auto k : peaks) {
      pt.push_back(t[k]);
      py.push_back(y[k]);
    }
    line = detail::line_fit(pt, py);
    used = peaks.size();
  } else {
    line = detail::line_fit(t, y);
  }

  Scalar residual(0);
  for (std::size_t k = 0; k < t.size(); ++k) {
    residual = std::max(residual, std::abs(y[k] - (line.second + line.first * t[k])));
  }
  return {-line.first, line.second, t_min, t_max, residual, mode, used};
}

/// Default window [2 / rate_guess, 6 / rate_guess].
template <typename Scalar>
RateFit<Scalar> fit_rate(const DecayCurve<Scalar>& curve, FitMode mode = FitMode::Auto) {
  return fit_rate(curve, Scalar(2) / curve.rate, Scalar(6) / curve.rate, mode);
}

template <typename Scalar>
struct DualNormCheck {
  Scalar direct;    // |mu P_t - pi|_f
  Scalar via_dual;  // |f (P*_t h - 1)|_{L1(pi)}, h = mu / pi
  Scalar residual;
};

/// Evaluates |mu P_t - pi|_f twice: directly, and through the dual
/// semigroup generated by dual(Q).
template <typename Scalar>
DualNormCheck<Scalar> mu_ft_norm(const Vector<Scalar>& mu, const ChainSpec<Scalar>& spec,
                                 Scalar t, const Tolerances& tol = {}) {
  const auto& pi = spec.stationary.values();
  if (mu.size() != pi.size() || mu.minCoeff() < Scalar(0) ||
      std::abs(mu.sum() - Scalar(1)) > Scalar(tol.sum)) {
    throw Error(ErrorKind::InvalidDistribution, "mu must be a probability vector");
  }
  const Matrix<Scalar> p = expm(spec.rate_matrix, t).P;
  const Vector<Scalar> law = (mu.transpose() * p).transpose();
  const Scalar direct = f_norm(law - pi, spec.weight);

  const Matrix<Scalar> p_dual =
      expm(dual(spec.rate_matrix, spec.stationary, tol), t).P;
  const Vector<Scalar> h = mu.cwiseQuotient(pi);
  const Vector<Scalar> image = p_dual * h;
  Scalar via_dual(0);
  for (Index i = 0; i < pi.size(); ++i) {
    via_dual += pi(i) * spec.weight(i) * std::abs(image(i) - Scalar(1));
  }
  return {direct, via_dual, std::abs(direct - via_dual)};
}

inline constexpr Index kMaxBruteForceStates = 20;

/// max over g in {-1, +1}^n of score(A g). Uses g and -g symmetry (first
/// sign fixed) and a Gray-code walk so each step costs one column update.
template <typename Scalar, typename Score>
Scalar max_over_sign_vectors(const Matrix<Scalar>& a, Score score) {
  const Index n = a.cols();
  if (n > kMaxBruteForceStates) {
    throw Error(ErrorKind::TooLarge, "sign-vector brute force is capped at n = 20");
  }
  if (n == 0) return Scalar(0);
  const std::uint64_t total = std::uint64_t{1} << (n - 1);
  const std::size_t chunks = std::min<std::uint64_t>(total, 64);
  std::vector<Scalar> best(chunks, -std::numeric_limits<Scalar>::infinity());

  parallel_for(chunks, [&](std::size_t c0, std::size_t c1) {
    for (std::size_t c = c0; c < c1; ++c) {
      const std::uint64_t begin = total * c / chunks;
      const std::uint64_t end = total * (c + 1) / chunks;
      Vector<Scalar> g(n);
      Vector<Scalar> image(a.rows());
      Scalar chunk_best = -std::numeric_limits<Scalar>::infinity();
      for (std::uint64_t k = begin; k < end; ++k) {
        const std::uint64_t k_rel = k - begin;
        if (k_rel % 1024 == 0) {
          const std::uint64_t gray = k ^ (k >> 1);
          g(0) = Scalar(1);
          for (Index b = 1; b < n; ++b) {
            g(b) = ((gray >> (b - 1)) & 1U) ? Scalar(-1) : Scalar(1);
          }
          image.noalias() = a * g;
        } else {
          const auto bit = static_cast<Index>(std::countr_zero(k)) + 1;
          g(bit) = -g(bit);
          image += Scalar(2) * g(bit) * a.col(bit);
        }
        chunk_best = std::max(chunk_best, score(image));
      }
      best[c] = chunk_best;
    }
  });
  return *std::max_element(best.begin(), best.end());
}

/// |A|_{L-inf(nu) -> L1(nu)} = max_g sum_i nu_i |(A g)_i|, exact because a
/// convex function on the cube peaks at a vertex.
template <typename Scalar>
Scalar opnorm_inf_to_1(const Matrix<Scalar>& a, const Vector<Scalar>& nu) {
  return max_over_sign_vectors(a, [&nu](const Vector<Scalar>& image) {
    return nu.dot(image.cwiseAbs());
  });
}

/// |A|^2_{L-inf(nu) -> L2(nu)}.
template <typename Scalar>
Scalar opnorm_inf_to_2_squared(const Matrix<Scalar>& a, const Vector<Scalar>& nu) {
  return max_over_sign_vectors(a, [&nu](const Vector<Scalar>& image) {
    return nu.dot(image.cwiseAbs2());
  });
}

}  // namespace ergorate

#endif  // ERGORATE_SEMIGROUP_HPP
