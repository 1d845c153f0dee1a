#ifndef ERGORATE_HTRANSFORM_HPP
#define ERGORATE_HTRANSFORM_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "ergorate/chain.hpp"
#include "ergorate/semigroup.hpp"
#include "ergorate/spectral.hpp"

namespace ergorate {

/// Doob h-transform of a chain by its weight f:
///   Pf_t g = (1/f) P_t (f g),  Q^f g = (1/f) Q (f g),
///   (pi^f g)_i = (1/f_i) sum_j pi_j f_j g_j,  nu_i = f_i^2 pi_i.
/// nu is deliberately left unnormalized and Pf_t is not stochastic.
template <typename Scalar>
class TransformedSemigroup {
 public:
  explicit TransformedSemigroup(ChainSpec<Scalar> base, const Tolerances& tol = {})
      : base_(std::move(base)), semigroup_(base_, tol) {
    const auto& f = base_.weight.values();
    const auto& pi = base_.stationary.values();
    nu_ = f.cwiseAbs2().cwiseProduct(pi);
    projection_ = f.cwiseInverse() * pi.cwiseProduct(f).transpose();
    generator_ = f.cwiseInverse().asDiagonal() * base_.rate_matrix.matrix() * f.asDiagonal();
  }

  const ChainSpec<Scalar>& base() const { return base_; }
  const Vector<Scalar>& nu() const { return nu_; }
  const Matrix<Scalar>& generator() const { return generator_; }
  const Matrix<Scalar>& projection() const { return projection_; }
  const Semigroup<Scalar>& semigroup() const { return semigroup_; }
  bool base_reversible() const { return semigroup_.route() == ExpmRoute::Spectral; }

  /// diag(1/f) exp(tQ) diag(f).
  Matrix<Scalar> at(Scalar t) const {
    const auto& f = base_.weight.values();
    return f.cwiseInverse().asDiagonal() * semigroup_.at(t).P * f.asDiagonal();
  }

  /// Pf_t - pi^f, taken from the cancellation-free deviation of P_t.
  Matrix<Scalar> centered(Scalar t) const {
    const auto& f = base_.weight.values();
    return f.cwiseInverse().asDiagonal() * semigroup_.deviation(t) * f.asDiagonal();
  }

  Vector<Scalar> project(const Vector<Scalar>& g) const { return projection_ * g; }

  Scalar inner(const Vector<Scalar>& a, const Vector<Scalar>& b) const {
    return (nu_.array() * a.array() * b.array()).sum();
  }

  Scalar l2_norm(const Vector<Scalar>& g) const { return std::sqrt(inner(g, g)); }

 private:
  ChainSpec<Scalar> base_;
  Semigroup<Scalar> semigroup_;
  Vector<Scalar> nu_;
  Matrix<Scalar> projection_;
  Matrix<Scalar> generator_;
};

template <typename Scalar>
TransformedSemigroup<Scalar> transform(const ChainSpec<Scalar>& spec,
                                       const Tolerances& tol = {}) {
  return TransformedSemigroup<Scalar>(spec, tol);
}

template <typename Scalar>
struct Lemma31Residuals {
  Scalar semigroup;              // |Pf_{t+s} g1 - Pf_t Pf_s g1|
  Scalar conjugacy_semigroup;    // |(Pf_t g1, g2)_nu - (g1, Pf_t g2)_nu|
  Scalar conjugacy_projection;   // |(pi^f g1, g2)_nu - (g1, pi^f g2)_nu|
  Scalar projection;             // max of |pi^f Pf_t g1 - pi^f g1|, |Pf_t pi^f g1 - pi^f g1|

  Scalar max() const {
    return std::max({semigroup, conjugacy_semigroup, conjugacy_projection, projection});
  }
};

template <typename Scalar>
Lemma31Residuals<Scalar> check_lemma31(const TransformedSemigroup<Scalar>& transformed,
                                       Scalar t, Scalar s, const Vector<Scalar>& g1,
                                       const Vector<Scalar>& g2) {
  const Matrix<Scalar> pt = transformed.at(t);
  const Matrix<Scalar> ps = transformed.at(s);
  const Matrix<Scalar> pts = transformed.at(t + s);
  const auto& proj = transformed.projection();

  Lemma31Residuals<Scalar> r;
  r.semigroup = (pts * g1 - pt * (ps * g1)).cwiseAbs().maxCoeff();
  r.conjugacy_semigroup =
      std::abs(transformed.inner(pt * g1, g2) - transformed.inner(g1, pt * g2));
  r.conjugacy_projection =
      std::abs(transformed.inner(proj * g1, g2) - transformed.inner(g1, proj * g2));
  const Vector<Scalar> target = proj * g1;
  r.projection = std::max((proj * (pt * g1) - target).cwiseAbs().maxCoeff(),
                          (pt * target - target).cwiseAbs().maxCoeff());
  return r;
}

/// One numerical comparison of two sides of an identity or inequality.
template <typename Scalar>
struct LemmaCheck {
  std::string lemma;
  Scalar t;
  Index states;
  Scalar lhs;
  Scalar rhs;
  Scalar residual;  // |lhs - rhs| for identities, max(lhs - rhs, 0) for bounds
  bool pass;
};

namespace detail {

template <typename Scalar>
void require_reversible_base(const TransformedSemigroup<Scalar>& transformed, const char* what) {
  if (!transformed.base_reversible()) {
    throw Error(ErrorKind::InvalidInput, std::string(what) + " requires a reversible base chain");
  }
}

}  // namespace detail

/// |Pf_t - pi^f|^2_{inf->2} against |Pf_{2t} - pi^f|_{inf->1}, both over L(nu).
template <typename Scalar>
LemmaCheck<Scalar> check_lemma32(const TransformedSemigroup<Scalar>& transformed, Scalar t,
                                 Scalar tolerance = Scalar(1e-9)) {
  detail::require_reversible_base(transformed, "lemma32");
  const Scalar lhs = opnorm_inf_to_2_squared(transformed.centered(t), transformed.nu());
  const Scalar rhs = opnorm_inf_to_1(transformed.centered(Scalar(2) * t), transformed.nu());
  const Scalar residual = std::abs(lhs - rhs);
  return {"lemma32", t, transformed.base().size(), lhs, rhs, residual, residual <= tolerance};
}

/// |Pf_t - pi^f|_{inf->1} <= sum_i pi_i f_i |P_t(i,.) - pi|_f.
template <typename Scalar>
LemmaCheck<Scalar> check_lemma33(const TransformedSemigroup<Scalar>& transformed, Scalar t,
                                 Scalar tolerance = Scalar(1e-9)) {
  detail::require_reversible_base(transformed, "lemma33");
  const auto& spec = transformed.base();
  const Scalar lhs = opnorm_inf_to_1(transformed.centered(t), transformed.nu());
  const Matrix<Scalar> dev = transformed.semigroup().deviation(t);
  Scalar rhs(0);
  for (Index i = 0; i < spec.size(); ++i) {
    rhs += spec.stationary(i) * spec.weight(i) * f_norm(dev.row(i), spec.weight);
  }
  const Scalar excess = std::max(lhs - rhs, Scalar(0));
  return {"lemma33", t, spec.size(), lhs, rhs, excess, excess <= tolerance};
}

template <typename Scalar>
struct HFunction {
  Scalar s;
  Index state;
  Vector<Scalar> values;  // h_s(i, j) = P_s(i,j) / (f_j pi_j) - 1 / f_j
  Scalar norm_sq;         // |h_s(i,.)|^2_{L2(nu)}, summed directly
  std::optional<Scalar> norm_sq_closed_form;  // P_{2s}(i,i)/pi_i - 1, reversible only
  Scalar projection_residual;                 // max |pi^f h_s(i,.)|
};

template <typename Scalar>
HFunction<Scalar> h_function(const TransformedSemigroup<Scalar>& transformed, Index state,
                             Scalar s) {
  if (!(s > Scalar(0))) throw Error(ErrorKind::InvalidInput, "h_function needs s > 0");
  const auto& spec = transformed.base();
  if (state < 0 || state >= spec.size()) {
    throw Error(ErrorKind::InvalidInput, "state index out of range");
  }
  const auto& f = spec.weight.values();
  const auto& pi = spec.stationary.values();
  const Vector<Scalar> row = transformed.semigroup().at(s).P.row(state).transpose();

  HFunction<Scalar> h;
  h.s = s;
  h.state = state;
  h.values = (row.cwiseQuotient(pi) - Vector<Scalar>::Ones(pi.size())).cwiseQuotient(f);
  h.norm_sq = transformed.inner(h.values, h.values);
  if (transformed.base_reversible()) {
    h.norm_sq_closed_form =
        transformed.semigroup().at(Scalar(2) * s).P(state, state) / pi(state) - Scalar(1);
  }
  h.projection_residual = transformed.project(h.values).cwiseAbs().maxCoeff();
  return h;
}

template <typename Scalar>
HFunction<Scalar> h_function(const ChainSpec<Scalar>& spec, Index state, Scalar s) {
  return h_function(transform(spec), state, s);
}

/// |P_t(i,.) - pi|_f <= pi(f^2)^{1/2} e^{-gap (t - s)} |h_s(i,.)|_{L2(nu)}, s <= t.
template <typename Scalar>
LemmaCheck<Scalar> check_h_bound(const TransformedSemigroup<Scalar>& transformed, Index state,
                                 Scalar s, Scalar t, Scalar spectral_gap,
                                 Scalar tolerance = Scalar(1e-9)) {
  if (!(s <= t)) throw Error(ErrorKind::InvalidInput, "h bound needs s <= t");
  const auto& spec = transformed.base();
  const auto h = h_function(transformed, state, s);
  const Scalar lhs = f_norm(transformed.semigroup().deviation(t).row(state), spec.weight);
  const Scalar rhs = std::sqrt(transformed.nu().sum()) *
                     std::exp(-spectral_gap * (t - s)) * std::sqrt(h.norm_sq);
  const Scalar excess = std::max(lhs - rhs, Scalar(0));
  return {"h_bound", t, spec.size(), lhs, rhs, excess, excess <= tolerance};
}

}  // namespace ergorate

#endif  // ERGORATE_HTRANSFORM_HPP
