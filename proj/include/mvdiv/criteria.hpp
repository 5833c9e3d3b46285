#pragma once

#include <cmath>
#include <limits>
#include <sstream>

#include "mvdiv/errors.hpp"
#include "mvdiv/fwd.hpp"
#include "mvdiv/spectral.hpp"

// Design criteria on covariance spectra: Kiefer's phi_p class and the
// simplicial functionals Phi_k, together with the gradients the divergence
// layer needs. All functions are isotonic concave criteria on the PSD cone
// (phi_p for p <= 1, Phi_k^{1/k} for any k).
namespace mvdiv {

namespace detail {

template <typename Scalar>
void require_psd(const Spectrum<Scalar>& spec, const char* where) {
  const Scalar eps = spec.rank_eps();
  if (spec.lambda_min() < -eps) {
    std::ostringstream os;
    os << where << ": matrix is not numerically PSD (lambda_min = "
       << spec.lambda_min() << ", tolerance " << -eps << ")";
    throw NotPsdError(os.str());
  }
}

inline void require_k_in_range(int k, Index d, const char* where) {
  if (k < 1 || static_cast<Index>(k) > d) {
    std::ostringstream os;
    os << where << ": k = " << k << " outside {1,...," << d << "}";
    throw ParameterError(os.str());
  }
}

// Eigenvalues with everything at or below the numerical-rank threshold
// replaced by exact zeros, so e_k and Phi_k vanish identically for
// rank-deficient input.
template <typename Scalar>
Vector<Scalar> rank_floored_eigenvalues(const Spectrum<Scalar>& spec) {
  const Scalar eps = spec.rank_eps();
  Vector<Scalar> lam = spec.eigenvalues;
  for (Index i = 0; i < lam.size(); ++i)
    if (lam(i) <= eps) lam(i) = Scalar(0);
  return lam;
}

// (k+1)/k! as a double-precision scalar; log-space fallback once the
// factorial overflows.
inline double simplicial_coefficient(int k) {
  if (k <= 170) {
    double fact = 1.0;
    for (int i = 2; i <= k; ++i) fact *= i;
    return (k + 1) / fact;
  }
  return std::exp(std::log1p(static_cast<double>(k)) -
                  std::lgamma(static_cast<double>(k) + 1.0));
}

}  // namespace detail

// Kiefer's phi_p criterion. p = +inf gives lambda_max, p = -inf lambda_min,
// p = 0 det(M)^{1/d}; otherwise [(1/d) tr(M^p)]^{1/p} where for p > 0 the
// trace runs over eigenvalues above the rank threshold. For numerically
// singular M and p <= 0 the value is 0.
template <typename Scalar>
Scalar phi_p(const Spectrum<Scalar>& spec, Scalar p) {
  if (std::isnan(p)) throw ParameterError("phi_p: p must not be NaN");
  detail::require_psd(spec, "phi_p");
  const Index d = spec.dim();
  const Scalar eps = spec.rank_eps();
  const bool singular = spec.numerical_rank() < d;
  if (std::isinf(p))
    return p > 0 ? std::max<Scalar>(spec.lambda_max(), Scalar(0))
                 : (singular ? Scalar(0)
                             : std::max<Scalar>(spec.lambda_min(), Scalar(0)));
  if (p == Scalar(0)) {
    if (singular) return Scalar(0);
    Scalar log_sum = 0;
    for (Index i = 0; i < d; ++i) log_sum += std::log(spec.eigenvalues(i));
    return std::exp(log_sum / static_cast<Scalar>(d));
  }
  if (p < Scalar(0)) {
    if (singular) return Scalar(0);
    Scalar s = 0;
    for (Index i = 0; i < d; ++i) s += std::pow(spec.eigenvalues(i), p);
    return std::pow(s / static_cast<Scalar>(d), Scalar(1) / p);
  }
  Scalar s = 0;
  for (Index i = 0; i < d; ++i)
    if (spec.eigenvalues(i) > eps) s += std::pow(spec.eigenvalues(i), p);
  if (s == Scalar(0)) return Scalar(0);
  return std::pow(s / static_cast<Scalar>(d), Scalar(1) / p);
}

// Simplicial criterion Phi_k(M) = ((k+1)/k!) e_k of the spectrum; equals the
// expected squared volume of a random k-simplex with vertices i.i.d. from a
// measure with covariance M. Strictly positive iff numerical rank >= k.
template <typename Scalar>
Scalar simplicial_phi(const Spectrum<Scalar>& spec, int k) {
  detail::require_psd(spec, "simplicial_phi");
  detail::require_k_in_range(k, spec.dim(), "simplicial_phi");
  const Vector<Scalar> lam = detail::rank_floored_eigenvalues(spec);
  const Vector<Scalar> e = elementary_symmetric(lam);
  return static_cast<Scalar>(detail::simplicial_coefficient(k)) * e(k);
}

// Gradient of Phi_k, evaluated by Horner's scheme in M with the
// characteristic-polynomial coefficients:
//   (-1)^{k-1} ((k+1)/k!) (M^{k-1} + c_2 M^{k-2} + ... + c_k I),
// c_{j+1} = (-1)^j e_j. PSD, and positive definite when rank(M) >= k.
template <typename Scalar>
SymMatrix<Scalar> simplicial_phi_gradient(const SymMatrix<Scalar>& m,
                                          const Spectrum<Scalar>& spec,
                                          int k) {
  detail::require_psd(spec, "simplicial_phi_gradient");
  detail::require_k_in_range(k, spec.dim(), "simplicial_phi_gradient");
  const Index d = spec.dim();
  const Vector<Scalar> e =
      elementary_symmetric(detail::rank_floored_eigenvalues(spec));
  Matrix<Scalar> horner = Matrix<Scalar>::Identity(d, d);
  for (int j = 2; j <= k; ++j) {
    const Scalar c_j = (j % 2 == 1) ? e(j - 1) : -e(j - 1);
    horner = (horner * m.mat()).eval();
    horner.diagonal().array() += c_j;
  }
  const Scalar sign = (k % 2 == 1) ? Scalar(1) : Scalar(-1);
  const Scalar coeff =
      sign * static_cast<Scalar>(detail::simplicial_coefficient(k));
  return SymMatrix<Scalar>((coeff * horner).eval());
}

// Normalized gradient of log phi_p: M^{p-1} / tr(M^p), with tr(M^0) = d.
// Satisfies tr(result * M) = 1. For p < 1 the exponent p-1 is negative, so
// the eigenvalues must pass the floor policy.
template <typename Scalar>
SymMatrix<Scalar> phi_p_gradient_normalized(const Spectrum<Scalar>& spec,
                                            Scalar p,
                                            const EigenFloor& floor_policy) {
  if (!std::isfinite(p))
    throw ParameterError("phi_p_gradient_normalized: p must be finite");
  detail::require_psd(spec, "phi_p_gradient_normalized");
  const Index d = spec.dim();
  const Scalar eps = spec.rank_eps();
  Scalar trace_p;
  if (p == Scalar(0)) {
    trace_p = static_cast<Scalar>(d);
  } else {
    trace_p = 0;
    for (Index i = 0; i < d; ++i) {
      const Scalar lam = spec.eigenvalues(i);
      if (p > Scalar(0) && lam <= eps) continue;
      trace_p += std::pow(lam, p);
    }
  }
  const SymMatrix<Scalar> power =
      fractional_power(spec, p - Scalar(1), floor_policy);
  return SymMatrix<Scalar>((power.mat() / trace_p).eval());
}

}  // namespace mvdiv
