#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <utility>

#include "mvdiv/criteria.hpp"
#include "mvdiv/errors.hpp"
#include "mvdiv/fwd.hpp"
#include "mvdiv/spectral.hpp"

// Closed-form distances between Gaussian summaries (mean, covariance):
// the classical symmetrized KL, Jensen-Shannon and Bhattacharyya distances,
// Jeffreys-Bregman divergences built on log phi_p and log Phi_k, and the
// generic Burbea-Rao / Jeffreys-Bregman constructions for a user-supplied
// criterion. Every divergence is symmetric and nonnegative up to round-off;
// tiny negative values are clamped, larger ones raise.
namespace mvdiv {

template <typename Scalar>
struct GaussianSummary {
  Vector<Scalar> mean;
  SymMatrix<Scalar> cov;

  GaussianSummary() = default;
  GaussianSummary(Vector<Scalar> mean_in, SymMatrix<Scalar> cov_in)
      : mean(std::move(mean_in)), cov(std::move(cov_in)) {
    if (!mean.allFinite())
      throw ValidationError("GaussianSummary: mean has non-finite entries");
    if (mean.size() != cov.dim())
      throw DimensionMismatchError(
          "GaussianSummary: mean length does not match covariance dimension");
  }

  Index dim() const { return mean.size(); }
};

namespace detail {

template <typename Scalar>
void require_positive_definite(const Spectrum<Scalar>& spec,
                               const char* which) {
  if (spec.lambda_min() <= spec.rank_eps()) {
    std::ostringstream os;
    os << "covariance of the " << which
       << " argument is numerically singular (lambda_min = "
       << spec.lambda_min() << ", threshold " << spec.rank_eps() << ")";
    throw SingularCovarianceError(os.str());
  }
}

template <typename Scalar>
void require_same_dim(const GaussianSummary<Scalar>& g1,
                      const GaussianSummary<Scalar>& g2, const char* where) {
  if (g1.dim() != g2.dim()) {
    std::ostringstream os;
    os << where << ": dimension mismatch (" << g1.dim() << " vs " << g2.dim()
       << ")";
    throw DimensionMismatchError(os.str());
  }
}

// tr(A * B) for symmetric A, B.
template <typename Scalar>
Scalar trace_product(const Matrix<Scalar>& a, const Matrix<Scalar>& b) {
  return a.cwiseProduct(b).sum();
}

template <typename Scalar>
Scalar sum_log_eigenvalues(const Spectrum<Scalar>& spec) {
  Scalar s = 0;
  for (Index i = 0; i < spec.dim(); ++i) s += std::log(spec.eigenvalues(i));
  return s;
}

}  // namespace detail

// Clamps small negative round-off to zero; anything more negative than
// -scale * (1 + |value|) indicates a real inconsistency and raises.
template <typename Scalar>
Scalar clamp_nonnegative(Scalar value,
                         Scalar scale = Scalar(tolerance::divergence_clamp)) {
  if (value >= Scalar(0)) return value;
  if (value >= -scale * (Scalar(1) + std::abs(value))) return Scalar(0);
  std::ostringstream os;
  os << "divergence evaluated to " << value
     << ", beyond the round-off clamp scale " << scale;
  throw NumericalConsistencyError(os.str());
}

// Symmetrized Kullback-Leibler divergence:
//   (1/4)[tr(S1^{-1} S2) + tr(S2^{-1} S1)]
// + (1/4) delta^T (S1^{-1} + S2^{-1}) delta - d/2.
template <typename Scalar>
Scalar kl_symmetrized(const GaussianSummary<Scalar>& g1,
                      const GaussianSummary<Scalar>& g2) {
  detail::require_same_dim(g1, g2, "kl_symmetrized");
  const Spectrum<Scalar> sp1 = symmetric_eigen(g1.cov);
  const Spectrum<Scalar> sp2 = symmetric_eigen(g2.cov);
  detail::require_positive_definite(sp1, "first");
  detail::require_positive_definite(sp2, "second");
  const Matrix<Scalar> inv1 =
      fractional_power(sp1, Scalar(-1), rank_floor(sp1)).mat();
  const Matrix<Scalar> inv2 =
      fractional_power(sp2, Scalar(-1), rank_floor(sp2)).mat();
  const Vector<Scalar> delta = g2.mean - g1.mean;
  const Scalar traces = detail::trace_product(inv1, g2.cov.mat()) +
                        detail::trace_product(inv2, g1.cov.mat());
  const Scalar quad = delta.dot(inv1 * delta) + delta.dot(inv2 * delta);
  const Scalar d = static_cast<Scalar>(g1.dim());
  return clamp_nonnegative(Scalar(0.25) * traces + Scalar(0.25) * quad -
                           d / Scalar(2));
}

namespace detail {

// Shared pieces of the JS and Bhattacharyya closed forms:
//   log_ratio = log det((S1+S2)/2) - (1/2)(log det S1 + log det S2)
//   quad      = delta^T (S1 + S2)^{-1} delta.
template <typename Scalar>
std::pair<Scalar, Scalar> log_ratio_and_quad(
    const GaussianSummary<Scalar>& g1, const GaussianSummary<Scalar>& g2) {
  const Spectrum<Scalar> sp1 = symmetric_eigen(g1.cov);
  const Spectrum<Scalar> sp2 = symmetric_eigen(g2.cov);
  require_positive_definite(sp1, "first");
  require_positive_definite(sp2, "second");
  const SymMatrix<Scalar> mean_cov(
      (Scalar(0.5) * (g1.cov.mat() + g2.cov.mat())).eval());
  const Spectrum<Scalar> spm = symmetric_eigen(mean_cov);
  require_positive_definite(spm, "mixture");
  const Scalar log_ratio =
      sum_log_eigenvalues(spm) -
      Scalar(0.5) * (sum_log_eigenvalues(sp1) + sum_log_eigenvalues(sp2));
  const Matrix<Scalar> inv_mean =
      fractional_power(spm, Scalar(-1), rank_floor(spm)).mat();
  const Vector<Scalar> delta = g2.mean - g1.mean;
  const Scalar quad = Scalar(0.5) * delta.dot(inv_mean * delta);
  return {log_ratio, quad};
}

}  // namespace detail

// Jensen-Shannon distance between the moment-matched Gaussians:
//   (1/2) log[det((S1+S2)/2) / sqrt(det S1 det S2)]
// + (1/2) log[1 + (1/2) delta^T (S1+S2)^{-1} delta].
template <typename Scalar>
Scalar jensen_shannon(const GaussianSummary<Scalar>& g1,
                      const GaussianSummary<Scalar>& g2) {
  detail::require_same_dim(g1, g2, "jensen_shannon");
  const auto [log_ratio, quad] = detail::log_ratio_and_quad(g1, g2);
  return clamp_nonnegative(Scalar(0.5) * log_ratio +
                           Scalar(0.5) * std::log1p(Scalar(0.5) * quad));
}

// Bhattacharyya distance; shares the determinant term with jensen_shannon
// and dominates it, with equality exactly at equal means.
template <typename Scalar>
Scalar bhattacharyya(const GaussianSummary<Scalar>& g1,
                     const GaussianSummary<Scalar>& g2) {
  detail::require_same_dim(g1, g2, "bhattacharyya");
  const auto [log_ratio, quad] = detail::log_ratio_and_quad(g1, g2);
  return clamp_nonnegative(Scalar(0.5) * log_ratio + Scalar(0.25) * quad);
}

// Jeffreys-Bregman divergence of log phi_p:
//   (1/2)[tr(S1^{p-1} S2)/tr(S1^p) + tr(S2^{p-1} S1)/tr(S2^p)]
// + (1/2) delta^T [S1^{p-1}/tr(S1^p) + S2^{p-1}/tr(S2^p)] delta - 1,
// with the convention tr(M^0) = d. The exponent p-1 is negative for the
// admissible p < 1, so both covariances must pass the floor policy.
template <typename Scalar>
Scalar jb_log_phi_p(const GaussianSummary<Scalar>& g1,
                    const GaussianSummary<Scalar>& g2, Scalar p,
                    const EigenFloor& floor_policy = EigenFloor::reject()) {
  detail::require_same_dim(g1, g2, "jb_log_phi_p");
  if (!(p < Scalar(1)) || !std::isfinite(p))
    throw ParameterError("jb_log_phi_p: requires finite p < 1");
  const Spectrum<Scalar> sp1 = symmetric_eigen(g1.cov);
  const Spectrum<Scalar> sp2 = symmetric_eigen(g2.cov);
  Matrix<Scalar> n1, n2;
  try {
    n1 = phi_p_gradient_normalized(sp1, p, floor_policy).mat();
  } catch (const EigenvalueBelowFloorError& e) {
    throw SingularCovarianceError(
        std::string("jb_log_phi_p: first covariance rejected: ") + e.what());
  }
  try {
    n2 = phi_p_gradient_normalized(sp2, p, floor_policy).mat();
  } catch (const EigenvalueBelowFloorError& e) {
    throw SingularCovarianceError(
        std::string("jb_log_phi_p: second covariance rejected: ") + e.what());
  }
  const Vector<Scalar> delta = g2.mean - g1.mean;
  const Scalar traces = detail::trace_product(n1, g2.cov.mat()) +
                        detail::trace_product(n2, g1.cov.mat());
  const Scalar quad = delta.dot(n1 * delta) + delta.dot(n2 * delta);
  return clamp_nonnegative(Scalar(0.5) * traces + Scalar(0.5) * quad -
                           Scalar(1));
}

// Jeffreys-Bregman divergence of log Phi_k:
//   (1/2)[tr(G1 S2)/Phi_k(S1) + tr(G2 S1)/Phi_k(S2)]
// + (1/2) delta^T [G1/Phi_k(S1) + G2/Phi_k(S2)] delta - k,
// where G = grad Phi_k. Requires numerical rank >= k on both sides.
template <typename Scalar>
Scalar jb_log_simplicial(const GaussianSummary<Scalar>& g1,
                         const GaussianSummary<Scalar>& g2, int k) {
  detail::require_same_dim(g1, g2, "jb_log_simplicial");
  const Spectrum<Scalar> sp1 = symmetric_eigen(g1.cov);
  const Spectrum<Scalar> sp2 = symmetric_eigen(g2.cov);
  const Scalar v1 = simplicial_phi(sp1, k);
  const Scalar v2 = simplicial_phi(sp2, k);
  if (v1 <= Scalar(0) || v2 <= Scalar(0)) {
    std::ostringstream os;
    os << "jb_log_simplicial: Phi_" << k
       << " vanishes on a covariance of numerical rank "
       << std::min(sp1.numerical_rank(), sp2.numerical_rank());
    throw RankDeficientError(os.str(), k);
  }
  const Matrix<Scalar> n1 =
      simplicial_phi_gradient(g1.cov, sp1, k).mat() / v1;
  const Matrix<Scalar> n2 =
      simplicial_phi_gradient(g2.cov, sp2, k).mat() / v2;
  const Vector<Scalar> delta = g2.mean - g1.mean;
  const Scalar traces = detail::trace_product(n1, g2.cov.mat()) +
                        detail::trace_product(n2, g1.cov.mat());
  const Scalar quad = delta.dot(n1 * delta) + delta.dot(n2 * delta);
  return clamp_nonnegative(Scalar(0.5) * traces + Scalar(0.5) * quad -
                           static_cast<Scalar>(k));
}

// Mixture covariance var[(mu + zeta)/2] = (S1+S2)/2 + delta delta^T / 4,
// the matrix the Burbea-Rao construction evaluates the criterion on.
template <typename Scalar>
SymMatrix<Scalar> mixture_covariance(const GaussianSummary<Scalar>& g1,
                                     const GaussianSummary<Scalar>& g2) {
  detail::require_same_dim(g1, g2, "mixture_covariance");
  const Vector<Scalar> delta = g2.mean - g1.mean;
  return SymMatrix<Scalar>(
      (Scalar(0.5) * (g1.cov.mat() + g2.cov.mat()) +
       Scalar(0.25) * (delta * delta.transpose()))
          .eval());
}

// Burbea-Rao divergence of an arbitrary concave criterion:
//   crit(mixture) - [crit(S1) + crit(S2)]/2.
// Criterion errors (log of zero for rank-deficient input, ...) propagate.
template <typename Scalar, typename CriterionFn>
Scalar br_divergence(const GaussianSummary<Scalar>& g1,
                     const GaussianSummary<Scalar>& g2,
                     CriterionFn&& criterion) {
  detail::require_same_dim(g1, g2, "br_divergence");
  const SymMatrix<Scalar> mix = mixture_covariance(g1, g2);
  const Scalar value = criterion(mix) - Scalar(0.5) * (criterion(g1.cov) +
                                                       criterion(g2.cov));
  return clamp_nonnegative(value);
}

// Jeffreys-Bregman divergence of an arbitrary differentiable criterion,
// expressed through its gradient only:
//   (1/2) tr[(grad(S1) - grad(S2))(S2 - S1)]
// + (1/2) delta^T (grad(S1) + grad(S2)) delta.
template <typename Scalar, typename GradientFn>
Scalar jb_divergence(const GaussianSummary<Scalar>& g1,
                     const GaussianSummary<Scalar>& g2,
                     GradientFn&& gradient) {
  detail::require_same_dim(g1, g2, "jb_divergence");
  const Matrix<Scalar> n1 = gradient(g1.cov).mat();
  const Matrix<Scalar> n2 = gradient(g2.cov).mat();
  const Matrix<Scalar> diff = g2.cov.mat() - g1.cov.mat();
  const Vector<Scalar> delta = g2.mean - g1.mean;
  const Scalar trace_term = detail::trace_product<Scalar>(n1 - n2, diff);
  const Scalar quad = delta.dot(n1 * delta) + delta.dot(n2 * delta);
  return clamp_nonnegative(Scalar(0.5) * (trace_term + quad));
}

// Ready-made criterion and gradient functors for the generic constructions.

template <typename Scalar>
auto log_phi_p_criterion(Scalar p) {
  return [p](const SymMatrix<Scalar>& m) -> Scalar {
    const Scalar value = phi_p(symmetric_eigen(m), p);
    if (value <= Scalar(0))
      throw SingularCovarianceError(
          "log phi_p criterion: phi_p vanished on a singular matrix");
    return std::log(value);
  };
}

template <typename Scalar>
auto log_simplicial_criterion(int k) {
  return [k](const SymMatrix<Scalar>& m) -> Scalar {
    const Spectrum<Scalar> spec = symmetric_eigen(m);
    const Scalar value = simplicial_phi(spec, k);
    if (value <= Scalar(0)) {
      std::ostringstream os;
      os << "log Phi_k criterion: rank " << spec.numerical_rank() << " < k = "
         << k;
      throw RankDeficientError(os.str(), k);
    }
    return std::log(value);
  };
}

template <typename Scalar>
auto log_phi_p_gradient(Scalar p,
                        const EigenFloor& floor_policy = EigenFloor::reject()) {
  return [p, floor_policy](const SymMatrix<Scalar>& m) -> SymMatrix<Scalar> {
    return phi_p_gradient_normalized(symmetric_eigen(m), p, floor_policy);
  };
}

template <typename Scalar>
auto log_simplicial_gradient(int k) {
  return [k](const SymMatrix<Scalar>& m) -> SymMatrix<Scalar> {
    const Spectrum<Scalar> spec = symmetric_eigen(m);
    const Scalar value = simplicial_phi(spec, k);
    if (value <= Scalar(0)) {
      std::ostringstream os;
      os << "log Phi_k gradient: rank " << spec.numerical_rank() << " < k = "
         << k;
      throw RankDeficientError(os.str(), k);
    }
    return SymMatrix<Scalar>(
        (simplicial_phi_gradient(m, spec, k).mat() / value).eval());
  };
}

// Whitening by the first summary: returns (N(0, I), N(W delta, W S2 W)) with
// W = S1^{-1/2}. KL, JS and Bhattacharyya are invariant under this map; the
// log phi_p (p != 0) and log Phi_k (k != d) families are not.
template <typename Scalar>
std::pair<GaussianSummary<Scalar>, GaussianSummary<Scalar>> standardize_pair(
    const GaussianSummary<Scalar>& g1, const GaussianSummary<Scalar>& g2) {
  detail::require_same_dim(g1, g2, "standardize_pair");
  const Spectrum<Scalar> sp1 = symmetric_eigen(g1.cov);
  detail::require_positive_definite(sp1, "first");
  const Matrix<Scalar> w =
      fractional_power(sp1, Scalar(-0.5), rank_floor(sp1)).mat();
  const Index d = g1.dim();
  GaussianSummary<Scalar> base(Vector<Scalar>::Zero(d),
                               SymMatrix<Scalar>::identity(d));
  GaussianSummary<Scalar> mapped(
      (w * (g2.mean - g1.mean)).eval(),
      SymMatrix<Scalar>((w * g2.cov.mat() * w).eval()));
  return {std::move(base), std::move(mapped)};
}

// -- distance family dispatch ------------------------------------------------

enum class Family {
  KL,
  JS,
  Bhattacharyya,
  LogPhiP_JB,
  LogPhiP_BR,
  LogSimplicial_JB,
  LogSimplicial_BR,
  Energy,
};

inline bool family_has_parameter(Family f) {
  return f != Family::KL && f != Family::JS && f != Family::Bhattacharyya;
}

inline const char* family_name(Family f) {
  switch (f) {
    case Family::KL: return "kl";
    case Family::JS: return "js";
    case Family::Bhattacharyya: return "bhattacharyya";
    case Family::LogPhiP_JB: return "logphip-jb";
    case Family::LogPhiP_BR: return "logphip-br";
    case Family::LogSimplicial_JB: return "logphik-jb";
    case Family::LogSimplicial_BR: return "logphik-br";
    case Family::Energy: return "energy";
  }
  return "?";
}

// Tagged choice of divergence family plus its parameter (p, k or delta).
// Parameter constraints are validated at construction; negative p is only
// admitted behind the explicit unsafe flag because such criteria are very
// sensitive to small eigenvalues. k = 1 is admitted but gives only weak
// distinguishability (strict concavity needs k >= 2).
class DistanceSpec {
 public:
  static DistanceSpec kl() { return DistanceSpec(Family::KL, 0); }
  static DistanceSpec js() { return DistanceSpec(Family::JS, 0); }
  static DistanceSpec bhattacharyya() {
    return DistanceSpec(Family::Bhattacharyya, 0);
  }
  static DistanceSpec log_phi_p_jb(double p, bool allow_negative_p = false) {
    return make_phi_p(Family::LogPhiP_JB, p, allow_negative_p);
  }
  static DistanceSpec log_phi_p_br(double p, bool allow_negative_p = false) {
    return make_phi_p(Family::LogPhiP_BR, p, allow_negative_p);
  }
  static DistanceSpec log_simplicial_jb(int k) {
    return make_simplicial(Family::LogSimplicial_JB, k);
  }
  static DistanceSpec log_simplicial_br(int k) {
    return make_simplicial(Family::LogSimplicial_BR, k);
  }
  static DistanceSpec energy(double delta) {
    if (!(delta > 0.0) || !(delta <= 2.0))
      throw ParameterError("energy distance requires delta in (0, 2]");
    return DistanceSpec(Family::Energy, delta);
  }
  // Uniform constructor used by the CLI and the selection grid.
  static DistanceSpec with_parameter(Family family, double value,
                                     bool allow_negative_p = false) {
    switch (family) {
      case Family::KL: return kl();
      case Family::JS: return js();
      case Family::Bhattacharyya: return bhattacharyya();
      case Family::LogPhiP_JB: return log_phi_p_jb(value, allow_negative_p);
      case Family::LogPhiP_BR: return log_phi_p_br(value, allow_negative_p);
      case Family::LogSimplicial_JB:
        return log_simplicial_jb(checked_k(value));
      case Family::LogSimplicial_BR:
        return log_simplicial_br(checked_k(value));
      case Family::Energy: return energy(value);
    }
    throw ParameterError("unknown distance family");
  }

  Family family() const { return family_; }
  double p() const { return param_; }
  int k() const { return static_cast<int>(param_); }
  double delta() const { return param_; }
  double parameter() const { return param_; }
  const EigenFloor& floor() const { return floor_; }
  void set_floor(const EigenFloor& floor_policy) { floor_ = floor_policy; }

  // k must also fit the ambient dimension; checked once d is known.
  void validate_for_dim(Index d) const {
    if (family_ == Family::LogSimplicial_JB ||
        family_ == Family::LogSimplicial_BR)
      detail::require_k_in_range(k(), d, "DistanceSpec");
  }

  std::string describe() const {
    std::ostringstream os;
    os << family_name(family_);
    if (family_ == Family::LogPhiP_JB || family_ == Family::LogPhiP_BR)
      os << "(p=" << param_ << ")";
    else if (family_ == Family::LogSimplicial_JB ||
             family_ == Family::LogSimplicial_BR)
      os << "(k=" << k() << ")";
    else if (family_ == Family::Energy)
      os << "(delta=" << param_ << ")";
    return os.str();
  }

 private:
  DistanceSpec(Family family, double param) : family_(family), param_(param) {}

  static DistanceSpec make_phi_p(Family family, double p,
                                 bool allow_negative_p) {
    if (!std::isfinite(p) || !(p < 1.0))
      throw ParameterError("log phi_p families require finite p < 1");
    if (p < 0.0 && !allow_negative_p)
      throw ParameterError(
          "negative p is disabled by default (very sensitive to small "
          "eigenvalues); pass the explicit unsafe flag to enable it");
    return DistanceSpec(family, p);
  }
  static DistanceSpec make_simplicial(Family family, int k) {
    if (k < 1)
      throw ParameterError("log Phi_k families require k >= 1");
    return DistanceSpec(family, static_cast<double>(k));
  }
  static int checked_k(double value) {
    if (!std::isfinite(value) || value != std::floor(value))
      throw ParameterError("k must be a positive integer");
    return static_cast<int>(value);
  }

  Family family_;
  double param_;
  EigenFloor floor_ = EigenFloor::reject();
};

// Dispatcher over the closed-form families. Energy is a sample-level
// distance and is rejected here.
template <typename Scalar>
Scalar evaluate(const DistanceSpec& spec, const GaussianSummary<Scalar>& g1,
                const GaussianSummary<Scalar>& g2) {
  detail::require_same_dim(g1, g2, "evaluate");
  spec.validate_for_dim(g1.dim());
  switch (spec.family()) {
    case Family::KL:
      return kl_symmetrized(g1, g2);
    case Family::JS:
      return jensen_shannon(g1, g2);
    case Family::Bhattacharyya:
      return bhattacharyya(g1, g2);
    case Family::LogPhiP_JB:
      return jb_log_phi_p(g1, g2, static_cast<Scalar>(spec.p()), spec.floor());
    case Family::LogPhiP_BR:
      return br_divergence(g1, g2,
                           log_phi_p_criterion<Scalar>(
                               static_cast<Scalar>(spec.p())));
    case Family::LogSimplicial_JB:
      return jb_log_simplicial(g1, g2, spec.k());
    case Family::LogSimplicial_BR:
      return br_divergence(g1, g2, log_simplicial_criterion<Scalar>(spec.k()));
    case Family::Energy:
      throw UnsupportedForSummariesError(
          "energy distance is defined on samples, not Gaussian summaries");
  }
  throw ParameterError("unknown distance family");
}

}  // namespace mvdiv
