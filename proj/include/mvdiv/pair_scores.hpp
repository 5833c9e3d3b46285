#pragma once

#include <cmath>
#include <limits>
#include <sstream>

#include "mvdiv/divergences.hpp"

// Precomputed evaluator for one pair of Gaussian summaries. The testing
// pipeline scores the same pair under many distances (whole k- and p-grids),
// so the four eigendecompositions involved (both covariances, their average
// and the Burbea-Rao mixture) are done once here and every family is then
// evaluated from eigenvalues and a few cached cross terms in O(d) or
// O(d * k). Results agree with the reference implementations in
// divergences.hpp to round-off; the unit tests pin the two routes together.
namespace mvdiv {

template <typename Scalar>
class GaussianPairScores {
 public:
  GaussianPairScores(const GaussianSummary<Scalar>& g1,
                     const GaussianSummary<Scalar>& g2)
      : d_(g1.dim()) {
    detail::require_same_dim(g1, g2, "GaussianPairScores");
    delta_ = g2.mean - g1.mean;
    sp1_ = symmetric_eigen(g1.cov);
    sp2_ = symmetric_eigen(g2.cov);
    const SymMatrix<Scalar> bar(
        (Scalar(0.5) * (g1.cov.mat() + g2.cov.mat())).eval());
    spbar_ = symmetric_eigen(bar);
    spmix_ = symmetric_eigen(mixture_covariance(g1, g2));
    cross1_ = (sp1_.eigenvectors.transpose() * g2.cov.mat() *
               sp1_.eigenvectors).diagonal();
    cross2_ = (sp2_.eigenvectors.transpose() * g1.cov.mat() *
               sp2_.eigenvectors).diagonal();
    gap1_ = (sp1_.eigenvectors.transpose() * delta_).array().square();
    gap2_ = (sp2_.eigenvectors.transpose() * delta_).array().square();
    gapbar_ = (spbar_.eigenvectors.transpose() * delta_).array().square();
    e1_ = elementary_symmetric(detail::rank_floored_eigenvalues(sp1_));
    e2_ = elementary_symmetric(detail::rank_floored_eigenvalues(sp2_));
    emix_ = elementary_symmetric(detail::rank_floored_eigenvalues(spmix_));
    log1_ = safe_log(sp1_);
    log2_ = safe_log(sp2_);
    logbar_ = safe_log(spbar_);
    logmix_ = safe_log(spmix_);
  }

  Index dim() const { return d_; }

  Scalar kl() const {
    require_pd(sp1_, "first");
    require_pd(sp2_, "second");
    Scalar acc = 0;
    for (Index i = 0; i < d_; ++i) {
      acc += (cross1_(i) + gap1_(i)) / sp1_.eigenvalues(i);
      acc += (cross2_(i) + gap2_(i)) / sp2_.eigenvalues(i);
    }
    return clamp_nonnegative(Scalar(0.25) * acc -
                             static_cast<Scalar>(d_) / Scalar(2));
  }

  Scalar js() const {
    const auto [log_ratio, quad] = classical_terms();
    return clamp_nonnegative(Scalar(0.5) * log_ratio +
                             Scalar(0.5) * std::log1p(Scalar(0.5) * quad));
  }

  Scalar bhattacharyya() const {
    const auto [log_ratio, quad] = classical_terms();
    return clamp_nonnegative(Scalar(0.5) * log_ratio + Scalar(0.25) * quad);
  }

  Scalar jb_log_phi_p(Scalar p,
                      const EigenFloor& floor_policy =
                          EigenFloor::reject()) const {
    if (!(p < Scalar(1)) || !std::isfinite(p))
      throw ParameterError("jb_log_phi_p: requires finite p < 1");
    const Scalar a1 = phi_p_half_term(sp1_, log1_, cross1_, gap1_, p,
                                      floor_policy, "first");
    const Scalar a2 = phi_p_half_term(sp2_, log2_, cross2_, gap2_, p,
                                      floor_policy, "second");
    return clamp_nonnegative(Scalar(0.5) * (a1 + a2) - Scalar(1));
  }

  Scalar br_log_phi_p(Scalar p) const {
    const Scalar value = log_phi_p_value(spmix_, logmix_, p) -
                         Scalar(0.5) * (log_phi_p_value(sp1_, log1_, p) +
                                        log_phi_p_value(sp2_, log2_, p));
    return clamp_nonnegative(value);
  }

  Scalar jb_log_simplicial(int k) const {
    detail::require_k_in_range(k, d_, "jb_log_simplicial");
    if (e1_(k) <= Scalar(0) || e2_(k) <= Scalar(0))
      throw_rank_deficient(k);
    Scalar acc = 0;
    for (Index i = 0; i < d_; ++i) {
      acc += grad_poly(e1_, k, sp1_.eigenvalues(i)) *
             (cross1_(i) + gap1_(i)) / e1_(k);
      acc += grad_poly(e2_, k, sp2_.eigenvalues(i)) *
             (cross2_(i) + gap2_(i)) / e2_(k);
    }
    return clamp_nonnegative(Scalar(0.5) * acc - static_cast<Scalar>(k));
  }

  Scalar br_log_simplicial(int k) const {
    detail::require_k_in_range(k, d_, "br_log_simplicial");
    if (emix_(k) <= Scalar(0) || e1_(k) <= Scalar(0) || e2_(k) <= Scalar(0))
      throw_rank_deficient(k);
    const Scalar value =
        std::log(emix_(k)) -
        Scalar(0.5) * (std::log(e1_(k)) + std::log(e2_(k)));
    return clamp_nonnegative(value);
  }

  Scalar evaluate(const DistanceSpec& spec) const {
    spec.validate_for_dim(d_);
    switch (spec.family()) {
      case Family::KL: return kl();
      case Family::JS: return js();
      case Family::Bhattacharyya: return bhattacharyya();
      case Family::LogPhiP_JB:
        return jb_log_phi_p(static_cast<Scalar>(spec.p()), spec.floor());
      case Family::LogPhiP_BR:
        return br_log_phi_p(static_cast<Scalar>(spec.p()));
      case Family::LogSimplicial_JB: return jb_log_simplicial(spec.k());
      case Family::LogSimplicial_BR: return br_log_simplicial(spec.k());
      case Family::Energy:
        throw UnsupportedForSummariesError(
            "energy distance is defined on samples, not Gaussian summaries");
    }
    throw ParameterError("unknown distance family");
  }

 private:
  static Vector<Scalar> safe_log(const Spectrum<Scalar>& spec) {
    Vector<Scalar> out(spec.dim());
    for (Index i = 0; i < spec.dim(); ++i) {
      const Scalar lam = spec.eigenvalues(i);
      out(i) = lam > Scalar(0) ? std::log(lam)
                               : -std::numeric_limits<Scalar>::infinity();
    }
    return out;
  }

  static void require_pd(const Spectrum<Scalar>& spec, const char* which) {
    detail::require_positive_definite(spec, which);
  }

  std::pair<Scalar, Scalar> classical_terms() const {
    require_pd(sp1_, "first");
    require_pd(sp2_, "second");
    require_pd(spbar_, "mixture");
    const Scalar log_ratio =
        logbar_.sum() - Scalar(0.5) * (log1_.sum() + log2_.sum());
    Scalar quad = 0;
    for (Index i = 0; i < d_; ++i)
      quad += gapbar_(i) / spbar_.eigenvalues(i);
    quad *= Scalar(0.5);
    return {log_ratio, quad};
  }

  // One half of the Jeffreys-Bregman log-phi_p form:
  //   [tr(S^{p-1} T) + delta^T S^{p-1} delta] / tr(S^p)
  // evaluated from this side's spectrum with the floor policy applied to the
  // negative exponent, exactly as phi_p_gradient_normalized does.
  Scalar phi_p_half_term(const Spectrum<Scalar>& spec,
                         const Vector<Scalar>& logs,
                         const Vector<Scalar>& cross,
                         const Vector<Scalar>& gap, Scalar p,
                         const EigenFloor& floor_policy,
                         const char* which) const {
    const Scalar eps = spec.rank_eps();
    const Scalar floor = floor_policy.floor_for(spec.lambda_max());
    Scalar trace_p;
    if (p == Scalar(0)) {
      trace_p = static_cast<Scalar>(d_);
    } else {
      trace_p = 0;
      for (Index i = 0; i < d_; ++i) {
        const Scalar lam = spec.eigenvalues(i);
        if (p > Scalar(0) && lam <= eps) continue;
        trace_p += std::exp(p * logs(i));
      }
    }
    Scalar acc = 0;
    for (Index i = 0; i < d_; ++i) {
      Scalar lam = spec.eigenvalues(i);
      if (lam <= floor) {
        if (floor_policy.policy == FloorPolicy::Reject) {
          std::ostringstream os;
          os << "jb_log_phi_p: " << which
             << " covariance rejected: eigenvalue " << lam
             << " at or below floor " << floor;
          throw SingularCovarianceError(os.str());
        }
        lam = floor;
      }
      acc += std::exp((p - Scalar(1)) * std::log(lam)) *
             (cross(i) + gap(i));
    }
    return acc / trace_p;
  }

  // log phi_p from a cached spectrum; throws SingularCovariance when the
  // criterion vanishes (numerically singular input with p <= 0).
  Scalar log_phi_p_value(const Spectrum<Scalar>& spec,
                         const Vector<Scalar>& logs, Scalar p) const {
    if (!std::isfinite(p) || !(p < Scalar(1)))
      throw ParameterError("br_log_phi_p: requires finite p < 1");
    detail::require_psd(spec, "br_log_phi_p");
    const Scalar eps = spec.rank_eps();
    const Index d = spec.dim();
    const bool singular = spec.numerical_rank() < d;
    if (p == Scalar(0)) {
      if (singular)
        throw SingularCovarianceError(
            "log phi_p criterion: phi_p vanished on a singular matrix");
      return logs.sum() / static_cast<Scalar>(d);
    }
    if (p < Scalar(0) && singular)
      throw SingularCovarianceError(
          "log phi_p criterion: phi_p vanished on a singular matrix");
    Scalar sum = 0;
    bool any = false;
    for (Index i = 0; i < d; ++i) {
      if (p > Scalar(0) && spec.eigenvalues(i) <= eps) continue;
      sum += std::exp(p * logs(i));
      any = true;
    }
    if (!any || sum <= Scalar(0))
      throw SingularCovarianceError(
          "log phi_p criterion: phi_p vanished on a singular matrix");
    return (std::log(sum) - std::log(static_cast<Scalar>(d))) / p;
  }

  // Gradient polynomial sum_{i=0}^{k-1} (-1)^i e_{k-1-i} lambda^i, i.e. the
  // spectral value of grad Phi_k without the (k+1)/k! factor, which cancels
  // against the same factor in Phi_k.
  static Scalar grad_poly(const Vector<Scalar>& e, int k, Scalar lam) {
    Scalar h = (k % 2 == 1) ? e(0) : -e(0);
    for (int j = k - 2; j >= 0; --j) {
      const Scalar term = (j % 2 == 0) ? e(k - 1 - j) : -e(k - 1 - j);
      h = h * lam + term;
    }
    return h;
  }

  [[noreturn]] void throw_rank_deficient(int k) const {
    std::ostringstream os;
    os << "log Phi_k: Phi_" << k
       << " vanishes (numerical rank below k on some argument)";
    throw RankDeficientError(os.str(), k);
  }

  Index d_;
  Vector<Scalar> delta_;
  Spectrum<Scalar> sp1_, sp2_, spbar_, spmix_;
  Vector<Scalar> cross1_, cross2_;
  Vector<Scalar> gap1_, gap2_, gapbar_;
  Vector<Scalar> e1_, e2_, emix_;
  Vector<Scalar> log1_, log2_, logbar_, logmix_;
};

}  // namespace mvdiv
