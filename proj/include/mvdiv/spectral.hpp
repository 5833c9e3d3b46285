#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "mvdiv/errors.hpp"
#include "mvdiv/fwd.hpp"

// Symmetric-matrix numerical kernel: validated symmetric storage, the
// eigendecomposition contract, elementary symmetric polynomials of a
// spectrum, characteristic-polynomial coefficients and fractional matrix
// powers with an explicit small-eigenvalue policy.
namespace mvdiv {

namespace tolerance {
// Asymmetry admitted by the SymMatrix constructor, relative to the largest
// entry magnitude.
inline constexpr double symmetry = 1e-12;
// Default relative floor for fractional powers with negative or non-integer
// exponents; scaled by max(lambda_max, 1).
inline constexpr double floor_scale = 1e-12;
// Divergence outputs more negative than -clamp * (1 + |value|) are treated
// as evidence of numerical inconsistency rather than round-off.
inline constexpr double divergence_clamp = 1e-10;
inline constexpr double energy_clamp = 1e-12;
}  // namespace tolerance

// Relative numerical-rank threshold: eigenvalues at or below
// d * machine_epsilon * max(lambda_max, 1) count as zero.
template <typename Scalar>
Scalar rank_epsilon(Index d, Scalar lambda_max) {
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  return static_cast<Scalar>(d) * eps * std::max<Scalar>(lambda_max, Scalar(1));
}

// Symmetric matrix with validated entries. The constructor checks finiteness
// and near-symmetry, then stores the exactly symmetric part (M + M^T)/2.
template <typename Scalar>
class SymMatrix {
 public:
  SymMatrix() = default;

  explicit SymMatrix(const Matrix<Scalar>& m) {
    if (m.rows() != m.cols())
      throw DimensionMismatchError("SymMatrix: input is not square");
    if (m.size() == 0)
      throw DimensionMismatchError("SymMatrix: input is empty");
    if (!m.allFinite())
      throw ValidationError("SymMatrix: input has non-finite entries");
    const Scalar scale = std::max<Scalar>(Scalar(1), m.cwiseAbs().maxCoeff());
    const Scalar asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > Scalar(tolerance::symmetry) * scale) {
      std::ostringstream os;
      os << "SymMatrix: input is not symmetric (max |M - M^T| = " << asym
         << ", allowed " << Scalar(tolerance::symmetry) * scale << ")";
      throw ValidationError(os.str());
    }
    m_ = (Scalar(0.5) * (m + m.transpose())).eval();
  }

  static SymMatrix identity(Index d) {
    return SymMatrix(Matrix<Scalar>::Identity(d, d));
  }

  Index dim() const { return m_.rows(); }
  const Matrix<Scalar>& mat() const { return m_; }

 private:
  Matrix<Scalar> m_;
};

// Eigendecomposition result. Eigenvalues are sorted descending; eigenvector
// columns follow the same order. source_scale is the largest eigenvalue
// magnitude and feeds every relative tolerance downstream.
template <typename Scalar>
struct Spectrum {
  Vector<Scalar> eigenvalues;
  Matrix<Scalar> eigenvectors;
  Scalar source_scale = Scalar(0);

  Index dim() const { return eigenvalues.size(); }
  Scalar lambda_max() const { return eigenvalues(0); }
  Scalar lambda_min() const { return eigenvalues(dim() - 1); }
  Scalar rank_eps() const {
    return rank_epsilon<Scalar>(dim(), lambda_max());
  }
  Index numerical_rank() const {
    const Scalar eps = rank_eps();
    Index r = 0;
    for (Index i = 0; i < dim(); ++i)
      if (eigenvalues(i) > eps) ++r;
    return r;
  }
};

template <typename Scalar>
Spectrum<Scalar> symmetric_eigen(const SymMatrix<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(m.mat());
  if (solver.info() != Eigen::Success) {
    std::ostringstream os;
    os << "symmetric_eigen: eigensolver failed to converge (d = " << m.dim()
       << ", max |entry| = " << m.mat().cwiseAbs().maxCoeff()
       << ", trace = " << m.mat().trace() << ")";
    throw EigenSolverError(os.str());
  }
  Spectrum<Scalar> spec;
  spec.eigenvalues = solver.eigenvalues().reverse().eval();
  spec.eigenvectors = solver.eigenvectors().rowwise().reverse().eval();
  spec.source_scale = spec.eigenvalues.cwiseAbs().maxCoeff();
  return spec;
}

// Coefficients (e_0, ..., e_d) of prod_i (1 + lambda_i t), i.e. the
// elementary symmetric polynomials of the eigenvalues. Stable one-pass
// recurrence with j descending so each e_j is updated before it is consumed.
template <typename Scalar>
Vector<Scalar> elementary_symmetric(const Vector<Scalar>& eigs) {
  if (!eigs.allFinite())
    throw ValidationError("elementary_symmetric: non-finite eigenvalues");
  const Index d = eigs.size();
  Vector<Scalar> e = Vector<Scalar>::Zero(d + 1);
  e(0) = Scalar(1);
  for (Index i = 0; i < d; ++i) {
    const Scalar lam = eigs(i);
    for (Index j = i + 1; j >= 1; --j) e(j) += lam * e(j - 1);
  }
  return e;
}

// Characteristic polynomial det(lambda I - M) = sum_j c_j lambda^{d+1-j},
// returned as (c_1, ..., c_{d+1}) with c_1 = 1 and c_{j+1} = (-1)^j e_j.
template <typename Scalar>
Vector<Scalar> charpoly_coeffs(const Spectrum<Scalar>& spec) {
  Vector<Scalar> e = elementary_symmetric(spec.eigenvalues);
  Vector<Scalar> c(e.size());
  for (Index j = 0; j < e.size(); ++j)
    c(j) = (j % 2 == 0) ? e(j) : -e(j);
  return c;
}

// Policy for eigenvalues that are too small (or negative) when a fractional
// or negative matrix power needs them. Reject raises; Clamp lifts them to
// the floor scale * max(lambda_max, 1). Clamping is opt-in because small
// eigenvalues make negative powers extremely sensitive.
enum class FloorPolicy { Reject, Clamp };

struct EigenFloor {
  FloorPolicy policy = FloorPolicy::Reject;
  double scale = tolerance::floor_scale;

  static EigenFloor reject(double scale = tolerance::floor_scale) {
    return EigenFloor{FloorPolicy::Reject, scale};
  }
  static EigenFloor clamp(double scale = tolerance::floor_scale) {
    return EigenFloor{FloorPolicy::Clamp, scale};
  }

  template <typename Scalar>
  Scalar floor_for(Scalar lambda_max) const {
    return static_cast<Scalar>(scale) *
           std::max<Scalar>(lambda_max, Scalar(1));
  }
};

// Floor whose threshold coincides with the numerical-rank epsilon; used
// internally after an explicit positive-definiteness check so the power can
// never throw.
template <typename Scalar>
EigenFloor rank_floor(const Spectrum<Scalar>& spec) {
  return EigenFloor::reject(static_cast<double>(spec.dim()) *
                            std::numeric_limits<Scalar>::epsilon());
}

namespace detail {
template <typename Scalar>
bool is_nonnegative_integer(Scalar q) {
  return q >= Scalar(0) && q == std::floor(q) &&
         q <= Scalar(1) / std::numeric_limits<Scalar>::epsilon();
}
}  // namespace detail

// M^q synthesized from the spectrum as U diag(lambda^q) U^T. Non-negative
// integer exponents bypass the floor policy (they are polynomial in M);
// anything else applies it first.
template <typename Scalar>
SymMatrix<Scalar> fractional_power(const Spectrum<Scalar>& spec, Scalar q,
                                   const EigenFloor& floor_policy) {
  if (!std::isfinite(q))
    throw ParameterError("fractional_power: exponent must be finite");
  Vector<Scalar> lam = spec.eigenvalues;
  if (!detail::is_nonnegative_integer(q)) {
    const Scalar floor = floor_policy.floor_for(spec.lambda_max());
    if (floor_policy.policy == FloorPolicy::Reject) {
      if (spec.lambda_min() <= floor) {
        std::ostringstream os;
        os << "fractional_power: eigenvalue " << spec.lambda_min()
           << " at or below floor " << floor << " for exponent " << q
           << " (policy Reject)";
        throw EigenvalueBelowFloorError(os.str());
      }
    } else {
      lam = lam.cwiseMax(floor);
    }
  }
  Vector<Scalar> f(lam.size());
  for (Index i = 0; i < lam.size(); ++i) f(i) = std::pow(lam(i), q);
  Matrix<Scalar> out = spec.eigenvectors * f.asDiagonal() *
                       spec.eigenvectors.transpose();
  return SymMatrix<Scalar>(out);
}

}  // namespace mvdiv
