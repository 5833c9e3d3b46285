#pragma once

#include <Eigen/Dense>

// Core aliases shared by every header. Dynamic-size dense types only; the
// library targets moderate dimensions (d up to a few hundred).
namespace mvdiv {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrixd = Matrix<double>;
using Vectord = Vector<double>;

template <typename Scalar> class SymMatrix;
template <typename Scalar> struct Spectrum;
template <typename Scalar> struct GaussianSummary;
template <typename Scalar> struct Sample;

using SymMatrixd = SymMatrix<double>;
using Spectrumd = Spectrum<double>;
using GaussianSummaryd = GaussianSummary<double>;
using Sampled = Sample<double>;

}  // namespace mvdiv
