#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "mvdiv/divergences.hpp"
#include "mvdiv/parallel.hpp"
#include "mvdiv/rng.hpp"

// Sample-side functionality: observation containers, moment summaries, the
// unbiased correction for simplicial criteria of sample covariances, simplex
// volumes and their Monte Carlo dispersion estimate, and the energy distance.
namespace mvdiv {

// A multivariate sample, one observation per row. A single observation is a
// valid sample (the energy distance accepts it); moment summaries need at
// least two rows and check that themselves.
template <typename Scalar>
struct Sample {
  Matrix<Scalar> data;

  Sample() = default;
  explicit Sample(Matrix<Scalar> observations) : data(std::move(observations)) {
    if (data.rows() < 1 || data.cols() < 1)
      throw EmptyInputError("Sample: needs at least one observation row and one column");
    if (!data.allFinite())
      throw ValidationError("Sample: observations must be finite");
  }

  Index n() const { return data.rows(); }
  Index dim() const { return data.cols(); }
};

// Mean and unbiased (n-1 divisor) covariance of a sample.
template <typename Scalar>
GaussianSummary<Scalar> sample_moments(const Sample<Scalar>& sample) {
  const Index n = sample.n();
  if (n < 2) {
    std::ostringstream os;
    os << "sample_moments: needs at least 2 observations, got " << n;
    throw TooFewObservationsError(os.str());
  }
  Vector<Scalar> mean = sample.data.colwise().mean();
  Matrix<Scalar> centered = sample.data.rowwise() - mean.transpose();
  Matrix<Scalar> cov =
      (centered.transpose() * centered) / static_cast<Scalar>(n - 1);
  return GaussianSummary<Scalar>(std::move(mean),
                                 SymMatrix<Scalar>(std::move(cov)));
}

// Multiplier that makes Phi_k of the sample covariance unbiased for Phi_k of
// the population covariance: (n-1)^k (n-1-k)! / (n-1)!. Computed in log
// space so large n does not overflow.
inline double unbiased_phi_k_factor(Index n, int k) {
  if (k < 1) throw ParameterError("unbiased_phi_k_factor: requires k >= 1");
  if (n < static_cast<Index>(k) + 2) {
    std::ostringstream os;
    os << "unbiased_phi_k_factor: needs n >= k + 2 (n = " << n
       << ", k = " << k << ")";
    throw SampleTooSmallError(os.str());
  }
  const double nn = static_cast<double>(n);
  return std::exp(k * std::log(nn - 1.0) + std::lgamma(nn - k) -
                  std::lgamma(nn));
}

namespace detail {

inline double log_factorial(int k) {
  if (k < 19) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return std::log(f);
  }
  return std::lgamma(static_cast<double>(k) + 1.0);
}

}  // namespace detail

// Squared volume of the simplex spanned by k+1 vertices (rows of `points`),
// via the Gram determinant of the edge matrix: det(E E^T) / (k!)^2. Returns
// 0 for degenerate simplices instead of a tiny negative round-off value.
template <typename Scalar>
Scalar simplex_squared_volume(const Matrix<Scalar>& points) {
  const Index rows = points.rows();
  const Index d = points.cols();
  if (rows < 2 || d < 1)
    throw EmptyInputError(
        "simplex_squared_volume: needs at least two vertices");
  const Index k = rows - 1;
  if (k > d) {
    std::ostringstream os;
    os << "simplex_squared_volume: " << rows << " vertices span a " << k
       << "-simplex, impossible in dimension " << d;
    throw DimensionMismatchError(os.str());
  }
  Matrix<Scalar> edges =
      points.bottomRows(k).rowwise() - points.row(0);
  Scalar gram_det;
  if (k == 1) {
    gram_det = edges.row(0).squaredNorm();
  } else if (k == 2) {
    const Scalar a = edges.row(0).squaredNorm();
    const Scalar b = edges.row(1).squaredNorm();
    const Scalar c = edges.row(0).dot(edges.row(1));
    gram_det = a * b - c * c;
  } else {
    Matrix<Scalar> gram = edges * edges.transpose();
    gram_det = gram.determinant();
  }
  if (gram_det < Scalar(0)) gram_det = Scalar(0);
  const double log_fact = detail::log_factorial(static_cast<int>(k));
  return gram_det * static_cast<Scalar>(std::exp(-2.0 * log_fact));
}

// Draws from N(mean, cov) via the symmetric square root of the covariance.
// Accepts positive semi-definite covariances (tiny negative eigenvalues are
// treated as zero). Draws consume exactly dim() normal variates from the
// generator, in order, so streams stay reproducible.
template <typename Scalar>
class GaussianSampler {
 public:
  explicit GaussianSampler(const GaussianSummary<Scalar>& summary)
      : mean_(summary.mean) {
    const Spectrum<Scalar> spec = symmetric_eigen(summary.cov);
    detail::require_psd(spec, "GaussianSampler");
    Vector<Scalar> roots = spec.eigenvalues.cwiseMax(Scalar(0)).cwiseSqrt();
    transform_ = spec.eigenvectors * roots.asDiagonal() *
                 spec.eigenvectors.transpose();
  }

  Index dim() const { return mean_.size(); }

  template <typename Rng>
  void operator()(Rng& rng, Eigen::Ref<Vector<Scalar>> out) const {
    std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
    Vector<Scalar> z(dim());
    for (Index i = 0; i < dim(); ++i) z(i) = normal(rng);
    out = mean_ + transform_ * z;
  }

  template <typename Rng>
  Sample<Scalar> draw(Rng& rng, Index n) const {
    if (n < 1) throw ParameterError("GaussianSampler::draw: needs n >= 1");
    Matrix<Scalar> data(n, dim());
    Vector<Scalar> row(dim());
    for (Index i = 0; i < n; ++i) {
      (*this)(rng, row);
      data.row(i) = row.transpose();
    }
    return Sample<Scalar>(std::move(data));
  }

 private:
  Vector<Scalar> mean_;
  Matrix<Scalar> transform_;
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t trials = 0;
};

// Monte Carlo estimate of E[Vol^2] for the simplex spanned by k+1
// independent draws from the sampler. Trials run in fixed blocks with one
// derived generator per block and a deterministic final reduction, so the
// result is identical for any worker count.
template <typename Scalar>
McEstimate mc_simplicial_dispersion(const GaussianSampler<Scalar>& sampler,
                                    int k, std::uint64_t trials,
                                    std::uint64_t seed, int max_threads = 0) {
  if (k < 1)
    throw ParameterError("mc_simplicial_dispersion: requires k >= 1");
  if (k > sampler.dim()) {
    std::ostringstream os;
    os << "mc_simplicial_dispersion: k = " << k
       << " exceeds the sampler dimension " << sampler.dim();
    throw ParameterError(os.str());
  }
  if (trials < 2)
    throw ParameterError("mc_simplicial_dispersion: needs at least 2 trials");

  constexpr std::uint64_t kBlock = 16384;
  const std::uint64_t blocks = (trials + kBlock - 1) / kBlock;
  std::vector<double> block_sum(blocks, 0.0);
  std::vector<double> block_sumsq(blocks, 0.0);

  const int threads = resolve_threads(max_threads);
  parallel_for(static_cast<Index>(blocks), threads, [&](Index b) {
    auto rng = make_stream(seed, stream_tag::mc_block,
                           static_cast<std::uint64_t>(b));
    const std::uint64_t begin = static_cast<std::uint64_t>(b) * kBlock;
    const std::uint64_t end = std::min(begin + kBlock, trials);
    Matrix<Scalar> points(k + 1, sampler.dim());
    Vector<Scalar> row(sampler.dim());
    double sum = 0.0;
    double sumsq = 0.0;
    for (std::uint64_t t = begin; t < end; ++t) {
      for (int v = 0; v <= k; ++v) {
        sampler(rng, row);
        points.row(v) = row.transpose();
      }
      const double vol2 =
          static_cast<double>(simplex_squared_volume<Scalar>(points));
      sum += vol2;
      sumsq += vol2 * vol2;
    }
    block_sum[static_cast<std::size_t>(b)] = sum;
    block_sumsq[static_cast<std::size_t>(b)] = sumsq;
  });

  double sum = 0.0;
  double sumsq = 0.0;
  for (std::uint64_t b = 0; b < blocks; ++b) {
    sum += block_sum[b];
    sumsq += block_sumsq[b];
  }
  const double t = static_cast<double>(trials);
  const double mean = sum / t;
  double var_of_mean = (sumsq - sum * sum / t) / (t - 1.0) / t;
  if (var_of_mean < 0.0) var_of_mean = 0.0;
  return McEstimate{mean, std::sqrt(var_of_mean), trials};
}

// Energy distance between two samples with exponent delta in (0, 2]:
//   2 E|X - Y|^delta - E|X - X'|^delta - E|Y - Y'|^delta
// using V-statistic (all-pairs) averages.
template <typename Scalar>
Scalar energy_distance(const Sample<Scalar>& x, const Sample<Scalar>& y,
                       Scalar delta = Scalar(1)) {
  if (!(delta > Scalar(0)) || !(delta <= Scalar(2)) || !std::isfinite(delta)) {
    std::ostringstream os;
    os << "energy_distance: exponent must lie in (0, 2], got " << delta;
    throw BadExponentError(os.str());
  }
  if (x.dim() != y.dim()) {
    std::ostringstream os;
    os << "energy_distance: dimension mismatch (" << x.dim() << " vs "
       << y.dim() << ")";
    throw DimensionMismatchError(os.str());
  }

  const auto mean_power = [delta](const Matrix<Scalar>& a,
                                  const Matrix<Scalar>& b) {
    Scalar acc = 0;
    for (Index i = 0; i < a.rows(); ++i) {
      for (Index j = 0; j < b.rows(); ++j) {
        const Scalar sq = (a.row(i) - b.row(j)).squaredNorm();
        if (delta == Scalar(2)) {
          acc += sq;
        } else if (delta == Scalar(1)) {
          acc += std::sqrt(sq);
        } else {
          acc += sq > Scalar(0) ? std::pow(sq, delta / Scalar(2)) : Scalar(0);
        }
      }
    }
    return acc / (static_cast<Scalar>(a.rows()) * static_cast<Scalar>(b.rows()));
  };

  const Scalar value = Scalar(2) * mean_power(x.data, y.data) -
                       mean_power(x.data, x.data) - mean_power(y.data, y.data);
  return clamp_nonnegative(value, static_cast<Scalar>(tolerance::energy_clamp));
}

}  // namespace mvdiv
