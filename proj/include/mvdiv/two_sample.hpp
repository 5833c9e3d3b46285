#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include "mvdiv/empirical.hpp"
#include "mvdiv/pair_scores.hpp"

// The two-sample testing pipeline: pseudo-sample generation under both
// hypotheses, ROC curves and AUC, threshold calibration, data-driven
// parameter selection over a grid, the test runner, and the simulation
// presets used to benchmark the distance families.
namespace mvdiv {

// ---------------------------------------------------------------------------
// Pseudo-sampling schemes.

enum class SchemeKind { Subsample, Bootstrap };

// How pseudo-sample pairs are produced from the two observed samples.
// Subsample draws without replacement, reducing each side by r rows (the
// observed statistic is then computed on similarly trimmed samples);
// bootstrap draws with replacement at full size.
struct SamplingScheme {
  SchemeKind kind = SchemeKind::Subsample;
  Index r = 5;

  static SamplingScheme subsample(Index r = 5) {
    return SamplingScheme{SchemeKind::Subsample, r};
  }
  static SamplingScheme bootstrap() {
    return SamplingScheme{SchemeKind::Bootstrap, 0};
  }

  void validate(Index n, Index m) const {
    if (r < 0) throw ParameterError("SamplingScheme: r must be >= 0");
    if (kind == SchemeKind::Subsample && 2 * r >= std::min(n, m)) {
      std::ostringstream os;
      os << "subsampling with r = " << r
         << " removes too much: requires r < min(n, m) / 2 with n = " << n
         << ", m = " << m;
      throw SchemeInfeasibleError(os.str());
    }
  }

  // Sizes of the pseudo samples (and of the trimmed observed samples).
  Index effective_n(Index n) const {
    return kind == SchemeKind::Subsample ? n - r : n;
  }
};

struct SamplePair {
  Sampled x;
  Sampled y;
};

namespace detail {

// First `take` entries of a uniformly random permutation of [0, pool),
// via partial Fisher-Yates.
template <typename Rng>
std::vector<Index> sample_without_replacement(Rng& rng, Index pool,
                                              Index take) {
  std::vector<Index> idx(static_cast<std::size_t>(pool));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index j = 0; j < take; ++j) {
    std::uniform_int_distribution<Index> pick(j, pool - 1);
    std::swap(idx[static_cast<std::size_t>(j)],
              idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(take));
  return idx;
}

template <typename Rng>
std::vector<Index> sample_with_replacement(Rng& rng, Index pool, Index take) {
  std::uniform_int_distribution<Index> pick(0, pool - 1);
  std::vector<Index> idx(static_cast<std::size_t>(take));
  for (Index j = 0; j < take; ++j) idx[static_cast<std::size_t>(j)] = pick(rng);
  return idx;
}

inline Matrixd take_rows(const Matrixd& source, const std::vector<Index>& rows,
                         std::size_t begin, std::size_t count) {
  Matrixd out(static_cast<Index>(count), source.cols());
  for (std::size_t i = 0; i < count; ++i)
    out.row(static_cast<Index>(i)) = source.row(rows[begin + i]);
  return out;
}

inline void check_pair_inputs(const Sampled& x, const Sampled& y,
                              const SamplingScheme& scheme, Index pairs,
                              const char* where) {
  if (x.dim() != y.dim()) {
    std::ostringstream os;
    os << where << ": samples have different dimensions (" << x.dim()
       << " vs " << y.dim() << ")";
    throw DimensionMismatchError(os.str());
  }
  if (pairs < 1) throw ParameterError("pseudo pairs: needs at least one pair");
  scheme.validate(x.n(), y.n());
}

}  // namespace detail

// Pseudo-sample pairs mimicking the alternative: each side is resampled from
// its own sample. Pair i uses its own derived generator, so the set is
// reproducible independent of evaluation order.
inline std::vector<SamplePair> pseudo_pairs_h1(const Sampled& x,
                                               const Sampled& y,
                                               const SamplingScheme& scheme,
                                               Index pairs,
                                               std::uint64_t seed) {
  detail::check_pair_inputs(x, y, scheme, pairs, "pseudo_pairs_h1");
  const Index nx = scheme.effective_n(x.n());
  const Index ny = scheme.effective_n(y.n());
  std::vector<SamplePair> out;
  out.reserve(static_cast<std::size_t>(pairs));
  for (Index i = 0; i < pairs; ++i) {
    auto rng = make_stream(seed, stream_tag::pairs_h1,
                           static_cast<std::uint64_t>(i));
    std::vector<Index> ix, iy;
    if (scheme.kind == SchemeKind::Subsample) {
      ix = detail::sample_without_replacement(rng, x.n(), nx);
      iy = detail::sample_without_replacement(rng, y.n(), ny);
    } else {
      ix = detail::sample_with_replacement(rng, x.n(), nx);
      iy = detail::sample_with_replacement(rng, y.n(), ny);
    }
    out.push_back(SamplePair{
        Sampled(detail::take_rows(x.data, ix, 0, ix.size())),
        Sampled(detail::take_rows(y.data, iy, 0, iy.size()))});
  }
  return out;
}

// Pseudo-sample pairs mimicking the null: both sides come from the merged
// sample, without replacement as two disjoint blocks of one partial
// permutation, or with replacement as independent draws.
inline std::vector<SamplePair> pseudo_pairs_h0(const Sampled& x,
                                               const Sampled& y,
                                               const SamplingScheme& scheme,
                                               Index pairs,
                                               std::uint64_t seed) {
  detail::check_pair_inputs(x, y, scheme, pairs, "pseudo_pairs_h0");
  const Index nx = scheme.effective_n(x.n());
  const Index ny = scheme.effective_n(y.n());
  Matrixd merged(x.n() + y.n(), x.dim());
  merged.topRows(x.n()) = x.data;
  merged.bottomRows(y.n()) = y.data;
  std::vector<SamplePair> out;
  out.reserve(static_cast<std::size_t>(pairs));
  for (Index i = 0; i < pairs; ++i) {
    auto rng = make_stream(seed, stream_tag::pairs_h0,
                           static_cast<std::uint64_t>(i));
    std::vector<Index> idx;
    if (scheme.kind == SchemeKind::Subsample)
      idx = detail::sample_without_replacement(rng, merged.rows(), nx + ny);
    else
      idx = detail::sample_with_replacement(rng, merged.rows(), nx + ny);
    out.push_back(SamplePair{
        Sampled(detail::take_rows(merged, idx, 0,
                                  static_cast<std::size_t>(nx))),
        Sampled(detail::take_rows(merged, idx, static_cast<std::size_t>(nx),
                                  static_cast<std::size_t>(ny)))});
  }
  return out;
}

// ---------------------------------------------------------------------------
// ROC, AUC and threshold calibration.

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

namespace detail {

inline void check_scores(const std::vector<double>& scores,
                         const char* where) {
  if (scores.empty()) {
    std::ostringstream os;
    os << where << ": empty score vector";
    throw EmptyInputError(os.str());
  }
  for (double s : scores) {
    if (std::isnan(s)) {
      std::ostringstream os;
      os << where << ": scores must not be NaN";
      throw ValidationError(os.str());
    }
  }
}

}  // namespace detail

// ROC of a detector that flags "different" when the score exceeds a
// threshold. Thresholds sweep the distinct pooled scores from above plus a
// final -inf so the curve always reaches (1, 1). The AUC is the
// Mann-Whitney statistic (ties count one half), which equals the area under
// this step curve.
inline RocCurve roc(const std::vector<double>& h0_scores,
                    const std::vector<double>& h1_scores) {
  detail::check_scores(h0_scores, "roc(h0)");
  detail::check_scores(h1_scores, "roc(h1)");
  std::vector<double> d0 = h0_scores;
  std::vector<double> d1 = h1_scores;
  std::sort(d0.begin(), d0.end());
  std::sort(d1.begin(), d1.end());
  const double n0 = static_cast<double>(d0.size());
  const double n1 = static_cast<double>(d1.size());

  std::vector<double> thresholds;
  thresholds.reserve(d0.size() + d1.size() + 1);
  std::merge(d0.begin(), d0.end(), d1.begin(), d1.end(),
             std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  std::reverse(thresholds.begin(), thresholds.end());
  thresholds.push_back(-std::numeric_limits<double>::infinity());

  RocCurve curve;
  curve.points.reserve(thresholds.size());
  for (double tau : thresholds) {
    const auto above = [tau](const std::vector<double>& v) {
      return static_cast<double>(
          v.end() - std::upper_bound(v.begin(), v.end(), tau));
    };
    curve.points.push_back(
        RocPoint{tau, above(d0) / n0, above(d1) / n1});
  }

  double wins = 0.0;
  for (double s : d1) {
    const auto lo = std::lower_bound(d0.begin(), d0.end(), s);
    const auto hi = std::upper_bound(lo, d0.end(), s);
    wins += static_cast<double>(lo - d0.begin());
    wins += 0.5 * static_cast<double>(hi - lo);
  }
  curve.auc = wins / (n0 * n1);
  return curve;
}

// Rejection threshold: the ceil((1 - significance) * N)-th smallest null
// score. The nudge factor keeps ceil() honest when (1 - s) * N is an integer
// that floating point overshoots (e.g. 0.95 * 100).
inline double calibrate_tau(const std::vector<double>& h0_scores,
                            double significance) {
  detail::check_scores(h0_scores, "calibrate_tau");
  if (!(significance > 0.0) || !(significance <= 0.5))
    throw ParameterError("calibrate_tau: significance must lie in (0, 0.5]");
  std::vector<double> sorted = h0_scores;
  std::sort(sorted.begin(), sorted.end());
  const double u = (1.0 - significance) * static_cast<double>(sorted.size());
  auto idx = static_cast<std::size_t>(std::ceil(u * (1.0 - 1e-12)));
  idx = std::clamp<std::size_t>(idx, 1, sorted.size());
  return sorted[idx - 1];
}

// ---------------------------------------------------------------------------
// Data-driven parameter selection.

struct GridSpec {
  Family family = Family::LogSimplicial_BR;
  std::vector<double> values;
};

struct ParamAuc {
  double param = 0.0;
  double auc = std::numeric_limits<double>::quiet_NaN();
  bool feasible = false;
};

struct SelectionResult {
  double best_param = 0.0;
  std::vector<ParamAuc> table;
};

namespace detail {

// Moment summaries and cached spectra for every pseudo pair. Building these
// once is what makes whole-grid evaluation cheap.
inline std::vector<GaussianPairScores<double>> score_pairs(
    const std::vector<SamplePair>& pairs, int threads) {
  std::vector<std::optional<GaussianPairScores<double>>> slots(pairs.size());
  parallel_for(static_cast<Index>(pairs.size()), threads, [&](Index i) {
    const auto& pair = pairs[static_cast<std::size_t>(i)];
    slots[static_cast<std::size_t>(i)].emplace(sample_moments(pair.x),
                                               sample_moments(pair.y));
  });
  std::vector<GaussianPairScores<double>> out;
  out.reserve(pairs.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

struct SelectionScores {
  SelectionResult result;
  // Null scores of the winning parameter, for threshold calibration.
  std::vector<double> best_h0;
};

// Grid evaluation over prebuilt pair scores. A parameter is infeasible when
// any pseudo pair fails numerically under it (for example k above the
// numerical rank of some subsample covariance); feasible parameters are
// ranked by AUC, ties resolved toward the smallest parameter.
inline SelectionScores select_over_scores(
    const GridSpec& grid,
    const std::vector<GaussianPairScores<double>>& h0,
    const std::vector<GaussianPairScores<double>>& h1, int threads) {
  if (!family_has_parameter(grid.family))
    throw ParameterError(
        "parameter selection needs a parametric family (log phi_p or log "
        "Phi_k)");
  if (grid.values.empty())
    throw ParameterError("parameter selection needs a non-empty grid");

  std::vector<double> values = grid.values;
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  SelectionScores out;
  out.result.table.reserve(values.size());
  double best_auc = -1.0;
  bool any_feasible = false;

  std::vector<double> s0(h0.size());
  std::vector<double> s1(h1.size());
  for (double value : values) {
    ParamAuc row;
    row.param = value;
    try {
      const DistanceSpec spec =
          DistanceSpec::with_parameter(grid.family, value);
      parallel_for(static_cast<Index>(h0.size()), threads, [&](Index i) {
        s0[static_cast<std::size_t>(i)] =
            h0[static_cast<std::size_t>(i)].evaluate(spec);
      });
      parallel_for(static_cast<Index>(h1.size()), threads, [&](Index i) {
        s1[static_cast<std::size_t>(i)] =
            h1[static_cast<std::size_t>(i)].evaluate(spec);
      });
      row.auc = roc(s0, s1).auc;
      row.feasible = true;
    } catch (const NumericalError&) {
      row.feasible = false;
    } catch (const ParameterError&) {
      // e.g. k exceeding the ambient dimension for this data set.
      row.feasible = false;
    }
    if (row.feasible && row.auc > best_auc) {
      best_auc = row.auc;
      out.result.best_param = row.param;
      out.best_h0 = s0;
      any_feasible = true;
    }
    out.result.table.push_back(row);
  }
  if (!any_feasible)
    throw AllParametersInfeasibleError(
        "parameter selection: every grid value failed on at least one "
        "pseudo pair");
  return out;
}

}  // namespace detail

// Standalone parameter selection from two samples.
inline SelectionResult select_parameter(const Sampled& x, const Sampled& y,
                                        const GridSpec& grid,
                                        const SamplingScheme& scheme,
                                        Index pairs, std::uint64_t seed,
                                        int max_threads = 0) {
  const int threads = resolve_threads(max_threads);
  const auto pairs0 = pseudo_pairs_h0(x, y, scheme, pairs, seed);
  const auto pairs1 = pseudo_pairs_h1(x, y, scheme, pairs, seed);
  const auto h0 = detail::score_pairs(pairs0, threads);
  const auto h1 = detail::score_pairs(pairs1, threads);
  return detail::select_over_scores(grid, h0, h1, threads).result;
}

// ---------------------------------------------------------------------------
// The test runner.

struct TestConfig {
  // Exactly one of `spec` (fixed distance) or `grid` (data-driven selection)
  // must be set.
  std::optional<DistanceSpec> spec;
  std::optional<GridSpec> grid;
  // Number of pseudo pairs per hypothesis; 0 means "use x's sample size".
  Index pseudo_pairs = 0;
  SamplingScheme scheme = SamplingScheme::subsample();
  double significance = 0.05;
  std::uint64_t seed = 0;
  // Shift log Phi_k Burbea-Rao scores by the small-sample unbiasedness
  // factor of the two component covariances. The shift is common to the
  // pseudo scores and the observed statistic, so decisions are unchanged;
  // reported values become comparable across sample sizes.
  bool apply_unbiased_correction = false;
  int max_threads = 0;
};

struct TestResult {
  double statistic = 0.0;
  double tau = 0.0;
  bool reject = false;
  std::optional<double> selected_param;
  std::optional<std::vector<ParamAuc>> auc_by_param;
  Index n_effective = 0;
  Index m_effective = 0;
  Index dropped_pairs = 0;
  Index total_pairs = 0;
};

namespace detail {

inline double pair_statistic(const DistanceSpec& spec, const Sampled& x,
                             const Sampled& y) {
  if (spec.family() == Family::Energy)
    return energy_distance(x, y, spec.delta());
  return evaluate<double>(spec, sample_moments(x), sample_moments(y));
}

// The constant shift applied when the unbiased correction is requested:
// -1/2 [log c(n_eff, k) + log c(m_eff, k)] for log Phi_k Burbea-Rao scores
// (the factor cancels inside Jeffreys-Bregman scores). Zero otherwise.
inline double unbiased_shift(const DistanceSpec& spec, Index n_eff,
                             Index m_eff) {
  if (spec.family() != Family::LogSimplicial_BR) return 0.0;
  const int k = spec.k();
  return -0.5 * (std::log(unbiased_phi_k_factor(n_eff, k)) +
                 std::log(unbiased_phi_k_factor(m_eff, k)));
}

}  // namespace detail

// Full two-sample test: calibrate a rejection threshold on pseudo pairs
// drawn under the null, optionally select the family parameter on pseudo
// pairs drawn under both hypotheses first, then compare the observed
// statistic (on trimmed samples when subsampling) against the threshold.
inline TestResult run_test(const Sampled& x, const Sampled& y,
                           const TestConfig& config) {
  if (x.dim() != y.dim()) {
    std::ostringstream os;
    os << "run_test: samples have different dimensions (" << x.dim() << " vs "
       << y.dim() << ")";
    throw DimensionMismatchError(os.str());
  }
  if (config.spec.has_value() == config.grid.has_value())
    throw ParameterError(
        "run_test: set exactly one of a fixed distance or a selection grid");
  if (!(config.significance > 0.0) || !(config.significance <= 0.5))
    throw ParameterError("run_test: significance must lie in (0, 0.5]");
  const Index pairs =
      config.pseudo_pairs == 0 ? x.n() : config.pseudo_pairs;
  if (pairs < 10)
    throw ParameterError("run_test: needs at least 10 pseudo pairs");
  config.scheme.validate(x.n(), y.n());

  const int threads = resolve_threads(config.max_threads);
  const Index n_eff = config.scheme.effective_n(x.n());
  const Index m_eff = config.scheme.effective_n(y.n());

  TestResult result;
  result.total_pairs = pairs;
  result.n_effective = n_eff;
  result.m_effective = m_eff;

  DistanceSpec spec = config.spec.value_or(DistanceSpec::kl());
  const auto pairs0 =
      pseudo_pairs_h0(x, y, config.scheme, pairs, config.seed);
  std::vector<double> d0;

  if (config.grid) {
    if (config.grid->family == Family::Energy)
      throw ParameterError(
          "run_test: the energy distance has no selection parameter");
    const auto pairs1 =
        pseudo_pairs_h1(x, y, config.scheme, pairs, config.seed);
    const auto h0 = detail::score_pairs(pairs0, threads);
    const auto h1 = detail::score_pairs(pairs1, threads);
    auto selection =
        detail::select_over_scores(*config.grid, h0, h1, threads);
    spec = DistanceSpec::with_parameter(config.grid->family,
                                        selection.result.best_param);
    result.selected_param = selection.result.best_param;
    result.auc_by_param = std::move(selection.result.table);
    d0 = std::move(selection.best_h0);
  } else {
    spec.validate_for_dim(x.dim());
    std::vector<double> scores(static_cast<std::size_t>(pairs));
    std::vector<char> ok(static_cast<std::size_t>(pairs), 0);
    parallel_for(pairs, threads, [&](Index i) {
      const auto& pair = pairs0[static_cast<std::size_t>(i)];
      try {
        scores[static_cast<std::size_t>(i)] =
            detail::pair_statistic(spec, pair.x, pair.y);
        ok[static_cast<std::size_t>(i)] = 1;
      } catch (const NumericalError&) {
        ok[static_cast<std::size_t>(i)] = 0;
      }
    });
    for (Index i = 0; i < pairs; ++i) {
      if (ok[static_cast<std::size_t>(i)])
        d0.push_back(scores[static_cast<std::size_t>(i)]);
    }
    result.dropped_pairs = pairs - static_cast<Index>(d0.size());
    if (10 * result.dropped_pairs > pairs) {
      std::ostringstream os;
      os << "run_test: " << result.dropped_pairs << " of " << pairs
         << " null pseudo pairs failed numerically under "
         << spec.describe()
         << "; the calibration is unreliable (more than 10% dropped)";
      throw NumericalError(os.str());
    }
  }

  const double shift = config.apply_unbiased_correction
                           ? detail::unbiased_shift(spec, n_eff, m_eff)
                           : 0.0;
  if (shift != 0.0)
    for (double& s : d0) s += shift;
  result.tau = calibrate_tau(d0, config.significance);

  Sampled x_obs = x;
  Sampled y_obs = y;
  if (config.scheme.kind == SchemeKind::Subsample) {
    auto rng_x = make_stream(config.seed, stream_tag::trim_x, 0);
    auto rng_y = make_stream(config.seed, stream_tag::trim_y, 0);
    const auto ix = detail::sample_without_replacement(rng_x, x.n(), n_eff);
    const auto iy = detail::sample_without_replacement(rng_y, y.n(), m_eff);
    x_obs = Sampled(detail::take_rows(x.data, ix, 0, ix.size()));
    y_obs = Sampled(detail::take_rows(y.data, iy, 0, iy.size()));
  }
  result.statistic = detail::pair_statistic(spec, x_obs, y_obs) + shift;
  result.reject = result.statistic > result.tau;
  return result;
}

// ---------------------------------------------------------------------------
// Simulation presets.

enum class ExamplePreset { One, Two };

// Population covariances for the benchmark presets. Both presets share the
// leading 2x2 block A = [[2, -1], [-1, 2]] and an isotropic tail: preset One
// scales (alpha * A, tail 1e-3); preset Two rotates the block by theta
// (tail 1). Means are all-ones on both sides, so only the covariance
// separates the hypotheses.
inline std::pair<SymMatrixd, SymMatrixd> example_covariances(
    ExamplePreset preset, double param, Index d) {
  if (d < 2)
    throw ParameterError("example_covariances: requires dimension >= 2");
  if (!std::isfinite(param))
    throw ParameterError("example_covariances: parameter must be finite");
  Matrixd a(2, 2);
  a << 2.0, -1.0, -1.0, 2.0;
  Matrixd first = Matrixd::Zero(d, d);
  Matrixd second = Matrixd::Zero(d, d);
  if (preset == ExamplePreset::One) {
    if (!(param >= 1.0 && param <= 2.0))
      throw ParameterError(
          "preset one: the scale alpha must lie in [1, 2]");
    first.topLeftCorner(2, 2) = a;
    second.topLeftCorner(2, 2) = param * a;
    for (Index i = 2; i < d; ++i) {
      first(i, i) = 1e-3;
      second(i, i) = 1e-3;
    }
  } else {
    if (!(param >= 0.0 && param <= std::atan(1.0)))
      throw ParameterError(
          "preset two: the rotation angle theta must lie in [0, pi/4]");
    Matrixd rot(2, 2);
    rot << std::cos(param), -std::sin(param), std::sin(param),
        std::cos(param);
    first.topLeftCorner(2, 2) = a;
    second.topLeftCorner(2, 2) = rot * a * rot.transpose();
    for (Index i = 2; i < d; ++i) {
      first(i, i) = 1.0;
      second(i, i) = 1.0;
    }
  }
  return {SymMatrixd(std::move(first)), SymMatrixd(std::move(second))};
}

struct SimRow {
  DistanceSpec spec = DistanceSpec::kl();
  double auc = 0.0;
  double fp_rate = 0.0;
  double tp_rate = 0.0;
  RocCurve roc;
};

// Repeated-draw benchmark of a list of distances on one preset: per
// replicate, two fresh samples from the first population (null) and one from
// each population (alternative) are summarized once and scored under every
// distance. Rates use a threshold calibrated on the null scores themselves.
inline std::vector<SimRow> simulate_example(
    ExamplePreset preset, double param, Index n, Index d, Index reps,
    const std::vector<DistanceSpec>& distances, std::uint64_t seed,
    double significance = 0.05, int max_threads = 0) {
  if (n < 2) throw ParameterError("simulate_example: needs n >= 2");
  if (reps < 2) throw ParameterError("simulate_example: needs reps >= 2");
  if (distances.empty())
    throw ParameterError("simulate_example: needs at least one distance");
  for (const auto& spec : distances) spec.validate_for_dim(d);
  if (!(significance > 0.0) || !(significance <= 0.5))
    throw ParameterError(
        "simulate_example: significance must lie in (0, 0.5]");

  const auto [cov_first, cov_second] = example_covariances(preset, param, d);
  const Vectord mean = Vectord::Ones(d);
  const GaussianSampler<double> sampler_first(
      GaussianSummaryd(mean, cov_first));
  const GaussianSampler<double> sampler_second(
      GaussianSummaryd(mean, cov_second));

  const std::size_t n_dist = distances.size();
  std::vector<std::vector<double>> h0(n_dist,
                                      std::vector<double>(reps, 0.0));
  std::vector<std::vector<double>> h1(n_dist,
                                      std::vector<double>(reps, 0.0));

  const int threads = resolve_threads(max_threads);
  const bool any_summary_family =
      std::any_of(distances.begin(), distances.end(), [](const auto& s) {
        return s.family() != Family::Energy;
      });
  parallel_for(reps, threads, [&](Index i) {
    auto rng0 = make_stream(seed, stream_tag::sim_h0,
                            static_cast<std::uint64_t>(i));
    auto rng1 = make_stream(seed, stream_tag::sim_h1,
                            static_cast<std::uint64_t>(i));
    const Sampled x0 = sampler_first.draw(rng0, n);
    const Sampled y0 = sampler_first.draw(rng0, n);
    const Sampled x1 = sampler_first.draw(rng1, n);
    const Sampled y1 = sampler_second.draw(rng1, n);
    std::optional<GaussianPairScores<double>> scores0, scores1;
    if (any_summary_family) {
      scores0.emplace(sample_moments(x0), sample_moments(y0));
      scores1.emplace(sample_moments(x1), sample_moments(y1));
    }
    for (std::size_t j = 0; j < n_dist; ++j) {
      const DistanceSpec& spec = distances[j];
      if (spec.family() == Family::Energy) {
        h0[j][static_cast<std::size_t>(i)] =
            energy_distance(x0, y0, spec.delta());
        h1[j][static_cast<std::size_t>(i)] =
            energy_distance(x1, y1, spec.delta());
      } else {
        h0[j][static_cast<std::size_t>(i)] = scores0->evaluate(spec);
        h1[j][static_cast<std::size_t>(i)] = scores1->evaluate(spec);
      }
    }
  });

  std::vector<SimRow> rows;
  rows.reserve(n_dist);
  for (std::size_t j = 0; j < n_dist; ++j) {
    SimRow row;
    row.spec = distances[j];
    row.roc = roc(h0[j], h1[j]);
    row.auc = row.roc.auc;
    const double tau = calibrate_tau(h0[j], significance);
    const auto rate = [tau](const std::vector<double>& v) {
      Index c = 0;
      for (double s : v)
        if (s > tau) ++c;
      return static_cast<double>(c) / static_cast<double>(v.size());
    };
    row.fp_rate = rate(h0[j]);
    row.tp_rate = rate(h1[j]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mvdiv
