#include <doctest.h>

#include <cmath>
#include <random>

#include "common/test_util.hpp"
#include "mvdiv/empirical.hpp"
#include "mvdiv/errors.hpp"

using mvdiv::Index;
using mvdiv::Matrixd;
using mvdiv::Sampled;
using mvdiv::Vectord;

namespace {

Sampled make_sample(std::initializer_list<std::initializer_list<double>> rows) {
  const Index n = static_cast<Index>(rows.size());
  const Index d = static_cast<Index>(rows.begin()->size());
  Matrixd m(n, d);
  Index i = 0;
  for (const auto& row : rows) {
    Index j = 0;
    for (double x : row) m(i, j++) = x;
    ++i;
  }
  return Sampled(std::move(m));
}

}  // namespace

TEST_CASE("sample validation") {
  CHECK_THROWS_AS(Sampled(Matrixd(0, 3)), mvdiv::EmptyInputError);
  CHECK_THROWS_AS(Sampled(Matrixd(3, 0)), mvdiv::EmptyInputError);
  Matrixd bad = Matrixd::Zero(2, 2);
  bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(Sampled(std::move(bad)), mvdiv::ValidationError);

  const auto ok = make_sample({{1.0, 2.0}, {3.0, 4.0}});
  CHECK(ok.n() == 2);
  CHECK(ok.dim() == 2);
}

TEST_CASE("sample_moments on a hand-computed triangle") {
  const auto s = make_sample({{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}});
  const auto g = mvdiv::sample_moments(s);
  CHECK(g.mean(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(g.mean(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  Matrixd expected(2, 2);
  expected << 1.0 / 3.0, -1.0 / 6.0, -1.0 / 6.0, 1.0 / 3.0;
  CHECK(testutil::max_abs_diff(g.cov.mat(), expected) <= 1e-14);

  CHECK_THROWS_AS(mvdiv::sample_moments(make_sample({{1.0, 2.0}})),
                  mvdiv::TooFewObservationsError);
}

TEST_CASE("unbiased dispersion factors") {
  // c(n, k) = (n-1)^k (n-1-k)! / (n-1)!.
  CHECK(mvdiv::unbiased_phi_k_factor(20, 1) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(mvdiv::unbiased_phi_k_factor(20, 2) ==
        doctest::Approx(19.0 / 18.0).epsilon(1e-12));
  CHECK(mvdiv::unbiased_phi_k_factor(20, 3) ==
        doctest::Approx(361.0 / 306.0).epsilon(1e-12));
  CHECK(mvdiv::unbiased_phi_k_factor(5, 2) ==
        doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  // Any n gives exactly 1 at k = 1; the factor stays finite at large sizes.
  CHECK(mvdiv::unbiased_phi_k_factor(777, 1) == doctest::Approx(1.0).epsilon(1e-12));
  const double big = mvdiv::unbiased_phi_k_factor(200, 10);
  CHECK(std::isfinite(big));
  CHECK(big > 1.0);

  CHECK_THROWS_AS(mvdiv::unbiased_phi_k_factor(4, 3),
                  mvdiv::SampleTooSmallError);
  CHECK_THROWS_AS(mvdiv::unbiased_phi_k_factor(100, 0), mvdiv::ParameterError);
}

TEST_CASE("simplex_squared_volume fixed values") {
  // Unit right triangle: area 1/2, squared 1/4.
  CHECK(mvdiv::simplex_squared_volume<double>(
            make_sample({{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}).data) ==
        doctest::Approx(0.25).epsilon(1e-13));
  // Segment of length 3 on the line.
  CHECK(mvdiv::simplex_squared_volume<double>(
            make_sample({{0.0}, {3.0}}).data) ==
        doctest::Approx(9.0).epsilon(1e-13));
  // Collinear points span a degenerate triangle.
  CHECK(mvdiv::simplex_squared_volume<double>(
            make_sample({{0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}}).data) ==
        doctest::Approx(0.0));
  // Unit corner tetrahedron: volume 1/6, squared 1/36.
  CHECK(mvdiv::simplex_squared_volume<double>(
            make_sample({{0.0, 0.0, 0.0},
                         {1.0, 0.0, 0.0},
                         {0.0, 1.0, 0.0},
                         {0.0, 0.0, 1.0}})
                .data) == doctest::Approx(1.0 / 36.0).epsilon(1e-12));
}

TEST_CASE("simplex_squared_volume invariances and errors") {
  std::mt19937_64 rng(601);
  const Index d = 4;
  const Matrixd pts = testutil::random_matrix(rng, 4, d);  // 3-simplex in R^4
  const double base = mvdiv::simplex_squared_volume<double>(pts);
  CHECK(base > 0.0);

  const Matrixd q = testutil::random_orthogonal(rng, d);
  const Vectord shift = testutil::random_vector(rng, d);
  Matrixd moved = pts * q.transpose();
  moved.rowwise() += shift.transpose();
  CHECK(mvdiv::simplex_squared_volume<double>(moved) ==
        doctest::Approx(base).epsilon(1e-9));

  // Vertex order is immaterial.
  Matrixd permuted = pts;
  permuted.row(0).swap(permuted.row(2));
  CHECK(mvdiv::simplex_squared_volume<double>(permuted) ==
        doctest::Approx(base).epsilon(1e-11));

  // More vertices than the dimension can support.
  CHECK_THROWS_AS(mvdiv::simplex_squared_volume<double>(
                      Matrixd::Random(4, 2).eval()),
                  mvdiv::DimensionMismatchError);
  CHECK_THROWS_AS(mvdiv::simplex_squared_volume<double>(Matrixd(1, 3).eval()),
                  mvdiv::EmptyInputError);
}

TEST_CASE("GaussianSampler determinism and moment recovery") {
  Matrixd cov(2, 2);
  cov << 2.0, -1.0, -1.0, 2.0;
  const mvdiv::GaussianSummaryd g(Vectord{{1.0, -2.0}}, mvdiv::SymMatrixd(cov));
  const mvdiv::GaussianSampler<double> sampler(g);

  SUBCASE("same seed, same draws; different seed, different draws") {
    auto rng_a = mvdiv::make_stream(42, 0, 0);
    auto rng_b = mvdiv::make_stream(42, 0, 0);
    auto rng_c = mvdiv::make_stream(43, 0, 0);
    const auto a = sampler.draw(rng_a, 16);
    const auto b = sampler.draw(rng_b, 16);
    const auto c = sampler.draw(rng_c, 16);
    CHECK((a.data.array() == b.data.array()).all());
    CHECK((a.data.array() != c.data.array()).any());
  }
  SUBCASE("empirical moments converge to the summary") {
    auto rng = mvdiv::make_stream(7, 0, 0);
    const auto sample = sampler.draw(rng, 20000);
    const auto fitted = mvdiv::sample_moments(sample);
    CHECK((fitted.mean - g.mean).cwiseAbs().maxCoeff() <= 0.05);
    CHECK(testutil::max_abs_diff(fitted.cov.mat(), cov) <= 0.08);
  }
  SUBCASE("rank-deficient covariances are handled by the PSD square root") {
    Matrixd line(2, 2);
    line << 1.0, 1.0, 1.0, 1.0;
    const mvdiv::GaussianSummaryd flat(Vectord::Zero(2),
                                       mvdiv::SymMatrixd(line));
    const mvdiv::GaussianSampler<double> flat_sampler(flat);
    auto rng = mvdiv::make_stream(11, 0, 0);
    const auto sample = flat_sampler.draw(rng, 64);
    for (Index i = 0; i < sample.n(); ++i)
      CHECK(std::abs(sample.data(i, 0) - sample.data(i, 1)) <= 1e-12);
  }
}

TEST_CASE("Monte Carlo simplicial dispersion matches closed-form Phi_k") {
  SUBCASE("k = 1 on the identity in d = 2: expected squared length 4") {
    const mvdiv::GaussianSummaryd g(Vectord::Zero(2),
                                    mvdiv::SymMatrixd::identity(2));
    const mvdiv::GaussianSampler<double> sampler(g);
    const auto est = mvdiv::mc_simplicial_dispersion(sampler, 1, 40000, 915);
    CHECK(est.trials == 40000);
    CHECK(est.std_error > 0.0);
    CHECK(std::abs(est.mean - 4.0) <= 4.0 * est.std_error);
  }
  SUBCASE("k = 3 on diag(1,2,3): Phi_3 = (4/3!) e_3 = 4") {
    const mvdiv::GaussianSummaryd g(
        Vectord::Zero(3),
        mvdiv::SymMatrixd(Matrixd(Vectord{{1.0, 2.0, 3.0}}.asDiagonal())));
    const mvdiv::GaussianSampler<double> sampler(g);
    const auto est = mvdiv::mc_simplicial_dispersion(sampler, 3, 60000, 916);
    CHECK(std::abs(est.mean - 4.0) <= 4.0 * est.std_error);
  }
  SUBCASE("result is bit-identical for any worker count") {
    const mvdiv::GaussianSummaryd g(Vectord::Zero(2),
                                    mvdiv::SymMatrixd::identity(2));
    const mvdiv::GaussianSampler<double> sampler(g);
    const auto one = mvdiv::mc_simplicial_dispersion(sampler, 2, 50000, 917, 1);
    const auto many = mvdiv::mc_simplicial_dispersion(sampler, 2, 50000, 917, 3);
    CHECK(one.mean == many.mean);
    CHECK(one.std_error == many.std_error);
  }
  SUBCASE("parameter validation") {
    const mvdiv::GaussianSummaryd g(Vectord::Zero(2),
                                    mvdiv::SymMatrixd::identity(2));
    const mvdiv::GaussianSampler<double> sampler(g);
    CHECK_THROWS_AS(mvdiv::mc_simplicial_dispersion(sampler, 0, 100, 1),
                    mvdiv::ParameterError);
    CHECK_THROWS_AS(mvdiv::mc_simplicial_dispersion(sampler, 3, 100, 1),
                    mvdiv::ParameterError);
    CHECK_THROWS_AS(mvdiv::mc_simplicial_dispersion(sampler, 1, 1, 1),
                    mvdiv::ParameterError);
  }
}

TEST_CASE("energy distance fixed values") {
  const auto x = make_sample({{0.0}, {2.0}});
  const auto y = make_sample({{1.0}, {3.0}});
  // 2*mean|X-Y| - mean|X-X'| - mean|Y-Y'| = 3 - 1 - 1.
  CHECK(mvdiv::energy_distance(x, y) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(mvdiv::energy_distance(x, y, 1.0) ==
        doctest::Approx(1.0).epsilon(1e-13));

  // Single points at squared-distance exponent.
  CHECK(mvdiv::energy_distance(make_sample({{0.0}}), make_sample({{1.0}}),
                               2.0) == doctest::Approx(2.0).epsilon(1e-13));

  // Identical samples give exactly zero.
  CHECK(mvdiv::energy_distance(x, x) == 0.0);
}

TEST_CASE("energy distance invariances and errors") {
  std::mt19937_64 rng(602);
  const Sampled x(testutil::random_matrix(rng, 9, 3));
  const Sampled y(Matrixd(testutil::random_matrix(rng, 7, 3).array() + 0.5));

  for (double delta : {0.5, 1.0, 1.5, 2.0}) {
    CAPTURE(delta);
    const double xy = mvdiv::energy_distance(x, y, delta);
    CHECK(mvdiv::energy_distance(y, x, delta) ==
          doctest::Approx(xy).epsilon(1e-12));

    // Common translation leaves every pairwise distance unchanged.
    const Vectord shift = testutil::random_vector(rng, 3);
    const Sampled xs(Matrixd(x.data.rowwise() + shift.transpose()));
    const Sampled ys(Matrixd(y.data.rowwise() + shift.transpose()));
    CHECK(mvdiv::energy_distance(xs, ys, delta) ==
          doctest::Approx(xy).epsilon(1e-10));
  }

  CHECK_THROWS_AS(mvdiv::energy_distance(x, y, 0.0), mvdiv::BadExponentError);
  CHECK_THROWS_AS(mvdiv::energy_distance(x, y, 2.5), mvdiv::BadExponentError);
  CHECK_THROWS_AS(mvdiv::energy_distance(x, y, std::nan("")),
                  mvdiv::BadExponentError);
  CHECK_THROWS_AS(
      mvdiv::energy_distance(x, Sampled(testutil::random_matrix(rng, 5, 2))),
      mvdiv::DimensionMismatchError);
}
