#include "cam/gaussian.hpp"

#include "doctest.h"
#include "oracle.hpp"

#include "cam/rng.hpp"

using namespace cam;

namespace {

Eigen::MatrixXd random_matrix(Xoshiro256& rng, Index rows, Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

Eigen::MatrixXd random_spd(Xoshiro256& rng, Index d) {
  const Eigen::MatrixXd a = random_matrix(rng, d, d);
  Eigen::MatrixXd spd = Eigen::MatrixXd::Zero(d, d);
  spd.selfadjointView<Eigen::Lower>().rankUpdate(a);
  spd = spd.selfadjointView<Eigen::Lower>();
  spd.diagonal().array() += 0.5;  // keep it comfortably positive definite
  return spd;
}

}  // namespace

TEST_CASE("estimate_mean handles the symmetric and singleton cases") {
  Eigen::MatrixXd two(2, 2);
  two << 1, -1, 0, 0;
  CHECK(estimate_mean(two) == Eigen::Vector2d(0, 0));

  Eigen::MatrixXd one(2, 1);
  one << 2, 4;
  CHECK(estimate_mean(one) == Eigen::Vector2d(2, 4));
}

TEST_CASE("estimate_mean matches a compensated-summation oracle") {
  Xoshiro256 rng(7);
  const Eigen::MatrixXd samples = random_matrix(rng, 6, 16);
  const Eigen::VectorXd mean = estimate_mean(samples);
  const Eigen::VectorXd expected = cam_oracle::kahan_mean(samples);
  CHECK((mean - expected).norm() <= 1e-12 * std::max(1.0, expected.norm()));
}

TEST_CASE("estimate_mean rejects empty and mismatched input") {
  CHECK_THROWS_AS(estimate_mean(Eigen::MatrixXd(3, 0)), Error);
  std::vector<Eigen::VectorXd> mixed{Eigen::Vector2d(1, 2),
                                     Eigen::Vector3d(1, 2, 3)};
  CHECK_THROWS_AS(estimate_mean(mixed), Error);
  try {
    estimate_mean(mixed);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDimMismatch);
  }
}

TEST_CASE("estimate_covariance two-point and singleton arithmetic") {
  Eigen::MatrixXd two(2, 2);
  two << 1, -1, 0, 0;
  const Eigen::MatrixXd cov = estimate_covariance(two, Eigen::Vector2d(0, 0));
  Eigen::MatrixXd expected(2, 2);
  expected << 1, 0, 0, 0;
  CHECK(cov == expected);

  Eigen::MatrixXd one(3, 1);
  one << 5, -2, 1;
  CHECK(estimate_covariance(one, one.col(0)).isZero(0.0));
}

TEST_CASE("estimate_covariance matches the direct-summation oracle") {
  Xoshiro256 rng(11);
  const Eigen::MatrixXd samples = random_matrix(rng, 4, 8);
  const Eigen::VectorXd mean = estimate_mean(samples);
  const Eigen::MatrixXd cov = estimate_covariance(samples, mean);
  const Eigen::MatrixXd expected = cam_oracle::direct_covariance(samples, mean);
  CHECK((cov - expected).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(cov == Eigen::MatrixXd(cov.transpose()));  // exact symmetry

  CHECK_THROWS_AS(estimate_covariance(samples, Eigen::Vector3d::Zero()), Error);
}

TEST_CASE("shrink arithmetic on the canonical cases") {
  ShrinkageParams both{1.0, 1.0, ShrinkageConvention::kFecamStyle};

  Eigen::MatrixXd rank1(2, 2);
  rank1 << 1, 0, 0, 0;
  Eigen::MatrixXd expected(2, 2);
  expected << 1.5, 0, 0, 0.5;
  CHECK(shrink(rank1, both) == expected);

  Eigen::MatrixXd full(2, 2);
  full << 2, 1, 1, 2;
  expected << 4, 2, 2, 4;
  CHECK(shrink(full, both) == expected);

  CHECK(shrink(Eigen::MatrixXd::Zero(3, 3), both).isZero(0.0));
  ShrinkageParams literal{1.0, 1.0, ShrinkageConvention::kLiteral};
  CHECK(shrink(Eigen::MatrixXd::Zero(3, 3), literal).isZero(0.0));

  // literal pairing puts the off-diagonal average on the identity mask and
  // can break positive definiteness
  Eigen::MatrixXd lit = shrink(rank1, literal);
  expected << 1, 0.5, 0.5, 0;
  CHECK(lit == expected);
  CHECK(cam_oracle::min_eigenvalue(lit) < 0.0);
}

TEST_CASE("shrink is linear in the covariance and preserves symmetry") {
  Xoshiro256 rng(3);
  ShrinkageParams params{2.5, 0.75, ShrinkageConvention::kFecamStyle};
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd a = random_spd(rng, 5);
    const Eigen::MatrixXd b = random_spd(rng, 5);
    const double lambda = rng.uniform() * 3.0;
    const Eigen::MatrixXd lhs = shrink(a + lambda * b, params);
    const Eigen::MatrixXd rhs = shrink(a, params) + lambda * shrink(b, params);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12 * lhs.cwiseAbs().maxCoeff());
    CHECK(is_symmetric(shrink(a, params)));
  }
  CHECK_THROWS_AS(shrink(Eigen::MatrixXd::Random(3, 2), params), Error);
}

TEST_CASE("normalize_cov produces a unit-diagonal correlation matrix") {
  Eigen::MatrixXd cov(2, 2);
  cov << 4, 1, 1, 1;
  Eigen::MatrixXd expected(2, 2);
  expected << 1, 0.5, 0.5, 1;
  CHECK(normalize_cov(cov) == expected);

  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(4, 4);
  CHECK(normalize_cov(eye) == eye);

  Eigen::MatrixXd bad(2, 2);
  bad << 1, 0, 0, 0;
  CHECK_THROWS_AS(normalize_cov(bad), Error);
}

TEST_CASE("normalize_cov respects Cauchy-Schwarz and keeps PD inputs PD") {
  Xoshiro256 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd spd = random_spd(rng, 6);
    const Eigen::MatrixXd corr = normalize_cov(spd);
    CHECK((corr.diagonal().array() == 1.0).all());
    CHECK(corr.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
    CHECK(cam_oracle::min_eigenvalue(corr) > 0.0);
  }
}

TEST_CASE("mahalanobis_sq against hand values and the inverse oracle") {
  const Eigen::VectorXd zero2 = Eigen::VectorXd::Zero(2);
  auto identity = class_gaussian_from_cov<double>(
      0, zero2, Eigen::MatrixXd::Identity(2, 2));
  CHECK(mahalanobis_sq(Eigen::Vector2d(3, 4), identity) == doctest::Approx(25.0));

  Eigen::MatrixXd diag(2, 2);
  diag << 4, 0, 0, 1;
  auto stretched = class_gaussian_from_cov<double>(1, zero2, diag);
  CHECK(mahalanobis_sq(Eigen::Vector2d(2, 1), stretched) == doctest::Approx(2.0));

  Xoshiro256 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const Index d = 2 + static_cast<Index>(rng.below(15));  // up to 16
    const Eigen::MatrixXd spd = random_spd(rng, d);
    const Eigen::VectorXd mean = random_matrix(rng, d, 1);
    const Eigen::VectorXd x = random_matrix(rng, d, 1);
    auto g = class_gaussian_from_cov<double>(0, mean, spd);
    const double got = mahalanobis_sq(x, g);
    const double expected = cam_oracle::explicit_inverse_mahalanobis(x, mean, spd);
    CHECK(std::abs(got - expected) <= 1e-8 * std::max(1.0, std::abs(expected)));
    CHECK(got >= 0.0);
  }
}

TEST_CASE("mahalanobis_sq is zero exactly at the mean and positive elsewhere") {
  Xoshiro256 rng(23);
  const Eigen::MatrixXd spd = random_spd(rng, 5);
  const Eigen::VectorXd mean = random_matrix(rng, 5, 1);
  auto g = class_gaussian_from_cov<double>(0, mean, spd);
  CHECK(mahalanobis_sq(mean, g) == 0.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::VectorXd x = random_matrix(rng, 5, 1);
    const double d = mahalanobis_sq(x, g);
    if ((x - mean).norm() > 1e-10) CHECK(d > 0.0);
  }

  ClassGaussian<double> unfactorized;
  unfactorized.mean = mean;
  CHECK_THROWS_AS(mahalanobis_sq(mean, unfactorized), Error);
}

TEST_CASE("build_class_gaussian stays positive definite on degenerate input") {
  // single sample at high shrinkage
  Xoshiro256 rng(29);
  const Eigen::MatrixXd one = random_matrix(rng, 8, 1);
  ShrinkageParams strong{500.0, 300.0, ShrinkageConvention::kFecamStyle};
  const auto single = build_class_gaussian(one, strong, 0);
  CHECK(cam_oracle::min_eigenvalue(single.shrunk_cov) > 0.0);
  CHECK(single.has_factorization());

  // sixteen identical points: rank-0 covariance must not fail
  Eigen::MatrixXd same(2, 16);
  for (Index i = 0; i < 16; ++i) same.col(i) = Eigen::Vector2d(0.3, -1.7);
  const auto degenerate = build_class_gaussian(same, strong, 1);
  CHECK(cam_oracle::min_eigenvalue(degenerate.shrunk_cov) > 0.0);

  // factor reconstructs the covariance
  const Eigen::MatrixXd recon =
      single.chol_lower * single.chol_lower.transpose();
  CHECK((recon - single.shrunk_cov).norm() <= 1e-8 * single.shrunk_cov.norm());
}

TEST_CASE("build_class_gaussian never fails for positive gamma1") {
  Xoshiro256 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const Index d = 1 + static_cast<Index>(rng.below(12));
    const Index n = 1 + static_cast<Index>(rng.below(20));
    const Eigen::MatrixXd samples = random_matrix(rng, d, n);
    ShrinkageParams params{0.1 + rng.uniform() * 500.0, rng.uniform() * 100.0,
                           ShrinkageConvention::kFecamStyle};
    const auto g = build_class_gaussian(samples, params, trial);
    CHECK(g.has_factorization());
    CHECK(g.sample_count == n);
  }
}

TEST_CASE("build_class_gaussian separates synthetic classes") {
  // distance to the own class mean should be smaller on average
  Xoshiro256 rng(37);
  const Index d = 6;
  const Eigen::VectorXd mu_a = Eigen::VectorXd::Constant(d, 2.0);
  const Eigen::VectorXd mu_b = Eigen::VectorXd::Constant(d, -2.0);
  Eigen::MatrixXd a(d, 4), b(d, 4);
  for (Index i = 0; i < 4; ++i) {
    a.col(i) = mu_a + 0.3 * random_matrix(rng, d, 1);
    b.col(i) = mu_b + 0.3 * random_matrix(rng, d, 1);
  }
  ShrinkageParams params{1.0, 0.5, ShrinkageConvention::kFecamStyle};
  const auto ga = build_class_gaussian(a, params, 0);
  const auto gb = build_class_gaussian(b, params, 1);
  double own = 0.0, cross = 0.0;
  for (Index i = 0; i < 4; ++i) {
    own += mahalanobis_sq(a.col(i), ga);
    cross += mahalanobis_sq(a.col(i), gb);
  }
  CHECK(own < cross);
}

TEST_CASE("literal convention failures surface as CholeskyFailure") {
  Xoshiro256 rng(41);
  Eigen::MatrixXd samples = random_matrix(rng, 2, 10);
  ShrinkageParams params{0.0, 5.0, ShrinkageConvention::kLiteral};
  CHECK_THROWS_AS(build_class_gaussian(samples, params, 0), Error);
  try {
    build_class_gaussian(samples, params, 0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCholeskyFailure);
  }
}
