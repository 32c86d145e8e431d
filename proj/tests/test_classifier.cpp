#include "cam/classifier.hpp"

#include <cmath>

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

PrototypeBankXd bank_from(const Eigen::MatrixXd& protos, int heads = 1) {
  PrototypeBankXd bank;
  for (int m = 0; m < heads; ++m) bank.heads.push_back(protos);
  return bank;
}

std::vector<ClassGaussianXd> identity_gaussians(Index c, Index d) {
  std::vector<ClassGaussianXd> out;
  for (Index y = 0; y < c; ++y)
    out.push_back(class_gaussian_from_cov<double>(
        static_cast<int>(y), Eigen::VectorXd::Zero(d),
        Eigen::MatrixXd::Identity(d, d)));
  return out;
}

std::vector<ClassGaussianXd> random_gaussians(Xoshiro256& rng, Index c, Index d) {
  std::vector<ClassGaussianXd> out;
  for (Index y = 0; y < c; ++y) {
    const Eigen::MatrixXd a = random_matrix(rng, d, d);
    Eigen::MatrixXd spd = Eigen::MatrixXd::Zero(d, d);
    spd.selfadjointView<Eigen::Lower>().rankUpdate(a);
    spd = spd.selfadjointView<Eigen::Lower>();
    spd.diagonal().array() += 0.4;
    out.push_back(class_gaussian_from_cov<double>(
        static_cast<int>(y), random_matrix(rng, d, 1), spd));
  }
  return out;
}

}  // namespace

TEST_CASE("predict_proba is uniform for equidistant prototypes") {
  Eigen::MatrixXd protos(2, 2);
  protos << 1, -1, 0, 0;
  const auto bank = bank_from(protos);
  const Eigen::Vector2d f(0, 0.5);
  const Eigen::VectorXd p =
      predict_proba(f, bank, 0, DistanceMode::kEuclidean, nullptr, 1.0, 1e-6);
  CHECK(p(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p(1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("predict_proba matches the scalar softmax hand-oracle") {
  // squared distances 1 and 2 at tau=1, epsilon=0: logits 1 and 0.5
  Eigen::MatrixXd protos(1, 2);
  protos << 1.0, std::sqrt(2.0);
  const auto bank = bank_from(protos);
  const Eigen::VectorXd f = Eigen::VectorXd::Zero(1);
  const Eigen::VectorXd p =
      predict_proba(f, bank, 0, DistanceMode::kEuclidean, nullptr, 1.0, 0.0);
  const auto expected = cam_oracle::scalar_softmax({1.0, 0.5});
  CHECK(p(0) == doctest::Approx(expected[0]).epsilon(1e-12));
  CHECK(p(0) == doctest::Approx(0.62246).epsilon(1e-4));
}

TEST_CASE("predict_proba survives a vanishing distance") {
  Eigen::MatrixXd protos(2, 2);
  protos << 1, -1, 0, 0;
  const auto bank = bank_from(protos);
  const Eigen::VectorXd p = predict_proba(
      Eigen::Vector2d(1, 0), bank, 0, DistanceMode::kEuclidean, nullptr, 1.0,
      1e-6);
  CHECK(std::isfinite(p.sum()));
  CHECK(p(0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("predict_proba validates its inputs") {
  Eigen::MatrixXd protos(2, 2);
  protos << 1, -1, 0, 0;
  const auto bank = bank_from(protos);
  const Eigen::Vector2d f(0, 0);
  CHECK_THROWS_AS(
      predict_proba(f, bank, 0, DistanceMode::kMahalanobis, nullptr, 1.0, 1e-6),
      Error);
  CHECK_THROWS_AS(
      predict_proba(f, bank, 0, DistanceMode::kEuclidean, nullptr, 0.0, 1e-6),
      Error);
  CHECK_THROWS_AS(
      predict_proba(f, bank, 2, DistanceMode::kEuclidean, nullptr, 1.0, 1e-6),
      Error);
}

TEST_CASE("classify picks the class at its own mean and breaks ties low") {
  Xoshiro256 rng(5);
  const Index d = 4, c = 3;
  auto gaussians = random_gaussians(rng, c, d);
  Eigen::MatrixXd protos(d, c);
  for (Index y = 0; y < c; ++y)
    protos.col(y) = gaussians[static_cast<std::size_t>(y)].mean;
  const auto bank = bank_from(protos);
  CHECK(classify(Eigen::VectorXd(gaussians[2].mean), bank,
                 DistanceMode::kMahalanobis, &gaussians) == 2);

  // equidistant: lower index wins
  Eigen::MatrixXd sym(2, 2);
  sym << 1, -1, 0, 0;
  const auto sym_bank = bank_from(sym);
  CHECK(classify(Eigen::Vector2d(0, 1), sym_bank, DistanceMode::kEuclidean,
                 nullptr) == 0);
}

TEST_CASE("classify agrees with the log-det-free likelihood oracle") {
  Xoshiro256 rng(7);
  int agreements = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    const Index d = 2 + static_cast<Index>(rng.below(7));  // up to 8
    const Index c = 2 + static_cast<Index>(rng.below(4));  // up to 5
    auto gaussians = random_gaussians(rng, c, d);
    Eigen::MatrixXd protos(d, c);
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> covs;
    for (Index y = 0; y < c; ++y) {
      protos.col(y) = gaussians[static_cast<std::size_t>(y)].mean;
      means.push_back(gaussians[static_cast<std::size_t>(y)].mean);
      covs.push_back(gaussians[static_cast<std::size_t>(y)].shrunk_cov);
    }
    const auto bank = bank_from(protos);
    const Eigen::VectorXd x = random_matrix(rng, d, 1);
    const int got = classify(x, bank, DistanceMode::kMahalanobis, &gaussians);
    const int expected =
        cam_oracle::likelihood_bayes(x, means, covs, /*include_log_det=*/false);
    agreements += got == expected;
  }
  CHECK(agreements == trials);
}

TEST_CASE("ensemble_predict degenerates correctly") {
  Xoshiro256 rng(11);
  const Eigen::MatrixXd protos = random_matrix(rng, 4, 3);
  const Eigen::VectorXd f = random_matrix(rng, 4, 1);

  const auto single = bank_from(protos, 1);
  const auto pred1 =
      ensemble_predict(f, single, DistanceMode::kEuclidean, nullptr, 1.0, 1e-6);
  const Eigen::VectorXd direct =
      predict_proba(f, single, 0, DistanceMode::kEuclidean, nullptr, 1.0, 1e-6);
  CHECK(pred1.probabilities == direct);

  const auto twins = bank_from(protos, 2);
  const auto pred2 =
      ensemble_predict(f, twins, DistanceMode::kEuclidean, nullptr, 1.0, 1e-6);
  CHECK(pred2.probabilities == direct);
}

TEST_CASE("ensemble_predict averages the per-head probabilities") {
  Xoshiro256 rng(13);
  PrototypeBankXd bank;
  for (int m = 0; m < 4; ++m) bank.heads.push_back(random_matrix(rng, 3, 4));
  const Eigen::VectorXd f = random_matrix(rng, 3, 1);
  const auto pred =
      ensemble_predict(f, bank, DistanceMode::kEuclidean, nullptr, 1.0, 1e-6);

  Eigen::VectorXd expected = Eigen::VectorXd::Zero(4);
  for (Index m = 0; m < 4; ++m)
    expected +=
        predict_proba(f, bank, m, DistanceMode::kEuclidean, nullptr, 1.0, 1e-6);
  expected /= 4.0;
  CHECK((pred.probabilities - expected).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(pred.probabilities.sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(pred.per_head_probabilities.rows() == 4);
}

TEST_CASE("argmax of probabilities equals argmin of distances per head") {
  Xoshiro256 rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const Index d = 2 + static_cast<Index>(rng.below(6));
    const Index c = 2 + static_cast<Index>(rng.below(5));
    auto gaussians = random_gaussians(rng, c, d);
    PrototypeBankXd bank;
    bank.heads.push_back(random_matrix(rng, d, c));
    const Eigen::VectorXd f = random_matrix(rng, d, 1);
    const double tau = 0.1 + rng.uniform() * 5.0;
    const double epsilon = 1e-8 + rng.uniform() * 0.1;
    for (DistanceMode mode : {DistanceMode::kCosine, DistanceMode::kEuclidean,
                              DistanceMode::kMahalanobis}) {
      const Eigen::VectorXd dist = class_distances(f, bank, 0, mode, &gaussians);
      const Eigen::VectorXd p =
          predict_proba(f, bank, 0, mode, &gaussians, tau, epsilon);
      Index lowest = 0;
      for (Index y = 1; y < c; ++y)
        if (dist(y) < dist(lowest)) lowest = y;
      CHECK(argmax_lowest(p) == static_cast<int>(lowest));
    }
  }
}

TEST_CASE("mahalanobis with identity covariance equals euclidean") {
  Xoshiro256 rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    const Index d = 2 + static_cast<Index>(rng.below(8));
    const Index c = 2 + static_cast<Index>(rng.below(5));
    const auto gaussians = identity_gaussians(c, d);
    const auto bank = bank_from(random_matrix(rng, d, c));
    const Eigen::VectorXd f = random_matrix(rng, d, 1);
    const Eigen::VectorXd pm = predict_proba(
        f, bank, 0, DistanceMode::kMahalanobis, &gaussians, 1.0, 1e-6);
    const Eigen::VectorXd pe =
        predict_proba(f, bank, 0, DistanceMode::kEuclidean, nullptr, 1.0, 1e-6);
    CHECK((pm - pe).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("permuting the class order permutes the probabilities") {
  Xoshiro256 rng(23);
  const Index d = 5, c = 4;
  auto gaussians = random_gaussians(rng, c, d);
  const Eigen::MatrixXd protos = random_matrix(rng, d, c);
  const auto bank = bank_from(protos, 2);
  const Eigen::VectorXd f = random_matrix(rng, d, 1);

  const std::vector<Index> perm = {2, 0, 3, 1};
  PrototypeBankXd permuted_bank;
  std::vector<ClassGaussianXd> permuted_gaussians;
  for (const auto& head : bank.heads) {
    Eigen::MatrixXd p(d, c);
    for (Index y = 0; y < c; ++y)
      p.col(y) = head.col(perm[static_cast<std::size_t>(y)]);
    permuted_bank.heads.push_back(p);
  }
  for (Index y = 0; y < c; ++y)
    permuted_gaussians.push_back(
        gaussians[static_cast<std::size_t>(perm[static_cast<std::size_t>(y)])]);

  const auto base = ensemble_predict(f, bank, DistanceMode::kMahalanobis,
                                     &gaussians, 1.0, 1e-6);
  const auto shuffled =
      ensemble_predict(f, permuted_bank, DistanceMode::kMahalanobis,
                       &permuted_gaussians, 1.0, 1e-6);
  // softmax denominators sum in permuted order, so allow rounding slack
  for (Index y = 0; y < c; ++y)
    CHECK(std::abs(shuffled.probabilities(y) -
                   base.probabilities(perm[static_cast<std::size_t>(y)])) <=
          1e-15);
}
