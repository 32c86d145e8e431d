#include "cam/dataset.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cam/error.hpp"
#include "cam/rng.hpp"

namespace cam {

std::vector<Index> EmbeddingSet::class_indices(Index cls) const {
  std::vector<Index> out;
  for (Index i = 0; i < size(); ++i)
    if (labels[static_cast<std::size_t>(i)] == cls) out.push_back(i);
  return out;
}

void EmbeddingSet::validate() const {
  const Index n = size();
  const Index c = class_count();
  if (n == 0) throw Error(ErrorCode::kEmptyClass, "embedding set is empty");
  if (c == 0) throw Error(ErrorCode::kFormatError, "no class names");
  if (static_cast<Index>(labels.size()) != n)
    throw Error(ErrorCode::kFormatError, "label count does not match samples");
  if (n < c)
    throw Error(ErrorCode::kFormatError,
                "fewer samples than classes (" + std::to_string(n) + " < " +
                    std::to_string(c) + ")");
  std::vector<Index> counts(static_cast<std::size_t>(c), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<Index>(labels[i]) >= c)
      throw Error(ErrorCode::kLabelOutOfRange,
                  "label " + std::to_string(labels[i]) + " of sample " +
                      std::to_string(i) + " outside [0, " + std::to_string(c) +
                      ")");
    ++counts[static_cast<std::size_t>(labels[i])];
  }
  for (Index y = 0; y < c; ++y)
    if (counts[static_cast<std::size_t>(y)] == 0)
      throw Error(ErrorCode::kEmptyClass,
                  "class " + std::to_string(y) + " has no samples");
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < dim(); ++j)
      if (!std::isfinite(features(j, i)))
        throw Error(ErrorCode::kFormatError,
                    "non-finite feature at row " + std::to_string(i) +
                        ", column " + std::to_string(j));
}

void EmbeddingSet::l2_normalize() {
  for (Index i = 0; i < size(); ++i) {
    const float norm = features.col(i).norm();
    if (norm > 0.0f) features.col(i) /= norm;
  }
  normalized = true;
}

bool operator==(const EmbeddingSet& a, const EmbeddingSet& b) {
  return a.normalized == b.normalized && a.labels == b.labels &&
         a.class_names == b.class_names && a.features.rows() == b.features.rows() &&
         a.features.cols() == b.features.cols() && a.features == b.features;
}

FewShotTask sample_few_shot(const EmbeddingSet& set, int shots,
                            std::uint64_t seed) {
  set.validate();
  if (shots < 1)
    throw Error(ErrorCode::kInvalidArgument, "shots must be at least 1");

  std::vector<Index> train_idx;
  std::vector<char> in_train(static_cast<std::size_t>(set.size()), 0);
  for (Index y = 0; y < set.class_count(); ++y) {
    std::vector<Index> pool = set.class_indices(y);
    if (static_cast<int>(pool.size()) <= shots)
      throw Error(ErrorCode::kInsufficientSamples,
                  "class " + std::to_string(y) + " has " +
                      std::to_string(pool.size()) + " samples, needs more than " +
                      std::to_string(shots));
    Xoshiro256 rng(seed, kStreamSplit | static_cast<std::uint64_t>(y));
    // partial Fisher-Yates: after k swaps the first k entries are the draw
    for (int k = 0; k < shots; ++k) {
      const std::size_t j = static_cast<std::size_t>(k) +
                            rng.below(pool.size() - static_cast<std::size_t>(k));
      std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
    }
    for (int k = 0; k < shots; ++k) {
      train_idx.push_back(pool[static_cast<std::size_t>(k)]);
      in_train[static_cast<std::size_t>(pool[static_cast<std::size_t>(k)])] = 1;
    }
  }
  std::sort(train_idx.begin(), train_idx.end());

  auto subset = [&set](const std::vector<Index>& idx) {
    EmbeddingSet out;
    out.features.resize(set.dim(), static_cast<Index>(idx.size()));
    out.labels.reserve(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      out.features.col(static_cast<Index>(k)) = set.features.col(idx[k]);
      out.labels.push_back(set.labels[static_cast<std::size_t>(idx[k])]);
    }
    out.class_names = set.class_names;
    out.normalized = set.normalized;
    return out;
  };

  std::vector<Index> test_idx;
  for (Index i = 0; i < set.size(); ++i)
    if (!in_train[static_cast<std::size_t>(i)]) test_idx.push_back(i);

  FewShotTask task;
  task.train = subset(train_idx);
  task.test = subset(test_idx);
  task.shots = shots;
  task.seed = seed;
  return task;
}

void SyntheticSpec::validate() const {
  if (class_count < 2)
    throw Error(ErrorCode::kInvalidArgument, "need at least two classes");
  if (dim < 1) throw Error(ErrorCode::kInvalidArgument, "dimension must be positive");
  if (samples_per_class < 1)
    throw Error(ErrorCode::kInvalidArgument, "samples per class must be positive");
  if (cond_min < 1.0 || cond_max < cond_min)
    throw Error(ErrorCode::kInvalidArgument,
                "condition-number range must satisfy 1 <= min <= max");
  if (!(mean_scale > 0.0) || !(covariance_scale > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "scales must be positive");
}

namespace {

Eigen::VectorXd draw_normal_vector(Xoshiro256& rng, Index d) {
  Eigen::VectorXd v(d);
  for (Index i = 0; i < d; ++i) v(i) = rng.normal();
  return v;
}

// Random orthogonal matrix: QR of a gaussian matrix with the sign of R's
// diagonal fixed, which makes the factorization unique.
Eigen::MatrixXd draw_orthogonal(Xoshiro256& rng, Index d) {
  Eigen::MatrixXd a(d, d);
  for (Index j = 0; j < d; ++j) a.col(j) = draw_normal_vector(rng, d);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace

SyntheticData gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const Index c = spec.class_count;
  const Index d = spec.dim;
  const Index per_class = spec.samples_per_class;

  SyntheticData data;
  data.set.features.resize(d, c * per_class);
  data.set.labels.reserve(static_cast<std::size_t>(c * per_class));
  data.set.normalized = false;

  for (Index y = 0; y < c; ++y) {
    Xoshiro256 mean_rng(spec.seed, kStreamGenMean | static_cast<std::uint64_t>(y));
    Eigen::VectorXd mu = draw_normal_vector(mean_rng, d);
    mu *= spec.mean_scale / mu.norm();

    Xoshiro256 cov_rng(spec.seed, kStreamGenCov | static_cast<std::uint64_t>(y));
    const double cond =
        spec.cond_min + cov_rng.uniform() * (spec.cond_max - spec.cond_min);
    Eigen::VectorXd eigs(d);
    for (Index i = 0; i < d; ++i)
      eigs(i) = d > 1 ? std::pow(cond, static_cast<double>(i) /
                                           static_cast<double>(d - 1))
                      : 1.0;
    eigs *= spec.covariance_scale * spec.covariance_scale / eigs.sum();
    const Eigen::MatrixXd q = draw_orthogonal(cov_rng, d);

    // sigma = (Q sqrt(L)) (Q sqrt(L))^T, exactly symmetric PSD by build
    const Eigen::MatrixXd half = q * eigs.cwiseSqrt().asDiagonal();
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(d, d);
    sigma.selfadjointView<Eigen::Lower>().rankUpdate(half);
    sigma = sigma.selfadjointView<Eigen::Lower>();

    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
      throw Error(ErrorCode::kCholeskyFailure,
                  "generated covariance is not positive definite");
    const Eigen::MatrixXd chol = llt.matrixL();

    Xoshiro256 sample_rng(spec.seed,
                          kStreamGenSample | static_cast<std::uint64_t>(y));
    for (Index k = 0; k < per_class; ++k) {
      const Eigen::VectorXd x = mu + chol * draw_normal_vector(sample_rng, d);
      data.set.features.col(y * per_class + k) = x.cast<float>();
      data.set.labels.push_back(static_cast<std::int32_t>(y));
    }

    data.oracle.means.push_back(std::move(mu));
    data.oracle.covariances.push_back(std::move(sigma));
  }

  data.set.class_names.reserve(static_cast<std::size_t>(c));
  for (Index y = 0; y < c; ++y)
    data.set.class_names.push_back("class_" + std::to_string(y));
  data.set.validate();
  return data;
}

BayesRule::BayesRule(const GaussianMixture& mixture) {
  if (mixture.means.empty())
    throw Error(ErrorCode::kMissingGaussians, "oracle has no classes");
  if (mixture.covariances.size() != mixture.means.size())
    throw Error(ErrorCode::kMissingGaussians,
                "oracle needs one covariance per mean");
  for (std::size_t y = 0; y < mixture.means.size(); ++y) {
    const Eigen::LLT<Eigen::MatrixXd> llt(mixture.covariances[y]);
    if (llt.info() != Eigen::Success)
      throw Error(ErrorCode::kCholeskyFailure, "singular oracle covariance");
    chol_.push_back(llt.matrixL());
    log_det_.push_back(2.0 * chol_.back().diagonal().array().log().sum());
    means_.push_back(mixture.means[y]);
  }
}

int BayesRule::classify(const Eigen::VectorXd& x) const {
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t y = 0; y < means_.size(); ++y) {
    const Eigen::VectorXd z =
        chol_[y].triangularView<Eigen::Lower>().solve(x - means_[y]);
    const double score = -0.5 * (z.squaredNorm() + log_det_[y]);
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(y);
    }
  }
  return best;
}

int bayes_oracle(const Eigen::VectorXd& x, const GaussianMixture& mixture) {
  return BayesRule(mixture).classify(x);
}

}  // namespace cam
