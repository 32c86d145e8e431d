#ifndef CAM_CLASSIFIER_HPP_
#define CAM_CLASSIFIER_HPP_

#include <cmath>
#include <string>
#include <type_traits>
#include <vector>

#include "cam/gaussian.hpp"
#include "cam/types.hpp"

namespace cam {

enum class DistanceMode { kCosine, kEuclidean, kMahalanobis };

inline const char* distance_mode_name(DistanceMode mode) {
  switch (mode) {
    case DistanceMode::kCosine: return "cosine";
    case DistanceMode::kEuclidean: return "euclidean";
    case DistanceMode::kMahalanobis: return "mahalanobis";
  }
  return "?";
}

/// M learnable prototype vectors per class; heads[m].col(y) is head m's
/// prototype for class y. All heads share one dimension.
template <typename S>
struct PrototypeBank {
  std::vector<Matrix<S>> heads;
  bool normalized = true;  // prototypes kept unit-norm by the trainer

  Index head_count() const { return static_cast<Index>(heads.size()); }
  Index class_count() const { return heads.empty() ? 0 : heads.front().cols(); }
  Index dim() const { return heads.empty() ? 0 : heads.front().rows(); }
};

using PrototypeBankXd = PrototypeBank<double>;

template <typename S>
struct Prediction {
  Vector<S> probabilities;            // ensemble-averaged, sums to one
  int chosen_class = -1;              // argmax, lowest index wins ties
  Matrix<S> per_head_probabilities;   // head m in row m
};

/// Numerically stable softmax: subtracts the max logit before exponentiating.
template <typename Derived>
Vector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using S = typename Derived::Scalar;
  Vector<S> p = (logits.array() - logits.maxCoeff()).exp();
  p /= p.sum();
  return p;
}

template <typename Derived>
int argmax_lowest(const Eigen::MatrixBase<Derived>& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return static_cast<int>(best);
}

/// Squared Euclidean distances from f to every column of protos.
template <typename S, typename Derived>
Vector<S> euclidean_sq_distances(const Eigen::MatrixBase<Derived>& f,
                                 const Matrix<S>& protos) {
  Vector<S> d(protos.cols());
  for (Index y = 0; y < protos.cols(); ++y)
    d(y) = (f.derived() - protos.col(y)).squaredNorm();
  return d;
}

template <typename S>
void require_gaussians(const std::vector<ClassGaussian<S>>* gaussians,
                       Index class_count) {
  if (gaussians == nullptr ||
      static_cast<Index>(gaussians->size()) != class_count)
    throw Error(ErrorCode::kMissingGaussians,
                "mahalanobis mode needs one fitted gaussian per class");
  for (const auto& g : *gaussians)
    if (!g.has_factorization())
      throw Error(ErrorCode::kMissingGaussians,
                  "class " + std::to_string(g.class_id) +
                      " gaussian has no factorization");
}

/// Distances from f to each class for one head. Cosine "distance" is the
/// negated cosine similarity, so argmin stays consistent across modes.
template <typename S, typename Derived>
Vector<S> class_distances(
    const Eigen::MatrixBase<Derived>& f, const PrototypeBank<S>& bank,
    Index head, DistanceMode mode,
    std::type_identity_t<const std::vector<ClassGaussian<S>>*> gaussians) {
  if (head < 0 || head >= bank.head_count())
    throw Error(ErrorCode::kInvalidArgument, "head index out of range");
  const Matrix<S>& protos = bank.heads[static_cast<std::size_t>(head)];
  if (f.size() != protos.rows())
    throw Error(ErrorCode::kDimMismatch,
                "feature dimension does not match prototype dimension");
  const Index c = protos.cols();
  Vector<S> d(c);
  switch (mode) {
    case DistanceMode::kEuclidean:
      return euclidean_sq_distances(f, protos);
    case DistanceMode::kMahalanobis:
      require_gaussians(gaussians, c);
      for (Index y = 0; y < c; ++y)
        d(y) = mahalanobis_sq(f, protos.col(y),
                              (*gaussians)[static_cast<std::size_t>(y)]);
      return d;
    case DistanceMode::kCosine:
      for (Index y = 0; y < c; ++y) {
        const S denom = f.norm() * protos.col(y).norm();
        d(y) = denom > S(0) ? -f.derived().dot(protos.col(y)) / denom : S(0);
      }
      return d;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown distance mode");
}

/// Per-class probabilities for a single head. Euclidean/Mahalanobis logits
/// are tau / (distance + epsilon); cosine logits are cos(f, u_y) / tau.
template <typename S, typename Derived>
Vector<S> predict_proba(
    const Eigen::MatrixBase<Derived>& f, const PrototypeBank<S>& bank,
    Index head, DistanceMode mode,
    std::type_identity_t<const std::vector<ClassGaussian<S>>*> gaussians,
    std::type_identity_t<S> tau, std::type_identity_t<S> epsilon) {
  if (!(tau > S(0)))
    throw Error(ErrorCode::kInvalidArgument, "tau must be positive");
  if (epsilon < S(0))
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be non-negative");
  const Vector<S> d = class_distances(f, bank, head, mode, gaussians);
  Vector<S> logits(d.size());
  if (mode == DistanceMode::kCosine) {
    logits = -d / tau;  // d holds the negated cosine similarity
  } else {
    logits = tau / (d.array() + epsilon);
  }
  return softmax(logits);
}

/// Averages the M per-head probability vectors and renormalizes the mean.
template <typename S, typename Derived>
Prediction<S> ensemble_predict(
    const Eigen::MatrixBase<Derived>& f, const PrototypeBank<S>& bank,
    DistanceMode mode,
    std::type_identity_t<const std::vector<ClassGaussian<S>>*> gaussians,
    std::type_identity_t<S> tau, std::type_identity_t<S> epsilon) {
  const Index m = bank.head_count();
  if (m < 1)
    throw Error(ErrorCode::kTooFewPrototypes, "prototype bank has no heads");
  Prediction<S> pred;
  pred.per_head_probabilities.resize(m, bank.class_count());
  for (Index h = 0; h < m; ++h)
    pred.per_head_probabilities.row(h) =
        predict_proba(f, bank, h, mode, gaussians, tau, epsilon).transpose();
  pred.probabilities = pred.per_head_probabilities.colwise().mean().transpose();
  // Mean of unit-sum vectors; anything outside tolerance means a numeric fault.
  const S total = pred.probabilities.sum();
  if (!std::isfinite(static_cast<double>(total)) ||
      std::abs(static_cast<double>(total) - 1.0) > 1e-9)
    throw Error(ErrorCode::kNonFiniteLoss,
                "ensemble probabilities do not sum to one");
  pred.chosen_class = argmax_lowest(pred.probabilities);
  return pred;
}

/// Bayes decision rule: the class with the highest ensemble probability,
/// which for a single head is the class at minimum distance (the logit map
/// is strictly decreasing in distance).
template <typename S, typename Derived>
int classify(const Eigen::MatrixBase<Derived>& f, const PrototypeBank<S>& bank,
             DistanceMode mode,
             std::type_identity_t<const std::vector<ClassGaussian<S>>*> gaussians,
             std::type_identity_t<S> tau = S(1),
             std::type_identity_t<S> epsilon = S(1e-6)) {
  return ensemble_predict(f, bank, mode, gaussians, tau, epsilon).chosen_class;
}

}  // namespace cam

#endif  // CAM_CLASSIFIER_HPP_
