#ifndef CAM_LOSSES_HPP_
#define CAM_LOSSES_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "cam/classifier.hpp"
#include "cam/gaussian.hpp"
#include "cam/types.hpp"

namespace cam {

template <typename S>
struct ClsLossResult {
  S value = S(0);
  std::vector<Matrix<S>> prototype_grad;  // same shape as the bank's heads
  Matrix<S> feature_grad;                 // D x N, for the adapter path
};

template <typename S>
struct IntraLossResult {
  S value = S(0);
  Matrix<S> feature_grad;  // D x N
};

template <typename S>
struct TextSepLossResult {
  S value = S(0);
  std::vector<Matrix<S>> prototype_grad;
};

namespace detail {

template <typename S>
void check_batch(const Matrix<S>& features, const std::vector<int>& labels,
                 Index class_count) {
  if (features.cols() == 0)
    throw Error(ErrorCode::kEmptyClass, "empty batch");
  if (static_cast<Index>(labels.size()) != features.cols())
    throw Error(ErrorCode::kDimMismatch, "one label per feature column required");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || static_cast<Index>(labels[i]) >= class_count)
      throw Error(ErrorCode::kLabelOutOfRange,
                  "label " + std::to_string(labels[i]) + " at batch index " +
                      std::to_string(i) + " outside [0, " +
                      std::to_string(class_count) + ")");
}

}  // namespace detail

/// Classification loss: per head, the batch mean of -log p(y_i | f_i) with
/// squared-Euclidean training distance (the covariance is not used while
/// optimizing); the head losses are summed. Gradients are the exact
/// softmax-cross-entropy chain through s_y = tau / (d_y + epsilon).
template <typename S>
ClsLossResult<S> loss_cls(const Matrix<S>& features,
                          const std::vector<int>& labels,
                          const PrototypeBank<S>& bank, S tau, S epsilon) {
  const Index c = bank.class_count();
  const Index n = features.cols();
  detail::check_batch(features, labels, c);
  if (features.rows() != bank.dim())
    throw Error(ErrorCode::kDimMismatch,
                "feature dimension does not match prototype dimension");
  if (!(tau > S(0)))
    throw Error(ErrorCode::kInvalidArgument, "tau must be positive");

  ClsLossResult<S> res;
  res.feature_grad = Matrix<S>::Zero(features.rows(), n);
  res.prototype_grad.reserve(static_cast<std::size_t>(bank.head_count()));
  const S inv_n = S(1) / static_cast<S>(n);

  for (Index h = 0; h < bank.head_count(); ++h) {
    const Matrix<S>& protos = bank.heads[static_cast<std::size_t>(h)];
    Matrix<S> pgrad = Matrix<S>::Zero(protos.rows(), protos.cols());
    S head_loss = S(0);
    for (Index i = 0; i < n; ++i) {
      const auto f = features.col(i);
      const int label = labels[static_cast<std::size_t>(i)];
      const Vector<S> d = euclidean_sq_distances(f, protos);
      const Vector<S> logits = tau / (d.array() + epsilon);
      // -log softmax(logits)[label], computed through log-sum-exp
      const S max_logit = logits.maxCoeff();
      const S lse =
          max_logit + std::log((logits.array() - max_logit).exp().sum());
      head_loss += (lse - logits(label)) * inv_n;

      const Vector<S> p = softmax(logits);
      for (Index y = 0; y < c; ++y) {
        S q = p(y) - (y == label ? S(1) : S(0));   // dLoss/dLogit
        q *= -tau / ((d(y) + epsilon) * (d(y) + epsilon));  // dLogit/dDist
        q *= inv_n;
        // dDist/dProto = 2(u - f), dDist/dFeature = 2(f - u)
        pgrad.col(y) += q * S(2) * (protos.col(y) - f);
        res.feature_grad.col(i) += q * S(2) * (f - protos.col(y));
      }
    }
    res.value += head_loss;
    res.prototype_grad.push_back(std::move(pgrad));
  }
  return res;
}

/// Intra-class contraction under each class's frozen covariance:
/// sum_i (f_i - c_{y_i})^T cov_{y_i}^-1 (f_i - c_{y_i}). Passing identity
/// gaussians reduces it to the plain squared-Euclidean pull toward the
/// centers. Gradient w.r.t. f_i is 2 cov^-1 (f_i - c_{y_i}).
template <typename S>
IntraLossResult<S> loss_intra(const Matrix<S>& features,
                              const std::vector<int>& labels,
                              const Matrix<S>& centers,
                              const std::vector<ClassGaussian<S>>& gaussians) {
  const Index c = centers.cols();
  detail::check_batch(features, labels, c);
  if (centers.rows() != features.rows())
    throw Error(ErrorCode::kDimMismatch,
                "center dimension does not match feature dimension");
  if (static_cast<Index>(gaussians.size()) != c)
    throw Error(ErrorCode::kMissingGaussians,
                "one frozen gaussian per class required");

  IntraLossResult<S> res;
  res.feature_grad.resize(features.rows(), features.cols());
  for (Index i = 0; i < features.cols(); ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    const auto& g = gaussians[static_cast<std::size_t>(label)];
    if (!g.has_factorization())
      throw Error(ErrorCode::kMissingGaussians,
                  "no frozen gaussian for observed label " +
                      std::to_string(label));
    const Vector<S> diff = features.col(i) - centers.col(label);
    const Vector<S> solved = covariance_solve(g, diff);
    res.value += diff.dot(solved);
    res.feature_grad.col(i) = S(2) * solved;
  }
  return res;
}

/// Prototype separation: minus the sum of squared distances over all
/// unordered pairs of the M*C unit-normalized prototypes. With n unit
/// vectors and their sum s, the pair sum telescopes:
///   -sum_{i<j} ||u_i - u_j||^2 = ||s||^2 - n^2,
/// so the loss lies in [-n^2, 0] and every pair term in [-4, 0]. Gradients
/// flow through the normalization.
template <typename S>
TextSepLossResult<S> loss_text_sep(const PrototypeBank<S>& bank) {
  const Index m = bank.head_count();
  const Index c = bank.class_count();
  const Index n = m * c;
  if (n < 2)
    throw Error(ErrorCode::kTooFewPrototypes,
                "prototype separation needs at least two prototypes");

  Matrix<S> unit(bank.dim(), n);
  Matrix<S> norms(m, c);
  for (Index h = 0; h < m; ++h) {
    const Matrix<S>& protos = bank.heads[static_cast<std::size_t>(h)];
    for (Index y = 0; y < c; ++y) {
      const S norm = protos.col(y).norm();
      if (!(norm > S(0)))
        throw Error(ErrorCode::kNonFiniteLoss,
                    "cannot normalize a zero prototype");
      norms(h, y) = norm;
      unit.col(h * c + y) = protos.col(y) / norm;
    }
  }

  const Vector<S> sum = unit.rowwise().sum();
  TextSepLossResult<S> res;
  res.value = sum.squaredNorm() - static_cast<S>(n) * static_cast<S>(n);
  res.prototype_grad.reserve(static_cast<std::size_t>(m));
  for (Index h = 0; h < m; ++h) {
    Matrix<S> pgrad(bank.dim(), c);
    for (Index y = 0; y < c; ++y) {
      const auto u = unit.col(h * c + y);
      // d||s||^2/du_i through the normalization jacobian (I - uu^T)/||raw||
      pgrad.col(y) = S(2) / norms(h, y) * (sum - u.dot(sum) * u);
    }
    res.prototype_grad.push_back(std::move(pgrad));
  }
  return res;
}

/// Weighted total; the decomposition invariant is definitional here.
inline LossBreakdown total_loss(double cls, double intra, double text_sep,
                                const LossWeights& weights) {
  LossBreakdown out;
  out.cls = cls;
  out.intra = intra;
  out.text_sep = text_sep;
  out.total = cls + weights.alpha * intra + weights.beta * text_sep;
  if (!std::isfinite(out.total))
    throw Error(ErrorCode::kNonFiniteLoss,
                "total loss is not finite (cls=" + std::to_string(cls) +
                    ", intra=" + std::to_string(intra) +
                    ", text_sep=" + std::to_string(text_sep) + ")");
  return out;
}

}  // namespace cam

#endif  // CAM_LOSSES_HPP_
