#ifndef CAM_GAUSSIAN_HPP_
#define CAM_GAUSSIAN_HPP_

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cam/error.hpp"
#include "cam/types.hpp"

namespace cam {

namespace detail {

// Sum of columns [first, first+count) with a fixed left-to-right pairwise
// split at floor(count/2). The reduction tree is part of the contract:
// identical inputs sum bit-identically in any implementation of this recipe.
template <typename Derived>
Vector<typename Derived::Scalar> pairwise_colsum(
    const Eigen::MatrixBase<Derived>& samples, Index first, Index count) {
  using S = typename Derived::Scalar;
  if (count == 1) return samples.col(first);
  const Index half = count / 2;
  Vector<S> left = pairwise_colsum(samples, first, half);
  left += pairwise_colsum(samples, first + half, count - half);
  return left;
}

}  // namespace detail

/// Arithmetic mean of the sample columns.
template <typename Derived>
Vector<typename Derived::Scalar> estimate_mean(
    const Eigen::MatrixBase<Derived>& samples) {
  using S = typename Derived::Scalar;
  if (samples.cols() == 0)
    throw Error(ErrorCode::kEmptyClass, "mean of zero samples");
  Vector<S> sum = detail::pairwise_colsum(samples, 0, samples.cols());
  return sum / static_cast<S>(samples.cols());
}

/// Convenience overload for a list of feature vectors; checks that all
/// share one dimension.
template <typename S>
Vector<S> estimate_mean(const std::vector<Vector<S>>& samples) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyClass, "mean of zero samples");
  Matrix<S> stacked(samples.front().size(), static_cast<Index>(samples.size()));
  for (Index i = 0; i < stacked.cols(); ++i) {
    if (samples[static_cast<std::size_t>(i)].size() != stacked.rows())
      throw Error(ErrorCode::kDimMismatch,
                  "sample " + std::to_string(i) + " has dimension " +
                      std::to_string(samples[static_cast<std::size_t>(i)].size()) +
                      ", expected " + std::to_string(stacked.rows()));
    stacked.col(i) = samples[static_cast<std::size_t>(i)];
  }
  return estimate_mean(stacked);
}

/// Maximum-likelihood covariance (1/N) of the centered sample columns.
/// Exactly symmetric by construction (rank update on the lower triangle,
/// mirrored).
template <typename DerivedS, typename DerivedM>
Matrix<typename DerivedS::Scalar> estimate_covariance(
    const Eigen::MatrixBase<DerivedS>& samples,
    const Eigen::MatrixBase<DerivedM>& mean) {
  using S = typename DerivedS::Scalar;
  if (samples.cols() == 0)
    throw Error(ErrorCode::kEmptyClass, "covariance of zero samples");
  if (mean.size() != samples.rows())
    throw Error(ErrorCode::kDimMismatch,
                "mean dimension " + std::to_string(mean.size()) +
                    " does not match sample dimension " +
                    std::to_string(samples.rows()));
  const Vector<S> mu = mean;
  const Matrix<S> centered = samples.colwise() - mu;
  Matrix<S> cov = Matrix<S>::Zero(samples.rows(), samples.rows());
  cov.template selfadjointView<Eigen::Lower>().rankUpdate(
      centered, S(1) / static_cast<S>(samples.cols()));
  cov = cov.template selfadjointView<Eigen::Lower>();
  return cov;
}

/// Covariance shrinkage: adds scaled averages of the input's diagonal and
/// off-diagonal entries on the two masks. Which average lands on which mask
/// is set by the convention (see ShrinkageConvention). Linear in the input
/// for fixed gammas; symmetry-preserving. A zero matrix stays zero: both
/// averages vanish, so shrinkage carries no information of its own.
template <typename Derived>
Matrix<typename Derived::Scalar> shrink(const Eigen::MatrixBase<Derived>& cov,
                                        const ShrinkageParams& params) {
  using S = typename Derived::Scalar;
  require_square_symmetric(cov, "shrink input");
  const Index d = cov.rows();
  const S v_diag = cov.trace() / static_cast<S>(d);
  const S v_off =
      d > 1 ? (cov.sum() - cov.trace()) / static_cast<S>(d * (d - 1)) : S(0);

  const bool fecam = params.convention == ShrinkageConvention::kFecamStyle;
  const S diag_add = static_cast<S>(params.gamma1) * (fecam ? v_diag : v_off);
  const S off_add = static_cast<S>(params.gamma2) * (fecam ? v_off : v_diag);

  Matrix<S> out = cov + Matrix<S>::Constant(d, d, off_add);
  out.diagonal().array() += diag_add - off_add;
  return out;
}

/// Correlation normalization: out(i,j) = in(i,j) / (sqrt(in(i,i))*sqrt(in(j,j))).
/// The diagonal is set to exactly one.
template <typename Derived>
Matrix<typename Derived::Scalar> normalize_cov(
    const Eigen::MatrixBase<Derived>& cov) {
  using S = typename Derived::Scalar;
  require_square_symmetric(cov, "normalize_cov input");
  if (cov.rows() > 0 && cov.diagonal().minCoeff() <= S(0))
    throw Error(ErrorCode::kNonPositiveDiagonal,
                "covariance diagonal must be strictly positive");
  const Vector<S> sigma = cov.diagonal().cwiseSqrt();
  Matrix<S> out = cov.derived();
  out.array() /= (sigma * sigma.transpose()).array();
  out.diagonal().setOnes();
  return out;
}

/// One class's fitted distribution: mean, raw covariance, regularized and
/// normalized covariance, and its cached Cholesky factor. Immutable after
/// construction; safe to share across threads.
template <typename S>
struct ClassGaussian {
  int class_id = -1;
  Vector<S> mean;
  Matrix<S> raw_cov;
  Matrix<S> shrunk_cov;     // after shrinkage + correlation normalization
  Matrix<S> chol_lower;     // L with L*L^T = shrunk_cov; empty if not factorized
  Index sample_count = 0;

  bool has_factorization() const { return chol_lower.size() > 0; }
  Index dim() const { return mean.size(); }
};

using ClassGaussianXd = ClassGaussian<double>;

/// Factorizes `cov` and wraps it with the given mean. Throws CholeskyFailure
/// if `cov` is not positive definite.
template <typename S>
ClassGaussian<S> class_gaussian_from_cov(int class_id, Vector<S> mean,
                                         Matrix<S> cov, Index sample_count = 0) {
  require_square_symmetric(cov, "class covariance");
  if (mean.size() != cov.rows())
    throw Error(ErrorCode::kDimMismatch, "mean/covariance dimension mismatch");
  Eigen::LLT<Matrix<S>> llt(cov);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::kCholeskyFailure,
                "covariance for class " + std::to_string(class_id) +
                    " is not positive definite");
  ClassGaussian<S> g;
  g.class_id = class_id;
  g.mean = std::move(mean);
  g.shrunk_cov = cov;
  g.raw_cov = std::move(cov);
  g.chol_lower = llt.matrixL();
  g.sample_count = sample_count;
  return g;
}

/// Fits one class: mean -> MLE covariance -> shrinkage -> correlation
/// normalization -> Cholesky. A covariance with an exactly zero diagonal
/// (single sample, or all samples identical) carries no scale information;
/// it is replaced by the identity, the same initialization used for classes
/// whose covariance has not been estimated yet.
template <typename Derived>
ClassGaussian<typename Derived::Scalar> build_class_gaussian(
    const Eigen::MatrixBase<Derived>& samples, const ShrinkageParams& params,
    int class_id = -1) {
  using S = typename Derived::Scalar;
  ClassGaussian<S> g;
  g.class_id = class_id;
  g.sample_count = samples.cols();
  g.mean = estimate_mean(samples);
  g.raw_cov = estimate_covariance(samples, g.mean);

  Matrix<S> normalized;
  if (g.raw_cov.rows() == 0 || g.raw_cov.diagonal().maxCoeff() <= S(0)) {
    normalized = Matrix<S>::Identity(g.raw_cov.rows(), g.raw_cov.cols());
  } else {
    normalized = normalize_cov(shrink(g.raw_cov, params));
  }

  Eigen::LLT<Matrix<S>> llt(normalized);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::kCholeskyFailure,
                "shrunk covariance for class " + std::to_string(class_id) +
                    " is not positive definite; adjust gamma1/gamma2");
  g.shrunk_cov = std::move(normalized);
  g.chol_lower = llt.matrixL();
  return g;
}

/// Solves shrunk_cov * out = rhs through the cached factor (two triangular
/// solves, never an explicit inverse).
template <typename S, typename Derived>
Matrix<S> covariance_solve(const ClassGaussian<S>& g,
                           const Eigen::MatrixBase<Derived>& rhs) {
  if (!g.has_factorization())
    throw Error(ErrorCode::kFactorizationMissing,
                "class " + std::to_string(g.class_id) + " has no factorization");
  Matrix<S> out = g.chol_lower.template triangularView<Eigen::Lower>().solve(
      rhs.derived());
  g.chol_lower.template triangularView<Eigen::Lower>().transpose().solveInPlace(
      out);
  return out;
}

/// Squared Mahalanobis distance (x-center)^T shrunk_cov^-1 (x-center),
/// computed as the squared norm of the forward triangular solve.
template <typename S, typename DerivedX, typename DerivedC>
S mahalanobis_sq(const Eigen::MatrixBase<DerivedX>& x,
                 const Eigen::MatrixBase<DerivedC>& center,
                 const ClassGaussian<S>& g) {
  if (!g.has_factorization())
    throw Error(ErrorCode::kFactorizationMissing,
                "class " + std::to_string(g.class_id) + " has no factorization");
  if (x.size() != g.dim() || center.size() != g.dim())
    throw Error(ErrorCode::kDimMismatch,
                "query dimension does not match class dimension");
  const Vector<S> diff = x.derived() - center.derived();
  const Vector<S> z =
      g.chol_lower.template triangularView<Eigen::Lower>().solve(diff);
  return z.squaredNorm();
}

template <typename S, typename DerivedX>
S mahalanobis_sq(const Eigen::MatrixBase<DerivedX>& x, const ClassGaussian<S>& g) {
  return mahalanobis_sq(x, g.mean, g);
}

}  // namespace cam

#endif  // CAM_GAUSSIAN_HPP_
