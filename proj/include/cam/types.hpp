#ifndef CAM_TYPES_HPP_
#define CAM_TYPES_HPP_

#include <Eigen/Dense>

#include "cam/error.hpp"

namespace cam {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Eigen::Index;

/// Which average pairs with which mask in covariance shrinkage.
///
/// kFecamStyle adds the mean diagonal variance on the diagonal and the mean
/// off-diagonal covariance off the diagonal; this is the convention of the
/// shrinkage lineage this code follows and is guaranteed to keep a PSD input
/// positive definite for small gamma2. kLiteral swaps the two averages; it
/// can yield indefinite matrices (Cholesky then fails), so it is kept only
/// behind an explicit flag for comparison experiments.
enum class ShrinkageConvention { kFecamStyle, kLiteral };

struct ShrinkageParams {
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  ShrinkageConvention convention = ShrinkageConvention::kFecamStyle;
};

struct LossWeights {
  double alpha = 0.0;  // intra-class loss weight
  double beta = 0.0;   // prototype separation loss weight
};

/// Per-step or per-epoch loss decomposition. `total` is always computed as
/// cls + alpha*intra + beta*text_sep in one place so the decomposition holds
/// bit-for-bit.
struct LossBreakdown {
  double cls = 0.0;
  double intra = 0.0;
  double text_sep = 0.0;
  double total = 0.0;
};

/// Symmetry test matching the tolerance |A(i,j)-A(j,i)| <= tol*max(1,|A(i,j)|).
template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& a, double tol = 1e-12) {
  if (a.rows() != a.cols()) return false;
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = j + 1; i < a.rows(); ++i) {
      const double x = static_cast<double>(a(i, j));
      const double y = static_cast<double>(a(j, i));
      if (std::abs(x - y) > tol * std::max(1.0, std::abs(x))) return false;
    }
  }
  return true;
}

template <typename Derived>
void require_square_symmetric(const Eigen::MatrixBase<Derived>& a,
                              const char* what) {
  if (a.rows() != a.cols())
    throw Error(ErrorCode::kDimMismatch, std::string(what) + " must be square");
  if (!is_symmetric(a))
    throw Error(ErrorCode::kNotSymmetric, std::string(what) + " must be symmetric");
}

}  // namespace cam

#endif  // CAM_TYPES_HPP_
