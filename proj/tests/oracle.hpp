// Independent brute-force references used only by tests. These deliberately
// avoid the library's Cholesky/pairwise-summation code paths: inverses are
// explicit, sums are naive or compensated, so agreement certifies the
// production arithmetic rather than echoing it.
#ifndef CAM_TESTS_ORACLE_HPP_
#define CAM_TESTS_ORACLE_HPP_

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace cam_oracle {

struct FiniteDiffSpec {
  double h = 1e-5;
  double rel_tol = 1e-4;
};

/// Mean via compensated (Kahan) summation in extended precision.
inline Eigen::VectorXd kahan_mean(const Eigen::MatrixXd& samples) {
  const Eigen::Index d = samples.rows();
  Eigen::VectorXd out(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    long double sum = 0.0L, comp = 0.0L;
    for (Eigen::Index i = 0; i < samples.cols(); ++i) {
      const long double y = static_cast<long double>(samples(j, i)) - comp;
      const long double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
    out(j) = static_cast<double>(sum / samples.cols());
  }
  return out;
}

/// Direct-summation MLE covariance, entry by entry.
inline Eigen::MatrixXd direct_covariance(const Eigen::MatrixXd& samples,
                                         const Eigen::VectorXd& mean) {
  const Eigen::Index d = samples.rows();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index k = 0; k < samples.cols(); ++k) {
    const Eigen::VectorXd c = samples.col(k) - mean;
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) cov(i, j) += c(i) * c(j);
  }
  return cov / static_cast<double>(samples.cols());
}

/// Quadratic form through an explicit matrix inverse (LU path).
inline double explicit_inverse_mahalanobis(const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& mean,
                                           const Eigen::MatrixXd& cov) {
  const Eigen::VectorXd diff = x - mean;
  return diff.dot(cov.inverse() * diff);
}

/// Scalar softmax oracle: probabilities from raw logits, naive arithmetic.
inline std::vector<double> scalar_softmax(const std::vector<double>& logits) {
  double denom = 0.0;
  for (double s : logits) denom += std::exp(s);
  std::vector<double> p;
  for (double s : logits) p.push_back(std::exp(s) / denom);
  return p;
}

/// Central finite differences per coordinate.
inline Eigen::VectorXd fd_gradient(
    const std::function<double(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& point, double h = 1e-5) {
  Eigen::VectorXd grad(point.size());
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    Eigen::VectorXd hi = point, lo = point;
    hi(i) += h;
    lo(i) -= h;
    const double up = fn(hi), down = fn(lo);
    if (!std::isfinite(up) || !std::isfinite(down))
      throw std::runtime_error("NonFiniteEvaluation in fd_gradient");
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

inline double rel_error(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
  return (got - want).norm() / std::max(want.norm(), 1e-10);
}

/// Full Gaussian log-likelihood classifier, keeping the log-determinant the
/// distance-only rule drops. Explicit inverse and determinant throughout.
inline int likelihood_bayes(const Eigen::VectorXd& x,
                            const std::vector<Eigen::VectorXd>& means,
                            const std::vector<Eigen::MatrixXd>& covs,
                            bool include_log_det = true) {
  int best = -1;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t y = 0; y < means.size(); ++y) {
    const double det = covs[y].determinant();
    if (det <= 0.0) throw std::runtime_error("SingularCovariance in oracle");
    const Eigen::VectorXd diff = x - means[y];
    double score = -0.5 * diff.dot(covs[y].inverse() * diff);
    if (include_log_det) score -= 0.5 * std::log(det);
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(y);
    }
  }
  return best;
}

/// Prototype-separation value by explicit pair enumeration.
inline double pairwise_text_sep(const std::vector<Eigen::VectorXd>& protos) {
  double loss = 0.0;
  for (std::size_t i = 0; i < protos.size(); ++i)
    for (std::size_t j = i + 1; j < protos.size(); ++j) {
      const Eigen::VectorXd ui = protos[i] / protos[i].norm();
      const Eigen::VectorXd uj = protos[j] / protos[j].norm();
      loss -= (ui - uj).squaredNorm();
    }
  return loss;
}

inline double min_eigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  return solver.eigenvalues().minCoeff();
}

}  // namespace cam_oracle

#endif  // CAM_TESTS_ORACLE_HPP_
