#ifndef CAM_DATASET_HPP_
#define CAM_DATASET_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "cam/types.hpp"

namespace cam {

/// A labeled embedding collection. Features are stored as float32 columns
/// (column i is sample i) exactly as they appear on disk; numerical work
/// casts to double at the point of use.
struct EmbeddingSet {
  Eigen::MatrixXf features;         // D x N
  std::vector<std::int32_t> labels; // size N, values in [0, C)
  std::vector<std::string> class_names;
  bool normalized = false;

  Index dim() const { return features.rows(); }
  Index size() const { return features.cols(); }
  Index class_count() const { return static_cast<Index>(class_names.size()); }

  /// Indices of the samples labeled `cls`, ascending.
  std::vector<Index> class_indices(Index cls) const;

  /// Checks label range, per-class occupancy and feature finiteness.
  void validate() const;

  /// Scales every feature column to unit L2 norm and sets the flag.
  void l2_normalize();
};

bool operator==(const EmbeddingSet& a, const EmbeddingSet& b);

/// A K-shot episode: exactly K training samples per class, the rest as test.
struct FewShotTask {
  EmbeddingSet train;
  EmbeddingSet test;
  int shots = 0;
  std::uint64_t seed = 0;
};

/// Uniform without-replacement draw of K samples per class; class c draws
/// from the xoshiro256** stream kStreamSplit | c of the given seed via a
/// partial Fisher-Yates over that class's indices in ascending order.
FewShotTask sample_few_shot(const EmbeddingSet& set, int shots,
                            std::uint64_t seed);

struct SyntheticSpec {
  int class_count = 10;
  int dim = 64;
  int samples_per_class = 100;
  double mean_scale = 1.0;        // class means drawn on a sphere of this radius
  double cond_min = 1.0;          // covariance condition-number range
  double cond_max = 1.0;
  double covariance_scale = 1.0;  // sqrt of each class's total variance
  std::uint64_t seed = 1;

  void validate() const;
};

/// The generating parameters behind a synthetic set, for oracle use.
struct GaussianMixture {
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;
};

struct SyntheticData {
  EmbeddingSet set;
  GaussianMixture oracle;
};

/// Draws class means uniformly on a sphere, builds per-class covariances by
/// eigendecomposition (geometric eigenvalue ladder with the drawn condition
/// number, random orthogonal basis, trace covariance_scale^2), then samples
/// through the Cholesky factor. Deterministic per seed.
SyntheticData gen_synthetic(const SyntheticSpec& spec);

/// The exact maximum-likelihood rule under known generative gaussians,
/// including the log-determinant term dropped by the distance-only rule.
/// Factorizations are cached at construction.
class BayesRule {
 public:
  explicit BayesRule(const GaussianMixture& mixture);
  int classify(const Eigen::VectorXd& x) const;

 private:
  std::vector<Eigen::VectorXd> means_;
  std::vector<Eigen::MatrixXd> chol_;
  std::vector<double> log_det_;
};

/// One-shot convenience wrapper around BayesRule.
int bayes_oracle(const Eigen::VectorXd& x, const GaussianMixture& mixture);

}  // namespace cam

#endif  // CAM_DATASET_HPP_
