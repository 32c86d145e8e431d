#ifndef CAM_TRAINER_HPP_
#define CAM_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "cam/classifier.hpp"
#include "cam/dataset.hpp"
#include "cam/gaussian.hpp"
#include "cam/types.hpp"

namespace cam {

/// Epoch budget for a shot count: 80 at 1 shot, 100 at 2 and 4, 200 at 8
/// and 16.
int default_epochs_for_shots(int shots);

/// Default shrinkage strengths per shot count:
///   1: (500, 300)   2: (500, 300)   4: (600, 100)   8: (500, 100)
///  16: (500, 500)
ShrinkageParams default_shrinkage_for_shots(int shots);

struct TrainConfig {
  int shots = 4;              // one of 1, 2, 4, 8, 16
  int epochs = 0;             // 0 = derive from shots
  int warmup_epochs = 5;
  double warmup_lr = 1e-5;
  double base_lr = 0.5;
  int batch_size = 32;
  LossWeights weights{1.0, 0.1};
  double gamma1 = -1.0;       // negative = derive from shots
  double gamma2 = -1.0;
  ShrinkageConvention convention = ShrinkageConvention::kFecamStyle;
  double tau = 1.0;
  double epsilon = 1e-6;
  int heads = 4;
  double sigma_init = 0.1;
  int unified_cov_threshold = 1;
  std::uint64_t seed = 1;
  bool adapter_enabled = false;
  double momentum = 0.0;

  /// Copy with epochs and gammas pinned from the shot presets when unset.
  TrainConfig resolved() const;

  /// Throws ConfigError on violated invariants; expects a resolved config.
  void validate() const;

  ShrinkageParams shrinkage() const {
    return ShrinkageParams{gamma1, gamma2, convention};
  }
};

/// Identity-initialized linear map applied to every feature. Stands in for
/// a tunable transform on the embedding side; disabled it is a no-op.
struct VisualAdapter {
  Eigen::MatrixXd weight;
  bool enabled = false;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const {
    return enabled ? Eigen::MatrixXd(weight * features) : features;
  }
};

struct TrainedModel {
  PrototypeBankXd bank;
  VisualAdapter adapter;
  std::vector<ClassGaussianXd> test_gaussians;         // final-epoch features
  std::vector<ClassGaussianXd> frozen_intra_gaussians; // first-epoch features
  Eigen::MatrixXd centers;                             // D x C, first epoch
  std::vector<LossBreakdown> loss_trace;               // one entry per epoch
  TrainConfig config;                                  // resolved snapshot
};

/// Constant warmup_lr during warmup, then base_lr * 0.5 * (1 + cos(pi t))
/// with t = (epoch - warmup) / (epochs - warmup).
double cosine_lr(int epoch, const TrainConfig& config);

/// Prototypes start at each class's training-feature mean plus a per-head
/// gaussian perturbation of scale sigma_init, then unit-normalized; the
/// adapter starts at identity. All randomness comes from config.seed.
void init_model(const FewShotTask& task, const TrainConfig& config,
                PrototypeBankXd& bank, VisualAdapter& adapter);

/// Test-only observation point; called after each SGD step.
struct TrainHooks {
  std::function<void(const TrainedModel& state, int epoch, int step)> on_step;
};

/// The full loop: freeze centers and intra-loss gaussians at the first
/// epoch, run warmup + cosine SGD over the three-part loss, re-normalize
/// prototypes after every step, then fit the test gaussians from
/// final-epoch adapted features (one pooled covariance for all classes when
/// shots <= unified_cov_threshold).
TrainedModel train(const FewShotTask& task, const TrainConfig& config,
                   const TrainHooks& hooks = {});

struct EvalResult {
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;
  std::vector<int> predictions;
};

/// Adapter + ensemble prediction over a labeled set; top-1 accuracy.
EvalResult evaluate(const TrainedModel& model, const EmbeddingSet& test_set,
                    DistanceMode mode);

}  // namespace cam

#endif  // CAM_TRAINER_HPP_
