#include "cam/trainer.hpp"

#include <cmath>
#include <string>

#include "cam/error.hpp"
#include "cam/losses.hpp"
#include "cam/rng.hpp"

namespace cam {

int default_epochs_for_shots(int shots) {
  switch (shots) {
    case 1: return 80;
    case 2: return 100;
    case 4: return 100;
    case 8: return 200;
    case 16: return 200;
    default:
      throw Error(ErrorCode::kConfigError,
                  "shots must be one of 1, 2, 4, 8, 16; got " +
                      std::to_string(shots));
  }
}

ShrinkageParams default_shrinkage_for_shots(int shots) {
  switch (shots) {
    case 1: return {500.0, 300.0};
    case 2: return {500.0, 300.0};
    case 4: return {600.0, 100.0};
    case 8: return {500.0, 100.0};
    case 16: return {500.0, 500.0};
    default:
      throw Error(ErrorCode::kConfigError,
                  "shots must be one of 1, 2, 4, 8, 16; got " +
                      std::to_string(shots));
  }
}

TrainConfig TrainConfig::resolved() const {
  TrainConfig out = *this;
  if (out.epochs <= 0) out.epochs = default_epochs_for_shots(out.shots);
  if (out.gamma1 < 0.0 || out.gamma2 < 0.0) {
    const ShrinkageParams preset = default_shrinkage_for_shots(out.shots);
    if (out.gamma1 < 0.0) out.gamma1 = preset.gamma1;
    if (out.gamma2 < 0.0) out.gamma2 = preset.gamma2;
  }
  return out;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kConfigError, msg);
  };
  if (shots != 1 && shots != 2 && shots != 4 && shots != 8 && shots != 16)
    fail("shots must be one of 1, 2, 4, 8, 16; got " + std::to_string(shots));
  if (warmup_epochs < 0) fail("warmup_epochs must be non-negative");
  if (epochs <= warmup_epochs)
    fail("epochs (" + std::to_string(epochs) + ") must exceed warmup_epochs (" +
         std::to_string(warmup_epochs) + ")");
  if (batch_size < 1) fail("batch_size must be at least 1");
  if (heads < 1) fail("heads must be at least 1");
  if (!(tau > 0.0)) fail("tau must be positive");
  if (epsilon < 0.0) fail("epsilon must be non-negative");
  if (gamma1 < 0.0 || gamma2 < 0.0) fail("gamma1/gamma2 must be non-negative");
  if (weights.alpha < 0.0 || weights.beta < 0.0)
    fail("alpha/beta must be non-negative");
  if (sigma_init < 0.0) fail("sigma_init must be non-negative");
  if (unified_cov_threshold < 0) fail("unified_cov_threshold must be >= 0");
  if (momentum < 0.0 || momentum >= 1.0) fail("momentum must be in [0, 1)");
  if (!(base_lr > 0.0) || !(warmup_lr > 0.0)) fail("learning rates must be positive");
}

double cosine_lr(int epoch, const TrainConfig& config) {
  if (epoch < 0 || epoch >= config.epochs)
    throw Error(ErrorCode::kInvalidArgument,
                "epoch " + std::to_string(epoch) + " outside [0, " +
                    std::to_string(config.epochs) + ")");
  if (epoch < config.warmup_epochs) return config.warmup_lr;
  const double t = static_cast<double>(epoch - config.warmup_epochs) /
                   static_cast<double>(config.epochs - config.warmup_epochs);
  return config.base_lr * 0.5 * (1.0 + std::cos(M_PI * t));
}

namespace {

std::vector<int> int_labels(const EmbeddingSet& set) {
  return std::vector<int>(set.labels.begin(), set.labels.end());
}

Eigen::MatrixXd class_columns(const Eigen::MatrixXd& features,
                              const std::vector<int>& labels, int cls) {
  Index count = 0;
  for (int label : labels) count += label == cls;
  Eigen::MatrixXd out(features.rows(), count);
  Index at = 0;
  for (Index i = 0; i < features.cols(); ++i)
    if (labels[static_cast<std::size_t>(i)] == cls) out.col(at++) = features.col(i);
  return out;
}

void renormalize(PrototypeBankXd& bank) {
  for (auto& head : bank.heads)
    for (Index y = 0; y < head.cols(); ++y) {
      const double norm = head.col(y).norm();
      if (!(norm > 0.0))
        throw Error(ErrorCode::kNonFiniteLoss, "prototype collapsed to zero");
      head.col(y) /= norm;
    }
}

std::vector<ClassGaussianXd> fit_class_gaussians(
    const Eigen::MatrixXd& features, const std::vector<int>& labels,
    Index class_count, const ShrinkageParams& params) {
  std::vector<ClassGaussianXd> out;
  out.reserve(static_cast<std::size_t>(class_count));
  for (Index y = 0; y < class_count; ++y)
    out.push_back(build_class_gaussian(
        class_columns(features, labels, static_cast<int>(y)), params,
        static_cast<int>(y)));
  return out;
}

}  // namespace

void init_model(const FewShotTask& task, const TrainConfig& config,
                PrototypeBankXd& bank, VisualAdapter& adapter) {
  task.train.validate();
  const TrainConfig cfg = config.resolved();
  cfg.validate();
  const Index c = task.train.class_count();
  const Index d = task.train.dim();
  const Eigen::MatrixXd features = task.train.features.cast<double>();
  const std::vector<int> labels = int_labels(task.train);

  bank.heads.assign(static_cast<std::size_t>(cfg.heads),
                    Eigen::MatrixXd(d, c));
  bank.normalized = true;
  for (Index y = 0; y < c; ++y) {
    const Eigen::VectorXd mean =
        estimate_mean(class_columns(features, labels, static_cast<int>(y)));
    for (int m = 0; m < cfg.heads; ++m) {
      Xoshiro256 rng(cfg.seed,
                     kStreamInit | static_cast<std::uint64_t>(
                                       y * cfg.heads + m));
      Eigen::VectorXd proto = mean;
      for (Index j = 0; j < d; ++j) proto(j) += cfg.sigma_init * rng.normal();
      const double norm = proto.norm();
      if (!(norm > 0.0))
        throw Error(ErrorCode::kEmptyClass,
                    "class " + std::to_string(y) +
                        " initial prototype has zero norm");
      bank.heads[static_cast<std::size_t>(m)].col(y) = proto / norm;
    }
  }

  adapter.enabled = config.adapter_enabled;
  adapter.weight = Eigen::MatrixXd::Identity(d, d);
}

TrainedModel train(const FewShotTask& task, const TrainConfig& config,
                   const TrainHooks& hooks) {
  TrainedModel model;
  model.config = config.resolved();
  model.config.validate();
  const TrainConfig& cfg = model.config;

  init_model(task, cfg, model.bank, model.adapter);
  const Index c = task.train.class_count();
  const Index n = task.train.size();
  const Eigen::MatrixXd raw = task.train.features.cast<double>();
  const std::vector<int> labels = int_labels(task.train);
  const ShrinkageParams shrinkage = cfg.shrinkage();

  // First-epoch state, frozen for the rest of training.
  {
    const Eigen::MatrixXd adapted = model.adapter.apply(raw);
    model.centers.resize(raw.rows(), c);
    for (Index y = 0; y < c; ++y)
      model.centers.col(y) =
          estimate_mean(class_columns(adapted, labels, static_cast<int>(y)));
    model.frozen_intra_gaussians =
        fit_class_gaussians(adapted, labels, c, shrinkage);
  }

  std::vector<Eigen::MatrixXd> proto_velocity(
      static_cast<std::size_t>(cfg.heads),
      Eigen::MatrixXd::Zero(raw.rows(), c));
  Eigen::MatrixXd adapter_velocity =
      Eigen::MatrixXd::Zero(raw.rows(), raw.rows());

  model.loss_trace.reserve(static_cast<std::size_t>(cfg.epochs));
  std::vector<Index> order(static_cast<std::size_t>(n));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cosine_lr(epoch, cfg);

    for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Xoshiro256 shuffle_rng(cfg.seed,
                           kStreamShuffle | static_cast<std::uint64_t>(epoch));
    for (Index i = 0; i < n - 1; ++i) {
      const Index j =
          i + static_cast<Index>(shuffle_rng.below(
                  static_cast<std::uint64_t>(n - i)));
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(j)]);
    }

    double sum_cls = 0.0, sum_intra = 0.0, sum_ts = 0.0;
    int steps = 0;
    for (Index start = 0; start < n; start += cfg.batch_size) {
      const Index batch = std::min<Index>(cfg.batch_size, n - start);
      Eigen::MatrixXd xb(raw.rows(), batch);
      std::vector<int> yb(static_cast<std::size_t>(batch));
      for (Index k = 0; k < batch; ++k) {
        const Index src = order[static_cast<std::size_t>(start + k)];
        xb.col(k) = raw.col(src);
        yb[static_cast<std::size_t>(k)] = labels[static_cast<std::size_t>(src)];
      }
      const Eigen::MatrixXd fb = model.adapter.apply(xb);

      const auto cls = loss_cls(fb, yb, model.bank, cfg.tau, cfg.epsilon);
      const auto intra =
          loss_intra(fb, yb, model.centers, model.frozen_intra_gaussians);
      const auto sep = loss_text_sep(model.bank);
      LossBreakdown step_loss;
      try {
        step_loss = total_loss(cls.value, intra.value, sep.value, cfg.weights);
      } catch (const Error& e) {
        throw Error(ErrorCode::kNonFiniteLoss,
                    "epoch " + std::to_string(epoch) + ", step " +
                        std::to_string(steps) + ": " + e.what());
      }

      for (int m = 0; m < cfg.heads; ++m) {
        auto& velocity = proto_velocity[static_cast<std::size_t>(m)];
        velocity = cfg.momentum * velocity +
                   cls.prototype_grad[static_cast<std::size_t>(m)] +
                   cfg.weights.beta *
                       sep.prototype_grad[static_cast<std::size_t>(m)];
        model.bank.heads[static_cast<std::size_t>(m)] -= lr * velocity;
      }
      if (model.adapter.enabled) {
        const Eigen::MatrixXd feature_grad =
            cls.feature_grad + cfg.weights.alpha * intra.feature_grad;
        adapter_velocity =
            cfg.momentum * adapter_velocity + feature_grad * xb.transpose();
        model.adapter.weight -= lr * adapter_velocity;
      }
      renormalize(model.bank);

      sum_cls += step_loss.cls;
      sum_intra += step_loss.intra;
      sum_ts += step_loss.text_sep;
      ++steps;
      if (hooks.on_step) hooks.on_step(model, epoch, steps - 1);
    }

    model.loss_trace.push_back(total_loss(sum_cls / steps, sum_intra / steps,
                                          sum_ts / steps, cfg.weights));
  }

  // Test-time distributions come from final-epoch features. Below the
  // unified threshold all classes pool into one covariance estimate.
  const Eigen::MatrixXd final_features = model.adapter.apply(raw);
  if (cfg.shots <= cfg.unified_cov_threshold) {
    const ClassGaussianXd pooled =
        build_class_gaussian(final_features, shrinkage, -1);
    for (Index y = 0; y < c; ++y) {
      ClassGaussianXd g = pooled;
      g.class_id = static_cast<int>(y);
      const Eigen::MatrixXd cols =
          class_columns(final_features, labels, static_cast<int>(y));
      g.mean = estimate_mean(cols);
      g.sample_count = cols.cols();
      model.test_gaussians.push_back(std::move(g));
    }
  } else {
    model.test_gaussians = fit_class_gaussians(final_features, labels, c, shrinkage);
  }
  return model;
}

EvalResult evaluate(const TrainedModel& model, const EmbeddingSet& test_set,
                    DistanceMode mode) {
  test_set.validate();
  if (test_set.dim() != model.bank.dim())
    throw Error(ErrorCode::kDimMismatch,
                "test dimension " + std::to_string(test_set.dim()) +
                    " does not match model dimension " +
                    std::to_string(model.bank.dim()));
  const Eigen::MatrixXd features =
      model.adapter.apply(test_set.features.cast<double>());
  const Index c = test_set.class_count();

  EvalResult res;
  res.predictions.reserve(static_cast<std::size_t>(test_set.size()));
  std::vector<Index> per_class_total(static_cast<std::size_t>(c), 0);
  std::vector<Index> per_class_hit(static_cast<std::size_t>(c), 0);
  Index hits = 0;
  for (Index i = 0; i < test_set.size(); ++i) {
    const auto pred =
        ensemble_predict(features.col(i), model.bank, mode,
                         &model.test_gaussians, model.config.tau,
                         model.config.epsilon);
    const int truth = test_set.labels[static_cast<std::size_t>(i)];
    res.predictions.push_back(pred.chosen_class);
    ++per_class_total[static_cast<std::size_t>(truth)];
    if (pred.chosen_class == truth) {
      ++hits;
      ++per_class_hit[static_cast<std::size_t>(truth)];
    }
  }
  res.accuracy = static_cast<double>(hits) / static_cast<double>(test_set.size());
  res.per_class_accuracy.resize(static_cast<std::size_t>(c), 0.0);
  for (Index y = 0; y < c; ++y)
    if (per_class_total[static_cast<std::size_t>(y)] > 0)
      res.per_class_accuracy[static_cast<std::size_t>(y)] =
          static_cast<double>(per_class_hit[static_cast<std::size_t>(y)]) /
          static_cast<double>(per_class_total[static_cast<std::size_t>(y)]);
  return res;
}

}  // namespace cam
