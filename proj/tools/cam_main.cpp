#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cam/config_file.hpp"
#include "cam/error.hpp"
#include "cam/experiments.hpp"
#include "cam/io.hpp"
#include "cam/report.hpp"

namespace {

struct CommonArgs {
  std::string data_path;
  std::string config_path;
  std::string out_path;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> modes;
  std::optional<int> shots;
  std::optional<int> heads;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> gamma1;
  std::optional<double> gamma2;
  std::optional<std::string> convention;
  std::optional<bool> normalize;
};

void add_common_options(CLI::App* cmd, CommonArgs& args, bool single_shots) {
  cmd->add_option("--data", args.data_path, "embedding file (.camf or .csv)")
      ->required();
  cmd->add_option("--config", args.config_path, "JSON training config");
  cmd->add_option("--out", args.out_path, "report output path")->required();
  cmd->add_option("--seeds", args.seeds, "seeds, e.g. 1,2,3")->delimiter(',');
  cmd->add_option("--mode", args.modes,
                  "evaluation modes {cosine,euclidean,mahalanobis}")
      ->delimiter(',');
  if (single_shots) cmd->add_option("--shots", args.shots, "shots per class");
  cmd->add_option("--heads", args.heads, "prototypes per class");
  cmd->add_option("--alpha", args.alpha, "intra-class loss weight");
  cmd->add_option("--beta", args.beta, "separation loss weight");
  cmd->add_option("--gamma1", args.gamma1, "diagonal shrinkage strength");
  cmd->add_option("--gamma2", args.gamma2, "off-diagonal shrinkage strength");
  cmd->add_option("--convention", args.convention,
                  "shrinkage convention {fecam,literal}");
  cmd->add_flag("--normalize,!--no-normalize", args.normalize,
                "L2-normalize features on load (default on)");
}

cam::Invocation build_invocation(const CommonArgs& args) {
  cam::FileConfig file;
  if (!args.config_path.empty()) file = cam::load_config_file(args.config_path);

  cam::Invocation inv;
  inv.data_path = args.data_path;
  inv.base = file.train;
  inv.normalize = file.normalize;
  if (args.shots) inv.base.shots = *args.shots;
  if (args.heads) inv.base.heads = *args.heads;
  if (args.alpha) inv.base.weights.alpha = *args.alpha;
  if (args.beta) inv.base.weights.beta = *args.beta;
  if (args.gamma1) inv.base.gamma1 = *args.gamma1;
  if (args.gamma2) inv.base.gamma2 = *args.gamma2;
  if (args.convention) {
    if (*args.convention == "fecam")
      inv.base.convention = cam::ShrinkageConvention::kFecamStyle;
    else if (*args.convention == "literal")
      inv.base.convention = cam::ShrinkageConvention::kLiteral;
    else
      throw cam::Error(cam::ErrorCode::kConfigError,
                       "--convention must be fecam or literal");
  }
  if (args.normalize) inv.normalize = *args.normalize;
  if (!args.seeds.empty()) inv.seeds = args.seeds;
  if (!args.modes.empty()) {
    inv.modes.clear();
    for (const auto& name : args.modes)
      inv.modes.push_back(cam::parse_distance_mode(name));
  }
  return inv;
}

void print_summary(const cam::ExperimentReport& report) {
  for (const auto& agg : report.aggregates) {
    std::printf("%-12s shots=%-2d mode=%-11s M=%d alpha=%-6g beta=%-6g  "
                "acc %.4f +/- %.4f (n=%d)%s\n",
                agg.row.empty() ? report.kind.c_str() : agg.row.c_str(),
                agg.key.shots, cam::distance_mode_name(agg.key.mode),
                agg.key.heads, agg.key.alpha, agg.key.beta, agg.mean_accuracy,
                agg.stddev_accuracy, agg.count, agg.degraded ? "  [degraded]" : "");
  }
  int failed = 0;
  for (const auto& run : report.runs) failed += run.failed;
  if (failed > 0) std::printf("%d run(s) failed; see the report\n", failed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"few-shot classification with covariance-aware distances"};
  app.require_subcommand(1);

  // --- gen ---
  auto* gen = app.add_subcommand("gen", "generate a synthetic benchmark");
  cam::SyntheticSpec spec;
  std::string gen_out;
  std::string gen_format = "camf";
  std::vector<double> cond_range{1.0, 1.0};
  gen->add_option("--classes", spec.class_count, "number of classes");
  gen->add_option("--dim", spec.dim, "feature dimension");
  gen->add_option("--per-class", spec.samples_per_class, "samples per class");
  gen->add_option("--mean-scale", spec.mean_scale, "radius of the mean sphere");
  gen->add_option("--cov-scale", spec.covariance_scale,
                  "sqrt of per-class total variance");
  gen->add_option("--cond-range", cond_range,
                  "covariance condition-number range, e.g. 5 50")
      ->expected(2);
  gen->add_option("--seed", spec.seed, "generator seed");
  gen->add_option("--format", gen_format, "output format {camf,csv}")
      ->check(CLI::IsMember({"camf", "csv"}));
  gen->add_option("--out", gen_out, "output file")->required();

  // --- train ---
  auto* train_cmd = app.add_subcommand("train", "train and evaluate");
  CommonArgs train_args;
  add_common_options(train_cmd, train_args, /*single_shots=*/true);

  // --- sweep ---
  auto* sweep_cmd =
      app.add_subcommand("sweep", "grid over shots/seeds/modes/alpha/beta");
  CommonArgs sweep_args;
  std::vector<int> sweep_shots;
  std::vector<double> alpha_grid, beta_grid;
  add_common_options(sweep_cmd, sweep_args, /*single_shots=*/false);
  sweep_cmd->add_option("--shots", sweep_shots, "shot counts, e.g. 1,2,4,8,16")
      ->delimiter(',');
  sweep_cmd->add_option("--alpha-grid", alpha_grid, "alpha grid values")
      ->delimiter(',');
  sweep_cmd->add_option("--beta-grid", beta_grid, "beta grid values")
      ->delimiter(',');

  // --- ablate ---
  auto* ablate_cmd =
      app.add_subcommand("ablate", "six-row component ablation table");
  CommonArgs ablate_args;
  add_common_options(ablate_cmd, ablate_args, /*single_shots=*/true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      spec.cond_min = cond_range[0];
      spec.cond_max = cond_range[1];
      const cam::SyntheticData data = cam::gen_synthetic(spec);
      if (gen_format == "csv")
        cam::save_csv(data.set, gen_out);
      else
        cam::save_camf(data.set, gen_out);
      std::printf("wrote %s: %d classes, dim %d, %d samples per class\n",
                  gen_out.c_str(), spec.class_count, spec.dim,
                  spec.samples_per_class);
    } else if (train_cmd->parsed()) {
      const cam::ExperimentReport report =
          cam::run_train(build_invocation(train_args));
      cam::save_report(report, train_args.out_path);
      print_summary(report);
    } else if (sweep_cmd->parsed()) {
      cam::Invocation inv = build_invocation(sweep_args);
      if (sweep_shots.empty())
        throw cam::Error(cam::ErrorCode::kConfigError,
                         "sweep needs --shots with at least one value");
      inv.shots_list = sweep_shots;
      inv.alpha_grid = alpha_grid;
      inv.beta_grid = beta_grid;
      const cam::ExperimentReport report = cam::run_sweep(inv);
      cam::save_report(report, sweep_args.out_path);
      print_summary(report);
    } else if (ablate_cmd->parsed()) {
      const cam::ExperimentReport report =
          cam::run_ablate(build_invocation(ablate_args));
      cam::save_report(report, ablate_args.out_path);
      print_summary(report);
    }
  } catch (const cam::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return cam::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
