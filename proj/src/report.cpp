#include "cam/report.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "cam/error.hpp"

namespace cam {

using nlohmann::json;

DistanceMode parse_distance_mode(const std::string& name) {
  if (name == "cosine") return DistanceMode::kCosine;
  if (name == "euclidean") return DistanceMode::kEuclidean;
  if (name == "mahalanobis") return DistanceMode::kMahalanobis;
  throw Error(ErrorCode::kConfigError,
              "unknown distance mode \"" + name +
                  "\" (expected cosine, euclidean or mahalanobis)");
}

std::vector<Aggregate> compute_aggregates(const std::vector<RunRecord>& runs) {
  std::vector<Aggregate> out;
  std::vector<std::vector<double>> samples;
  for (const auto& run : runs) {
    if (run.failed) continue;
    std::size_t at = 0;
    for (; at < out.size(); ++at)
      if (out[at].key == run.key && out[at].row == run.row) break;
    if (at == out.size()) {
      Aggregate agg;
      agg.key = run.key;
      agg.row = run.row;
      out.push_back(agg);
      samples.emplace_back();
    }
    samples[at].push_back(run.accuracy);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& xs = samples[i];
    const int n = static_cast<int>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    out[i].count = n;
    out[i].mean_accuracy = mean;
    out[i].stddev_accuracy = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
  }
  // Degradation flag: more than 5 accuracy points below the best aggregate
  // sharing the same (shots, mode) group.
  for (auto& agg : out) {
    double best = agg.mean_accuracy;
    for (const auto& other : out)
      if (other.key.shots == agg.key.shots && other.key.mode == agg.key.mode)
        best = std::max(best, other.mean_accuracy);
    agg.degraded = agg.mean_accuracy < best - 0.05;
  }
  return out;
}

namespace {

json key_to_json(const RunKey& key) {
  return json{{"shots", key.shots},
              {"mode", distance_mode_name(key.mode)},
              {"heads", key.heads},
              {"alpha", key.alpha},
              {"beta", key.beta},
              {"gamma1", key.gamma1},
              {"gamma2", key.gamma2}};
}

json config_to_json(const TrainConfig& cfg) {
  return json{{"shots", cfg.shots},
              {"epochs", cfg.epochs},
              {"warmup_epochs", cfg.warmup_epochs},
              {"warmup_lr", cfg.warmup_lr},
              {"base_lr", cfg.base_lr},
              {"batch_size", cfg.batch_size},
              {"alpha", cfg.weights.alpha},
              {"beta", cfg.weights.beta},
              {"gamma1", cfg.gamma1},
              {"gamma2", cfg.gamma2},
              {"convention", cfg.convention == ShrinkageConvention::kFecamStyle
                                 ? "fecam"
                                 : "literal"},
              {"tau", cfg.tau},
              {"epsilon", cfg.epsilon},
              {"heads", cfg.heads},
              {"sigma_init", cfg.sigma_init},
              {"unified_cov_threshold", cfg.unified_cov_threshold},
              {"seed", cfg.seed},
              {"adapter_enabled", cfg.adapter_enabled},
              {"momentum", cfg.momentum}};
}

void check_known_fields(const json& obj, const std::set<std::string>& known,
                        const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (known.find(it.key()) == known.end())
      throw Error(ErrorCode::kFormatError,
                  "unknown field \"" + where + "." + it.key() + "\"");
}

template <typename T>
T require_field(const json& obj, const std::string& name,
                const std::string& where) {
  if (!obj.contains(name))
    throw Error(ErrorCode::kFormatError,
                "missing field \"" + where + "." + name + "\"");
  try {
    return obj.at(name).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kFormatError,
                "field \"" + where + "." + name + "\" has the wrong type");
  }
}

RunKey key_from_json(const json& obj, const std::string& where) {
  check_known_fields(
      obj, {"shots", "mode", "heads", "alpha", "beta", "gamma1", "gamma2"},
      where);
  RunKey key;
  key.shots = require_field<int>(obj, "shots", where);
  key.mode = parse_distance_mode(require_field<std::string>(obj, "mode", where));
  key.heads = require_field<int>(obj, "heads", where);
  key.alpha = require_field<double>(obj, "alpha", where);
  key.beta = require_field<double>(obj, "beta", where);
  key.gamma1 = require_field<double>(obj, "gamma1", where);
  key.gamma2 = require_field<double>(obj, "gamma2", where);
  return key;
}

TrainConfig config_from_json(const json& obj, const std::string& where) {
  check_known_fields(obj,
                     {"shots", "epochs", "warmup_epochs", "warmup_lr",
                      "base_lr", "batch_size", "alpha", "beta", "gamma1",
                      "gamma2", "convention", "tau", "epsilon", "heads",
                      "sigma_init", "unified_cov_threshold", "seed",
                      "adapter_enabled", "momentum"},
                     where);
  TrainConfig cfg;
  cfg.shots = require_field<int>(obj, "shots", where);
  cfg.epochs = require_field<int>(obj, "epochs", where);
  cfg.warmup_epochs = require_field<int>(obj, "warmup_epochs", where);
  cfg.warmup_lr = require_field<double>(obj, "warmup_lr", where);
  cfg.base_lr = require_field<double>(obj, "base_lr", where);
  cfg.batch_size = require_field<int>(obj, "batch_size", where);
  cfg.weights.alpha = require_field<double>(obj, "alpha", where);
  cfg.weights.beta = require_field<double>(obj, "beta", where);
  cfg.gamma1 = require_field<double>(obj, "gamma1", where);
  cfg.gamma2 = require_field<double>(obj, "gamma2", where);
  const std::string convention =
      require_field<std::string>(obj, "convention", where);
  if (convention == "fecam")
    cfg.convention = ShrinkageConvention::kFecamStyle;
  else if (convention == "literal")
    cfg.convention = ShrinkageConvention::kLiteral;
  else
    throw Error(ErrorCode::kConfigError,
                "field \"" + where + ".convention\" must be fecam or literal");
  cfg.tau = require_field<double>(obj, "tau", where);
  cfg.epsilon = require_field<double>(obj, "epsilon", where);
  cfg.heads = require_field<int>(obj, "heads", where);
  cfg.sigma_init = require_field<double>(obj, "sigma_init", where);
  cfg.unified_cov_threshold =
      require_field<int>(obj, "unified_cov_threshold", where);
  cfg.seed = require_field<std::uint64_t>(obj, "seed", where);
  cfg.adapter_enabled = require_field<bool>(obj, "adapter_enabled", where);
  cfg.momentum = require_field<double>(obj, "momentum", where);
  return cfg;
}

}  // namespace

std::string report_to_json(const ExperimentReport& report) {
  json root;
  root["schema_version"] = kReportSchemaVersion;
  root["kind"] = report.kind;

  json invocation;
  invocation["data"] = report.invocation.data_path;
  invocation["normalize"] = report.invocation.normalize;
  invocation["train"] = config_to_json(report.invocation.base);
  invocation["seeds"] = report.invocation.seeds;
  json modes = json::array();
  for (DistanceMode mode : report.invocation.modes)
    modes.push_back(distance_mode_name(mode));
  invocation["modes"] = modes;
  invocation["shots_list"] = report.invocation.shots_list;
  invocation["alpha_grid"] = report.invocation.alpha_grid;
  invocation["beta_grid"] = report.invocation.beta_grid;
  root["invocation"] = invocation;

  json runs = json::array();
  for (const auto& run : report.runs) {
    json r;
    r["key"] = key_to_json(run.key);
    r["seed"] = run.seed;
    r["failed"] = run.failed;
    if (run.failed) {
      r["error"] = run.error;
    } else {
      r["accuracy"] = run.accuracy;
      r["per_class_accuracy"] = run.per_class_accuracy;
      r["loss_trace"] = json{{"cls", run.trace_cls},
                             {"intra", run.trace_intra},
                             {"text_sep", run.trace_text_sep},
                             {"total", run.trace_total}};
    }
    if (!run.row.empty()) r["row"] = run.row;
    runs.push_back(r);
  }
  root["runs"] = runs;

  json aggregates = json::array();
  for (const auto& agg : report.aggregates) {
    json a;
    a["key"] = key_to_json(agg.key);
    if (!agg.row.empty()) a["row"] = agg.row;
    a["mean_accuracy"] = agg.mean_accuracy;
    a["stddev_accuracy"] = agg.stddev_accuracy;
    a["count"] = agg.count;
    a["degraded"] = agg.degraded;
    aggregates.push_back(a);
  }
  root["aggregates"] = aggregates;

  root["timings"] = json{{"total_ms", report.total_ms},
                         {"per_run_ms", report.per_run_ms}};
  return root.dump(2) + "\n";
}

void save_report(const ExperimentReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(ErrorCode::kFormatError, path + ": cannot open for writing");
  out << report_to_json(report);
  if (!out) throw Error(ErrorCode::kFormatError, path + ": write failed");
}

ExperimentReport load_report_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormatError,
                std::string("report is not valid JSON: ") + e.what());
  }
  check_known_fields(
      root, {"schema_version", "kind", "invocation", "runs", "aggregates",
             "timings"},
      "report");
  const auto version = require_field<std::uint32_t>(root, "schema_version", "report");
  if (version != kReportSchemaVersion)
    throw Error(ErrorCode::kFormatError,
                "unsupported report schema version " + std::to_string(version));

  ExperimentReport report;
  report.kind = require_field<std::string>(root, "kind", "report");

  const json& invocation = root.at("invocation");
  check_known_fields(invocation,
                     {"data", "normalize", "train", "seeds", "modes",
                      "shots_list", "alpha_grid", "beta_grid"},
                     "invocation");
  report.invocation.data_path =
      require_field<std::string>(invocation, "data", "invocation");
  report.invocation.normalize =
      require_field<bool>(invocation, "normalize", "invocation");
  report.invocation.base =
      config_from_json(invocation.at("train"), "invocation.train");
  report.invocation.seeds = require_field<std::vector<std::uint64_t>>(
      invocation, "seeds", "invocation");
  report.invocation.modes.clear();
  for (const auto& name :
       require_field<std::vector<std::string>>(invocation, "modes", "invocation"))
    report.invocation.modes.push_back(parse_distance_mode(name));
  report.invocation.shots_list =
      require_field<std::vector<int>>(invocation, "shots_list", "invocation");
  report.invocation.alpha_grid = require_field<std::vector<double>>(
      invocation, "alpha_grid", "invocation");
  report.invocation.beta_grid = require_field<std::vector<double>>(
      invocation, "beta_grid", "invocation");

  for (const json& r : root.at("runs")) {
    check_known_fields(r,
                       {"key", "seed", "failed", "error", "accuracy",
                        "per_class_accuracy", "loss_trace", "row"},
                       "runs[]");
    RunRecord run;
    run.key = key_from_json(r.at("key"), "runs[].key");
    run.seed = require_field<std::uint64_t>(r, "seed", "runs[]");
    run.failed = require_field<bool>(r, "failed", "runs[]");
    if (run.failed) {
      run.error = require_field<std::string>(r, "error", "runs[]");
    } else {
      run.accuracy = require_field<double>(r, "accuracy", "runs[]");
      run.per_class_accuracy = require_field<std::vector<double>>(
          r, "per_class_accuracy", "runs[]");
      const json& trace = r.at("loss_trace");
      check_known_fields(trace, {"cls", "intra", "text_sep", "total"},
                         "runs[].loss_trace");
      run.trace_cls =
          require_field<std::vector<double>>(trace, "cls", "loss_trace");
      run.trace_intra =
          require_field<std::vector<double>>(trace, "intra", "loss_trace");
      run.trace_text_sep =
          require_field<std::vector<double>>(trace, "text_sep", "loss_trace");
      run.trace_total =
          require_field<std::vector<double>>(trace, "total", "loss_trace");
    }
    if (r.contains("row")) run.row = r.at("row").get<std::string>();
    report.runs.push_back(std::move(run));
  }

  for (const json& a : root.at("aggregates")) {
    check_known_fields(a,
                       {"key", "row", "mean_accuracy", "stddev_accuracy",
                        "count", "degraded"},
                       "aggregates[]");
    Aggregate agg;
    agg.key = key_from_json(a.at("key"), "aggregates[].key");
    if (a.contains("row")) agg.row = a.at("row").get<std::string>();
    agg.mean_accuracy = require_field<double>(a, "mean_accuracy", "aggregates[]");
    agg.stddev_accuracy =
        require_field<double>(a, "stddev_accuracy", "aggregates[]");
    agg.count = require_field<int>(a, "count", "aggregates[]");
    agg.degraded = require_field<bool>(a, "degraded", "aggregates[]");
    report.aggregates.push_back(std::move(agg));
  }

  const json& timings = root.at("timings");
  check_known_fields(timings, {"total_ms", "per_run_ms"}, "timings");
  report.total_ms = require_field<double>(timings, "total_ms", "timings");
  report.per_run_ms =
      require_field<std::vector<double>>(timings, "per_run_ms", "timings");
  return report;
}

ExperimentReport load_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::kFormatError, path + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (ss.str().empty())
    throw Error(ErrorCode::kEmptyFile, path + ": file is empty");
  return load_report_from_json(ss.str());
}

std::string report_determinism_view(const ExperimentReport& report) {
  json root = json::parse(report_to_json(report));
  root.erase("timings");
  return root.dump(2) + "\n";
}

}  // namespace cam
