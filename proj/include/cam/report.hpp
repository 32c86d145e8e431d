#ifndef CAM_REPORT_HPP_
#define CAM_REPORT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "cam/classifier.hpp"
#include "cam/trainer.hpp"
#include "cam/types.hpp"

namespace cam {

inline constexpr std::uint32_t kReportSchemaVersion = 1;

DistanceMode parse_distance_mode(const std::string& name);

/// Everything that identifies an experiment cell except the seed.
struct RunKey {
  int shots = 0;
  DistanceMode mode = DistanceMode::kMahalanobis;
  int heads = 1;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;

  friend bool operator==(const RunKey&, const RunKey&) = default;
};

struct RunRecord {
  RunKey key;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;          // set when failed
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;
  // loss trace stored as parallel per-epoch arrays
  std::vector<double> trace_cls, trace_intra, trace_text_sep, trace_total;
  std::string row;            // ablation row label, empty otherwise
};

struct Aggregate {
  RunKey key;
  std::string row;
  double mean_accuracy = 0.0;
  double stddev_accuracy = 0.0;  // sample standard deviation, 0 for n = 1
  int count = 0;
  bool degraded = false;  // > 5 points below the best cell of its (shots, mode) group
};

/// Full experiment invocation, echoed into the report so any report can be
/// reproduced from its own config snapshot.
struct Invocation {
  std::string data_path;
  bool normalize = true;
  TrainConfig base;                       // per-run seed comes from `seeds`
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<DistanceMode> modes{DistanceMode::kCosine,
                                  DistanceMode::kEuclidean,
                                  DistanceMode::kMahalanobis};
  std::vector<int> shots_list;            // sweep only
  std::vector<double> alpha_grid;         // sweep only
  std::vector<double> beta_grid;          // sweep only
};

struct ExperimentReport {
  std::string kind;  // "train", "sweep" or "ablate"
  Invocation invocation;
  std::vector<RunRecord> runs;
  std::vector<Aggregate> aggregates;
  double total_ms = 0.0;
  std::vector<double> per_run_ms;
};

/// Mean / sample-stddev per RunKey (plus ablation row) over the successful
/// runs, in first-appearance order, with degradation flags per group.
std::vector<Aggregate> compute_aggregates(const std::vector<RunRecord>& runs);

/// Deterministic serialization: sorted keys, shortest round-trip numbers.
/// All wall-clock data lives under the single "timings" key.
std::string report_to_json(const ExperimentReport& report);
void save_report(const ExperimentReport& report, const std::string& path);

/// Strict parse: checks the schema version and rejects unknown fields.
ExperimentReport load_report_from_json(const std::string& text);
ExperimentReport load_report(const std::string& path);

/// The serialized report with the "timings" subtree removed; two runs of
/// one experiment must agree on this string byte-for-byte.
std::string report_determinism_view(const ExperimentReport& report);

}  // namespace cam

#endif  // CAM_REPORT_HPP_
