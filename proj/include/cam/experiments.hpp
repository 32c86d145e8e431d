#ifndef CAM_EXPERIMENTS_HPP_
#define CAM_EXPERIMENTS_HPP_

#include <string>
#include <vector>

#include "cam/report.hpp"

namespace cam {

/// Ablation rows in report order, mirroring the component toggles:
/// test-time covariance distance (ca), intra-class loss (intra), multiple
/// heads (da) and the separation loss (ts).
struct AblationRow {
  std::string label;
  bool ca = false;
  bool intra = false;
  bool da = false;
  bool ts = false;
};

const std::vector<AblationRow>& ablation_rows();

/// Worker count for sweep/ablate cells: explicit `requested` wins, then the
/// CAM_THREADS environment variable, then hardware concurrency; always
/// clamped to the cell count.
int resolve_thread_count(int requested, std::size_t cells);

/// Trains `base` on the embedded dataset for every seed and evaluates every
/// requested mode. Training failures propagate.
ExperimentReport run_train(const Invocation& invocation);

/// Cartesian sweep over shots_list x seeds x (alpha_grid x beta_grid, when
/// non-empty) evaluated in every requested mode; failed cells are recorded
/// and the sweep continues. Cells run on a bounded worker pool.
ExperimentReport run_sweep(const Invocation& invocation, int threads = 0);

/// The six-row component ablation at the invocation's shots/alpha/beta.
ExperimentReport run_ablate(const Invocation& invocation, int threads = 0);

}  // namespace cam

#endif  // CAM_EXPERIMENTS_HPP_
