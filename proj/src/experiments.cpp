#include "cam/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <thread>

#include "cam/error.hpp"
#include "cam/io.hpp"

namespace cam {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

RunKey key_for(const TrainConfig& cfg, DistanceMode mode) {
  RunKey key;
  key.shots = cfg.shots;
  key.mode = mode;
  key.heads = cfg.heads;
  key.alpha = cfg.weights.alpha;
  key.beta = cfg.weights.beta;
  key.gamma1 = cfg.gamma1;
  key.gamma2 = cfg.gamma2;
  return key;
}

void copy_trace(const TrainedModel& model, RunRecord& run) {
  run.trace_cls.reserve(model.loss_trace.size());
  for (const auto& loss : model.loss_trace) {
    run.trace_cls.push_back(loss.cls);
    run.trace_intra.push_back(loss.intra);
    run.trace_text_sep.push_back(loss.text_sep);
    run.trace_total.push_back(loss.total);
  }
}

/// One training cell: resolved config + seed + the rows/modes it reports.
struct Cell {
  TrainConfig config;
  std::uint64_t seed = 0;
  std::vector<DistanceMode> modes;
  std::vector<std::string> row_labels;  // parallel to modes; empty strings ok
};

struct CellOutcome {
  std::vector<RunRecord> records;
  double wall_ms = 0.0;
  std::exception_ptr failure;  // set alongside the failed records
};

CellOutcome run_cell(const EmbeddingSet& data, const Cell& cell) {
  CellOutcome outcome;
  TrainConfig cfg = cell.config;
  cfg.seed = cell.seed;
  try {
    const FewShotTask task = sample_few_shot(data, cfg.shots, cfg.seed);
    const TrainedModel model = train(task, cfg);
    for (std::size_t k = 0; k < cell.modes.size(); ++k) {
      RunRecord run;
      run.key = key_for(model.config, cell.modes[k]);
      run.seed = cfg.seed;
      run.row = cell.row_labels[k];
      const EvalResult eval = evaluate(model, task.test, cell.modes[k]);
      run.accuracy = eval.accuracy;
      run.per_class_accuracy = eval.per_class_accuracy;
      copy_trace(model, run);
      outcome.records.push_back(std::move(run));
    }
  } catch (const std::exception& e) {
    outcome.failure = std::current_exception();
    outcome.records.clear();
    for (std::size_t k = 0; k < cell.modes.size(); ++k) {
      RunRecord run;
      run.key = key_for(cfg.resolved(), cell.modes[k]);
      run.seed = cfg.seed;
      run.row = cell.row_labels[k];
      run.failed = true;
      run.error = e.what();
      outcome.records.push_back(std::move(run));
    }
  }
  return outcome;
}

/// Runs every cell on a bounded pool; results keep cell order, so the
/// report is identical no matter how the pool schedules them.
std::vector<CellOutcome> run_cells(const EmbeddingSet& data,
                                   const std::vector<Cell>& cells, int threads,
                                   bool propagate_failures) {
  std::vector<CellOutcome> outcomes(cells.size());
  const int workers = resolve_thread_count(threads, cells.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::size_t at = next.fetch_add(1);
      if (at >= cells.size()) return;
      const auto start = Clock::now();
      outcomes[at] = run_cell(data, cells[at]);
      outcomes[at].wall_ms = ms_since(start);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (propagate_failures)
    for (const auto& outcome : outcomes)
      if (outcome.failure) std::rethrow_exception(outcome.failure);
  return outcomes;
}

ExperimentReport assemble(const std::string& kind, const Invocation& invocation,
                          const std::vector<CellOutcome>& outcomes,
                          Clock::time_point start) {
  ExperimentReport report;
  report.kind = kind;
  report.invocation = invocation;
  for (const auto& outcome : outcomes) {
    report.per_run_ms.push_back(outcome.wall_ms);
    for (const auto& run : outcome.records) report.runs.push_back(run);
  }
  report.aggregates = compute_aggregates(report.runs);
  report.total_ms = ms_since(start);
  return report;
}

std::vector<std::string> no_rows(std::size_t n) {
  return std::vector<std::string>(n, std::string());
}

}  // namespace

const std::vector<AblationRow>& ablation_rows() {
  static const std::vector<AblationRow> rows = {
      {"baseline", false, false, false, false},
      {"ca", true, false, false, false},
      {"ca+intra", true, true, false, false},
      {"ca+da", true, false, true, false},
      {"ca+intra+da", true, true, true, false},
      {"full", true, true, true, true},
  };
  return rows;
}

int resolve_thread_count(int requested, std::size_t cells) {
  int workers = requested;
  if (workers <= 0) {
    if (const char* env = std::getenv("CAM_THREADS")) {
      workers = std::atoi(env);
      if (workers < 1)
        throw Error(ErrorCode::kConfigError,
                    "CAM_THREADS must be a positive integer");
    }
  }
  if (workers <= 0) {
    workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
  }
  if (cells > 0 && static_cast<std::size_t>(workers) > cells)
    workers = static_cast<int>(cells);
  return workers;
}

ExperimentReport run_train(const Invocation& invocation) {
  const auto start = Clock::now();
  if (invocation.seeds.empty())
    throw Error(ErrorCode::kConfigError, "at least one seed required");
  if (invocation.modes.empty())
    throw Error(ErrorCode::kConfigError, "at least one mode required");
  const EmbeddingSet data =
      load_embeddings(invocation.data_path, invocation.normalize);

  std::vector<Cell> cells;
  for (std::uint64_t seed : invocation.seeds) {
    Cell cell;
    cell.config = invocation.base.resolved();
    cell.seed = seed;
    cell.modes = invocation.modes;
    cell.row_labels = no_rows(cell.modes.size());
    cells.push_back(std::move(cell));
  }
  const auto outcomes = run_cells(data, cells, 1, /*propagate_failures=*/true);
  return assemble("train", invocation, outcomes, start);
}

ExperimentReport run_sweep(const Invocation& invocation, int threads) {
  const auto start = Clock::now();
  if (invocation.seeds.empty() || invocation.modes.empty() ||
      invocation.shots_list.empty())
    throw Error(ErrorCode::kConfigError,
                "sweep grid is empty: shots, seeds and modes are all required");
  const EmbeddingSet data =
      load_embeddings(invocation.data_path, invocation.normalize);

  // Missing grids mean "hold the base value".
  const std::vector<double> alphas = invocation.alpha_grid.empty()
                                         ? std::vector<double>{invocation.base.weights.alpha}
                                         : invocation.alpha_grid;
  const std::vector<double> betas = invocation.beta_grid.empty()
                                        ? std::vector<double>{invocation.base.weights.beta}
                                        : invocation.beta_grid;

  std::vector<Cell> cells;
  for (int shots : invocation.shots_list)
    for (double alpha : alphas)
      for (double beta : betas)
        for (std::uint64_t seed : invocation.seeds) {
          Cell cell;
          cell.config = invocation.base;
          cell.config.shots = shots;
          cell.config.weights.alpha = alpha;
          cell.config.weights.beta = beta;
          cell.config = cell.config.resolved();
          cell.seed = seed;
          cell.modes = invocation.modes;
          cell.row_labels = no_rows(cell.modes.size());
          cells.push_back(std::move(cell));
        }
  const auto outcomes =
      run_cells(data, cells, threads, /*propagate_failures=*/false);
  return assemble("sweep", invocation, outcomes, start);
}

ExperimentReport run_ablate(const Invocation& invocation, int threads) {
  const auto start = Clock::now();
  if (invocation.seeds.empty())
    throw Error(ErrorCode::kConfigError, "at least one seed required");
  const EmbeddingSet data =
      load_embeddings(invocation.data_path, invocation.normalize);

  std::vector<Cell> cells;
  for (const AblationRow& row : ablation_rows())
    for (std::uint64_t seed : invocation.seeds) {
      Cell cell;
      cell.config = invocation.base;
      cell.config.heads = row.da ? invocation.base.heads : 1;
      cell.config.weights.alpha = row.intra ? invocation.base.weights.alpha : 0.0;
      cell.config.weights.beta = row.ts ? invocation.base.weights.beta : 0.0;
      cell.config = cell.config.resolved();
      cell.seed = seed;
      cell.modes = {row.ca ? DistanceMode::kMahalanobis
                           : DistanceMode::kEuclidean};
      cell.row_labels = {row.label};
      cells.push_back(std::move(cell));
    }
  const auto outcomes =
      run_cells(data, cells, threads, /*propagate_failures=*/true);
  return assemble("ablate", invocation, outcomes, start);
}

}  // namespace cam
