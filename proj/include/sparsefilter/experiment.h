#pragma once

// Experiment grids over (algorithm x noise model x N, d, k, eps[, rho]),
// per-cell trial summaries, CSV / plot-data output and sample-complexity
// sweeps.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sparsefilter/baselines.h"
#include "sparsefilter/contamination.h"
#include "sparsefilter/sparse_mean.h"
#include "sparsefilter/sparse_pca.h"
#include "sparsefilter/trace.h"

namespace sparsefilter {

// The published figures put "m" on the sample axis. It is read as the sample
// count N, and this is the only place the axis gets its name.
inline constexpr const char* kSampleAxisLabel = "n_samples";

enum class Task { kMean, kPca };

std::string to_string(Task task);

struct ExperimentSpec {
  std::string name = "experiment";
  Task task = Task::kMean;
  std::vector<int> d;
  std::vector<int> k;
  std::vector<double> eps;
  std::vector<std::size_t> n_samples;
  std::vector<double> rho = {1.0};  // pca only
  CorruptionSpec noise;
  std::vector<std::string> algorithms;
  int trials = 10;
  std::uint64_t base_seed = 1;
  // Nonzero mean entries of the sparse-mean model.
  double mean_scale = 0.0;
  // When false, runtimes are recorded as 0 so output depends only on seeds.
  bool record_timing = true;
  bool collect_trace = false;
  // When true, an estimator ContractError is recorded as a failed trial with
  // infinite error instead of aborting the run. Sweeps use this, because small
  // sample sizes are expected to violate the good-set conditions.
  bool record_contract_failures = false;

  // k and eps are overwritten per grid point.
  RsmConfig rsm;
  RspcaConfig rspca;
  RdpcaConfig rdpca;
  int ransac_candidates = 50;
  double np_prune_c = 3.0;

  double target_error = 1.2;
  double target_fraction = 0.7;
};

// Flat "key = value" text; '#' starts a comment; keys use dotted sections
// (grid.d, noise.kind, rsm.c_frob, ...). A line "[section]" prefixes the keys
// that follow. Lists are comma separated. Throws ConfigError.
ExperimentSpec parse_experiment_spec(const std::string& text);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

// Non-empty grids, trials >= 1, every algorithm registered for the task.
void validate(const ExperimentSpec& spec);

std::vector<std::string> registered_algorithms(Task task);

struct GridPoint {
  int d = 0;
  int k = 0;
  double eps = 0.0;
  std::size_t n_samples = 0;
  double rho = 0.0;  // 0 for the mean task

  bool operator==(const GridPoint&) const = default;
};

// Grid points in spec order: d outermost, then k, eps, n_samples, rho.
std::vector<GridPoint> expand_grid(const ExperimentSpec& spec);

struct TrialRecord {
  std::size_t grid_index = 0;
  int trial = 0;
  std::string algorithm;
  double error = 0.0;
  double runtime_ms = 0.0;
  std::size_t iterations = 0;
  bool contract_failure = false;
  // One entry per iteration that removed points.
  std::vector<RemovalCounts> filter_removals;
};

struct SummaryRow {
  std::string experiment;
  std::string task;
  std::string noise_model;
  std::string algorithm;
  GridPoint point;
  int trial_count = 0;
  double median_error = 0.0;
  double q25_error = 0.0;
  double q75_error = 0.0;
  double median_runtime_ms = 0.0;
  double median_iterations = 0.0;

  bool operator==(const SummaryRow&) const = default;
};

struct ExperimentResult {
  std::vector<GridPoint> grid;
  std::vector<SummaryRow> rows;      // grid-major, algorithms in spec order
  std::vector<TrialRecord> trials;   // grid, trial, algorithm order
  std::vector<std::string> trace;    // formatted records when collect_trace
};

// Seed for one (grid point, trial) cell.
std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t grid_index, int trial);

// The dataset every algorithm of a cell sees.
CorruptedDataset make_trial_dataset(const ExperimentSpec& spec, const GridPoint& point,
                                    std::uint64_t seed);

// Runs the grid with `threads` workers. Output is independent of `threads`.
// Propagates ContractError from an estimator unless record_contract_failures.
ExperimentResult run_experiment(const ExperimentSpec& spec, int threads = 1);

// Linear-interpolated quantile of unsorted values.
double summary_quantile(std::vector<double> values, double q);

struct SweepRow {
  std::string algorithm;
  int d = 0;
  int k = 0;
  double eps = 0.0;
  double rho = 0.0;
  std::optional<std::size_t> min_n;  // none if no N in the grid reaches the target
};

// For each (algorithm, d, k, eps, rho): the smallest N in the grid at which at
// least target_fraction of the trials have error <= target_error. The N grid
// must be strictly increasing. Contract failures count as misses.
std::vector<SweepRow> sample_complexity_sweep(const ExperimentSpec& spec, double target_error,
                                              double target_fraction, int threads = 1);
std::vector<SweepRow> sweep_from_result(const ExperimentSpec& spec, const ExperimentResult& result,
                                        double target_error, double target_fraction);

std::vector<std::string> csv_columns();
std::string format_csv(const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> parse_csv(const std::string& text);
void emit_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path);

// One whitespace-separated file per (algorithm, varying axis) in `dir`, named
// <experiment>_<algorithm>_<axis>.dat. Columns: axis value, median, q25, q75.
// Rows sharing the other coordinates form a block; blocks are separated by a
// blank line. With no varying axis the sample axis is used. Returns the paths.
std::vector<std::filesystem::path> emit_plotdata(const std::vector<SummaryRow>& rows,
                                                 const std::filesystem::path& dir);

std::string format_sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace sparsefilter
