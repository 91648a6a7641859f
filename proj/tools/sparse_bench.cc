// sparse_bench: runs experiment grids and good-set audits from the command line.
//
// Exit codes: 0 success, 2 configuration error, 3 estimator contract error
// (a filter found no admissible threshold), 4 I/O error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "sparsefilter/dataset_io.h"
#include "sparsefilter/errors.h"
#include "sparsefilter/experiment.h"
#include "sparsefilter/goodset_audit.h"
#include "sparsefilter/random.h"

namespace fs = std::filesystem;
using namespace sparsefilter;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitContract = 3;
constexpr int kExitIo = 4;

struct BenchOptions {
  std::string config;
  std::string out = "results";
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool trace = false;
  bool no_timing = false;
  bool dump_datasets = false;
};

void add_bench_flags(CLI::App* cmd, BenchOptions& opt) {
  cmd->add_option("--config", opt.config, "experiment config file")->required();
  cmd->add_option("--out", opt.out, "output directory");
  cmd->add_option("--trials", opt.trials, "override the trial count");
  cmd->add_option("--seed", opt.seed, "override the base seed");
  cmd->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--trace", opt.trace, "write per-iteration trace records");
  cmd->add_flag("--no-timing", opt.no_timing, "record runtimes as 0 for byte-stable output");
  cmd->add_flag("--dump-datasets", opt.dump_datasets, "write every trial dataset to <out>/datasets");
}

ExperimentSpec load_spec(const BenchOptions& opt, std::optional<Task> required_task) {
  ExperimentSpec spec = load_experiment_spec(opt.config);
  if (opt.trials) spec.trials = *opt.trials;
  if (opt.seed) spec.base_seed = *opt.seed;
  if (opt.trace) spec.collect_trace = true;
  if (opt.no_timing) spec.record_timing = false;
  if (required_task && spec.task != *required_task)
    throw ConfigError("config task is " + to_string(spec.task) + " but the subcommand expects " +
                      to_string(*required_task));
  validate(spec);
  return spec;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void print_rows(const std::vector<SummaryRow>& rows) {
  std::printf("%-10s %5s %4s %6s %5s %8s  %10s %10s %10s %10s\n", "algorithm", "d", "k", "eps", "rho",
              kSampleAxisLabel, "median", "q25", "q75", "ms");
  for (const auto& r : rows) {
    std::printf("%-10s %5d %4d %6.3f %5.2f %8zu  %10.4f %10.4f %10.4f %10.2f\n", r.algorithm.c_str(), r.point.d,
                r.point.k, r.point.eps, r.point.rho, r.point.n_samples, r.median_error, r.q25_error, r.q75_error,
                r.median_runtime_ms);
  }
}

void dump_datasets(const ExperimentSpec& spec, const ExperimentResult& result, const fs::path& dir) {
  ensure_dir(dir);
  for (std::size_t g = 0; g < result.grid.size(); ++g) {
    for (int t = 0; t < spec.trials; ++t) {
      const std::uint64_t seed = trial_seed(spec.base_seed, g, t);
      const auto data = make_trial_dataset(spec, result.grid[g], seed);
      const auto path = dir / (spec.name + "_g" + std::to_string(g) + "_t" + std::to_string(t) + ".spfd");
      write_dataset(path, data,
                    {{"noise", to_string(spec.noise.kind)},
                     {"seed", std::to_string(seed)},
                     {"experiment", spec.name}});
    }
  }
}

int run_bench(const BenchOptions& opt, Task task) {
  const ExperimentSpec spec = load_spec(opt, task);
  const fs::path out(opt.out);
  ensure_dir(out);
  const ExperimentResult result = run_experiment(spec, opt.threads);
  emit_csv(result.rows, out / (spec.name + ".csv"));
  emit_plotdata(result.rows, out / "plot");
  if (spec.collect_trace) {
    std::string text;
    for (const auto& line : result.trace) text += line + "\n";
    write_text(out / (spec.name + ".trace"), text);
  }
  if (opt.dump_datasets) dump_datasets(spec, result, out / "datasets");
  print_rows(result.rows);
  return 0;
}

int run_sweep(const BenchOptions& opt) {
  ExperimentSpec spec = load_spec(opt, std::nullopt);
  spec.record_contract_failures = true;
  const fs::path out(opt.out);
  ensure_dir(out);
  for (std::size_t i = 1; i < spec.n_samples.size(); ++i)
    if (spec.n_samples[i] <= spec.n_samples[i - 1])
      throw ConfigError("sweep requires a strictly increasing n_samples grid");
  const ExperimentResult result = run_experiment(spec, opt.threads);
  const auto sweep = sweep_from_result(spec, result, spec.target_error, spec.target_fraction);
  emit_csv(result.rows, out / (spec.name + ".csv"));
  const std::string text = format_sweep_csv(sweep);
  write_text(out / (spec.name + "_sweep.csv"), text);
  std::cout << text;
  return 0;
}

struct AuditOptions {
  std::string task = "mean";
  int d = 20;
  int k = 2;
  double eps = 0.2;
  double tau = 0.1;
  double rho = 1.0;
  std::optional<std::size_t> n;
  int directions = 200;
  int seeds = 10;
  std::uint64_t seed = 1;
};

int run_audit(const AuditOptions& opt) {
  if (opt.task != "mean" && opt.task != "pca") throw ConfigError("--task must be mean or pca");
  if (opt.d < 1 || opt.k < 1 || opt.k > opt.d) throw ConfigError("need 1 <= k <= d");
  if (!(opt.eps > 0.0 && opt.eps < 0.5)) throw ConfigError("--eps must lie in (0, 1/2)");
  // Default size: 200 k^2 log(d / tau) / eps^2.
  const std::size_t n = opt.n.value_or(static_cast<std::size_t>(
      200.0 * opt.k * opt.k * std::log(static_cast<double>(opt.d) / opt.tau) / (opt.eps * opt.eps)));
  int passed = 0;
  for (int s = 0; s < opt.seeds; ++s) {
    const std::uint64_t seed = derive_seed({opt.seed, static_cast<std::uint64_t>(s)});
    AuditReport report;
    if (opt.task == "mean") {
      const auto model = make_sparse_mean_model(opt.d, opt.k, 1.0, derive_seed({seed, 1}));
      const auto data = draw_inliers(model, n, derive_seed({seed, 2}));
      report = audit_mean_good_set(data.samples, model, opt.eps, opt.tau, opt.directions, derive_seed({seed, 3}));
    } else {
      const auto model = make_spiked_model(opt.d, opt.k, opt.rho, derive_seed({seed, 1}));
      const auto data = draw_inliers(model, n, derive_seed({seed, 2}));
      report = audit_pca_good_set(data.samples, model, opt.eps, opt.directions, derive_seed({seed, 3}));
    }
    if (report.all_passed()) ++passed;
    std::cout << "seed " << s << " (N=" << n << "): " << (report.all_passed() ? "good" : "NOT good") << "\n"
              << format_report(report);
  }
  std::cout << passed << "/" << opt.seeds << " seeds passed every condition\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust sparse mean and sparse PCA benchmarks"};
  app.require_subcommand(1);

  BenchOptions mean_opt, pca_opt, sweep_opt;
  auto* mean_cmd = app.add_subcommand("mean-bench", "run a sparse mean experiment grid");
  add_bench_flags(mean_cmd, mean_opt);
  auto* pca_cmd = app.add_subcommand("pca-bench", "run a sparse PCA experiment grid");
  add_bench_flags(pca_cmd, pca_opt);
  auto* sweep_cmd = app.add_subcommand("sweep", "minimal sample size reaching a target error");
  add_bench_flags(sweep_cmd, sweep_opt);

  AuditOptions audit_opt;
  auto* audit_cmd = app.add_subcommand("audit-goodset", "check the good-set conditions on clean samples");
  audit_cmd->add_option("--task", audit_opt.task, "mean or pca");
  audit_cmd->add_option("--d", audit_opt.d, "dimension");
  audit_cmd->add_option("--k", audit_opt.k, "sparsity");
  audit_cmd->add_option("--eps", audit_opt.eps, "corruption fraction");
  audit_cmd->add_option("--tau", audit_opt.tau, "failure probability");
  audit_cmd->add_option("--rho", audit_opt.rho, "spike strength (pca)");
  audit_cmd->add_option("--n", audit_opt.n, "sample size (default 200 k^2 log(d/tau) / eps^2)");
  audit_cmd->add_option("--directions", audit_opt.directions, "random witnesses per condition");
  audit_cmd->add_option("--trials", audit_opt.seeds, "number of seeds");
  audit_cmd->add_option("--seed", audit_opt.seed, "base seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*mean_cmd) return run_bench(mean_opt, Task::kMean);
    if (*pca_cmd) return run_bench(pca_opt, Task::kPca);
    if (*sweep_cmd) return run_sweep(sweep_opt);
    if (*audit_cmd) return run_audit(audit_opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InputError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ContractError& e) {
    std::cerr << "contract error: " << e.what() << "\n";
    return kExitContract;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
