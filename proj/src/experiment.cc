#include "sparsefilter/experiment.h"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <chrono>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "sparsefilter/errors.h"
#include "sparsefilter/random.h"

namespace sparsefilter {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& s) {
  double x = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || end != s.data() + s.size())
    throw ConfigError("key '" + key + "': '" + s + "' is not a number");
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& s) {
  std::uint64_t x = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || end != s.data() + s.size())
    throw ConfigError("key '" + key + "': '" + s + "' is not a non-negative integer");
  return x;
}

int to_int(const std::string& key, const std::string& s) {
  const std::uint64_t x = to_u64(key, s);
  if (x > static_cast<std::uint64_t>(std::numeric_limits<int>::max()))
    throw ConfigError("key '" + key + "': value too large");
  return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("key '" + key + "': '" + s + "' is not a boolean");
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& key, const std::string& value, F&& convert) {
  std::vector<T> out;
  for (const auto& item : split_list(value)) out.push_back(static_cast<T>(convert(key, item)));
  return out;
}

std::string format_double(double x) {
  std::array<char, 32> buf;
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), end);
}

std::string noise_label(const ExperimentSpec& spec) { return to_string(spec.noise.kind); }

using Runner = std::function<TrialRecord(const ExperimentSpec&, const GridPoint&, const CorruptedDataset&,
                                         std::uint64_t, std::vector<TraceRecord>&)>;

RsmConfig rsm_for(const ExperimentSpec& spec, const GridPoint& p) {
  RsmConfig cfg = spec.rsm;
  cfg.k = p.k;
  cfg.eps = p.eps;
  return cfg;
}

double mean_error(const Vector& estimate, const CorruptedDataset& data, int k) {
  return sparsify_then_error(estimate, std::get<SparseMeanModel>(data.model).mu, k);
}

TrialRecord from_baseline(BaselineResult&& r, double error, std::vector<TraceRecord>& trace) {
  TrialRecord rec;
  rec.error = error;
  rec.iterations = r.iterations;
  trace = std::move(r.trace);
  return rec;
}

const std::map<std::string, Runner>& mean_registry() {
  static const std::map<std::string, Runner> registry = {
      {"oracle",
       [](const ExperimentSpec&, const GridPoint& p, const CorruptedDataset& data, std::uint64_t,
          std::vector<TraceRecord>& trace) {
         BaselineResult r = oracle_mean(data, p.k);
         const double err = mean_error(r.estimate, data, p.k);
         return from_baseline(std::move(r), err, trace);
       }},
      {"RME_sp",
       [](const ExperimentSpec& s, const GridPoint& p, const CorruptedDataset& data, std::uint64_t,
          std::vector<TraceRecord>& trace) {
         BaselineResult r = sparse_filter_mean(data.samples, rsm_for(s, p));
         const double err = mean_error(r.estimate, data, p.k);
         return from_baseline(std::move(r), err, trace);
       }},
      {"RME_sp_L",
       [](const ExperimentSpec& s, const GridPoint& p, const CorruptedDataset& data, std::uint64_t,
          std::vector<TraceRecord>& trace) {
         BaselineResult r = linear_only_sparse_mean(data.samples, rsm_for(s, p));
         const double err = mean_error(r.estimate, data, p.k);
         return from_baseline(std::move(r), err, trace);
       }},
      {"NP",
       [](const ExperimentSpec& s, const GridPoint& p, const CorruptedDataset& data, std::uint64_t,
          std::vector<TraceRecord>& trace) {
         BaselineResult r = naive_prune_mean(data.samples, p.k, s.np_prune_c);
         const double err = mean_error(r.estimate, data, p.k);
         return from_baseline(std::move(r), err, trace);
       }},
      {"RANSAC",
       [](const ExperimentSpec& s, const GridPoint& p, const CorruptedDataset& data, std::uint64_t seed,
          std::vector<TraceRecord>& trace) {
         BaselineResult r = ransac_mean(data.samples, p.k, s.ransac_candidates, seed);
         const double err = mean_error(r.estimate, data, p.k);
         return from_baseline(std::move(r), err, trace);
       }},
      {"RME",
       [](const ExperimentSpec& s, const GridPoint& p, const CorruptedDataset& data, std::uint64_t,
          std::vector<TraceRecord>& trace) {
         BaselineResult r = dense_filter_mean(data.samples, rsm_for(s, p));
         const double err = mean_error(r.estimate, data, p.k);
         return from_baseline(std::move(r), err, trace);
       }},
  };
  return registry;
}

const std::map<std::string, Runner>& pca_registry() {
  static const std::map<std::string, Runner> registry = {
      {"RSPCA",
       [](const ExperimentSpec& s, const GridPoint& p, const CorruptedDataset& data, std::uint64_t,
          std::vector<TraceRecord>& trace) {
         RspcaConfig cfg = s.rspca;
         cfg.k = p.k;
         cfg.eps = p.eps;
         PcaEstimate est = rspca_estimate(data.samples, cfg);
         TrialRecord rec;
         rec.error = projection_distance(est.w, std::get<SpikedCovModel>(data.model).v);
         rec.iterations = est.iterations;
         trace = std::move(est.trace);
         return rec;
       }},
      {"RDPCA",
       [](const ExperimentSpec& s, const GridPoint& p, const CorruptedDataset& data, std::uint64_t,
          std::vector<TraceRecord>& trace) {
         RdpcaConfig cfg = s.rdpca;
         cfg.eps = p.eps;
         BaselineResult r = dense_robust_pca(data.samples, cfg);
         const double err = projection_distance(r.estimate, std::get<SpikedCovModel>(data.model).v);
         return from_baseline(std::move(r), err, trace);
       }},
  };
  return registry;
}

const std::map<std::string, Runner>& registry_for(Task task) {
  return task == Task::kMean ? mean_registry() : pca_registry();
}

}  // namespace

std::string to_string(Task task) { return task == Task::kMean ? "mean" : "pca"; }

ExperimentSpec parse_experiment_spec(const std::string& text) {
  ExperimentSpec spec;
  std::set<std::string> seen;
  std::stringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'");

    if (key == "name") {
      spec.name = value;
    } else if (key == "task") {
      if (value == "mean") spec.task = Task::kMean;
      else if (value == "pca") spec.task = Task::kPca;
      else throw ConfigError("task must be 'mean' or 'pca', got '" + value + "'");
    } else if (key == "trials") {
      spec.trials = to_int(key, value);
    } else if (key == "base_seed") {
      spec.base_seed = to_u64(key, value);
    } else if (key == "algorithms") {
      spec.algorithms = split_list(value);
    } else if (key == "mean_scale") {
      spec.mean_scale = to_double(key, value);
    } else if (key == "timing") {
      spec.record_timing = to_bool(key, value);
    } else if (key == "record_contract_failures") {
      spec.record_contract_failures = to_bool(key, value);
    } else if (key == "trace") {
      spec.collect_trace = to_bool(key, value);
    } else if (key == "grid.d") {
      spec.d = to_list<int>(key, value, to_int);
    } else if (key == "grid.k") {
      spec.k = to_list<int>(key, value, to_int);
    } else if (key == "grid.eps") {
      spec.eps = to_list<double>(key, value, to_double);
    } else if (key == "grid.n_samples") {
      spec.n_samples = to_list<std::size_t>(key, value, to_u64);
    } else if (key == "grid.rho") {
      spec.rho = to_list<double>(key, value, to_double);
    } else if (key == "noise.kind") {
      try {
        spec.noise.kind = corruption_kind_from_string(value);
      } catch (const InputError& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "noise.bias_mode") {
      if (value == "add_shift") spec.noise.bias_mode = BiasMode::kAddShift;
      else if (value == "mean_plus_one") spec.noise.bias_mode = BiasMode::kMeanPlusOne;
      else throw ConfigError("noise.bias_mode must be add_shift or mean_plus_one");
    } else if (key == "noise.shift") {
      // A scalar applied to every coordinate; the vector is built per grid point.
      spec.noise.shift = Vector::Constant(1, to_double(key, value));
    } else if (key == "rsm.tau") {
      spec.rsm.tau = to_double(key, value);
      spec.rdpca.tau = spec.rsm.tau;
      spec.rspca.tau = spec.rsm.tau;
    } else if (key == "rsm.c_frob") {
      spec.rsm.c_frob = to_double(key, value);
    } else if (key == "rsm.c_eig") {
      spec.rsm.c_eig = to_double(key, value);
    } else if (key == "rsm.quadratic_filter") {
      spec.rsm.quadratic_filter = to_bool(key, value);
    } else if (key == "rsm.max_iterations") {
      spec.rsm.max_iterations = to_u64(key, value);
    } else if (key == "rspca.c_pca") {
      spec.rspca.c_pca = to_double(key, value);
    } else if (key == "rspca.c_tail") {
      spec.rspca.c_tail = to_double(key, value);
    } else if (key == "rspca.c_boot") {
      spec.rspca.c_boot = to_double(key, value);
    } else if (key == "rspca.max_bootstrap_rounds") {
      spec.rspca.max_bootstrap_rounds = to_int(key, value);
    } else if (key == "rspca.max_filter_iterations") {
      spec.rspca.max_filter_iterations = to_u64(key, value);
    } else if (key == "rspca.rho_upper") {
      spec.rspca.rho_upper = to_double(key, value);
    } else if (key == "rdpca.c") {
      spec.rdpca.c = to_double(key, value);
    } else if (key == "ransac.candidates") {
      spec.ransac_candidates = to_int(key, value);
    } else if (key == "np.prune_c") {
      spec.np_prune_c = to_double(key, value);
    } else if (key == "sweep.target_error") {
      spec.target_error = to_double(key, value);
    } else if (key == "sweep.target_fraction") {
      spec.target_fraction = to_double(key, value);
    } else {
      throw ConfigError("unknown key '" + key + "' (line " + std::to_string(line_no) + ")");
    }
  }
  validate(spec);
  return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_experiment_spec(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<std::string> registered_algorithms(Task task) {
  std::vector<std::string> names;
  for (const auto& [name, runner] : registry_for(task)) names.push_back(name);
  return names;
}

void validate(const ExperimentSpec& spec) {
  if (spec.d.empty() || spec.k.empty() || spec.eps.empty() || spec.n_samples.empty())
    throw ConfigError("grids d, k, eps and n_samples must be non-empty");
  if (spec.task == Task::kPca && spec.rho.empty()) throw ConfigError("grid rho must be non-empty for pca");
  if (spec.trials < 1) throw ConfigError("trials must be at least 1");
  if (spec.algorithms.empty()) throw ConfigError("no algorithms listed");
  const auto& registry = registry_for(spec.task);
  for (const auto& name : spec.algorithms) {
    if (!registry.count(name)) {
      std::string known;
      for (const auto& n : registered_algorithms(spec.task)) known += (known.empty() ? "" : ", ") + n;
      throw ConfigError("unknown algorithm '" + name + "' for task " + to_string(spec.task) +
                        " (registered: " + known + ")");
    }
  }
  if (std::set<std::string>(spec.algorithms.begin(), spec.algorithms.end()).size() != spec.algorithms.size())
    throw ConfigError("algorithm listed twice");
  for (int d : spec.d)
    if (d < 1) throw ConfigError("grid.d entries must be positive");
  for (int k : spec.k)
    if (k < 1) throw ConfigError("grid.k entries must be positive");
  for (double e : spec.eps)
    if (!(e > 0.0 && e < 0.5)) throw ConfigError("grid.eps entries must lie in (0, 1/2)");
  for (std::size_t n : spec.n_samples)
    if (n < 4) throw ConfigError("grid.n_samples entries must be at least 4");
  if (spec.task == Task::kPca)
    for (double r : spec.rho)
      if (!(r > 0.0)) throw ConfigError("grid.rho entries must be positive");
  if (spec.ransac_candidates < 1) throw ConfigError("ransac.candidates must be positive");
  if (!(spec.target_fraction >= 0.0 && spec.target_fraction <= 1.0))
    throw ConfigError("sweep.target_fraction must lie in [0, 1]");
  const bool is_mean = spec.task == Task::kMean;
  const bool is_spike = spec.noise.kind == CorruptionKind::kDisjointSpike;
  if (is_mean == is_spike)
    throw ConfigError("noise kind " + to_string(spec.noise.kind) + " does not apply to task " + to_string(spec.task));
}

std::vector<GridPoint> expand_grid(const ExperimentSpec& spec) {
  const std::vector<double> rhos = spec.task == Task::kPca ? spec.rho : std::vector<double>{0.0};
  std::vector<GridPoint> grid;
  for (int d : spec.d)
    for (int k : spec.k)
      for (double eps : spec.eps)
        for (std::size_t n : spec.n_samples)
          for (double rho : rhos) grid.push_back({d, k, eps, n, rho});
  return grid;
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t grid_index, int trial) {
  return derive_seed({base_seed, static_cast<std::uint64_t>(grid_index), static_cast<std::uint64_t>(trial)});
}

CorruptedDataset make_trial_dataset(const ExperimentSpec& spec, const GridPoint& point, std::uint64_t seed) {
  InlierModel model;
  if (spec.task == Task::kMean)
    model = make_sparse_mean_model(point.d, point.k, spec.mean_scale, derive_seed({seed, 1}));
  else
    model = make_spiked_model(point.d, point.k, point.rho, derive_seed({seed, 1}));
  CorruptionSpec noise = spec.noise;
  if (noise.shift && noise.shift->size() == 1) noise.shift = Vector::Constant(point.d, (*noise.shift)[0]);
  const CorruptedDataset clean = draw_inliers(model, point.n_samples, derive_seed({seed, 2}));
  return corrupt(clean, point.eps, noise, derive_seed({seed, 3}));
}

double summary_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InputError("summary_quantile: no values");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  // Failed trials carry +inf; avoid inf - inf when both neighbours failed.
  if (frac == 0.0 || values[lo] == values[hi]) return values[lo];
  if (std::isinf(values[hi])) return values[hi];
  return values[lo] + frac * (values[hi] - values[lo]);
}

ExperimentResult run_experiment(const ExperimentSpec& spec, int threads) {
  validate(spec);
  const auto& registry = registry_for(spec.task);
  std::vector<const Runner*> runners;
  for (const auto& name : spec.algorithms) runners.push_back(&registry.at(name));

  ExperimentResult result;
  result.grid = expand_grid(spec);
  const std::size_t n_algs = spec.algorithms.size();
  const std::size_t n_cells = result.grid.size() * static_cast<std::size_t>(spec.trials);
  std::vector<std::vector<TrialRecord>> cell_records(n_cells);
  std::vector<std::vector<std::string>> cell_trace(n_cells);
  std::vector<std::exception_ptr> cell_error(n_cells);

  auto run_cell = [&](std::size_t cell) {
    const std::size_t g = cell / static_cast<std::size_t>(spec.trials);
    const int trial = static_cast<int>(cell % static_cast<std::size_t>(spec.trials));
    const GridPoint& point = result.grid[g];
    const std::uint64_t seed = trial_seed(spec.base_seed, g, trial);
    const CorruptedDataset data = make_trial_dataset(spec, point, seed);
    for (std::size_t a = 0; a < n_algs; ++a) {
      std::vector<TraceRecord> trace;
      const auto start = std::chrono::steady_clock::now();
      TrialRecord rec;
      try {
        rec = (*runners[a])(spec, point, data, derive_seed({seed, 4, a}), trace);
      } catch (const ContractError& e) {
        if (!spec.record_contract_failures) throw;
        rec = TrialRecord{};
        rec.error = std::numeric_limits<double>::infinity();
        rec.contract_failure = true;
        trace.clear();
        if (spec.collect_trace) {
          cell_trace[cell].push_back("experiment=" + spec.name + " grid=" + std::to_string(g) + " trial=" +
                                     std::to_string(trial) + " algorithm=" + spec.algorithms[a] +
                                     " contract_error=\"" + e.diagnostics() + "\"");
        }
      }
      const auto stop = std::chrono::steady_clock::now();
      rec.grid_index = g;
      rec.trial = trial;
      rec.algorithm = spec.algorithms[a];
      rec.runtime_ms =
          spec.record_timing ? std::chrono::duration<double, std::milli>(stop - start).count() : 0.0;
      for (const auto& t : trace) {
        if (!t.removed.empty()) rec.filter_removals.push_back(classify_removed(t, data.inlier_mask));
        if (spec.collect_trace) {
          std::ostringstream line;
          line << "experiment=" << spec.name << " grid=" << g << " trial=" << trial << " algorithm="
               << spec.algorithms[a] << " " << format_trace(t, &data.inlier_mask);
          cell_trace[cell].push_back(line.str());
        }
      }
      cell_records[cell].push_back(std::move(rec));
    }
  };

  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n_cells)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t cell = next++; cell < n_cells; cell = next++) {
      try {
        run_cell(cell);
      } catch (...) {
        cell_error[cell] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& err : cell_error)
    if (err) std::rethrow_exception(err);

  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    for (auto& rec : cell_records[cell]) result.trials.push_back(std::move(rec));
    for (auto& line : cell_trace[cell]) result.trace.push_back(std::move(line));
  }

  for (std::size_t g = 0; g < result.grid.size(); ++g) {
    for (std::size_t a = 0; a < n_algs; ++a) {
      std::vector<double> errors, runtimes, iterations;
      for (int t = 0; t < spec.trials; ++t) {
        const auto& rec = result.trials[(g * static_cast<std::size_t>(spec.trials) + static_cast<std::size_t>(t)) * n_algs + a];
        errors.push_back(rec.error);
        runtimes.push_back(rec.runtime_ms);
        iterations.push_back(static_cast<double>(rec.iterations));
      }
      SummaryRow row;
      row.experiment = spec.name;
      row.task = to_string(spec.task);
      row.noise_model = noise_label(spec);
      row.algorithm = spec.algorithms[a];
      row.point = result.grid[g];
      row.trial_count = spec.trials;
      row.median_error = summary_quantile(errors, 0.5);
      row.q25_error = summary_quantile(errors, 0.25);
      row.q75_error = summary_quantile(errors, 0.75);
      row.median_runtime_ms = summary_quantile(runtimes, 0.5);
      row.median_iterations = summary_quantile(iterations, 0.5);
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

std::vector<SweepRow> sweep_from_result(const ExperimentSpec& spec, const ExperimentResult& result,
                                        double target_error, double target_fraction) {
  std::vector<SweepRow> out;
  const std::size_t n_algs = spec.algorithms.size();
  // Group grid points that differ only in n_samples, preserving spec order.
  std::vector<std::vector<std::size_t>> groups;
  std::vector<GridPoint> keys;
  for (std::size_t g = 0; g < result.grid.size(); ++g) {
    GridPoint key = result.grid[g];
    key.n_samples = 0;
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      groups.push_back({g});
    } else {
      groups[static_cast<std::size_t>(it - keys.begin())].push_back(g);
    }
  }
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    auto& members = groups[gi];
    std::sort(members.begin(), members.end(),
              [&](std::size_t a, std::size_t b) { return result.grid[a].n_samples < result.grid[b].n_samples; });
    for (std::size_t a = 0; a < n_algs; ++a) {
      SweepRow row{spec.algorithms[a], keys[gi].d, keys[gi].k, keys[gi].eps, keys[gi].rho, std::nullopt};
      for (std::size_t g : members) {
        int hits = 0;
        for (int t = 0; t < spec.trials; ++t) {
          const auto& rec =
              result.trials[(g * static_cast<std::size_t>(spec.trials) + static_cast<std::size_t>(t)) * n_algs + a];
          if (rec.error <= target_error) ++hits;
        }
        if (static_cast<double>(hits) >= target_fraction * static_cast<double>(spec.trials)) {
          row.min_n = result.grid[g].n_samples;
          break;
        }
      }
      out.push_back(std::move(row));
    }
  }
  return out;
}

std::vector<SweepRow> sample_complexity_sweep(const ExperimentSpec& spec, double target_error,
                                              double target_fraction, int threads) {
  for (std::size_t i = 1; i < spec.n_samples.size(); ++i)
    if (spec.n_samples[i] <= spec.n_samples[i - 1])
      throw ConfigError("sweep requires a strictly increasing n_samples grid");
  if (!(target_fraction >= 0.0 && target_fraction <= 1.0))
    throw ConfigError("target_fraction must lie in [0, 1]");
  ExperimentSpec tolerant = spec;
  tolerant.record_contract_failures = true;
  const ExperimentResult result = run_experiment(tolerant, threads);
  return sweep_from_result(spec, result, target_error, target_fraction);
}

std::vector<std::string> csv_columns() {
  return {"experiment", "task", "noise_model", "algorithm", "d", "k", "eps", "rho", kSampleAxisLabel,
          "trial_count", "median_error", "q25_error", "q75_error", "median_runtime_ms", "median_iterations"};
}

std::string format_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  const auto cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const auto& r : rows) {
    out << r.experiment << ',' << r.task << ',' << r.noise_model << ',' << r.algorithm << ',' << r.point.d << ','
        << r.point.k << ',' << format_double(r.point.eps) << ',' << format_double(r.point.rho) << ','
        << r.point.n_samples << ',' << r.trial_count << ',' << format_double(r.median_error) << ','
        << format_double(r.q25_error) << ',' << format_double(r.q75_error) << ','
        << format_double(r.median_runtime_ms) << ',' << format_double(r.median_iterations) << "\n";
  }
  return out.str();
}

std::vector<SummaryRow> parse_csv(const std::string& text) {
  std::stringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("parse_csv: empty input");
  std::vector<std::string> header;
  {
    std::stringstream h(line);
    std::string f;
    while (std::getline(h, f, ',')) header.push_back(f);
  }
  if (header != csv_columns()) throw InputError("parse_csv: unexpected header");
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) f.push_back(field);
    if (f.size() != header.size()) throw InputError("parse_csv: wrong field count in '" + line + "'");
    try {
      SummaryRow r;
      r.experiment = f[0];
      r.task = f[1];
      r.noise_model = f[2];
      r.algorithm = f[3];
      r.point.d = to_int("d", f[4]);
      r.point.k = to_int("k", f[5]);
      r.point.eps = to_double("eps", f[6]);
      r.point.rho = to_double("rho", f[7]);
      r.point.n_samples = to_u64(kSampleAxisLabel, f[8]);
      r.trial_count = to_int("trial_count", f[9]);
      r.median_error = to_double("median_error", f[10]);
      r.q25_error = to_double("q25_error", f[11]);
      r.q75_error = to_double("q75_error", f[12]);
      r.median_runtime_ms = to_double("median_runtime_ms", f[13]);
      r.median_iterations = to_double("median_iterations", f[14]);
      rows.push_back(std::move(r));
    } catch (const ConfigError& e) {
      throw InputError(std::string("parse_csv: ") + e.what());
    }
  }
  return rows;
}

void emit_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << format_csv(rows);
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::filesystem::path> emit_plotdata(const std::vector<SummaryRow>& rows,
                                                 const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());

  struct Axis {
    std::string name;
    std::function<double(const GridPoint&)> get;
  };
  const std::vector<Axis> axes = {
      {"d", [](const GridPoint& p) { return static_cast<double>(p.d); }},
      {"k", [](const GridPoint& p) { return static_cast<double>(p.k); }},
      {"eps", [](const GridPoint& p) { return p.eps; }},
      {kSampleAxisLabel, [](const GridPoint& p) { return static_cast<double>(p.n_samples); }},
      {"rho", [](const GridPoint& p) { return p.rho; }},
  };

  std::vector<std::string> algorithms;
  for (const auto& r : rows)
    if (std::find(algorithms.begin(), algorithms.end(), r.algorithm) == algorithms.end())
      algorithms.push_back(r.algorithm);

  std::vector<const Axis*> varying;
  for (const auto& axis : axes) {
    std::set<double> values;
    for (const auto& r : rows) values.insert(axis.get(r.point));
    if (values.size() > 1) varying.push_back(&axis);
  }
  if (varying.empty() && !rows.empty()) varying.push_back(&axes[3]);

  std::vector<std::filesystem::path> written;
  for (const auto& alg : algorithms) {
    for (const Axis* axis : varying) {
      std::vector<const SummaryRow*> series;
      for (const auto& r : rows)
        if (r.algorithm == alg) series.push_back(&r);
      // Block key: every other axis value, in axis order.
      auto block_key = [&](const SummaryRow* r) {
        std::vector<double> key;
        for (const auto& other : axes)
          if (&other != axis) key.push_back(other.get(r->point));
        return key;
      };
      std::stable_sort(series.begin(), series.end(), [&](const SummaryRow* a, const SummaryRow* b) {
        const auto ka = block_key(a), kb = block_key(b);
        if (ka != kb) return ka < kb;
        return axis->get(a->point) < axis->get(b->point);
      });
      const std::string experiment = series.empty() ? "experiment" : series.front()->experiment;
      const auto path = dir / (experiment + "_" + alg + "_" + axis->name + ".dat");
      std::ofstream out(path, std::ios::trunc);
      if (!out) throw IoError("cannot open for writing: " + path.string());
      out << "# algorithm " << alg << ", axis " << axis->name << "\n# " << axis->name
          << " median_error q25_error q75_error\n";
      std::vector<double> last_key;
      for (std::size_t i = 0; i < series.size(); ++i) {
        const auto key = block_key(series[i]);
        if (i == 0 || key != last_key) {
          if (i) out << "\n";
          out << "#";
          std::size_t j = 0;
          for (const auto& other : axes)
            if (&other != axis) out << " " << other.name << "=" << format_double(key[j++]);
          out << "\n";
          last_key = key;
        }
        out << format_double(axis->get(series[i]->point)) << " " << format_double(series[i]->median_error) << " "
            << format_double(series[i]->q25_error) << " " << format_double(series[i]->q75_error) << "\n";
      }
      if (!out) throw IoError("write failed: " + path.string());
      written.push_back(path);
    }
  }
  return written;
}

std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "algorithm,d,k,eps,rho,min_" << kSampleAxisLabel << "\n";
  for (const auto& r : rows) {
    out << r.algorithm << ',' << r.d << ',' << r.k << ',' << format_double(r.eps) << ','
        << format_double(r.rho) << ',' << (r.min_n ? std::to_string(*r.min_n) : std::string("none")) << "\n";
  }
  return out.str();
}

}  // namespace sparsefilter
