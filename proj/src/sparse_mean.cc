#include "sparsefilter/sparse_mean.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sparsefilter/errors.h"

namespace sparsefilter {
namespace {

constexpr double kQuadraticMinT = 6.0;

// Ascending distinct scores with, for each, the number of scores >= it.
template <typename Visit>
std::optional<ThresholdChoice> scan_upper_tails(std::span<const double> scores, Visit&& qualifies) {
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  for (std::size_t i = 0; i < n;) {
    const double s = sorted[i];
    const std::size_t at_least = n - i;
    if (auto choice = qualifies(s, static_cast<double>(at_least) / static_cast<double>(n))) return choice;
    while (i < n && sorted[i] == s) ++i;
  }
  return std::nullopt;
}

std::string describe(const FilterDiagnostics& diag, std::size_t n, double eps) {
  std::ostringstream out;
  out << "branch=" << to_string(diag.branch) << " n=" << n << " eps=" << eps
      << " frobenius=" << diag.frobenius << " lambda=" << diag.lambda
      << " support=" << diag.support_size;
  return out.str();
}

}  // namespace

void validate(const RsmConfig& cfg) {
  if (cfg.k < 1) throw InputError("RsmConfig: k must be >= 1");
  if (!(cfg.eps > 0.0 && cfg.eps < 0.5)) throw InputError("RsmConfig: eps must lie in (0, 1/2)");
  if (!(cfg.tau > 0.0 && cfg.tau < 1.0)) throw InputError("RsmConfig: tau must lie in (0, 1)");
  if (!(cfg.c_frob > 0.0) || !(cfg.c_eig > 0.0))
    throw InputError("RsmConfig: threshold multipliers must be positive");
}

const char* to_string(FilterBranch branch) {
  switch (branch) {
    case FilterBranch::kEstimate: return "estimate";
    case FilterBranch::kLinear: return "linear";
    case FilterBranch::kQuadratic: return "quadratic";
  }
  return "unknown";
}

double linear_tail_bound(double T, double eps, int k, std::size_t n, int d, double tau) {
  const double inner = static_cast<double>(n) * static_cast<double>(d) / tau;
  const double log_term = std::max(std::log(static_cast<double>(k) * std::log(std::max(inner, M_E))), 1.0);
  return 9.0 * erfc(T / std::sqrt(2.0)) + 3.0 * eps * eps / (T * T * log_term);
}

double quadratic_tail_bound(double T, double eps) {
  const double lt = std::log(T);
  return 9.0 * std::exp(-T / 4.0) + 3.0 * eps * eps / (T * lt * lt);
}

std::optional<ThresholdChoice> find_linear_threshold(std::span<const double> scores, double delta_l,
                                                     double eps, int k, std::size_t n, int d,
                                                     double tau) {
  if (scores.empty()) return std::nullopt;
  return scan_upper_tails(scores, [&](double s, double tail) -> std::optional<ThresholdChoice> {
    const double T = s - delta_l;
    if (!(T > 0.0)) return std::nullopt;
    if (tail >= linear_tail_bound(T, eps, k, n, d, tau)) return ThresholdChoice{T, s};
    return std::nullopt;
  });
}

std::optional<ThresholdChoice> find_quadratic_threshold(std::span<const double> scores, double eps) {
  if (scores.empty()) return std::nullopt;
  return scan_upper_tails(scores, [&](double s, double tail) -> std::optional<ThresholdChoice> {
    if (!(s > kQuadraticMinT)) return std::nullopt;
    if (tail >= quadratic_tail_bound(s, eps)) return ThresholdChoice{s, s};
    return std::nullopt;
  });
}

double quad_poly(const Vector& x, const Vector& mu_tilde, const SymMatrix& restricted) {
  const double norm = restricted.norm();
  if (!(norm > 0.0)) throw InputError("quad_poly: restricted matrix has zero Frobenius norm");
  const Vector y = x - mu_tilde;
  return (y.dot(restricted * y) - restricted.trace()) / norm;
}

Vector quad_poly_scores(const SampleMatrix& samples, const Vector& mu_tilde, const SymMatrix& restricted) {
  const double norm = restricted.norm();
  if (!(norm > 0.0)) throw InputError("quad_poly: restricted matrix has zero Frobenius norm");
  std::vector<int> touched;
  for (Eigen::Index i = 0; i < restricted.rows(); ++i)
    if (restricted.row(i).cwiseAbs().maxCoeff() > 0.0) touched.push_back(static_cast<int>(i));
  const auto m = static_cast<Eigen::Index>(touched.size());
  Eigen::MatrixXd y(samples.rows(), m);
  SymMatrix b(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    y.col(a) = samples.col(touched[a]).array() - mu_tilde[touched[a]];
    for (Eigen::Index c = 0; c < m; ++c) b(a, c) = restricted(touched[a], touched[c]);
  }
  const Vector quad = (y * b).cwiseProduct(y).rowwise().sum();
  return (quad.array() - restricted.trace()) / norm;
}

SampleMatrix select_rows(const SampleMatrix& samples, const std::vector<std::size_t>& rows) {
  SampleMatrix out(static_cast<Eigen::Index>(rows.size()), samples.cols());
  for (std::size_t r = 0; r < rows.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = samples.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

FilterOutcome rsm_iteration(const SampleMatrix& samples, const RsmConfig& cfg) {
  validate(cfg);
  const auto n = static_cast<std::size_t>(samples.rows());
  const int d = static_cast<int>(samples.cols());
  if (n < 2) throw InputError("rsm_iteration: need at least 2 samples");
  if (d < cfg.k) throw InputError("rsm_iteration: dimension smaller than sparsity");
  if (!samples.allFinite()) throw InputError("rsm_iteration: samples contain non-finite values");

  const Moments moments = empirical_moments(samples);
  const SymMatrix centered_cov = moments.covariance - SymMatrix::Identity(d, d);
  const EntrySet entries = top_entry_set(centered_cov, cfg.k);
  const SymMatrix restricted = restrict_entries(centered_cov, entries);

  FilterOutcome out;
  auto& diag = out.diagnostics;
  diag.frobenius = restricted.norm();
  const double log_inv = guarded_log_inverse(cfg.eps);

  if (diag.frobenius <= cfg.c_frob * cfg.eps * log_inv) {
    diag.branch = FilterBranch::kEstimate;
    out.estimate = hard_threshold(moments.mean, cfg.k);
    return out;
  }

  const IndexSet coords = entries.coordinates();
  diag.support_size = coords.size();
  const EigenPair top = top_eigenpair(restrict_principal(centered_cov, coords));
  diag.lambda = top.value;

  Vector direction = Vector::Zero(d);
  for (std::size_t a = 0; a < coords.size(); ++a) direction[coords[a]] = top.vector[static_cast<Eigen::Index>(a)];

  std::vector<double> scores(n);
  std::optional<ThresholdChoice> choice;
  if (top.value >= cfg.c_eig * cfg.eps * std::sqrt(log_inv)) {
    diag.branch = FilterBranch::kLinear;
    diag.delta_l = 3.0 * std::sqrt(cfg.eps * top.value);
    const Vector proj = (samples.rowwise() - moments.mean.transpose()) * direction;
    for (std::size_t i = 0; i < n; ++i) scores[i] = std::abs(proj[static_cast<Eigen::Index>(i)]);
    choice = find_linear_threshold(scores, diag.delta_l, cfg.eps, cfg.k, n, d, cfg.tau);
  } else if (!cfg.quadratic_filter) {
    diag.branch = FilterBranch::kEstimate;
    out.estimate = hard_threshold(moments.mean, cfg.k);
    return out;
  } else {
    diag.branch = FilterBranch::kQuadratic;
    const Vector p = quad_poly_scores(samples, moments.mean, restricted);
    for (std::size_t i = 0; i < n; ++i) scores[i] = std::abs(p[static_cast<Eigen::Index>(i)]);
    choice = find_quadratic_threshold(scores, cfg.eps);
  }

  if (!choice) throw ContractError("no admissible filter threshold", describe(diag, n, cfg.eps));
  diag.threshold = choice->T;
  out.retained.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (scores[i] < choice->cut) out.retained.push_back(i);
  diag.removed = n - out.retained.size();
  return out;
}

MeanEstimate rsm_estimate(const SampleMatrix& samples, const RsmConfig& cfg) {
  validate(cfg);
  const auto n0 = static_cast<std::size_t>(samples.rows());
  const std::size_t cap = cfg.max_iterations.value_or(2 * n0);

  MeanEstimate result;
  result.final_rows.resize(n0);
  std::iota(result.final_rows.begin(), result.final_rows.end(), std::size_t{0});
  SampleMatrix current = samples;

  while (true) {
    if (current.rows() == 0) throw ContractError("filtering removed every sample", "n0=" + std::to_string(n0));
    if (result.iterations >= cap || current.rows() < 2) {
      // Cap hit: fall back to the truncated mean of what is left.
      result.cap_hit = true;
      result.estimate = hard_threshold(current.colwise().mean().transpose(), cfg.k);
      TraceRecord rec;
      rec.estimator = cfg.quadratic_filter ? "RME_sp" : "RME_sp_L";
      rec.iteration = static_cast<int>(result.iterations);
      rec.branch = "capped";
      rec.samples_in = static_cast<std::size_t>(current.rows());
      result.trace.push_back(std::move(rec));
      return result;
    }
    FilterOutcome step = rsm_iteration(current, cfg);
    ++result.iterations;

    TraceRecord rec;
    rec.estimator = cfg.quadratic_filter ? "RME_sp" : "RME_sp_L";
    rec.iteration = static_cast<int>(result.iterations - 1);
    rec.branch = to_string(step.diagnostics.branch);
    rec.lambda = step.diagnostics.lambda;
    rec.frobenius = step.diagnostics.frobenius;
    rec.threshold = step.diagnostics.threshold;
    rec.support_size = step.diagnostics.support_size;
    rec.samples_in = static_cast<std::size_t>(current.rows());

    if (step.is_estimate()) {
      result.estimate = std::move(*step.estimate);
      result.trace.push_back(std::move(rec));
      return result;
    }

    std::vector<std::size_t> next_rows;
    next_rows.reserve(step.retained.size());
    std::size_t cursor = 0;
    for (std::size_t local = 0; local < result.final_rows.size(); ++local) {
      if (cursor < step.retained.size() && step.retained[cursor] == local) {
        next_rows.push_back(result.final_rows[local]);
        ++cursor;
      } else {
        rec.removed.push_back(result.final_rows[local]);
      }
    }
    result.trace.push_back(std::move(rec));
    result.final_rows = std::move(next_rows);
    current = select_rows(current, step.retained);
  }
}

}  // namespace sparsefilter
