#include "sparsefilter/baselines.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sparsefilter/errors.h"
#include "sparsefilter/random.h"

namespace sparsefilter {
namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, 0.5);
}

Vector coordinatewise_median(const SampleMatrix& samples) {
  Vector med(samples.cols());
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    std::vector<double> col(static_cast<std::size_t>(samples.rows()));
    for (Eigen::Index i = 0; i < samples.rows(); ++i) col[static_cast<std::size_t>(i)] = samples(i, j);
    med[j] = median_of(std::move(col));
  }
  return med;
}

// Appends the removed ids (in `rows` coordinates) and returns the kept ones.
std::vector<std::size_t> apply_retention(const std::vector<std::size_t>& rows,
                                         const std::vector<bool>& keep, TraceRecord& rec) {
  std::vector<std::size_t> next;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (keep[i])
      next.push_back(rows[i]);
    else
      rec.removed.push_back(rows[i]);
  }
  return next;
}

}  // namespace

BaselineResult oracle_mean(const CorruptedDataset& data, int k) {
  const auto d = data.samples.cols();
  Vector sum = Vector::Zero(d);
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data.inlier_mask[i]) continue;
    sum += data.samples.row(static_cast<Eigen::Index>(i)).transpose();
    ++count;
  }
  if (count == 0) throw InputError("oracle_mean: dataset has no inliers");
  BaselineResult out;
  out.estimate = hard_threshold(sum / static_cast<double>(count), k);
  out.points_used = count;
  return out;
}

BaselineResult naive_prune_mean(const SampleMatrix& samples, int k, double prune_c) {
  const auto n = samples.rows();
  const auto d = samples.cols();
  if (n < 2) throw InputError("naive_prune_mean: need at least 2 samples");
  const Vector med = coordinatewise_median(samples);
  const double limit = prune_c * std::sqrt(std::log(static_cast<double>(n) * static_cast<double>(d)));

  Vector sum = Vector::Zero(d);
  std::size_t kept = 0;
  TraceRecord rec;
  rec.estimator = "NP";
  rec.branch = "prune";
  rec.samples_in = static_cast<std::size_t>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double worst = (samples.row(i).transpose() - med).cwiseAbs().maxCoeff();
    if (worst > limit) {
      rec.removed.push_back(static_cast<std::size_t>(i));
      continue;
    }
    sum += samples.row(i).transpose();
    ++kept;
  }
  BaselineResult out;
  out.points_used = kept;
  out.iterations = 1;
  out.estimate = kept > 0 ? hard_threshold(sum / static_cast<double>(kept), k) : hard_threshold(med, k);
  out.trace.push_back(std::move(rec));
  return out;
}

double ransac_radius(int d) {
  const double dd = static_cast<double>(d);
  return std::sqrt(dd + std::sqrt(dd));
}

std::size_t ransac_score(const SampleMatrix& samples, const Vector& center, double radius) {
  const double r2 = radius * radius;
  const Eigen::VectorXd dist2 = (samples.rowwise() - center.transpose()).rowwise().squaredNorm();
  return static_cast<std::size_t>((dist2.array() <= r2).count());
}

BaselineResult ransac_mean(const SampleMatrix& samples, int k, int candidates, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(samples.rows());
  if (n < 4) throw InputError("ransac_mean: need at least 4 samples");
  if (candidates < 1) throw InputError("ransac_mean: need at least one candidate");
  const double radius = ransac_radius(static_cast<int>(samples.cols()));
  const std::size_t half = n / 2;

  Philox4x32 rng(seed, 7);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  Vector best;
  std::size_t best_score = 0;
  bool have_best = false;
  for (int c = 0; c < candidates; ++c) {
    for (std::size_t i = 0; i < half; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(pool[i], pool[j]);
    }
    Vector center = Vector::Zero(samples.cols());
    for (std::size_t i = 0; i < half; ++i) center += samples.row(static_cast<Eigen::Index>(pool[i])).transpose();
    center /= static_cast<double>(half);
    const std::size_t score = ransac_score(samples, center, radius);
    if (!have_best || score > best_score) {
      best = std::move(center);
      best_score = score;
      have_best = true;
    }
  }
  BaselineResult out;
  out.estimate = hard_threshold(best, k);
  out.points_used = half;
  out.iterations = static_cast<std::size_t>(candidates);
  return out;
}

BaselineResult dense_filter_mean(const SampleMatrix& samples, const RsmConfig& cfg) {
  validate(cfg);
  const auto n0 = static_cast<std::size_t>(samples.rows());
  const int d = static_cast<int>(samples.cols());
  const std::size_t cap = cfg.max_iterations.value_or(2 * n0);
  const double certificate = cfg.c_frob * cfg.eps * guarded_log_inverse(cfg.eps);

  BaselineResult out;
  std::vector<std::size_t> rows(n0);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  SampleMatrix current = samples;
  while (true) {
    if (current.rows() < 2 || out.iterations >= cap) {
      out.estimate = current.colwise().mean().transpose();
      break;
    }
    const Moments moments = empirical_moments(current);
    const EigenPair top = top_eigenpair(moments.covariance - SymMatrix::Identity(d, d));
    ++out.iterations;
    TraceRecord rec;
    rec.estimator = "RME";
    rec.iteration = static_cast<int>(out.iterations - 1);
    rec.lambda = top.value;
    rec.support_size = static_cast<std::size_t>(d);
    rec.samples_in = static_cast<std::size_t>(current.rows());
    if (top.value <= certificate) {
      rec.branch = "estimate";
      out.trace.push_back(std::move(rec));
      out.estimate = moments.mean;
      break;
    }
    rec.branch = "linear";
    const double delta_l = 3.0 * std::sqrt(cfg.eps * top.value);
    const Vector proj = (current.rowwise() - moments.mean.transpose()) * top.vector;
    std::vector<double> scores(proj.data(), proj.data() + proj.size());
    for (double& s : scores) s = std::abs(s);
    const auto choice =
        find_linear_threshold(scores, delta_l, cfg.eps, d, scores.size(), d, cfg.tau);
    if (!choice) {
      std::ostringstream msg;
      msg << "RME n=" << current.rows() << " lambda=" << top.value;
      throw ContractError("no admissible filter threshold", msg.str());
    }
    rec.threshold = choice->T;
    std::vector<bool> keep(scores.size());
    std::vector<std::size_t> local_keep;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      keep[i] = scores[i] < choice->cut;
      if (keep[i]) local_keep.push_back(i);
    }
    rows = apply_retention(rows, keep, rec);
    out.trace.push_back(std::move(rec));
    current = select_rows(current, local_keep);
  }
  out.points_used = rows.size();
  return out;
}

BaselineResult linear_only_sparse_mean(const SampleMatrix& samples, const RsmConfig& cfg) {
  RsmConfig linear = cfg;
  linear.quadratic_filter = false;
  return sparse_filter_mean(samples, linear);
}

BaselineResult sparse_filter_mean(const SampleMatrix& samples, const RsmConfig& cfg) {
  MeanEstimate est = rsm_estimate(samples, cfg);
  BaselineResult out;
  out.estimate = std::move(est.estimate);
  out.iterations = est.iterations;
  out.points_used = est.final_rows.size();
  out.trace = std::move(est.trace);
  return out;
}

double robust_sigma(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  return (quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25)) / 1.349;
}

BaselineResult dense_robust_pca(const SampleMatrix& samples, const RdpcaConfig& cfg) {
  if (samples.rows() < 2) throw InputError("dense_robust_pca: need at least 2 samples");
  if (!(cfg.eps > 0.0 && cfg.eps < 0.5)) throw InputError("dense_robust_pca: eps must lie in (0, 1/2)");
  const auto n0 = static_cast<std::size_t>(samples.rows());
  const int d = static_cast<int>(samples.cols());
  const double stop_ratio = 1.0 + cfg.c * cfg.eps * guarded_log_inverse(cfg.eps);

  BaselineResult out;
  std::vector<std::size_t> rows(n0);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  SampleMatrix current = samples;
  while (true) {
    const Moments moments = empirical_moments(current);
    const EigenPair top = top_eigenpair(moments.covariance);
    ++out.iterations;
    TraceRecord rec;
    rec.estimator = "RDPCA";
    rec.iteration = static_cast<int>(out.iterations - 1);
    rec.lambda = top.value;
    rec.support_size = static_cast<std::size_t>(d);
    rec.samples_in = static_cast<std::size_t>(current.rows());

    const Vector proj = current * top.vector;
    std::vector<double> values(proj.data(), proj.data() + proj.size());
    const double sigma = robust_sigma(values);
    if (!(top.value > 0.0) || !(sigma > 0.0)) {
      rec.branch = "degenerate";
      out.trace.push_back(std::move(rec));
      out.estimate = Vector::Unit(d, 0);
      out.rho_hat = 0.0;
      break;
    }
    const double ratio = top.value / (sigma * sigma);
    if (ratio < stop_ratio || current.rows() < 4 || out.iterations > 2 * n0) {
      rec.branch = "estimate";
      out.trace.push_back(std::move(rec));
      out.estimate = top.vector;
      out.rho_hat = top.value - 1.0;
      break;
    }
    rec.branch = "linear";
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const double med = quantile_sorted(sorted, 0.5);
    std::vector<double> scores(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) scores[i] = std::abs(values[i] - med) / sigma;
    const double delta_l = 3.0 * std::sqrt(cfg.eps * (ratio - 1.0));
    const auto choice = find_linear_threshold(scores, delta_l, cfg.eps, d, scores.size(), d, cfg.tau);
    if (!choice) {
      // No tail excess: the spread disagreement is not caused by a removable tail.
      rec.branch = "estimate";
      out.trace.push_back(std::move(rec));
      out.estimate = top.vector;
      out.rho_hat = top.value - 1.0;
      break;
    }
    rec.threshold = choice->T;
    std::vector<bool> keep(scores.size());
    std::vector<std::size_t> local_keep;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      keep[i] = scores[i] < choice->cut;
      if (keep[i]) local_keep.push_back(i);
    }
    rows = apply_retention(rows, keep, rec);
    out.trace.push_back(std::move(rec));
    current = select_rows(current, local_keep);
  }
  out.points_used = rows.size();
  return out;
}

double sparsify_then_error(const Vector& estimate, const Vector& truth, int k) {
  if (estimate.size() != truth.size()) throw InputError("sparsify_then_error: dimension mismatch");
  return (hard_threshold(estimate, k) - truth).norm();
}

}  // namespace sparsefilter
