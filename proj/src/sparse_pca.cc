#include "sparsefilter/sparse_pca.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sparsefilter/errors.h"

namespace sparsefilter {
namespace {

int square_root_dimension(Eigen::Index length) {
  const auto d = static_cast<int>(std::llround(std::sqrt(static_cast<double>(length))));
  if (static_cast<Eigen::Index>(d) * d != length)
    throw InputError("flattened vector length " + std::to_string(length) + " is not a square");
  return d;
}

double median_of(std::vector<double> values) {
  const std::size_t n = values.size();
  const auto mid = static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[static_cast<std::size_t>(mid)];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

// E_S[x x^T] - I, exactly symmetric.
SymMatrix second_moment_minus_identity(const SampleMatrix& samples) {
  const auto d = samples.cols();
  SymMatrix m = SymMatrix::Zero(d, d);
  m.selfadjointView<Eigen::Lower>().rankUpdate(samples.transpose(),
                                               1.0 / static_cast<double>(samples.rows()));
  SymMatrix full = m.selfadjointView<Eigen::Lower>();
  full -= SymMatrix::Identity(d, d);
  return full;
}

}  // namespace

void validate(const RspcaConfig& cfg) {
  if (cfg.k < 1) throw InputError("RspcaConfig: k must be >= 1");
  if (!(cfg.eps > 0.0 && cfg.eps < 0.5)) throw InputError("RspcaConfig: eps must lie in (0, 1/2)");
  if (!(cfg.c_pca > 0.0) || !(cfg.c_tail > 0.0) || !(cfg.c_boot > 0.0))
    throw InputError("RspcaConfig: constants must be positive");
  if (cfg.max_bootstrap_rounds < 1) throw InputError("RspcaConfig: need at least one bootstrap round");
  if (!(cfg.rho_upper > 0.0)) throw InputError("RspcaConfig: rho_upper must be positive");
}

Vector gamma_vec(const Vector& x) {
  SymMatrix outer = x * x.transpose();
  outer -= SymMatrix::Identity(x.size(), x.size());
  return vectorize(outer);
}

EntrySet select_Q(const Vector& mu_gamma, int k) {
  const int d = square_root_dimension(mu_gamma.size());
  std::vector<EntrySet::Entry> support;
  for (int flat : top_magnitude_indices(mu_gamma, k * k)) support.emplace_back(flat / d, flat % d);
  return EntrySet::closure_of(d, support);
}

SymMatrix gamma_cov_analytic(const SymMatrix& sigma, const EntrySet& q) {
  if (sigma.rows() != sigma.cols() || sigma.rows() != q.dimension())
    throw InputError("gamma_cov_analytic: covariance and entry set dimensions differ");
  return gamma_cov_analytic(sigma, std::span<const EntrySet::Entry>(q.entries()));
}

SymMatrix gamma_cov_analytic(const SymMatrix& sigma, std::span<const EntrySet::Entry> entries) {
  if (sigma.rows() != sigma.cols()) throw InputError("gamma_cov_analytic: covariance must be square");
  for (const auto& [i, j] : entries)
    if (i < 0 || j < 0 || i >= sigma.rows() || j >= sigma.rows())
      throw InputError("gamma_cov_analytic: entry out of range");
  const double min_eig = symmetric_eigenvalues(sigma).minCoeff();
  if (min_eig < -1e-8) {
    std::ostringstream msg;
    msg << "gamma_cov_analytic: covariance is not PSD (min eigenvalue " << min_eig << ")";
    throw InputError(msg.str());
  }
  const auto m = static_cast<Eigen::Index>(entries.size());
  SymMatrix cov(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto [i, j] = entries[static_cast<std::size_t>(a)];
    for (Eigen::Index b = 0; b <= a; ++b) {
      const auto [k, l] = entries[static_cast<std::size_t>(b)];
      const double value = sigma(i, k) * sigma(j, l) + sigma(i, l) * sigma(j, k);
      cov(a, b) = value;
      cov(b, a) = value;
    }
  }
  return cov;
}

Eigen::MatrixXd gamma_features(const SampleMatrix& samples, const EntrySet& q) {
  if (samples.cols() != q.dimension()) throw InputError("gamma_features: dimension mismatch");
  return gamma_features(samples, std::span<const EntrySet::Entry>(q.entries()));
}

Eigen::MatrixXd gamma_features(const SampleMatrix& samples, std::span<const EntrySet::Entry> entries) {
  Eigen::MatrixXd f(samples.rows(), static_cast<Eigen::Index>(entries.size()));
  for (std::size_t a = 0; a < entries.size(); ++a) {
    const auto [i, j] = entries[a];
    auto col = f.col(static_cast<Eigen::Index>(a));
    col = samples.col(i).cwiseProduct(samples.col(j));
    if (i == j) col.array() -= 1.0;
  }
  return f;
}

std::optional<ThresholdChoice> find_pca_threshold(std::span<const double> deviations, double eps,
                                                  double c_tail) {
  if (deviations.empty()) return std::nullopt;
  const double t_min = guarded_log_inverse(eps);
  std::vector<double> sorted(deviations.begin(), deviations.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  for (std::size_t i = 0; i < n;) {
    const double s = sorted[i];
    // For c_tail * T + 3 just below s the exceedance is the fraction >= s.
    const double T = (s - 3.0) / c_tail;
    if (T > t_min) {
      const double tail = static_cast<double>(n - i) / static_cast<double>(n);
      const double lt = std::log(T);
      if (tail > eps / (T * T * lt * lt)) return ThresholdChoice{T, s};
    }
    while (i < n && sorted[i] == s) ++i;
  }
  return std::nullopt;
}

SpikeEstimate spike_from_moments(const Vector& mu_gamma, const EntrySet& q) {
  const int d = q.dimension();
  SymMatrix restricted = SymMatrix::Zero(d, d);
  for (const auto& [i, j] : q.entries()) restricted(i, j) = mu_gamma[static_cast<Eigen::Index>(i) * d + j];
  const SymMatrix symmetric = 0.5 * (restricted + restricted.transpose());
  const EigenPair top = top_eigenpair(symmetric);
  SpikeEstimate out;
  out.w = top.vector;
  out.rho_hat = std::max(top.value, 0.0);
  out.sigma_prime = SymMatrix::Identity(d, d) + out.rho_hat * out.w * out.w.transpose();
  return out;
}

PcaOutcome rspca_iteration(const SampleMatrix& samples, const SymMatrix& sigma_tilde, double delta,
                           const RspcaConfig& cfg) {
  validate(cfg);
  const auto n = static_cast<std::size_t>(samples.rows());
  const int d = static_cast<int>(samples.cols());
  if (n < 2) throw InputError("rspca_iteration: need at least 2 samples");
  if (!(delta > 0.0)) throw InputError("rspca_iteration: delta must be positive");
  if (sigma_tilde.rows() != d || sigma_tilde.cols() != d)
    throw InputError("rspca_iteration: covariance guess has the wrong dimension");
  if (!samples.allFinite()) throw InputError("rspca_iteration: samples contain non-finite values");

  const Vector mu_gamma = vectorize(second_moment_minus_identity(samples));
  const EntrySet q = select_Q(mu_gamma, cfg.k);
  const Eigen::MatrixXd features = gamma_features(samples, q);
  const Eigen::RowVectorXd feature_mean = features.colwise().mean();
  const Eigen::MatrixXd centered = features.rowwise() - feature_mean;
  SymMatrix m_q = SymMatrix::Zero(centered.cols(), centered.cols());
  m_q.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), 1.0 / static_cast<double>(n));
  const SymMatrix m_q_full = m_q.selfadjointView<Eigen::Lower>();

  const EigenPair top = top_eigenpair(m_q_full - gamma_cov_analytic(sigma_tilde, q));

  PcaOutcome out;
  auto& diag = out.diagnostics;
  diag.lambda = top.value;
  diag.q_size = q.size();
  const double log_inv = guarded_log_inverse(cfg.eps);

  if (top.value < cfg.c_pca * (delta + cfg.eps * log_inv * log_inv)) {
    diag.matrix_branch = true;
    out.matrix = spike_from_moments(mu_gamma, q);
    return out;
  }

  diag.matrix_branch = false;
  const Vector scores = features * top.vector;
  std::vector<double> raw(scores.data(), scores.data() + scores.size());
  diag.median = median_of(raw);
  std::vector<double> deviations(n);
  for (std::size_t i = 0; i < n; ++i) deviations[i] = std::abs(raw[i] - diag.median);

  const auto choice = find_pca_threshold(deviations, cfg.eps, cfg.c_tail);
  if (!choice) {
    std::ostringstream msg;
    msg << "n=" << n << " eps=" << cfg.eps << " lambda=" << top.value << " |Q|=" << q.size()
        << " delta=" << delta << " median=" << diag.median;
    throw ContractError("no admissible PCA filter threshold", msg.str());
  }
  diag.threshold = choice->T;
  out.retained.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (deviations[i] < choice->cut) out.retained.push_back(i);
  diag.removed = n - out.retained.size();
  return out;
}

PcaEstimate rspca_estimate(const SampleMatrix& samples, const RspcaConfig& cfg) {
  validate(cfg);
  const auto n0 = static_cast<std::size_t>(samples.rows());
  const int d = static_cast<int>(samples.cols());
  const std::size_t cap = cfg.max_filter_iterations.value_or(2 * n0);
  const double log_inv = guarded_log_inverse(cfg.eps);

  PcaEstimate result;
  result.final_rows.resize(n0);
  std::iota(result.final_rows.begin(), result.final_rows.end(), std::size_t{0});
  SampleMatrix current = samples;
  SymMatrix sigma = SymMatrix::Identity(d, d);
  double delta = cfg.rho_upper;

  for (int round = 0; round < cfg.max_bootstrap_rounds; ++round) {
    result.rounds = round + 1;
    result.deltas.push_back(delta);
    std::optional<SpikeEstimate> spike;
    while (!spike) {
      if (current.rows() < 2) throw ContractError("PCA filtering removed every sample", "n0=" + std::to_string(n0));
      if (result.filter_iterations >= cap) {
        result.cap_hit = true;
        const Vector mu_gamma = vectorize(second_moment_minus_identity(current));
        spike = spike_from_moments(mu_gamma, select_Q(mu_gamma, cfg.k));
        TraceRecord rec;
        rec.estimator = "RSPCA";
        rec.iteration = static_cast<int>(result.iterations);
        rec.bootstrap_round = round;
        rec.branch = "capped";
        rec.samples_in = static_cast<std::size_t>(current.rows());
        result.trace.push_back(std::move(rec));
        break;
      }
      PcaOutcome step = rspca_iteration(current, sigma, delta, cfg);
      TraceRecord rec;
      rec.estimator = "RSPCA";
      rec.iteration = static_cast<int>(result.iterations++);
      rec.bootstrap_round = round;
      rec.branch = step.is_matrix() ? "pca_matrix" : "pca_filter";
      rec.lambda = step.diagnostics.lambda;
      rec.threshold = step.diagnostics.threshold;
      rec.median = step.diagnostics.median;
      rec.support_size = step.diagnostics.q_size;
      rec.samples_in = static_cast<std::size_t>(current.rows());
      if (step.is_matrix()) {
        spike = std::move(step.matrix);
      } else {
        ++result.filter_iterations;
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
        result.final_rows = std::move(next_rows);
        current = select_rows(current, step.retained);
      }
      result.trace.push_back(std::move(rec));
    }

    result.w = spike->w;
    result.rho_hat = spike->rho_hat;
    if (result.cap_hit) break;
    sigma = spike->sigma_prime;
    const double next = cfg.c_boot * (std::sqrt(cfg.eps * delta) + cfg.eps * log_inv);
    const bool stable = std::abs(next - delta) <= 0.1 * delta;
    delta = next;
    if (stable) break;
  }
  canonicalize_sign(result.w);
  return result;
}

double projection_distance(const Vector& w, const Vector& v) {
  const double c = w.dot(v);
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * c * c));
}

}  // namespace sparsefilter
