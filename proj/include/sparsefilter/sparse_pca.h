#pragma once

// Robust sparse PCA for the spiked covariance model by filtering on the
// flattened second-moment statistic gamma(x) = vec(x x^T - I), restricted to
// the k^2 largest entries of its mean. An outer bootstrap loop feeds each
// round's covariance estimate back in and shrinks the error bound delta.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "sparsefilter/linalg.h"
#include "sparsefilter/sparse_mean.h"
#include "sparsefilter/trace.h"

namespace sparsefilter {

struct RspcaConfig {
  int k = 1;
  double eps = 0.1;
  double tau = 0.1;  // accepted for interface symmetry; only reported in traces
  // Matrix branch when lambda < c_pca * (delta + eps * log^2(1/eps)).
  double c_pca = 5.0;
  // Filter exceedance |score - median| > c_tail * T + 3.
  double c_tail = 3.0;
  // delta_{t+1} = c_boot * (sqrt(eps * delta_t) + eps * log(1/eps)).
  double c_boot = 1.0;
  // Total filter steps across all rounds; defaults to 2N when unset.
  std::optional<std::size_t> max_filter_iterations;
  int max_bootstrap_rounds = 10;
  // Initial delta, an upper bound on rho.
  double rho_upper = 1.0;
};

void validate(const RspcaConfig& cfg);

// Row-major vec(x x^T - I).
Vector gamma_vec(const Vector& x);

// Support of h_{k^2}(mu_gamma) as positions of the d x d matrix, closed under
// transposition. mu_gamma must have length d^2.
EntrySet select_Q(const Vector& mu_gamma, int k);

// Covariance of gamma(X)_Q for X ~ N(0, sigma), by Wick's theorem:
// Cov(x_i x_j, x_k x_l) = S_ik S_jl + S_il S_jk. Rows follow Q's order.
// Throws InputError if sigma has an eigenvalue below -1e-8.
SymMatrix gamma_cov_analytic(const SymMatrix& sigma, const EntrySet& q);
// Same for an arbitrary ordered list of positions (closure not required).
SymMatrix gamma_cov_analytic(const SymMatrix& sigma, std::span<const EntrySet::Entry> entries);

// N x |Q| matrix of x_i x_j - delta_ij.
Eigen::MatrixXd gamma_features(const SampleMatrix& samples, const EntrySet& q);
Eigen::MatrixXd gamma_features(const SampleMatrix& samples, std::span<const EntrySet::Entry> entries);

// Smallest T > log(1/eps) with Pr[r > c_tail T + 3] > eps / (T^2 log^2 T),
// where r are the centered absolute scores. cut is the score at which removal
// starts.
std::optional<ThresholdChoice> find_pca_threshold(std::span<const double> deviations, double eps,
                                                  double c_tail);

struct SpikeEstimate {
  Vector w;            // unit, largest-magnitude entry positive
  double rho_hat = 0;  // top eigenvalue of mat(mu_gamma)_Q, clamped at 0
  SymMatrix sigma_prime;  // I + rho_hat w w^T
};

struct PcaDiagnostics {
  bool matrix_branch = true;
  double lambda = 0.0;
  std::size_t q_size = 0;
  double threshold = TraceRecord::kUnset;
  double median = TraceRecord::kUnset;
  std::size_t removed = 0;
};

struct PcaOutcome {
  std::optional<SpikeEstimate> matrix;
  std::vector<std::size_t> retained;
  PcaDiagnostics diagnostics;

  bool is_matrix() const { return matrix.has_value(); }
};

// The spike estimate from mat(mu_gamma)_Q: top eigenpair of the symmetrized
// restriction.
SpikeEstimate spike_from_moments(const Vector& mu_gamma, const EntrySet& q);

// One filtering step given the current covariance guess and its error bound.
// Throws ContractError when the filter branch finds no admissible threshold.
PcaOutcome rspca_iteration(const SampleMatrix& samples, const SymMatrix& sigma_tilde, double delta,
                           const RspcaConfig& cfg);

struct PcaEstimate {
  Vector w;
  double rho_hat = 0.0;
  int rounds = 0;
  std::size_t filter_iterations = 0;
  std::size_t iterations = 0;  // all rspca_iteration calls
  bool cap_hit = false;
  std::vector<double> deltas;  // delta used in each round
  std::vector<std::size_t> final_rows;
  std::vector<TraceRecord> trace;
};

PcaEstimate rspca_estimate(const SampleMatrix& samples, const RspcaConfig& cfg);

// Frobenius distance between w w^T and v v^T for unit w, v: sqrt(2 - 2 (w.v)^2).
double projection_distance(const Vector& w, const Vector& v);

}  // namespace sparsefilter
