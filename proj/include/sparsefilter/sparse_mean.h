#pragma once

// Robust sparse mean estimation by iterative filtering.
//
// One iteration either certifies the current sample set (the restricted
// Frobenius norm of Sigma - I is small, so h_k of the sample mean is accurate)
// or removes a batch of points with a linear filter along the top restricted
// eigenvector, or with a quadratic filter built from the selected entries of
// Sigma - I. The outer loop repeats until the certificate passes.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "sparsefilter/linalg.h"
#include "sparsefilter/trace.h"

namespace sparsefilter {

struct RsmConfig {
  int k = 1;
  double eps = 0.1;
  double tau = 0.1;
  // Certificate: ||(Sigma - I)_(U)||_F <= c_frob * eps * log(1/eps).
  double c_frob = 4.0;
  // Linear filter fires when lambda* >= c_eig * eps * sqrt(log(1/eps)).
  double c_eig = 4.0;
  // Defaults to 2N when unset.
  std::optional<std::size_t> max_iterations;
  // Disabled for the linear-only variant: a failed eigenvalue test returns h_k(mu).
  bool quadratic_filter = true;
};

// Throws InputError on out-of-range fields.
void validate(const RsmConfig& cfg);

enum class FilterBranch { kEstimate, kLinear, kQuadratic };

const char* to_string(FilterBranch branch);

struct FilterDiagnostics {
  FilterBranch branch = FilterBranch::kEstimate;
  double frobenius = 0.0;      // ||(Sigma - I)_(U)||_F
  double lambda = TraceRecord::kUnset;
  double delta_l = TraceRecord::kUnset;
  double threshold = TraceRecord::kUnset;  // chosen T
  std::size_t support_size = 0;            // |U'|
  std::size_t removed = 0;
};

// Either a final k-sparse estimate or the rows (ids into the input) to keep.
struct FilterOutcome {
  std::optional<Vector> estimate;
  std::vector<std::size_t> retained;
  FilterDiagnostics diagnostics;

  bool is_estimate() const { return estimate.has_value(); }
};

// The threshold T and the score at which points start being removed. Points
// with score < cut are kept; cut equals T plus any additive offset and is
// always an observed score, so at least one point is removed.
struct ThresholdChoice {
  double T = 0.0;
  double cut = 0.0;
};

// Right-hand side of the linear tail test,
// 9 erfc(T / sqrt 2) + 3 eps^2 / (T^2 ln(k ln(N d / tau))).
double linear_tail_bound(double T, double eps, int k, std::size_t n, int d, double tau);

// Right-hand side of the quadratic tail test, 9 exp(-T/4) + 3 eps^2 / (T ln^2 T).
double quadratic_tail_bound(double T, double eps);

// Smallest T > 0 with Pr[score >= T + delta_l] >= linear_tail_bound(T). The
// candidates are the distinct scores shifted by -delta_l, where the empirical
// tail changes. Returns nullopt when nothing qualifies.
std::optional<ThresholdChoice> find_linear_threshold(std::span<const double> scores, double delta_l,
                                                     double eps, int k, std::size_t n, int d,
                                                     double tau);

// Smallest T > 6 with Pr[score >= T] >= quadratic_tail_bound(T).
std::optional<ThresholdChoice> find_quadratic_threshold(std::span<const double> scores, double eps);

// p(x) = ((x - mu)^T B (x - mu) - Tr B) / ||B||_F for B = (Sigma - I)_(U).
// Throws InputError if ||B||_F = 0.
double quad_poly(const Vector& x, const Vector& mu_tilde, const SymMatrix& restricted);

// p evaluated on every row, using only the coordinates B touches.
Vector quad_poly_scores(const SampleMatrix& samples, const Vector& mu_tilde, const SymMatrix& restricted);

// One filtering step. Throws ContractError when a filter branch is entered and
// no admissible threshold exists.
FilterOutcome rsm_iteration(const SampleMatrix& samples, const RsmConfig& cfg);

struct MeanEstimate {
  Vector estimate;
  std::size_t iterations = 0;  // rsm_iteration calls
  bool cap_hit = false;
  std::vector<std::size_t> final_rows;  // rows of the input still retained
  std::vector<TraceRecord> trace;
};

// Iterates rsm_iteration on the shrinking set until the certificate passes.
// Trace records carry removed ids in the coordinates of `samples`.
MeanEstimate rsm_estimate(const SampleMatrix& samples, const RsmConfig& cfg);

// Rows of `samples` listed in `rows`, in order.
SampleMatrix select_rows(const SampleMatrix& samples, const std::vector<std::size_t>& rows);

}  // namespace sparsefilter
