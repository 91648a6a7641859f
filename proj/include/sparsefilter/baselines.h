#pragma once

// Comparison estimators: the mask-reading oracle, naive pruning, RANSAC, the
// dense filter (RME), the linear-only sparse filter (RME_sp_L) and a dense
// robust PCA (RDPCA).

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sparsefilter/contamination.h"
#include "sparsefilter/linalg.h"
#include "sparsefilter/sparse_mean.h"
#include "sparsefilter/trace.h"

namespace sparsefilter {

struct BaselineResult {
  Vector estimate;     // mean estimate, or PCA direction
  double rho_hat = 0;  // PCA only
  std::size_t points_used = 0;
  std::size_t iterations = 0;
  std::vector<TraceRecord> trace;
};

// h_k of the mean of the ground-truth inliers. The only estimator that reads
// the mask.
BaselineResult oracle_mean(const CorruptedDataset& data, int k);

// Drops rows with any |x_i - median_i| > prune_c * sqrt(log(N d)) and returns
// h_k of the remaining mean; if every row is dropped, h_k of the coordinatewise
// median.
BaselineResult naive_prune_mean(const SampleMatrix& samples, int k, double prune_c = 3.0);

// ell_2 radius sqrt(d + sqrt(d)) used to score RANSAC candidates.
double ransac_radius(int d);

// Best of `candidates` half-size random subset means, scored by how many rows
// lie within ransac_radius(d); ties go to the earlier candidate.
BaselineResult ransac_mean(const SampleMatrix& samples, int k, int candidates, std::uint64_t seed);

// Number of rows within `radius` of `center`.
std::size_t ransac_score(const SampleMatrix& samples, const Vector& center, double radius);

// Linear filtering over all d coordinates with the certificate
// lambda_max(Sigma - I) <= c_frob * eps * log(1/eps). Returns the dense mean.
BaselineResult dense_filter_mean(const SampleMatrix& samples, const RsmConfig& cfg);

// rsm_estimate with the quadratic filter disabled.
BaselineResult linear_only_sparse_mean(const SampleMatrix& samples, const RsmConfig& cfg);

// Runs the full sparse estimator and packages it like the baselines.
BaselineResult sparse_filter_mean(const SampleMatrix& samples, const RsmConfig& cfg);

struct RdpcaConfig {
  double eps = 0.1;
  double tau = 0.1;
  // Stop when lambda_top / sigma_robust^2 < 1 + c * eps * log(1/eps).
  double c = 1.0;
};

// Dense robust PCA: top covariance eigenvector, interquartile estimate of the
// spread along it, and a linear tail filter when the two disagree.
BaselineResult dense_robust_pca(const SampleMatrix& samples, const RdpcaConfig& cfg);

// Normalized interquartile range IQR / 1.349 (linear-interpolated quartiles).
double robust_sigma(std::vector<double> values);

// ||h_k(estimate) - truth||_2.
double sparsify_then_error(const Vector& estimate, const Vector& truth, int k);

}  // namespace sparsefilter
