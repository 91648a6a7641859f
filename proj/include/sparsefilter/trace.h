#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace sparsefilter {

// One filtering iteration of any estimator. Fields that do not apply to an
// estimator stay NaN / zero. `removed` holds row ids of the estimator's input
// matrix, so the harness can classify them against the ground-truth mask.
struct TraceRecord {
  static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

  std::string estimator;
  int iteration = 0;
  int bootstrap_round = -1;
  std::string branch;  // estimate | linear | quadratic | pca_matrix | pca_filter | capped
  double lambda = kUnset;
  double frobenius = kUnset;
  double threshold = kUnset;
  double median = kUnset;
  std::size_t support_size = 0;  // |U'| or |Q|
  std::size_t samples_in = 0;
  std::vector<std::size_t> removed;
};

// key=value line. When `inlier_mask` is non-null the removal is split into
// removed_inliers / removed_outliers.
std::string format_trace(const TraceRecord& record, const std::vector<bool>* inlier_mask = nullptr);

struct RemovalCounts {
  std::size_t inliers = 0;
  std::size_t outliers = 0;
};

RemovalCounts classify_removed(const TraceRecord& record, const std::vector<bool>& inlier_mask);

}  // namespace sparsefilter
