#include "sparsefilter/trace.h"

#include <cmath>
#include <sstream>

namespace sparsefilter {
namespace {

void put(std::ostringstream& out, const char* key, double value) {
  if (std::isnan(value)) return;
  out << ' ' << key << '=' << value;
}

}  // namespace

RemovalCounts classify_removed(const TraceRecord& record, const std::vector<bool>& inlier_mask) {
  RemovalCounts counts;
  for (auto id : record.removed) {
    if (id < inlier_mask.size() && inlier_mask[id])
      ++counts.inliers;
    else
      ++counts.outliers;
  }
  return counts;
}

std::string format_trace(const TraceRecord& record, const std::vector<bool>* inlier_mask) {
  std::ostringstream out;
  out.precision(10);
  out << "estimator=" << record.estimator << " iteration=" << record.iteration;
  if (record.bootstrap_round >= 0) out << " round=" << record.bootstrap_round;
  out << " branch=" << record.branch;
  put(out, "lambda", record.lambda);
  put(out, "frobenius", record.frobenius);
  put(out, "T", record.threshold);
  put(out, "median", record.median);
  out << " support=" << record.support_size << " n_in=" << record.samples_in
      << " removed=" << record.removed.size();
  if (inlier_mask != nullptr) {
    const auto counts = classify_removed(record, *inlier_mask);
    out << " removed_inliers=" << counts.inliers << " removed_outliers=" << counts.outliers;
  }
  return out.str();
}

}  // namespace sparsefilter
