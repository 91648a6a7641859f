#include <gtest/gtest.h>

#include "sparsefilter/contamination.h"
#include "sparsefilter/errors.h"
#include "sparsefilter/goodset_audit.h"

using namespace sparsefilter;

TEST(MeanAudit, CleanSamplesPass) {
  // d = 10, k = 2, eps = 0.2, tau = 0.1: 200 k^2 log(d / tau) / eps^2 ~ 92103.
  const auto model = make_sparse_mean_model(10, 2, 1.0, 1);
  const auto data = draw_inliers(model, 92103, 2);
  const AuditReport report = audit_mean_good_set(data.samples, model, 0.2, 0.1, 100, 3);
  EXPECT_TRUE(report.all_passed()) << format_report(report);
  EXPECT_EQ(report.conditions.size(), 4u);
}

TEST(MeanAudit, RepeatedPointFailsMoments) {
  const auto model = make_sparse_mean_model(10, 2, 1.0, 1);
  SampleMatrix g(500, 10);
  g.rowwise() = model.mu.transpose();
  const AuditReport report = audit_mean_good_set(g, model, 0.2, 0.1, 50, 3);
  EXPECT_FALSE(report.condition("i").passed);
  EXPECT_FALSE(report.all_passed());
}

TEST(MeanAudit, FarCoordinateFailsBoundedness) {
  const auto model = make_sparse_mean_model(10, 2, 1.0, 1);
  auto data = draw_inliers(model, 5000, 4);
  data.samples(7, 3) += 100.0;
  const AuditReport report = audit_mean_good_set(data.samples, model, 0.2, 0.1, 50, 3);
  EXPECT_FALSE(report.condition("ii").passed);
  EXPECT_GT(report.condition("ii").worst_ratio, 1.0);
}

TEST(MeanAudit, Errors) {
  const auto model = make_sparse_mean_model(10, 2, 1.0, 1);
  EXPECT_THROW(audit_mean_good_set(SampleMatrix::Zero(5, 9), model, 0.2, 0.1, 10, 1), InputError);
  EXPECT_THROW(audit_mean_good_set(SampleMatrix::Zero(5, 10), model, 0.2, 0.1, 0, 1), InputError);
  AuditReport empty;
  EXPECT_THROW(empty.condition("i"), InputError);
}

TEST(PcaAudit, HeavyRowFailsBoundedness) {
  const auto model = make_spiked_model(10, 2, 1.0, 5);
  auto data = draw_inliers(model, 2000, 6);
  data.samples.row(0).setConstant(50.0);
  const AuditReport report = audit_pca_good_set(data.samples, model, 0.2, 20, 7);
  EXPECT_FALSE(report.condition("1").passed);
}

TEST(PcaAudit, TwoPointsFailVariance) {
  const auto model = make_spiked_model(10, 2, 1.0, 5);
  SampleMatrix g = SampleMatrix::Zero(2, 10);
  g(0, 0) = 1.0;
  g(1, 1) = -1.0;
  const AuditReport report = audit_pca_good_set(g, model, 0.2, 20, 7);
  EXPECT_FALSE(report.condition("3").passed);
}

TEST(Report, FormatListsEveryCondition) {
  const auto model = make_sparse_mean_model(6, 1, 1.0, 1);
  const auto data = draw_inliers(model, 1000, 2);
  const AuditReport report = audit_mean_good_set(data.samples, model, 0.2, 0.1, 10, 3);
  const std::string text = format_report(report);
  for (const char* name : {"i", "ii", "iii", "iv"})
    EXPECT_NE(text.find(std::string("condition ") + name + ":"), std::string::npos) << text;
}
