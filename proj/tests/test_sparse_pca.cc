#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.h"
#include "sparsefilter/contamination.h"
#include "sparsefilter/errors.h"
#include "sparsefilter/sparse_pca.h"

using namespace sparsefilter;

namespace {

RspcaConfig config(int k, double eps) {
  RspcaConfig cfg;
  cfg.k = k;
  cfg.eps = eps;
  return cfg;
}

// Top eigenvector of the clean empirical covariance restricted to supp(v).
Vector oracle_direction(const SampleMatrix& samples, const Vector& v) {
  std::vector<int> support;
  for (int i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) support.push_back(i);
  const auto [mean, cov] = oracle::naive_moments(samples);
  oracle::Mat sub(support.size(), support.size());
  for (std::size_t a = 0; a < support.size(); ++a)
    for (std::size_t b = 0; b < support.size(); ++b)
      sub(a, b) = cov(support[a], support[b]) + mean[support[a]] * mean[support[b]];
  const auto [values, vectors] = oracle::jacobi_eigen(sub);
  Vector w = Vector::Zero(v.size());
  for (std::size_t a = 0; a < support.size(); ++a) w[support[a]] = vectors(a, vectors.cols() - 1);
  return w;
}

// Replaces the first floor(eps N) rows with z + a s v, s = +-1: outliers that
// inflate the spike direction far past rho and so dominate gamma_Q.
CorruptedDataset heavy_spike(const SpikedCovModel& model, std::size_t n, double eps, double a, std::uint64_t seed) {
  auto data = draw_inliers(model, n, seed);
  std::mt19937_64 rng(seed + 100);
  std::normal_distribution<double> z;
  const std::size_t m = corruption_count(eps, n);
  for (std::size_t i = 0; i < m; ++i) {
    Vector row(model.d);
    for (int j = 0; j < model.d; ++j) row[j] = z(rng);
    row += (i % 2 ? a : -a) * model.v;
    data.samples.row(static_cast<Eigen::Index>(i)) = row.transpose();
    data.inlier_mask[i] = false;
  }
  return data;
}

}  // namespace

TEST(GammaVec, Examples) {
  EXPECT_EQ(gamma_vec(Vector::Zero(2)), (Vector(4) << -1, 0, 0, -1).finished());
  EXPECT_EQ(gamma_vec((Vector(2) << 1, 0).finished()), (Vector(4) << 0, 0, 0, -1).finished());
}

TEST(GammaVec, MatchesOuterProductLoop) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    Vector x(3);
    for (int i = 0; i < 3; ++i) x[i] = n(rng);
    const Vector g = gamma_vec(x);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(g[i * 3 + j], x[i] * x[j] - (i == j ? 1.0 : 0.0));
  }
}

TEST(GammaFeatures, RowsMatchGammaVec) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  SampleMatrix s(10, 4);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = n(rng);
  const std::vector<EntrySet::Entry> entries = {{0, 0}, {1, 3}, {3, 1}, {2, 2}};
  const Eigen::MatrixXd f = gamma_features(s, entries);
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const Vector g = gamma_vec(s.row(r).transpose());
    for (std::size_t a = 0; a < entries.size(); ++a)
      EXPECT_DOUBLE_EQ(f(r, static_cast<Eigen::Index>(a)), g[entries[a].first * 4 + entries[a].second]);
  }
}

TEST(SelectQ, SingleLargeDiagonal) {
  SymMatrix m = SymMatrix::Zero(3, 3);
  m.diagonal() << 5.0, 0.1, 0.0;
  const EntrySet q = select_Q(vectorize(m), 1);
  ASSERT_EQ(q.size(), 1u);
  EXPECT_EQ(q.entries()[0], EntrySet::Entry(0, 0));
}

TEST(SelectQ, ZeroVectorUsesFirstIndices) {
  // k^2 = 4 first flat indices of a 3x3 matrix: (0,0) (0,1) (0,2) (1,0), then closure adds (2,0).
  const EntrySet q = select_Q(Vector::Zero(9), 2);
  const std::vector<EntrySet::Entry> expected = {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {2, 0}};
  EXPECT_EQ(q.entries(), expected);
}

TEST(SelectQ, RandomSymmetricInputsAreClosed) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + trial % 6;
    const int k = 1 + trial % 3;
    SymMatrix a(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = n(rng);
    const EntrySet q = select_Q(vectorize(a), k);
    EXPECT_LE(q.size(), static_cast<std::size_t>(2 * k * k));
    for (const auto& [i, j] : q.entries()) EXPECT_TRUE(q.contains(j, i)) << i << "," << j;
  }
}

TEST(SelectQ, NonSquareLengthIsInputError) { EXPECT_THROW(select_Q(Vector::Zero(5), 1), InputError); }

TEST(GammaCov, IdentityWick) {
  const std::vector<EntrySet::Entry> entries = {{1, 1}, {0, 2}, {2, 2}};
  const SymMatrix c = gamma_cov_analytic(SymMatrix::Identity(3, 3), entries);
  EXPECT_DOUBLE_EQ(c(0, 0), 2.0);  // Var(x_1^2 - 1)
  EXPECT_DOUBLE_EQ(c(1, 1), 1.0);  // Var(x_0 x_2)
  EXPECT_DOUBLE_EQ(c(0, 2), 0.0);  // Cov(x_1^2, x_2^2)
  EXPECT_DOUBLE_EQ(c(0, 1), 0.0);
}

TEST(GammaCov, CorrelatedPairMatchesMonteCarlo) {
  oracle::Mat sigma(2, 2);
  sigma << 1.0, 0.3, 0.3, 1.0;
  const std::vector<EntrySet::Entry> entries = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  const SymMatrix analytic = gamma_cov_analytic(sigma, entries);
  oracle::GaussianSampler sampler(sigma, 77);
  const int draws = 1000000;
  Eigen::MatrixXd f(draws, 4);
  for (int t = 0; t < draws; ++t) {
    const oracle::Vec x = sampler.draw();
    for (int a = 0; a < 4; ++a) f(t, a) = x[entries[a].first] * x[entries[a].second];
  }
  const Eigen::RowVectorXd mean = f.colwise().mean();
  const Eigen::MatrixXd centered = f.rowwise() - mean;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const Eigen::VectorXd prod = centered.col(a).cwiseProduct(centered.col(b));
      const double cov = prod.mean();
      const double se = std::sqrt((prod.array() - cov).square().mean() / draws);
      EXPECT_NEAR(cov, analytic(a, b), 3.0 * se + 1e-12) << a << "," << b;
    }
  }
}

TEST(GammaCov, Errors) {
  SymMatrix bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(gamma_cov_analytic(bad, std::vector<EntrySet::Entry>{{0, 0}}), InputError);
  EXPECT_THROW(gamma_cov_analytic(SymMatrix::Identity(2, 2), std::vector<EntrySet::Entry>{{0, 2}}), InputError);
}

TEST(PcaThreshold, NeedsTAboveLogInverseEps) {
  // log(1/0.1) = 2.30, so c_tail * T + 3 must exceed 3 * 2.30 + 3 = 9.9.
  std::vector<double> devs(100, 1.0);
  devs[0] = 9.5;
  EXPECT_FALSE(find_pca_threshold(devs, 0.1, 3.0));
  devs[0] = 30.0;
  const auto choice = find_pca_threshold(devs, 0.1, 3.0);
  ASSERT_TRUE(choice);
  EXPECT_DOUBLE_EQ(choice->T, 9.0);
  EXPECT_DOUBLE_EQ(choice->cut, 30.0);
}

TEST(PcaThreshold, EmptyIsNone) { EXPECT_FALSE(find_pca_threshold(std::vector<double>{}, 0.1, 3.0)); }

TEST(RspcaIteration, CleanDataMatrixBranch) {
  const auto model = make_spiked_model(20, 3, 0.5, 4);
  const auto data = draw_inliers(model, 20000, 5);
  const SymMatrix sigma = SymMatrix::Identity(20, 20) + model.rho * model.v * model.v.transpose();
  const PcaOutcome out = rspca_iteration(data.samples, sigma, 0.05, config(3, 0.1));
  ASSERT_TRUE(out.is_matrix());
  EXPECT_GE(std::abs(out.matrix->w.dot(model.v)), 0.98);
  EXPECT_NEAR(out.matrix->w.norm(), 1.0, 1e-10);
  const SymMatrix expected =
      SymMatrix::Identity(20, 20) + out.matrix->rho_hat * out.matrix->w * out.matrix->w.transpose();
  EXPECT_EQ(out.matrix->sigma_prime, expected);
}

// The competing spike lives off supp(v). Its entries in mean(gamma) are
// eps / k against rho / k on the true block, so Q lands on supp(v) x supp(v)
// and the outliers leave gamma_Q untouched: the matrix branch is returned.
TEST(RspcaIteration, DisjointSpikeIsInvisibleOnQ) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto model = make_spiked_model(20, 3, 1.0, seed);
    CorruptionSpec spec;
    spec.kind = CorruptionKind::kDisjointSpike;
    const auto data = corrupt(draw_inliers(model, 20000, seed + 1), 0.1, spec, seed + 2);
    const PcaOutcome out = rspca_iteration(data.samples, SymMatrix::Identity(20, 20), 1.0, config(3, 0.1));
    ASSERT_TRUE(out.is_matrix()) << seed;
    EXPECT_EQ(out.diagnostics.q_size, 9u);
    EXPECT_GE(std::abs(out.matrix->w.dot(model.v)), 0.95);
  }
}

TEST(RspcaIteration, HeavySpikeFilterRemovesOutliers) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto model = make_spiked_model(20, 3, 1.0, seed);
    const auto data = heavy_spike(model, 20000, 0.05, 6.0, seed + 1);
    const PcaOutcome out = rspca_iteration(data.samples, SymMatrix::Identity(20, 20), 1.0, config(3, 0.05));
    ASSERT_FALSE(out.is_matrix()) << seed;
    EXPECT_LT(out.retained.size(), data.size());
    std::vector<bool> kept(data.size(), false);
    for (auto i : out.retained) kept[i] = true;
    std::size_t inliers = 0, outliers = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!kept[i]) (data.inlier_mask[i] ? inliers : outliers)++;
    }
    EXPECT_GT(outliers, inliers) << seed;
  }
}

TEST(RspcaIteration, IdenticalZeroPoints) {
  const PcaOutcome out = rspca_iteration(SampleMatrix::Zero(10, 4), SymMatrix::Identity(4, 4), 0.5, config(2, 0.1));
  ASSERT_TRUE(out.is_matrix());
  EXPECT_EQ(out.matrix->rho_hat, 0.0);
  EXPECT_NEAR(out.matrix->w.norm(), 1.0, 1e-10);
}

TEST(RspcaIteration, InputErrors) {
  const SampleMatrix s = SampleMatrix::Zero(10, 4);
  EXPECT_THROW(rspca_iteration(s.topRows(1), SymMatrix::Identity(4, 4), 0.5, config(2, 0.1)), InputError);
  EXPECT_THROW(rspca_iteration(s, SymMatrix::Identity(4, 4), 0.0, config(2, 0.1)), InputError);
  EXPECT_THROW(rspca_iteration(s, SymMatrix::Identity(3, 3), 0.5, config(2, 0.1)), InputError);
}

TEST(RspcaEstimate, CleanDataNearOracle) {
  const auto model = make_spiked_model(20, 3, 1.0, 8);
  const auto data = draw_inliers(model, 10000, 9);
  const PcaEstimate est = rspca_estimate(data.samples, config(3, 0.1));
  const double ours = projection_distance(est.w, model.v);
  const double oracle_error = projection_distance(oracle_direction(data.samples, model.v), model.v);
  EXPECT_LE(ours, 2.0 * oracle_error + 0.02);
  EXPECT_TRUE(est.final_rows.size() == data.size());
}

TEST(RspcaEstimate, DeltaFollowsRecursionToFixedPoint) {
  const double eps = 0.1;
  const double L = std::log(1.0 / eps);
  const auto data = draw_inliers(make_spiked_model(10, 2, 1.0, 1), 5000, 2);
  RspcaConfig cfg = config(2, eps);
  const PcaEstimate est = rspca_estimate(data.samples, cfg);
  ASSERT_EQ(est.deltas.size(), static_cast<std::size_t>(est.rounds));
  EXPECT_EQ(est.deltas[0], cfg.rho_upper);
  for (std::size_t t = 1; t < est.deltas.size(); ++t)
    EXPECT_DOUBLE_EQ(est.deltas[t], std::sqrt(eps * est.deltas[t - 1]) + eps * L);
  // delta = sqrt(eps delta) + eps L is quadratic in u = sqrt(delta).
  const double u = 0.5 * (std::sqrt(eps) + std::sqrt(eps + 4.0 * eps * L));
  EXPECT_NEAR(est.deltas.back(), u * u, 0.15 * u * u);
  EXPECT_GT(u * u, eps * L);
  EXPECT_LT(u * u, 3.0 * eps * L);
}

TEST(RspcaEstimate, FilterInvariants) {
  const auto model = make_spiked_model(20, 3, 1.0, 11);
  const auto data = heavy_spike(model, 20000, 0.05, 6.0, 12);
  const PcaEstimate est = rspca_estimate(data.samples, config(3, 0.05));
  EXPECT_NEAR(est.w.norm(), 1.0, 1e-10);
  EXPECT_GT(est.filter_iterations, 0u);
  std::size_t removed = 0, prev = data.size() + 1;
  for (const auto& rec : est.trace) {
    EXPECT_LE(rec.samples_in, prev);
    if (rec.branch == "pca_filter") {
      EXPECT_FALSE(rec.removed.empty());
      EXPECT_LT(rec.samples_in, prev);
    }
    prev = rec.samples_in;
    removed += rec.removed.size();
  }
  EXPECT_EQ(removed + est.final_rows.size(), data.size());
  EXPECT_GE(std::abs(est.w.dot(model.v)), 0.95);
}

TEST(RspcaEstimate, CapStopsFiltering) {
  const auto model = make_spiked_model(20, 3, 1.0, 11);
  const auto data = heavy_spike(model, 20000, 0.05, 6.0, 12);
  RspcaConfig cfg = config(3, 0.05);
  cfg.max_filter_iterations = 0;
  const PcaEstimate est = rspca_estimate(data.samples, cfg);
  EXPECT_TRUE(est.cap_hit);
  EXPECT_EQ(est.filter_iterations, 0u);
  EXPECT_EQ(est.trace.back().branch, "capped");
}

TEST(ProjectionDistance, MatchesFrobeniusOfOuterDifference) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 50; ++trial) {
    Vector w(5), v(5);
    for (int i = 0; i < 5; ++i) {
      w[i] = n(rng);
      v[i] = n(rng);
    }
    w.normalize();
    v.normalize();
    const double frob = (w * w.transpose() - v * v.transpose()).norm();
    EXPECT_NEAR(projection_distance(w, v), frob, 1e-12);
  }
  const Vector e = Vector::Unit(3, 0);
  EXPECT_EQ(projection_distance(e, e), 0.0);
  EXPECT_NEAR(projection_distance(e, Vector::Unit(3, 1)), std::sqrt(2.0), 1e-15);
}
