#include "sparsefilter/goodset_audit.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sparsefilter/errors.h"
#include "sparsefilter/random.h"
#include "sparsefilter/sparse_pca.h"

namespace sparsefilter {
namespace {

ConditionResult named(const char* name) {
  ConditionResult c;
  c.name = name;
  return c;
}

void record(ConditionResult& c, double observed, double bound, const std::string& what) {
  const double ratio = bound > 0.0 ? observed / bound : (observed > 0.0 ? INFINITY : 0.0);
  if (c.detail.empty() || ratio > c.worst_ratio) {
    std::ostringstream out;
    out << what << ": observed " << observed << " vs bound " << bound;
    c.detail = out.str();
    c.worst_ratio = ratio;
  }
  if (!(observed <= bound)) c.passed = false;
}

// For each distinct value s >= t_min of `deviations`, the empirical tail
// Pr[dev >= s] must not exceed bound(s / scale).
template <typename Bound>
void check_tail(ConditionResult& c, std::vector<double> deviations, double t_min, double scale,
                Bound&& bound, const std::string& what) {
  std::sort(deviations.begin(), deviations.end());
  const std::size_t n = deviations.size();
  for (std::size_t i = 0; i < n;) {
    const double s = deviations[i];
    const double T = s / scale;
    if (T >= t_min) {
      const double tail = static_cast<double>(n - i) / static_cast<double>(n);
      std::ostringstream label;
      label << what << " tail at T=" << T;
      record(c, tail, bound(T), label.str());
    }
    while (i < n && deviations[i] == s) ++i;
  }
}

Vector random_sparse_unit(Philox4x32& rng, int d, int support) {
  std::vector<int> pool(static_cast<std::size_t>(d));
  std::iota(pool.begin(), pool.end(), 0);
  support = std::min(support, d);
  Vector v = Vector::Zero(d);
  for (int i = 0; i < support; ++i) {
    const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(d - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    v[pool[static_cast<std::size_t>(i)]] = rng.normal();
  }
  const double norm = v.norm();
  if (norm == 0.0) v[pool[0]] = 1.0; else v /= norm;
  return v;
}

}  // namespace

bool AuditReport::all_passed() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const auto& c) { return c.passed; });
}

const ConditionResult& AuditReport::condition(const std::string& name) const {
  for (const auto& c : conditions)
    if (c.name == name) return c;
  throw InputError("audit report has no condition '" + name + "'");
}

AuditReport audit_mean_good_set(const SampleMatrix& g, const SparseMeanModel& model, double eps,
                                double tau, int directions, std::uint64_t seed,
                                const AuditConstants& constants) {
  validate(model);
  if (g.rows() < 1 || g.cols() != model.d) throw InputError("audit_mean_good_set: sample shape mismatch");
  if (directions < 1) throw InputError("audit_mean_good_set: need at least one direction");
  const auto n = static_cast<double>(g.rows());
  const int d = model.d;
  const int k = model.k;
  const SampleMatrix centered = g.rowwise() - model.mu.transpose();

  AuditReport report;
  ConditionResult c1 = named("i"), c2 = named("ii"), c3 = named("iii"), c4 = named("iv");

  const Vector mean_dev = centered.colwise().mean().transpose();
  record(c1, mean_dev.cwiseAbs().maxCoeff(), eps / k, "max coordinate mean deviation");
  SymMatrix second = SymMatrix::Zero(d, d);
  second.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), 1.0 / n);
  const SymMatrix second_full = SymMatrix(second.selfadjointView<Eigen::Lower>()) - SymMatrix::Identity(d, d);
  record(c1, second_full.cwiseAbs().maxCoeff(), eps / k, "max second-moment deviation");

  record(c2, centered.cwiseAbs().maxCoeff(),
         constants.c_coord * std::sqrt(std::log(static_cast<double>(d) * n / tau)), "max |x_i - mu_i|");

  Philox4x32 rng(seed, 11);
  const double tail_log = std::max(std::log(k * std::log(std::max(static_cast<double>(d) * n / tau, M_E))), 1.0);
  for (int t = 0; t < directions; ++t) {
    const Vector v = random_sparse_unit(rng, d, 2 * k * k);
    const Vector proj = centered * v;
    record(c3, std::abs(proj.mean()), constants.c_moment * eps, "direction mean");
    record(c3, std::abs(proj.squaredNorm() / n - 1.0), constants.c_moment * eps, "direction second moment");
    std::vector<double> dev(proj.data(), proj.data() + proj.size());
    for (double& x : dev) x = std::abs(x);
    check_tail(c3, std::move(dev), 6.0, 1.0,
               [&](double T) { return 3.0 * erfc(T / std::sqrt(2.0)) + eps * eps / (T * T * tail_log); },
               "direction");
  }

  // Homogeneous degree-2 polynomials in (x - mu) with at most k^2 monomials,
  // scaled so Var = 2 ||A||_F^2 = 1.
  const int terms = std::min(k * k, d * (d + 1) / 2);
  for (int t = 0; t < directions; ++t) {
    SymMatrix a = SymMatrix::Zero(d, d);
    for (int m = 0; m < terms; ++m) {
      const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(d)));
      const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(d)));
      const double coef = rng.normal();
      if (i == j) {
        a(i, i) += coef;
      } else {
        a(i, j) += 0.5 * coef;
        a(j, i) += 0.5 * coef;
      }
    }
    const double fro = a.norm();
    if (fro == 0.0) continue;
    a /= std::sqrt(2.0) * fro;
    const double expected = a.trace();
    const Vector p = (centered * a).cwiseProduct(centered).rowwise().sum();
    record(c4, std::abs(p.mean() - expected), constants.c_moment * eps, "polynomial mean");
    std::vector<double> dev(static_cast<std::size_t>(p.size()));
    for (Eigen::Index i = 0; i < p.size(); ++i) dev[static_cast<std::size_t>(i)] = std::abs(p[i] - expected);
    check_tail(c4, std::move(dev), 5.0, 1.0,
               [&](double T) {
                 const double lt = std::log(T);
                 return 3.0 * std::exp(-T / 4.0) + eps * eps / (T * lt * lt);
               },
               "polynomial");
  }

  report.conditions = {c1, c2, c3, c4};
  return report;
}

AuditReport audit_pca_good_set(const SampleMatrix& g, const SpikedCovModel& model, double eps,
                               int directions, std::uint64_t seed, const AuditConstants& constants) {
  validate(model);
  if (g.rows() < 1 || g.cols() != model.d) throw InputError("audit_pca_good_set: sample shape mismatch");
  if (directions < 1) throw InputError("audit_pca_good_set: need at least one direction");
  const auto n = static_cast<double>(g.rows());
  const int d = model.d;
  const int k = model.k;
  const SymMatrix sigma = SymMatrix::Identity(d, d) + model.rho * model.v * model.v.transpose();

  AuditReport report;
  ConditionResult c1 = named("1"), c2 = named("2"), c3 = named("3"), c4 = named("4");

  record(c1, g.cwiseAbs().maxCoeff(),
         constants.c_coord * std::sqrt(std::log(std::max(static_cast<double>(d) * n, M_E))), "max |x_i|");

  SymMatrix second = SymMatrix::Zero(d, d);
  second.selfadjointView<Eigen::Lower>().rankUpdate(g.transpose(), 1.0 / n);
  const SymMatrix deviation = SymMatrix(second.selfadjointView<Eigen::Lower>()) - sigma;
  // The worst Q with |Q| <= k^2 takes the k^2 largest |deviation| entries.
  std::vector<double> squares(static_cast<std::size_t>(deviation.size()));
  for (Eigen::Index i = 0; i < deviation.size(); ++i)
    squares[static_cast<std::size_t>(i)] = deviation.data()[i] * deviation.data()[i];
  const auto take = static_cast<std::ptrdiff_t>(std::min<std::size_t>(static_cast<std::size_t>(k) * k, squares.size()));
  std::partial_sort(squares.begin(), squares.begin() + take, squares.end(), std::greater<>());
  record(c2, std::sqrt(std::accumulate(squares.begin(), squares.begin() + take, 0.0)), eps,
         "worst restricted Frobenius deviation");

  Philox4x32 rng(seed, 13);
  const double t_min = guarded_log_inverse(eps);
  const std::size_t q_size = std::min<std::size_t>(static_cast<std::size_t>(k) * k, static_cast<std::size_t>(d) * d);
  for (int t = 0; t < directions; ++t) {
    std::vector<std::uint64_t> flat(static_cast<std::size_t>(d) * d);
    std::iota(flat.begin(), flat.end(), std::uint64_t{0});
    std::vector<EntrySet::Entry> q;
    for (std::size_t i = 0; i < q_size; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(flat.size() - i));
      std::swap(flat[i], flat[j]);
      q.emplace_back(static_cast<int>(flat[i] / d), static_cast<int>(flat[i] % d));
    }
    Vector w(static_cast<Eigen::Index>(q_size));
    for (auto& x : w) x = rng.normal();
    w.normalize();

    const Eigen::MatrixXd features = gamma_features(g, q);
    const Vector proj = features * w;
    const double mean = proj.mean();
    const double var = (proj.array() - mean).square().sum() / n;
    const double expected_var = w.dot(gamma_cov_analytic(sigma, q) * w);
    record(c3, std::abs(var - expected_var), eps * expected_var, "variance of gamma_Q . w");

    double center = 0.0;
    for (std::size_t a = 0; a < q_size; ++a)
      center += model.rho * model.v[q[a].first] * model.v[q[a].second] * w[static_cast<Eigen::Index>(a)];
    std::vector<double> dev(static_cast<std::size_t>(proj.size()));
    for (Eigen::Index i = 0; i < proj.size(); ++i) dev[static_cast<std::size_t>(i)] = std::abs(proj[i] - center);
    check_tail(c4, std::move(dev), t_min, constants.c_tail,
               [&](double T) {
                 const double lt = std::log(T);
                 return eps / (T * T * lt * lt);
               },
               "gamma projection");
  }

  report.conditions = {c1, c2, c3, c4};
  return report;
}

std::string format_report(const AuditReport& report) {
  std::ostringstream out;
  for (const auto& c : report.conditions) {
    out << "condition " << c.name << ": " << (c.passed ? "pass" : "FAIL") << " (worst ratio "
        << c.worst_ratio << "; " << c.detail << ")\n";
  }
  return out.str();
}

}  // namespace sparsefilter
