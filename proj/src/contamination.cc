#include "sparsefilter/contamination.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "sparsefilter/errors.h"
#include "sparsefilter/random.h"

namespace sparsefilter {
namespace {

// Stream ids keep the draws of different purposes independent under one seed.
constexpr std::uint64_t kStreamRows = 1;
constexpr std::uint64_t kStreamValues = 2;
constexpr std::uint64_t kStreamParams = 3;

std::vector<int> random_subset(Philox4x32& rng, std::vector<int> pool, std::size_t count) {
  count = std::min(count, pool.size());
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<int> iota_vector(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

Vector uniform_sparse_unit(int d, const std::vector<int>& support) {
  Vector v = Vector::Zero(d);
  const double value = 1.0 / std::sqrt(static_cast<double>(support.size()));
  for (int i : support) v[i] = value;
  return v;
}

std::vector<int> support_of(const Vector& v) {
  std::vector<int> s;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) s.push_back(static_cast<int>(i));
  return s;
}

void fill_inlier_row(const InlierModel& model, Philox4x32& rng, Eigen::Ref<Vector> row) {
  if (const auto* m = std::get_if<SparseMeanModel>(&model)) {
    for (int j = 0; j < m->d; ++j) row[j] = m->mu[j] + rng.normal();
  } else {
    const auto& s = std::get<SpikedCovModel>(model);
    for (int j = 0; j < s.d; ++j) row[j] = rng.normal();
    // z + sqrt(rho) g v has covariance I + rho v v^T.
    row += std::sqrt(s.rho) * rng.normal() * s.v;
  }
}

void check_dimension(const Vector& v, int d, const char* what) {
  if (v.size() != d)
    throw InputError(std::string(what) + " has dimension " + std::to_string(v.size()) +
                     ", model has " + std::to_string(d));
}

}  // namespace

void validate(const SparseMeanModel& model) {
  if (model.d < 1 || model.k < 1) throw InputError("sparse mean model needs d >= 1 and k >= 1");
  check_dimension(model.mu, model.d, "mean vector");
  if (support_of(model.mu).size() > static_cast<std::size_t>(model.k))
    throw InputError("mean vector has more than k nonzero entries");
  if (!model.mu.allFinite()) throw InputError("mean vector has non-finite entries");
}

void validate(const SpikedCovModel& model) {
  if (model.d < 1 || model.k < 1) throw InputError("spiked model needs d >= 1 and k >= 1");
  check_dimension(model.v, model.d, "spike");
  if (!(model.rho > 0.0)) throw InputError("spike strength rho must be positive");
  if (std::abs(model.v.norm() - 1.0) > 1e-12) throw InputError("spike must have unit norm");
  if (support_of(model.v).size() > static_cast<std::size_t>(model.k))
    throw InputError("spike has more than k nonzero entries");
}

int dimension_of(const InlierModel& model) {
  return std::visit([](const auto& m) { return m.d; }, model);
}

int sparsity_of(const InlierModel& model) {
  return std::visit([](const auto& m) { return m.k; }, model);
}

Vector mean_of(const InlierModel& model) {
  if (const auto* m = std::get_if<SparseMeanModel>(&model)) return m->mu;
  return Vector::Zero(dimension_of(model));
}

SparseMeanModel make_sparse_mean_model(int d, int k, double scale, std::uint64_t seed) {
  if (k > d) throw InputError("sparsity exceeds dimension");
  Philox4x32 rng(seed, kStreamParams);
  SparseMeanModel m{d, k, Vector::Zero(d)};
  if (scale != 0.0)
    for (int i : random_subset(rng, iota_vector(d), static_cast<std::size_t>(k))) m.mu[i] = scale;
  validate(m);
  return m;
}

SpikedCovModel make_spiked_model(int d, int k, double rho, std::uint64_t seed) {
  if (k > d) throw InputError("sparsity exceeds dimension");
  Philox4x32 rng(seed, kStreamParams);
  SpikedCovModel m{d, k, rho,
                   uniform_sparse_unit(d, random_subset(rng, iota_vector(d), static_cast<std::size_t>(k)))};
  validate(m);
  return m;
}

std::size_t CorruptedDataset::outlier_count() const {
  return static_cast<std::size_t>(std::count(inlier_mask.begin(), inlier_mask.end(), false));
}

std::string to_string(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::kConstantBias: return "constant_bias";
    case CorruptionKind::kLinearHiding: return "linear_hiding";
    case CorruptionKind::kFlipping: return "flipping";
    case CorruptionKind::kDisjointSpike: return "disjoint_spike";
  }
  return "unknown";
}

CorruptionKind corruption_kind_from_string(const std::string& name) {
  for (auto kind : {CorruptionKind::kConstantBias, CorruptionKind::kLinearHiding,
                    CorruptionKind::kFlipping, CorruptionKind::kDisjointSpike}) {
    if (to_string(kind) == name) return kind;
  }
  throw InputError("unknown noise model '" + name + "'");
}

CorruptedDataset draw_inliers(const InlierModel& model, std::size_t n, std::uint64_t seed) {
  std::visit([](const auto& m) { validate(m); }, model);
  const int d = dimension_of(model);
  CorruptedDataset out{SampleMatrix(static_cast<Eigen::Index>(n), d), std::vector<bool>(n, true), model, 0.0};
  Philox4x32 rng(seed, kStreamValues);
  for (std::size_t r = 0; r < n; ++r) {
    Vector row(d);
    fill_inlier_row(model, rng, row);
    out.samples.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return out;
}

std::size_t corruption_count(double eps, std::size_t n) {
  return static_cast<std::size_t>(std::floor(eps * static_cast<double>(n) + 1e-9));
}

CorruptedDataset corrupt(const CorruptedDataset& data, double eps, const CorruptionSpec& spec,
                         std::uint64_t seed) {
  if (!(eps >= 0.0 && eps < 0.5)) throw InputError("corruption fraction must lie in [0, 1/2)");
  CorruptedDataset out = data;
  out.eps = eps;
  const std::size_t n = data.size();
  const std::size_t m = corruption_count(eps, n);
  const int d = dimension_of(data.model);
  const int k = sparsity_of(data.model);
  const Vector mu = mean_of(data.model);

  Philox4x32 param_rng(seed, kStreamParams);
  Philox4x32 row_rng(seed, kStreamRows);
  Philox4x32 value_rng(seed, kStreamValues);

  // Parameters are resolved before the early return so invalid specs are
  // rejected even at eps = 0.
  std::vector<int> rows;
  auto pick_random_rows = [&] {
    std::vector<int> all = iota_vector(static_cast<int>(n));
    return random_subset(row_rng, std::move(all), m);
  };

  switch (spec.kind) {
    case CorruptionKind::kConstantBias: {
      const Vector shift = spec.shift.value_or(Vector::Constant(d, 2.0));
      check_dimension(shift, d, "shift");
      if (m == 0) return out;
      rows = pick_random_rows();
      for (int r : rows) {
        Vector row(d);
        if (spec.bias_mode == BiasMode::kAddShift) {
          fill_inlier_row(data.model, value_rng, row);
          row += shift;
        } else {
          row = mu + Vector::Ones(d);
        }
        out.samples.row(r) = row.transpose();
      }
      break;
    }
    case CorruptionKind::kLinearHiding: {
      IndexSet support = spec.hiding_support.value_or(
          IndexSet(d, random_subset(param_rng, iota_vector(d), static_cast<std::size_t>(k))));
      if (support.dimension() != d) throw InputError("hiding support dimension mismatch");
      if (m == 0) return out;
      Vector indicator = Vector::Zero(d);
      for (int i : support.indices()) indicator[i] = 1.0;
      // N(1_S, I) gets the extra row when the count is odd; N(0, 2I - I_S) the rest.
      const Vector wide_scale = (2.0 * Vector::Ones(d) - indicator).cwiseSqrt();
      const std::size_t first_type = (m + 1) / 2;
      rows = pick_random_rows();
      for (std::size_t t = 0; t < rows.size(); ++t) {
        Vector z(d);
        for (int j = 0; j < d; ++j) z[j] = value_rng.normal();
        const Vector row = t < first_type ? Vector(mu + indicator + z)
                                          : Vector(mu + z.cwiseProduct(wide_scale));
        out.samples.row(rows[t]) = row.transpose();
      }
      break;
    }
    case CorruptionKind::kFlipping: {
      Vector v = spec.flip_direction.value_or(uniform_sparse_unit(
          d, random_subset(param_rng, iota_vector(d), static_cast<std::size_t>(k))));
      check_dimension(v, d, "flip direction");
      if (!(v.norm() > 0.0)) throw InputError("flip direction must be nonzero");
      v.normalize();
      if (m == 0) return out;
      const Vector proj = (data.samples.rowwise() - mu.transpose()) * v;
      std::vector<int> order = iota_vector(static_cast<int>(n));
      std::stable_sort(order.begin(), order.end(),
                       [&proj](int a, int b) { return proj[a] < proj[b]; });
      order.resize(m);
      for (int r : order) {
        const Vector x = data.samples.row(r).transpose();
        out.samples.row(r) = (x - 2.0 * proj[r] * v).transpose();
      }
      rows = std::move(order);
      break;
    }
    case CorruptionKind::kDisjointSpike: {
      const auto* spiked = std::get_if<SpikedCovModel>(&data.model);
      if (spiked == nullptr) throw InputError("disjoint_spike noise requires a spiked covariance model");
      if (2 * k > d) throw InputError("disjoint_spike needs 2k <= d");
      Vector u;
      if (spec.spike) {
        u = *spec.spike;
        check_dimension(u, d, "spike");
        for (int i : support_of(u))
          if (spiked->v[i] != 0.0) throw InputError("outlier spike support overlaps the true spike");
        u.normalize();
      } else {
        std::vector<int> complement;
        for (int i = 0; i < d; ++i)
          if (spiked->v[i] == 0.0) complement.push_back(i);
        u = uniform_sparse_unit(d, random_subset(param_rng, complement, static_cast<std::size_t>(k)));
      }
      if (m == 0) return out;
      rows = pick_random_rows();
      for (int r : rows) {
        Vector row(d);
        for (int j = 0; j < d; ++j) row[j] = value_rng.normal();
        row += value_rng.normal() * u;
        out.samples.row(r) = row.transpose();
      }
      break;
    }
  }
  for (int r : rows) out.inlier_mask[static_cast<std::size_t>(r)] = false;
  return out;
}

double symmetric_difference_fraction(const std::vector<std::size_t>& s,
                                     const std::vector<std::size_t>& g) {
  if (s.empty()) throw InputError("symmetric_difference_fraction: first multiset is empty");
  std::map<std::size_t, long long> balance;
  for (auto id : s) ++balance[id];
  for (auto id : g) --balance[id];
  long long diff = 0;
  for (const auto& [id, count] : balance) diff += count < 0 ? -count : count;
  return static_cast<double>(diff) / static_cast<double>(s.size());
}

}  // namespace sparsefilter
