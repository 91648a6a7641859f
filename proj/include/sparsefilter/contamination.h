#pragma once

// Inlier models, the four corruption strategies used in the synthetic
// evaluation, and bookkeeping for how far a sample set is from the clean set.
//
// Estimators only ever receive a SampleMatrix. The ground-truth mask lives in
// CorruptedDataset and is read only by the oracle baseline and the harness.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sparsefilter/linalg.h"

namespace sparsefilter {

// N(mu, I) with a k-sparse mean.
struct SparseMeanModel {
  int d = 0;
  int k = 0;
  Vector mu;
};

// N(0, I + rho v v^T) with a k-sparse unit spike v.
struct SpikedCovModel {
  int d = 0;
  int k = 0;
  double rho = 0.0;
  Vector v;
};

using InlierModel = std::variant<SparseMeanModel, SpikedCovModel>;

// Throws InputError if the model's fields are inconsistent.
void validate(const SparseMeanModel& model);
void validate(const SpikedCovModel& model);

int dimension_of(const InlierModel& model);
int sparsity_of(const InlierModel& model);
// The inlier mean (zero for the spiked model).
Vector mean_of(const InlierModel& model);

// A k-sparse vector with `scale` on k uniformly chosen coordinates.
SparseMeanModel make_sparse_mean_model(int d, int k, double scale, std::uint64_t seed);
// Spike with value 1/sqrt(k) on k uniformly chosen coordinates.
SpikedCovModel make_spiked_model(int d, int k, double rho, std::uint64_t seed);

struct CorruptedDataset {
  SampleMatrix samples;
  std::vector<bool> inlier_mask;
  InlierModel model;
  double eps = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(samples.rows()); }
  std::size_t outlier_count() const;
};

enum class CorruptionKind { kConstantBias, kLinearHiding, kFlipping, kDisjointSpike };

std::string to_string(CorruptionKind kind);
// Throws InputError for an unknown name.
CorruptionKind corruption_kind_from_string(const std::string& name);

enum class BiasMode {
  kAddShift,   // replaced row = fresh inlier + shift
  kMeanPlusOne // replaced row = mu + 1 in every coordinate
};

// Optional fields left empty are drawn from the corruption seed.
struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::kConstantBias;
  BiasMode bias_mode = BiasMode::kAddShift;
  std::optional<Vector> shift;                // constant_bias; default 2 * ones
  std::optional<IndexSet> hiding_support;    // linear_hiding; default random k-set
  std::optional<Vector> flip_direction;      // flipping; default random k-sparse unit
  std::optional<Vector> spike;               // disjoint_spike; default random k-sparse unit
};

// N i.i.d. inliers, all marked clean. Bit-identical for identical seeds.
CorruptedDataset draw_inliers(const InlierModel& model, std::size_t n, std::uint64_t seed);

// Replaces exactly floor(eps * N) rows according to spec. Throws InputError for
// eps outside [0, 1/2), for a disjoint spike that cannot fit (2k > d), or for
// parameters whose dimension does not match the model.
CorruptedDataset corrupt(const CorruptedDataset& data, double eps, const CorruptionSpec& spec,
                         std::uint64_t seed);

// floor(eps * n), robust to eps * n landing a hair below an integer.
std::size_t corruption_count(double eps, std::size_t n);

// |S symmetric-difference G| / |S| for multisets of sample ids.
double symmetric_difference_fraction(const std::vector<std::size_t>& s,
                                     const std::vector<std::size_t>& g);

}  // namespace sparsefilter
