#pragma once

// Statistical auditors for the deterministic "good set" conditions the filters
// rely on. Conditions quantified over all sparse directions or polynomials are
// checked on randomly drawn witnesses, so a pass is one-sided evidence; a
// failure is a certificate that the set is not good.

#include <cstdint>
#include <string>
#include <vector>

#include "sparsefilter/contamination.h"
#include "sparsefilter/linalg.h"

namespace sparsefilter {

struct ConditionResult {
  std::string name;
  bool passed = true;
  // Largest observed/bound ratio across everything checked (<= 1 passes).
  double worst_ratio = 0.0;
  std::string detail;
};

struct AuditReport {
  std::vector<ConditionResult> conditions;

  bool all_passed() const;
  const ConditionResult& condition(const std::string& name) const;
};

struct AuditConstants {
  // Coordinate bound multiplier: |x_i - mu_i| <= c_coord sqrt(log(d |G| / tau)).
  double c_coord = 2.0;
  // Multiplier on the O(eps) moment deviations.
  double c_moment = 1.0;
  // Tail multiplier for the PCA concentration condition; matches RspcaConfig::c_tail.
  double c_tail = 3.0;
};

// Conditions "i" (coordinate means and second moments within eps/k),
// "ii" (coordinate magnitude), "iii" (sparse-direction moments and tails) and
// "iv" (sparse degree-2 polynomial mean and tails) for N(mu, I).
AuditReport audit_mean_good_set(const SampleMatrix& g, const SparseMeanModel& model, double eps,
                                double tau, int directions, std::uint64_t seed,
                                const AuditConstants& constants = {});

// Conditions "1" (coordinate magnitude), "2" (restricted second moment within
// eps in Frobenius norm, exact over all Q with |Q| <= k^2), "3" (variance of
// gamma_Q . w within (1 +- eps) of its Gaussian value) and "4" (tails of
// gamma_Q . w) for N(0, I + rho v v^T).
AuditReport audit_pca_good_set(const SampleMatrix& g, const SpikedCovModel& model, double eps,
                               int directions, std::uint64_t seed,
                               const AuditConstants& constants = {});

std::string format_report(const AuditReport& report);

}  // namespace sparsefilter
