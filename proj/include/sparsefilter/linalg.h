#pragma once

// Dense linear-algebra primitives shared by the estimators.
//
// Samples are stored one per row (N x d). Symmetric matrices are plain dense
// Eigen matrices that every routine here constructs exactly symmetric.

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace sparsefilter {

using Vector = Eigen::VectorXd;
using SymMatrix = Eigen::MatrixXd;
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A set of coordinates in [0, d), kept sorted and free of duplicates.
class IndexSet {
 public:
  IndexSet() = default;
  // Throws InputError on an index outside [0, dimension).
  IndexSet(int dimension, std::vector<int> indices);

  int dimension() const { return dimension_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  bool contains(int i) const;
  const std::vector<int>& indices() const { return indices_; }
  int operator[](std::size_t pos) const { return indices_[pos]; }

 private:
  int dimension_ = 0;
  std::vector<int> indices_;
};

// A transposition-closed set of matrix positions (i, j) in [0, d) x [0, d),
// kept in row-major order.
class EntrySet {
 public:
  using Entry = std::pair<int, int>;

  EntrySet() = default;

  // Validates closure: throws InputError if some (i, j) is present without (j, i),
  // or an index is out of range.
  EntrySet(int dimension, std::vector<Entry> entries);

  // Adds the transpose of every entry.
  static EntrySet closure_of(int dimension, const std::vector<Entry>& entries);

  int dimension() const { return dimension_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(int i, int j) const;
  const std::vector<Entry>& entries() const { return entries_; }

  // Every coordinate that appears in some entry; the set U' built from U.
  IndexSet coordinates() const;

 private:
  int dimension_ = 0;
  std::vector<Entry> entries_;
};

// h_k: keeps the k largest-magnitude entries and zeroes the rest. Ties go to
// the lower index. k >= size returns v unchanged.
Vector hard_threshold(const Vector& v, int k);

// Positions of the k largest-magnitude entries of v, lower index first on ties,
// returned in increasing index order.
std::vector<int> top_magnitude_indices(const Vector& v, int k);

// The entry set U: the min(k, d) largest-|A_ii| diagonal positions plus the
// min(k^2 - k, d^2 - d) largest-|A_ij| off-diagonal positions. Off-diagonal
// positions are taken in symmetric pairs and both members count toward the
// budget. Requires A square.
EntrySet top_entry_set(const SymMatrix& A, int k);

// M with every entry outside W set to zero.
SymMatrix restrict_entries(const SymMatrix& M, const EntrySet& W);

// The |U| x |U| principal submatrix on U.
SymMatrix restrict_principal(const SymMatrix& M, const IndexSet& U);

struct Moments {
  Vector mean;
  SymMatrix covariance;  // 1/N normalization
};

// Throws InputError for fewer than two rows.
Moments empirical_moments(const SampleMatrix& samples);

struct EigenPair {
  double value = 0.0;
  Vector vector;
};

// Algebraically largest eigenvalue and a unit eigenvector, with the sign fixed
// so the largest-magnitude component is positive. Throws NumericalError on
// non-finite input or solver failure.
EigenPair top_eigenpair(const SymMatrix& M);

// All eigenvalues of a symmetric matrix in ascending order.
Vector symmetric_eigenvalues(const SymMatrix& M);

// Flips the sign of v so that its largest-magnitude entry (lowest index on
// ties) is positive.
void canonicalize_sign(Vector& v);

double erfc(double z);

// max(log(1/eps), 1), the guarded log used in all thresholds.
double guarded_log_inverse(double eps);

// Row-major flattening of a d x d matrix.
Vector vectorize(const Eigen::MatrixXd& M);

}  // namespace sparsefilter
