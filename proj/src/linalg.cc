#include "sparsefilter/linalg.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "sparsefilter/errors.h"

namespace sparsefilter {

IndexSet::IndexSet(int dimension, std::vector<int> indices)
    : dimension_(dimension), indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
  for (int i : indices_) {
    if (i < 0 || i >= dimension_) {
      throw InputError("index " + std::to_string(i) + " out of range for dimension " +
                       std::to_string(dimension_));
    }
  }
}

bool IndexSet::contains(int i) const {
  return std::binary_search(indices_.begin(), indices_.end(), i);
}

EntrySet::EntrySet(int dimension, std::vector<Entry> entries)
    : dimension_(dimension), entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end());
  entries_.erase(std::unique(entries_.begin(), entries_.end()), entries_.end());
  for (const auto& [i, j] : entries_) {
    if (i < 0 || j < 0 || i >= dimension_ || j >= dimension_) {
      throw InputError("entry (" + std::to_string(i) + "," + std::to_string(j) +
                       ") out of range for dimension " + std::to_string(dimension_));
    }
    if (!std::binary_search(entries_.begin(), entries_.end(), Entry{j, i})) {
      throw InputError("entry set not closed under transposition: (" + std::to_string(i) +
                       "," + std::to_string(j) + ") present without its transpose");
    }
  }
}

EntrySet EntrySet::closure_of(int dimension, const std::vector<Entry>& entries) {
  std::vector<Entry> closed;
  closed.reserve(2 * entries.size());
  for (const auto& [i, j] : entries) {
    closed.emplace_back(i, j);
    closed.emplace_back(j, i);
  }
  return EntrySet(dimension, std::move(closed));
}

bool EntrySet::contains(int i, int j) const {
  return std::binary_search(entries_.begin(), entries_.end(), Entry{i, j});
}

IndexSet EntrySet::coordinates() const {
  std::vector<int> coords;
  coords.reserve(entries_.size());
  for (const auto& e : entries_) coords.push_back(e.first);
  return IndexSet(dimension_, std::move(coords));
}

std::vector<int> top_magnitude_indices(const Vector& v, int k) {
  const int d = static_cast<int>(v.size());
  k = std::clamp(k, 0, d);
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  auto by_magnitude = [&v](int a, int b) {
    const double ma = std::abs(v[a]);
    const double mb = std::abs(v[b]);
    return ma > mb || (ma == mb && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + k, order.end(), by_magnitude);
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

Vector hard_threshold(const Vector& v, int k) {
  if (k >= v.size()) return v;
  Vector out = Vector::Zero(v.size());
  for (int i : top_magnitude_indices(v, k)) out[i] = v[i];
  return out;
}

EntrySet top_entry_set(const SymMatrix& A, int k) {
  if (A.rows() != A.cols()) throw InputError("top_entry_set: matrix is not square");
  const int d = static_cast<int>(A.rows());
  std::vector<EntrySet::Entry> chosen;

  for (int i : top_magnitude_indices(A.diagonal(), std::min(k, d))) chosen.emplace_back(i, i);

  // Upper-triangle pairs; each selected pair contributes two entries.
  const long long off_budget =
      std::min(static_cast<long long>(k) * k - k, static_cast<long long>(d) * d - d);
  const auto pair_budget = static_cast<std::size_t>(off_budget / 2);
  if (pair_budget > 0) {
    std::vector<EntrySet::Entry> pairs;
    pairs.reserve(static_cast<std::size_t>(d) * (d - 1) / 2);
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) pairs.emplace_back(i, j);
    auto by_magnitude = [&A](const EntrySet::Entry& a, const EntrySet::Entry& b) {
      const double ma = std::abs(A(a.first, a.second));
      const double mb = std::abs(A(b.first, b.second));
      return ma > mb || (ma == mb && a < b);
    };
    const std::size_t take = std::min(pair_budget, pairs.size());
    std::nth_element(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(take),
                     pairs.end(), by_magnitude);
    for (std::size_t p = 0; p < take; ++p) {
      chosen.push_back(pairs[p]);
      chosen.emplace_back(pairs[p].second, pairs[p].first);
    }
  }
  return EntrySet(d, std::move(chosen));
}

SymMatrix restrict_entries(const SymMatrix& M, const EntrySet& W) {
  if (W.dimension() != M.rows() || M.rows() != M.cols())
    throw InputError("restrict_entries: entry set dimension does not match matrix");
  SymMatrix out = SymMatrix::Zero(M.rows(), M.cols());
  for (const auto& [i, j] : W.entries()) out(i, j) = M(i, j);
  return out;
}

SymMatrix restrict_principal(const SymMatrix& M, const IndexSet& U) {
  if (U.dimension() != M.rows() || M.rows() != M.cols())
    throw InputError("restrict_principal: index set dimension does not match matrix");
  const auto n = static_cast<Eigen::Index>(U.size());
  SymMatrix out(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) out(a, b) = M(U[a], U[b]);
  return out;
}

Moments empirical_moments(const SampleMatrix& samples) {
  const auto n = samples.rows();
  if (n < 2) throw InputError("empirical_moments: need at least 2 samples, got " + std::to_string(n));
  Moments m;
  m.mean = samples.colwise().mean().transpose();
  const SampleMatrix centered = samples.rowwise() - m.mean.transpose();
  SymMatrix cov = SymMatrix::Zero(samples.cols(), samples.cols());
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), 1.0 / static_cast<double>(n));
  m.covariance = cov.selfadjointView<Eigen::Lower>();
  return m;
}

void canonicalize_sign(Vector& v) {
  if (v.size() == 0) return;
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  if (v[best] < 0) v = -v;
}

EigenPair top_eigenpair(const SymMatrix& M) {
  if (M.rows() != M.cols()) throw InputError("top_eigenpair: matrix is not square");
  if (M.size() == 0) throw InputError("top_eigenpair: empty matrix");
  if (!M.allFinite()) throw NumericalError("top_eigenpair: matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<SymMatrix> solver(M);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "top_eigenpair: eigensolver did not converge (dimension " << M.rows()
        << ", frobenius norm " << M.norm() << ")";
    throw NumericalError(msg.str());
  }
  const auto last = M.rows() - 1;
  EigenPair out{solver.eigenvalues()[last], solver.eigenvectors().col(last)};
  out.vector.normalize();
  canonicalize_sign(out.vector);
  return out;
}

Vector symmetric_eigenvalues(const SymMatrix& M) {
  if (!M.allFinite()) throw NumericalError("symmetric_eigenvalues: non-finite entries");
  Eigen::SelfAdjointEigenSolver<SymMatrix> solver(M, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric_eigenvalues: no convergence");
  return solver.eigenvalues();
}

double erfc(double z) { return std::erfc(z); }

double guarded_log_inverse(double eps) { return std::max(std::log(1.0 / eps), 1.0); }

Vector vectorize(const Eigen::MatrixXd& M) {
  Vector out(M.size());
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) out[i * M.cols() + j] = M(i, j);
  return out;
}

}  // namespace sparsefilter
