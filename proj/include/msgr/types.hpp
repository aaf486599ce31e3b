#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace msgr {

using Index = std::int64_t;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, std::int64_t>;
using Triplet = Eigen::Triplet<double, std::int64_t>;

enum class ErrorCode {
  invalid_argument,
  invalid_graph,
  disconnected_graph,
  singular_system,
  indefinite_operator,
  asymmetric_operator,
  infeasible_constraints,
  missing_coordinates,
  parse_error,
  config_error,
};

/// Snake-case name of the code, as used in reports and CLI messages.
std::string to_string(ErrorCode code);

/// Every failure raised by the library. The code identifies the category,
/// the message names the offending object.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Ordered list of distinct vertex ids with a fine-to-local lookup.
///
/// Ids are kept in the order given; most producers in this library emit
/// them sorted ascending so that local orderings are canonical.
class IndexSet {
 public:
  IndexSet() = default;

  /// Throws if an id repeats or lies outside [0, universe).
  IndexSet(std::vector<Index> ids, Index universe);

  static IndexSet range(Index n);
  static IndexSet sorted(std::vector<Index> ids, Index universe);

  Index size() const { return static_cast<Index>(ids_.size()); }
  bool empty() const { return ids_.empty(); }
  Index universe() const { return static_cast<Index>(local_.size()); }

  Index operator[](Index local) const { return ids_[static_cast<std::size_t>(local)]; }
  std::span<const Index> ids() const { return ids_; }

  /// Local position of a fine id, or -1 when absent.
  Index local(Index fine) const { return local_[static_cast<std::size_t>(fine)]; }
  bool contains(Index fine) const {
    return fine >= 0 && fine < universe() && local(fine) >= 0;
  }

  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }

  /// Fine ids of the universe not in this set, ascending.
  IndexSet complement() const;

  bool operator==(const IndexSet& other) const { return ids_ == other.ids_; }

 private:
  std::vector<Index> ids_;
  std::vector<Index> local_;
};

/// Relative asymmetry max |A_ij - A_ji| / max(1, |A_ij|) over stored entries.
double asymmetry(const SparseMatrix& a);

/// Throws asymmetric_operator when asymmetry(a) exceeds tol.
void require_symmetric(const SparseMatrix& a, double tol, const std::string& what);

/// (A + A^T) / 2.
SparseMatrix symmetrize(const SparseMatrix& a);

/// Dense copy of a sparse matrix, for oracles and small blocks.
DenseMatrix to_dense(const SparseMatrix& a);

SparseMatrix from_triplets(Index rows, Index cols, const std::vector<Triplet>& t);

SparseMatrix identity(Index n);

}  // namespace msgr
