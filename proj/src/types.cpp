#include "msgr/types.hpp"

#include <algorithm>
#include <cmath>

namespace msgr {

std::string to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::invalid_graph: return "invalid_graph";
    case ErrorCode::disconnected_graph: return "disconnected_graph";
    case ErrorCode::singular_system: return "singular_system";
    case ErrorCode::indefinite_operator: return "indefinite_operator";
    case ErrorCode::asymmetric_operator: return "asymmetric_operator";
    case ErrorCode::infeasible_constraints: return "infeasible_constraints";
    case ErrorCode::missing_coordinates: return "missing_coordinates";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::config_error: return "config_error";
  }
  return "unknown";
}

IndexSet::IndexSet(std::vector<Index> ids, Index universe)
    : ids_(std::move(ids)), local_(static_cast<std::size_t>(universe), -1) {
  for (std::size_t k = 0; k < ids_.size(); ++k) {
    const Index v = ids_[k];
    if (v < 0 || v >= universe) {
      throw Error(ErrorCode::invalid_argument,
                  "index set: id " + std::to_string(v) + " outside [0, " +
                      std::to_string(universe) + ")");
    }
    auto& slot = local_[static_cast<std::size_t>(v)];
    if (slot >= 0) {
      throw Error(ErrorCode::invalid_argument,
                  "index set: duplicate id " + std::to_string(v));
    }
    slot = static_cast<Index>(k);
  }
}

IndexSet IndexSet::range(Index n) {
  std::vector<Index> ids(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
  return IndexSet(std::move(ids), n);
}

IndexSet IndexSet::sorted(std::vector<Index> ids, Index universe) {
  std::sort(ids.begin(), ids.end());
  return IndexSet(std::move(ids), universe);
}

IndexSet IndexSet::complement() const {
  std::vector<Index> out;
  out.reserve(local_.size() - ids_.size());
  for (Index v = 0; v < universe(); ++v) {
    if (local(v) < 0) out.push_back(v);
  }
  return IndexSet(std::move(out), universe());
}

double asymmetry(const SparseMatrix& a) {
  if (a.rows() != a.cols()) return INFINITY;
  const SparseMatrix t = a.transpose();
  const SparseMatrix diff = a - t;
  double worst = 0.0;
  for (Index c = 0; c < diff.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(diff, c); it; ++it) {
      const double scale = std::max(1.0, std::abs(a.coeff(it.row(), it.col())));
      worst = std::max(worst, std::abs(it.value()) / scale);
    }
  }
  return worst;
}

void require_symmetric(const SparseMatrix& a, double tol, const std::string& what) {
  const double asym = asymmetry(a);
  if (!(asym <= tol)) {
    throw Error(ErrorCode::asymmetric_operator,
                what + ": relative asymmetry " + std::to_string(asym) +
                    " exceeds " + std::to_string(tol));
  }
}

SparseMatrix symmetrize(const SparseMatrix& a) {
  SparseMatrix t = a.transpose();
  SparseMatrix s = 0.5 * (a + t);
  s.makeCompressed();
  return s;
}

DenseMatrix to_dense(const SparseMatrix& a) { return DenseMatrix(a); }

SparseMatrix from_triplets(Index rows, Index cols, const std::vector<Triplet>& t) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

SparseMatrix identity(Index n) {
  SparseMatrix m(n, n);
  m.setIdentity();
  m.makeCompressed();
  return m;
}

}  // namespace msgr
