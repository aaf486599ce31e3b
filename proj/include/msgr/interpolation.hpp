#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "msgr/clustering.hpp"

namespace msgr {

enum class ProlongationKind { cf_global, cf_local, mc_global, mc_local };

std::string to_string(ProlongationKind kind);
ProlongationKind parse_prolongation_kind(const std::string& name);
bool is_local(ProlongationKind kind);
bool is_cf(ProlongationKind kind);

struct ColumnInfo {
  Index subdomain = 0;
  Index aggregate = 0;  // local index r within the subdomain
  Index centroid = -1;  // CF kinds only
};

struct Prolongation {
  ProlongationKind kind = ProlongationKind::cf_global;
  SparseMatrix p;
  std::vector<ColumnInfo> columns;
  double delta = -1.0;
  /// MC kinds: coarse indices of the aggregates constrained in the local
  /// problem of each column's subdomain (all aggregates for MC-global).
  std::vector<std::vector<Index>> constrained;
  /// Free-form diagnostics (for example the size of removed boundary rings).
  std::vector<std::string> reports;

  Index rows() const { return p.rows(); }
  Index cols() const { return p.cols(); }
};

struct CFSplit {
  IndexSet coarse;
  IndexSet fine;
};

/// C = centroids, F = complement.
CFSplit cf_split(const ClusterSet& clusters);

/// P = [-A_FF^{-1} A_FC; I] in native vertex ordering.
Prolongation cf_ideal_global(const SparseMatrix& a, const ClusterSet& clusters);

/// Ideal interpolation restricted to each oversampled region.
Prolongation cf_ideal_local(const SparseMatrix& a, const ClusterSet& clusters,
                            const Partition& partition);

enum class PartialAggregatePolicy {
  /// Aggregates cut by the oversampled boundary carry no constraint.
  unconstrained,
  /// Constrain the mean over the part inside, renormalized by its size.
  constrain_intersection,
};

/// Mean-value constraint rows, one per aggregate in `scope`. scope lists
/// coarse aggregate indices; an empty scope means every aggregate.
/// Row values are 1/|A| on the members.
SparseMatrix build_constraints(const ClusterSet& clusters, const std::vector<Index>& scope = {});

/// Energy minimizers under S psi = e_(k,r) over every aggregate, from one
/// factorization of the saddle-point matrix [[A, S^T], [S, 0]].
Prolongation mc_global(const SparseMatrix& a, const ClusterSet& clusters);

/// Local energy minimizers on each oversampled region with zero Dirichlet
/// data on its boundary ring (vertices with a neighbour outside).
Prolongation mc_local(const SparseMatrix& a, const ClusterSet& clusters, const Partition& partition,
                      PartialAggregatePolicy policy = PartialAggregatePolicy::unconstrained);

Prolongation build_prolongation(ProlongationKind kind, const SparseMatrix& a,
                                const ClusterSet& clusters, const Partition& partition);

/// One column of a prolongation before assembly.
struct ProlongationColumn {
  ColumnInfo info;
  /// (fine row, value) pairs.
  std::vector<std::pair<Index, double>> entries;
};

/// Orders columns by (subdomain, aggregate); duplicate keys are an error.
Prolongation assemble_prolongation(ProlongationKind kind, Index rows,
                                   std::vector<ProlongationColumn> columns);

/// Metadata sidecar lines "col k r centroid".
void write_column_info(std::ostream& out, const Prolongation& p);

}  // namespace msgr
