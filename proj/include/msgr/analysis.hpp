#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "msgr/clustering.hpp"

namespace msgr {

struct AggregateContrast {
  /// max |w| / min |w| over edges with both endpoints in the aggregate.
  double weight_ratio = 1.0;
  /// max d / min d over the members, with d taken from the whole graph.
  double degree_ratio = 1.0;
  Index internal_edges = 0;
};

/// Per-aggregate contrast, in coarse column order. Aggregates without an
/// internal edge get ratio 1 and a line in `reports` (when given).
std::vector<AggregateContrast> cluster_contrast(const WeightedGraph& graph, const ClusterSet& clusters,
                                                std::vector<std::string>* reports = nullptr);

/// Largest pairwise Euclidean distance among member coordinates.
double diameter(const DenseMatrix& coords, std::span<const Index> members);

/// Per-aggregate diameter in coarse column order. Throws
/// missing_coordinates when the graph has no geometry.
std::vector<double> cluster_diameter(const WeightedGraph& graph, const ClusterSet& clusters);

/// sqrt(sum_i f_i^2 / d_i) with graph degrees; zero degrees use the same
/// eps_deg floor as the local Laplacians.
double dual_norm_f(const Vector& f, const WeightedGraph& graph);

struct AggregateReport {
  Index subdomain = 0;
  Index aggregate = 0;
  Index size = 0;
  double h = 0.0;
  AggregateContrast contrast;
};

struct ConvergenceReport {
  std::vector<AggregateReport> aggregates;
  /// max over aggregates; NaN when the graph has no coordinates.
  double h = 0.0;
  double c_ratio = 1.0;
  double c_ratio_degree = 1.0;
  double f_dual = 0.0;
  /// ||u - u_ms||_A and ||u - u_ms||_D.
  double error_a = 0.0;
  double error_d = 0.0;
  /// error_a / (H sqrt(C_ratio) ||f||_{D^-1}).
  double c_fit = 0.0;
  /// error_d / (H sqrt(C_ratio) error_a).
  double c_fit_d = 0.0;
  /// ||P^T A (u - u_ms)||_inf and the same divided by ||f||_inf.
  double orthogonality = 0.0;
  double orthogonality_relative = 0.0;
  /// Largest number of oversampled regions sharing one vertex.
  Index max_overlap = 1;
  std::vector<std::string> notes;
};

struct RunArtifacts {
  const WeightedGraph* graph = nullptr;
  const ClusterSet* clusters = nullptr;
  const Partition* partition = nullptr;
  SparseMatrix a;
  Vector f;
  SparseMatrix p;
  Vector u;
  Vector u_ms;
};

ConvergenceReport verify_bound(const RunArtifacts& run);

/// One row per aggregate followed by a summary row.
void write_report_csv(std::ostream& out, const ConvergenceReport& report);

}  // namespace msgr
