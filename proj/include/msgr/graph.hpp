#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "msgr/types.hpp"

namespace msgr {

struct Edge {
  Index i = 0;
  Index j = 0;
  double w = 0.0;
};

/// Robin data on a boundary vertex: adds alpha to the diagonal and
/// alpha * value to the right-hand side.
struct RobinCondition {
  Index vertex = 0;
  double alpha = 0.0;
  double value = 0.0;
};

struct DirichletCondition {
  Index vertex = 0;
  double value = 0.0;
};

/// Undirected graph with signed edge weights, optional coordinates and
/// boundary data. Edges are stored once with i < j.
class WeightedGraph {
 public:
  WeightedGraph() = default;

  /// coords is n x d with d in {2, 3}, or an empty matrix when the graph
  /// has no geometry. Edges with i > j are flipped. Throws invalid_graph on
  /// self loops, duplicates or out-of-range ids.
  WeightedGraph(Index n, DenseMatrix coords, std::vector<Edge> edges);

  Index num_vertices() const { return n_; }
  Index num_edges() const { return static_cast<Index>(edges_.size()); }
  int dim() const { return static_cast<int>(coords_.cols()); }
  bool has_coords() const { return coords_.size() > 0; }

  const DenseMatrix& coords() const { return coords_; }
  Eigen::VectorXd point(Index v) const { return coords_.row(v).transpose(); }
  const std::vector<Edge>& edges() const { return edges_; }

  /// Neighbours of v with the weight of the connecting edge, ascending ids.
  std::span<const std::pair<Index, double>> neighbors(Index v) const {
    const auto b = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v)]);
    const auto e = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v) + 1]);
    return std::span<const std::pair<Index, double>>(adjacency_).subspan(b, e - b);
  }

  /// d_i = sum_j |w_ij|.
  Vector degrees() const;

  bool all_positive() const;

  std::optional<Vector> capacity;
  std::vector<RobinCondition> robin;
  std::vector<DirichletCondition> dirichlet;
  /// Point source terms b_i added to the right-hand side.
  Vector source;

  /// Connected components as vertex-to-component labels; returns count.
  Index components(std::vector<Index>& label) const;

  /// Graph on the vertices of `keep`, relabelled to local ids. Coordinates,
  /// capacity and source are carried over; boundary data is dropped.
  WeightedGraph induced(const IndexSet& keep) const;

 private:
  void build_adjacency();

  Index n_ = 0;
  DenseMatrix coords_;
  std::vector<Edge> edges_;
  std::vector<Index> offsets_;
  std::vector<std::pair<Index, double>> adjacency_;
};

/// L_ii = sum_j |w_ij|, L_ij = -w_ij.
SparseMatrix assemble_signed_laplacian(const WeightedGraph& graph);

struct BoundarySystem {
  SparseMatrix a;
  Vector f;
};

/// A = L + diag(alpha), f_i = alpha_i g_i (+ graph.source when present).
/// Throws singular_system when the graph has neither Robin nor Dirichlet
/// data, since the pure Neumann Laplacian has constants in its kernel.
BoundarySystem apply_boundary(const SparseMatrix& laplacian, const WeightedGraph& graph);

/// Operator restricted to the vertices that are not Dirichlet-constrained.
struct ReducedSystem {
  SparseMatrix a;
  Vector f;
  IndexSet free;
  /// Full-length vector holding the prescribed values (zero on free rows).
  Vector prescribed;

  /// Scatter a free-vertex vector back to full length.
  Vector expand(const Vector& u_free) const;
};

ReducedSystem eliminate_dirichlet(const SparseMatrix& a, const Vector& f,
                                  const std::vector<DirichletCondition>& dirichlet);

/// Entry-exact extraction of A(rows, cols) in local ordering.
SparseMatrix restrict_submatrix(const SparseMatrix& a, const IndexSet& rows,
                                const IndexSet& cols);

/// ||v||_D with d_i taken as sum_j |a_ij| over off-diagonal entries of a.
double norm_D(const Vector& v, const SparseMatrix& a);
/// ||v||_D with d_i = sum_j |w_ij| from the graph.
double norm_D(const Vector& v, const WeightedGraph& graph);
/// sqrt(v^T A v); throws indefinite_operator when the form is negative
/// beyond 1e-12 ||v||^2.
double norm_A(const Vector& v, const SparseMatrix& a);
/// sqrt(sum_{ij in E} w_ij (v_i - v_j)^2).
double norm_L(const Vector& v, const WeightedGraph& graph);

}  // namespace msgr
