#pragma once

#include <iosfwd>
#include <string>

#include "msgr/graph.hpp"

namespace msgr::io {

/// Line-oriented graph format:
///
///     n d
///     x y [z]            (n lines, omitted when d = 0)
///     i j w              (edges, until the first section header)
///     #capacity          (n lines, one c_i each)
///     #robin             (lines "i alpha g")
///     #dirichlet         (lines "i g")
///     #source            (lines "i b")
///
/// Blank lines and lines starting with '%' are ignored. A section header may
/// carry its first record on the same line ("#robin 3 1.0 0.5").
WeightedGraph read_graph(std::istream& in);
WeightedGraph read_graph_file(const std::string& path);
void write_graph(std::ostream& out, const WeightedGraph& graph);
void write_graph_file(const std::string& path, const WeightedGraph& graph);

/// Matrix Market coordinate real, general or symmetric.
SparseMatrix read_matrix_market(std::istream& in);
SparseMatrix read_matrix_market_file(const std::string& path);
/// Writes "general" storage with 17 significant digits.
void write_matrix_market(std::ostream& out, const SparseMatrix& a);
void write_matrix_market_file(const std::string& path, const SparseMatrix& a);

/// Operator-only graph: edges from the strict upper triangle with
/// w_ij = -a_ij, no coordinates. Rejects non-square or asymmetric input.
WeightedGraph graph_from_operator(const SparseMatrix& a);

/// One value per line.
Vector read_vector(std::istream& in);
Vector read_vector_file(const std::string& path);
void write_vector(std::ostream& out, const Vector& v);
void write_vector_file(const std::string& path, const Vector& v);

/// Shortest round-trip representation used for every numeric output.
std::string format_double(double x);

}  // namespace msgr::io
