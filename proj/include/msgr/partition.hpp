#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "msgr/graph.hpp"

namespace msgr {

enum class OversampleMode {
  /// Add every vertex within distance delta_H of some vertex of the subdomain.
  vertex,
  /// Add every whole subdomain that contains such a vertex.
  subdomain_closure,
};

struct PartitionOptions {
  double balance_tol = 0.1;
  /// Kernighan-Lin style boundary sweeps after bisection.
  int refine_sweeps = 4;
};

/// Disjoint cover of the vertices by subdomains plus their oversampled
/// extensions (equal to the subdomains until oversample() fills them).
struct Partition {
  Index num_vertices = 0;
  std::vector<Index> assignment;
  std::vector<IndexSet> subdomains;
  std::vector<IndexSet> oversampled;
  /// Distance or hop count used for `oversampled`; negative when unset.
  double delta = -1.0;
  /// Subdomains whose induced subgraph is disconnected.
  std::vector<Index> disconnected;

  Index num_subdomains() const { return static_cast<Index>(subdomains.size()); }
  Index min_size() const;
  Index max_size() const;
  double mean_size() const;
  /// max over vertices of the number of oversampled sets containing it.
  Index max_overlap() const;

  /// Rebuilds subdomains from an assignment vector; oversampled = subdomains.
  static Partition from_assignment(std::vector<Index> assignment, Index num_subdomains);
};

/// Recursive bisection (coordinate sort along the widest extent, or BFS
/// distance from a pseudo-peripheral vertex without coordinates) followed
/// by greedy |w|-edge-cut refinement under the balance constraint.
/// Throws disconnected_graph naming the components.
Partition partition_balanced(const WeightedGraph& graph, Index num_subdomains,
                             std::uint64_t seed, const PartitionOptions& options = {});

/// Euclidean oversampling with radius delta_h.
Partition oversample(const WeightedGraph& graph, Partition partition, double delta_h,
                     OversampleMode mode = OversampleMode::vertex);

/// Oversampling by `hops` breadth-first layers.
Partition graph_distance_oversample(const WeightedGraph& graph, Partition partition,
                                    Index hops);

/// Lines "vertex subdomain".
void write_partition(std::ostream& out, const Partition& partition);
Partition read_partition(std::istream& in);

}  // namespace msgr
