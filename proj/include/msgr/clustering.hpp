#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "msgr/partition.hpp"

namespace msgr {

struct LocalLaplacian {
  DenseMatrix l;
  /// Diagonal of D; isolated vertices carry eps_deg.
  Vector d;
  /// Local positions of isolated vertices (reported, not an error).
  std::vector<Index> isolated;
};

/// L = D - W on the edges with both endpoints in `subdomain`, in the local
/// ordering of the index set. d_i = sum_j |w_ij|; zero degrees are replaced
/// by eps_deg = 1e-12 * max_i d_i (or 1 when every degree vanishes).
LocalLaplacian local_signed_laplacian(const WeightedGraph& graph, const IndexSet& subdomain);

struct SpectralEmbedding {
  Index subdomain = 0;
  /// Ascending.
  Vector eigenvalues;
  /// n_k x M_k, columns D-orthonormal.
  DenseMatrix vectors;
};

/// The count smallest pairs of L phi = lambda D phi, via the symmetric
/// matrix D^{-1/2} L D^{-1/2}. Eigenvector signs are fixed so that the entry
/// of largest magnitude (first on ties) is positive.
SpectralEmbedding generalized_eigs(const DenseMatrix& l, const Vector& d, Index count);

struct KMeansOptions {
  int max_iterations = 300;
  double tolerance = 1e-8;
  /// Independent k-means++ starts; the run with the lowest inertia wins.
  int restarts = 10;
};

struct KMeansResult {
  /// Cluster label per row, each label in [0, k) used at least once.
  std::vector<Index> labels;
  double inertia = 0.0;
  int iterations = 0;
  /// Empty clusters fixed by splitting the largest cluster.
  int repairs = 0;
};

/// k-means++ seeding then Lloyd iterations on the rows of `points`, repeated
/// options.restarts times with seeds derived from `seed`.
KMeansResult kmeans(const DenseMatrix& points, Index k, std::uint64_t seed,
                    const KMeansOptions& options = {});

/// Rows scaled to unit Euclidean length; zero rows stay zero.
DenseMatrix normalize_rows(const DenseMatrix& m);

/// k-means on the normalized embedding rows; aggregates hold local positions.
std::vector<std::vector<Index>> kmeans_embed(const SpectralEmbedding& emb, Index count,
                                             std::uint64_t seed, int* repairs = nullptr,
                                             const KMeansOptions& options = {});

/// Moves every piece of a group that is not connected (through the nonzero
/// off-diagonal entries of `l`) to its group's largest piece into the
/// neighbouring group it shares the most |l_ij| with. Pieces with no
/// neighbouring group stay. Returns the number of vertices moved.
Index merge_fragments(const DenseMatrix& l, std::vector<std::vector<Index>>& groups);

enum class CentroidRule {
  /// Member nearest to the mean of the member coordinates.
  physical,
  /// Member nearest (in embedding space) to the mean of the members' rows.
  spectral,
};

/// Centroid of one aggregate; ties go to the smallest vertex id.
Index select_centroid(std::span<const Index> members, const DenseMatrix& coords);

struct ClusterOptions {
  /// Clusters per subdomain; a single entry applies to every subdomain.
  std::vector<Index> per_subdomain{1};
  CentroidRule centroid_rule = CentroidRule::physical;
  KMeansOptions kmeans;
  /// Reattach disconnected pieces of k-means clusters to a neighbouring cluster.
  bool merge_fragments = true;
};

struct Aggregate {
  Index subdomain = 0;
  Index local = 0;
  /// Fine vertex ids, ascending.
  std::vector<Index> members;
  Index centroid = 0;
};

/// Aggregates ordered by (subdomain, local index); the position in
/// `aggregates` is the coarse column index.
struct ClusterSet {
  Index num_vertices = 0;
  std::vector<Aggregate> aggregates;
  /// aggregate_of[v] is the coarse index of the aggregate containing v.
  std::vector<Index> aggregate_of;
  /// first[k] .. first[k+1] are the aggregates of subdomain k.
  std::vector<Index> first;
  std::vector<SpectralEmbedding> embeddings;
  /// Human-readable notes: eps_deg fixes, k-means repairs, centroid fallbacks.
  std::vector<std::string> reports;

  Index size() const { return static_cast<Index>(aggregates.size()); }
  Index num_subdomains() const { return static_cast<Index>(first.size()) - 1; }
  /// Rebuilds aggregate_of/first and validates the partition-of-unity
  /// structure. Throws on overlap, gaps or duplicated centroids.
  void finalize();
};

/// Local spectral clustering of every subdomain followed by centroid selection.
ClusterSet cluster_subdomains(const WeightedGraph& graph, const Partition& partition,
                              const ClusterOptions& options, std::uint64_t seed);

/// Lines "vertex subdomain aggregate is_centroid".
void write_clusters(std::ostream& out, const ClusterSet& clusters);
ClusterSet read_clusters(std::istream& in);

}  // namespace msgr
