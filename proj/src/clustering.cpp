#include "msgr/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "msgr/random.hpp"

namespace msgr {

LocalLaplacian local_signed_laplacian(const WeightedGraph& graph, const IndexSet& subdomain) {
  if (subdomain.empty()) throw Error(ErrorCode::invalid_argument, "local laplacian: empty subdomain");
  const Index n = subdomain.size();
  LocalLaplacian out;
  out.l = DenseMatrix::Zero(n, n);
  out.d = Vector::Zero(n);
  for (Index a = 0; a < n; ++a) {
    for (const auto& [u, w] : graph.neighbors(subdomain[a])) {
      const Index b = subdomain.contains(u) ? subdomain.local(u) : -1;
      if (b < 0) continue;
      out.l(a, b) = -w;
      out.d[a] += std::abs(w);
    }
  }
  const double dmax = out.d.maxCoeff();
  const double eps_deg = dmax > 0 ? 1e-12 * dmax : 1.0;
  for (Index a = 0; a < n; ++a) {
    out.l(a, a) = out.d[a];
    if (out.d[a] == 0.0) {
      out.d[a] = eps_deg;
      out.isolated.push_back(a);
    }
  }
  return out;
}

SpectralEmbedding generalized_eigs(const DenseMatrix& l, const Vector& d, Index count) {
  const Index n = l.rows();
  if (l.cols() != n || d.size() != n) {
    throw Error(ErrorCode::invalid_argument, "generalized_eigs: dimension mismatch");
  }
  if (count < 1 || count > n) {
    throw Error(ErrorCode::invalid_argument,
                "generalized_eigs: requested " + std::to_string(count) + " pairs of a " +
                    std::to_string(n) + "-vertex subdomain");
  }
  if ((d.array() <= 0).any()) {
    throw Error(ErrorCode::invalid_argument, "generalized_eigs: D must be positive");
  }
  const Vector inv_sqrt = d.cwiseSqrt().cwiseInverse();
  DenseMatrix s = inv_sqrt.asDiagonal() * l * inv_sqrt.asDiagonal();
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(s);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::singular_system, "generalized_eigs: eigensolver did not converge");
  }
  SpectralEmbedding emb;
  emb.eigenvalues = eig.eigenvalues().head(count);
  emb.vectors = inv_sqrt.asDiagonal() * eig.eigenvectors().leftCols(count);
  for (Index c = 0; c < count; ++c) {
    Index arg = 0;
    for (Index r = 1; r < n; ++r) {
      if (std::abs(emb.vectors(r, c)) > std::abs(emb.vectors(arg, c)) * (1 + 1e-12)) arg = r;
    }
    if (emb.vectors(arg, c) < 0) emb.vectors.col(c) *= -1.0;
  }
  return emb;
}

DenseMatrix normalize_rows(const DenseMatrix& m) {
  DenseMatrix out = m;
  for (Index r = 0; r < out.rows(); ++r) {
    const double len = out.row(r).norm();
    if (len > 0) out.row(r) /= len;
  }
  return out;
}

namespace {

Index nearest(const DenseMatrix& points, Index row, const DenseMatrix& centers, double* dist2) {
  Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < centers.rows(); ++c) {
    const double dd = (points.row(row) - centers.row(c)).squaredNorm();
    if (dd < best_d) {
      best_d = dd;
      best = c;
    }
  }
  if (dist2) *dist2 = best_d;
  return best;
}

KMeansResult kmeans_once(const DenseMatrix& points, Index k, std::uint64_t seed,
                         const KMeansOptions& options) {
  const Index n = points.rows();
  KMeansResult res;
  res.labels.assign(static_cast<std::size_t>(n), 0);
  if (k == 1) {
    res.inertia = (points.rowwise() - points.colwise().mean()).squaredNorm();
    return res;
  }

  Rng rng(seed);
  DenseMatrix centers(k, points.cols());
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);
  Index first = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
  centers.row(0) = points.row(first);
  chosen[static_cast<std::size_t>(first)] = 1;
  Vector d2(n);
  for (Index r = 0; r < n; ++r) d2[r] = (points.row(r) - centers.row(0)).squaredNorm();
  for (Index c = 1; c < k; ++c) {
    const double total = d2.sum();
    Index pick = -1;
    if (total > 0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (Index r = 0; r < n; ++r) {
        acc += d2[r];
        if (acc > target && d2[r] > 0) {
          pick = r;
          break;
        }
      }
      if (pick < 0) {
        for (Index r = n - 1; r >= 0; --r) {
          if (d2[r] > 0) {
            pick = r;
            break;
          }
        }
      }
    } else {
      for (Index r = 0; r < n && pick < 0; ++r) {
        if (!chosen[static_cast<std::size_t>(r)]) pick = r;
      }
    }
    chosen[static_cast<std::size_t>(pick)] = 1;
    centers.row(c) = points.row(pick);
    for (Index r = 0; r < n; ++r) d2[r] = std::min(d2[r], (points.row(r) - centers.row(c)).squaredNorm());
  }

  std::vector<Index> count(static_cast<std::size_t>(k));
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 0; it < options.max_iterations; ++it) {
    res.iterations = it + 1;
    std::fill(count.begin(), count.end(), 0);
    for (Index r = 0; r < n; ++r) {
      res.labels[static_cast<std::size_t>(r)] = nearest(points, r, centers, nullptr);
      ++count[static_cast<std::size_t>(res.labels[static_cast<std::size_t>(r)])];
    }
    // Empty clusters take the farthest member of the largest cluster.
    for (Index c = 0; c < k; ++c) {
      if (count[static_cast<std::size_t>(c)] > 0) continue;
      const Index big = static_cast<Index>(std::max_element(count.begin(), count.end()) - count.begin());
      Index far = -1;
      double far_d = -1.0;
      for (Index r = 0; r < n; ++r) {
        if (res.labels[static_cast<std::size_t>(r)] != big) continue;
        const double dd = (points.row(r) - centers.row(big)).squaredNorm();
        if (dd > far_d) {
          far_d = dd;
          far = r;
        }
      }
      res.labels[static_cast<std::size_t>(far)] = c;
      --count[static_cast<std::size_t>(big)];
      count[static_cast<std::size_t>(c)] = 1;
      centers.row(c) = points.row(far);
      ++res.repairs;
    }
    centers.setZero();
    for (Index r = 0; r < n; ++r) centers.row(res.labels[static_cast<std::size_t>(r)]) += points.row(r);
    for (Index c = 0; c < k; ++c) centers.row(c) /= static_cast<double>(count[static_cast<std::size_t>(c)]);
    double inertia = 0.0;
    for (Index r = 0; r < n; ++r) {
      inertia += (points.row(r) - centers.row(res.labels[static_cast<std::size_t>(r)])).squaredNorm();
    }
    res.inertia = inertia;
    const bool converged = std::abs(previous - inertia) <= options.tolerance * std::max(inertia, 1e-300);
    previous = inertia;
    if (converged || inertia == 0.0) break;
  }

  // Canonical labels: ordered by the smallest row of each cluster.
  std::vector<Index> remap(static_cast<std::size_t>(k), -1);
  Index next = 0;
  for (Index r = 0; r < n; ++r) {
    auto& m = remap[static_cast<std::size_t>(res.labels[static_cast<std::size_t>(r)])];
    if (m < 0) m = next++;
  }
  for (auto& l : res.labels) l = remap[static_cast<std::size_t>(l)];
  return res;
}

}  // namespace

KMeansResult kmeans(const DenseMatrix& points, Index k, std::uint64_t seed,
                    const KMeansOptions& options) {
  const Index n = points.rows();
  if (k < 1 || k > n) {
    throw Error(ErrorCode::invalid_argument,
                "kmeans: cluster count " + std::to_string(k) + " not in [1, " + std::to_string(n) + "]");
  }
  KMeansResult best = kmeans_once(points, k, seed, options);
  for (int r = 1; r < options.restarts && k > 1; ++r) {
    KMeansResult next = kmeans_once(points, k, derive_seed(seed, static_cast<std::uint64_t>(r)), options);
    if (next.inertia < best.inertia) best = std::move(next);
  }
  return best;
}

Index merge_fragments(const DenseMatrix& l, std::vector<std::vector<Index>>& groups) {
  const Index n = l.rows();
  std::vector<Index> label(static_cast<std::size_t>(n), -1);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (Index v : groups[g]) label[static_cast<std::size_t>(v)] = static_cast<Index>(g);
  }
  Index moved = 0;
  std::vector<Index> piece(static_cast<std::size_t>(n));
  for (bool changed = true; changed;) {
    changed = false;
    // Connected pieces of every group, numbered in order of their smallest vertex.
    std::fill(piece.begin(), piece.end(), -1);
    std::vector<std::vector<Index>> pieces;
    for (Index s = 0; s < n; ++s) {
      if (piece[static_cast<std::size_t>(s)] >= 0) continue;
      const Index id = static_cast<Index>(pieces.size());
      pieces.emplace_back();
      std::vector<Index> stack{s};
      piece[static_cast<std::size_t>(s)] = id;
      while (!stack.empty()) {
        const Index v = stack.back();
        stack.pop_back();
        pieces.back().push_back(v);
        for (Index u = 0; u < n; ++u) {
          if (u == v || l(v, u) == 0.0 || piece[static_cast<std::size_t>(u)] >= 0) continue;
          if (label[static_cast<std::size_t>(u)] != label[static_cast<std::size_t>(v)]) continue;
          piece[static_cast<std::size_t>(u)] = id;
          stack.push_back(u);
        }
      }
    }
    std::vector<Index> largest(groups.size(), -1);
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      auto& best = largest[static_cast<std::size_t>(label[static_cast<std::size_t>(pieces[i][0])])];
      if (best < 0 || pieces[i].size() > pieces[static_cast<std::size_t>(best)].size()) best = static_cast<Index>(i);
    }
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      const Index own = label[static_cast<std::size_t>(pieces[i][0])];
      if (largest[static_cast<std::size_t>(own)] == static_cast<Index>(i)) continue;
      std::vector<double> shared(groups.size(), 0.0);
      for (Index v : pieces[i]) {
        for (Index u = 0; u < n; ++u) {
          const Index lu = label[static_cast<std::size_t>(u)];
          if (u != v && lu != own) shared[static_cast<std::size_t>(lu)] += std::abs(l(v, u));
        }
      }
      const auto target = std::max_element(shared.begin(), shared.end());
      if (*target == 0.0) continue;
      for (Index v : pieces[i]) label[static_cast<std::size_t>(v)] = static_cast<Index>(target - shared.begin());
      moved += static_cast<Index>(pieces[i].size());
      changed = true;
      break;
    }
  }
  for (auto& g : groups) g.clear();
  for (Index v = 0; v < n; ++v) groups[static_cast<std::size_t>(label[static_cast<std::size_t>(v)])].push_back(v);
  return moved;
}

std::vector<std::vector<Index>> kmeans_embed(const SpectralEmbedding& emb, Index count,
                                             std::uint64_t seed, int* repairs,
                                             const KMeansOptions& options) {
  if (count < 1) throw Error(ErrorCode::invalid_argument, "kmeans_embed: need at least one cluster");
  const DenseMatrix rows = normalize_rows(emb.vectors);
  const KMeansResult km = kmeans(rows, count, seed, options);
  if (repairs) *repairs = km.repairs;
  std::vector<std::vector<Index>> groups(static_cast<std::size_t>(count));
  for (Index r = 0; r < rows.rows(); ++r) groups[static_cast<std::size_t>(km.labels[static_cast<std::size_t>(r)])].push_back(r);
  return groups;
}

Index select_centroid(std::span<const Index> members, const DenseMatrix& coords) {
  if (members.empty()) throw Error(ErrorCode::invalid_argument, "select_centroid: empty aggregate");
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(coords.cols());
  for (Index v : members) mean += coords.row(v);
  mean /= static_cast<double>(members.size());
  Index best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index v : members) {
    const double dd = (coords.row(v) - mean).squaredNorm();
    if (dd < best_d || (dd == best_d && v < best)) {
      best_d = dd;
      best = v;
    }
  }
  return best;
}

void ClusterSet::finalize() {
  aggregate_of.assign(static_cast<std::size_t>(num_vertices), -1);
  std::vector<char> is_centroid(static_cast<std::size_t>(num_vertices), 0);
  Index max_sub = -1;
  for (Index c = 0; c < size(); ++c) {
    const auto& a = aggregates[static_cast<std::size_t>(c)];
    if (a.members.empty()) {
      throw Error(ErrorCode::invalid_argument, "clusters: empty aggregate " + std::to_string(c));
    }
    if (a.subdomain < max_sub) {
      throw Error(ErrorCode::invalid_argument, "clusters: aggregates not ordered by subdomain");
    }
    max_sub = a.subdomain;
    bool has_centroid = false;
    for (Index v : a.members) {
      if (v < 0 || v >= num_vertices) throw Error(ErrorCode::invalid_argument, "clusters: vertex out of range");
      if (aggregate_of[static_cast<std::size_t>(v)] >= 0) {
        throw Error(ErrorCode::invalid_argument,
                    "clusters: vertex " + std::to_string(v) + " belongs to two aggregates");
      }
      aggregate_of[static_cast<std::size_t>(v)] = c;
      has_centroid = has_centroid || v == a.centroid;
    }
    if (!has_centroid) {
      throw Error(ErrorCode::invalid_argument, "clusters: centroid outside aggregate " + std::to_string(c));
    }
    if (is_centroid[static_cast<std::size_t>(a.centroid)]) {
      throw Error(ErrorCode::invalid_argument, "clusters: duplicated centroid " + std::to_string(a.centroid));
    }
    is_centroid[static_cast<std::size_t>(a.centroid)] = 1;
  }
  for (Index v = 0; v < num_vertices; ++v) {
    if (aggregate_of[static_cast<std::size_t>(v)] < 0) {
      throw Error(ErrorCode::invalid_argument, "clusters: vertex " + std::to_string(v) + " not covered");
    }
  }
  const Index subs = max_sub + 1;
  first.assign(static_cast<std::size_t>(subs) + 1, 0);
  for (const auto& a : aggregates) ++first[static_cast<std::size_t>(a.subdomain) + 1];
  for (std::size_t k = 1; k < first.size(); ++k) first[k] += first[k - 1];
}

ClusterSet cluster_subdomains(const WeightedGraph& graph, const Partition& partition,
                              const ClusterOptions& options, std::uint64_t seed) {
  const Index nsub = partition.num_subdomains();
  if (options.per_subdomain.empty() ||
      (options.per_subdomain.size() != 1 && static_cast<Index>(options.per_subdomain.size()) != nsub)) {
    throw Error(ErrorCode::invalid_argument,
                "clustering: need one cluster count or one per subdomain");
  }
  ClusterSet out;
  out.num_vertices = graph.num_vertices();
  for (Index k = 0; k < nsub; ++k) {
    const IndexSet& given = partition.subdomains[static_cast<std::size_t>(k)];
    const IndexSet sub = IndexSet::sorted({given.begin(), given.end()}, given.universe());
    Index m = options.per_subdomain.size() == 1 ? options.per_subdomain[0]
                                                : options.per_subdomain[static_cast<std::size_t>(k)];
    if (m < 1) throw Error(ErrorCode::invalid_argument, "clustering: cluster count must be >= 1");
    if (m > sub.size()) {
      out.reports.push_back("subdomain " + std::to_string(k) + ": M reduced from " + std::to_string(m) +
                            " to its size " + std::to_string(sub.size()));
      m = sub.size();
    }
    const LocalLaplacian lap = local_signed_laplacian(graph, sub);
    if (!lap.isolated.empty()) {
      out.reports.push_back("subdomain " + std::to_string(k) + ": " + std::to_string(lap.isolated.size()) +
                            " isolated vertices given eps_deg");
    }
    SpectralEmbedding emb = generalized_eigs(lap.l, lap.d, m);
    emb.subdomain = k;
    int repairs = 0;
    auto groups = kmeans_embed(emb, m, derive_seed(seed, static_cast<std::uint64_t>(k)), &repairs, options.kmeans);
    if (repairs > 0) {
      out.reports.push_back("subdomain " + std::to_string(k) + ": " + std::to_string(repairs) +
                            " empty k-means clusters repaired");
    }
    if (options.merge_fragments) {
      const Index moved = merge_fragments(lap.l, groups);
      if (moved > 0) {
        out.reports.push_back("subdomain " + std::to_string(k) + ": " + std::to_string(moved) +
                              " vertices of disconnected clusters merged into neighbours");
      }
    }
    const bool physical = options.centroid_rule == CentroidRule::physical && graph.has_coords();
    if (options.centroid_rule == CentroidRule::physical && !graph.has_coords() && k == 0) {
      out.reports.push_back("no coordinates: centroids chosen in embedding space");
    }
    const DenseMatrix rows = normalize_rows(emb.vectors);
    for (Index r = 0; r < m; ++r) {
      const auto& local = groups[static_cast<std::size_t>(r)];
      Aggregate agg;
      agg.subdomain = k;
      agg.local = r;
      for (Index a : local) agg.members.push_back(sub[a]);
      if (physical) {
        agg.centroid = select_centroid(agg.members, graph.coords());
      } else {
        // Embedding-space medoid relative to the mean of the member rows.
        DenseMatrix pts(static_cast<Index>(local.size()), rows.cols());
        for (std::size_t i = 0; i < local.size(); ++i) pts.row(static_cast<Index>(i)) = rows.row(local[i]);
        std::vector<Index> loc(local.size());
        std::iota(loc.begin(), loc.end(), Index{0});
        const Index pick = select_centroid(loc, pts);
        agg.centroid = sub[local[static_cast<std::size_t>(pick)]];
      }
      out.aggregates.push_back(std::move(agg));
    }
    out.embeddings.push_back(std::move(emb));
  }
  out.finalize();
  return out;
}

void write_clusters(std::ostream& out, const ClusterSet& clusters) {
  for (Index v = 0; v < clusters.num_vertices; ++v) {
    const auto& a = clusters.aggregates[static_cast<std::size_t>(clusters.aggregate_of[static_cast<std::size_t>(v)])];
    out << v << ' ' << a.subdomain << ' ' << a.local << ' ' << (a.centroid == v ? 1 : 0) << '\n';
  }
}

ClusterSet read_clusters(std::istream& in) {
  std::map<std::pair<Index, Index>, Aggregate> byKey;
  std::string line;
  Index n = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '%' || line[0] == '#') continue;
    std::istringstream ss(line);
    Index v, k, r, c;
    if (!(ss >> v >> k >> r >> c)) throw Error(ErrorCode::parse_error, "clusters: bad line '" + line + "'");
    auto& a = byKey[{k, r}];
    a.subdomain = k;
    a.local = r;
    a.members.push_back(v);
    if (c) a.centroid = v;
    n = std::max(n, v + 1);
  }
  ClusterSet cs;
  cs.num_vertices = n;
  for (auto& [key, a] : byKey) {
    std::sort(a.members.begin(), a.members.end());
    cs.aggregates.push_back(std::move(a));
  }
  cs.finalize();
  return cs;
}

}  // namespace msgr
