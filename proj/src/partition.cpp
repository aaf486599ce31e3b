#include "msgr/partition.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "msgr/random.hpp"

namespace msgr {

Index Partition::min_size() const {
  Index m = std::numeric_limits<Index>::max();
  for (const auto& s : subdomains) m = std::min(m, s.size());
  return subdomains.empty() ? 0 : m;
}

Index Partition::max_size() const {
  Index m = 0;
  for (const auto& s : subdomains) m = std::max(m, s.size());
  return m;
}

double Partition::mean_size() const {
  return subdomains.empty() ? 0.0
                            : static_cast<double>(num_vertices) / static_cast<double>(subdomains.size());
}

Index Partition::max_overlap() const {
  std::vector<Index> count(static_cast<std::size_t>(num_vertices), 0);
  for (const auto& s : oversampled) {
    for (Index v : s) ++count[static_cast<std::size_t>(v)];
  }
  return count.empty() ? 0 : *std::max_element(count.begin(), count.end());
}

Partition Partition::from_assignment(std::vector<Index> assignment, Index num_subdomains) {
  const Index n = static_cast<Index>(assignment.size());
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(num_subdomains));
  for (Index v = 0; v < n; ++v) {
    const Index k = assignment[static_cast<std::size_t>(v)];
    if (k < 0 || k >= num_subdomains) {
      throw Error(ErrorCode::invalid_argument,
                  "partition: vertex " + std::to_string(v) + " has invalid subdomain " + std::to_string(k));
    }
    members[static_cast<std::size_t>(k)].push_back(v);
  }
  Partition p;
  p.num_vertices = n;
  p.assignment = std::move(assignment);
  for (auto& m : members) {
    if (m.empty()) throw Error(ErrorCode::invalid_argument, "partition: empty subdomain");
    p.subdomains.emplace_back(std::move(m), n);
  }
  p.oversampled = p.subdomains;
  return p;
}

namespace {

/// BFS hop distances inside `members` (others are walls) from `start`.
std::vector<Index> bfs_within(const WeightedGraph& g, const std::vector<char>& inside, Index start) {
  std::vector<Index> dist(static_cast<std::size_t>(g.num_vertices()), -1);
  std::deque<Index> queue{start};
  dist[static_cast<std::size_t>(start)] = 0;
  while (!queue.empty()) {
    const Index v = queue.front();
    queue.pop_front();
    for (const auto& [u, w] : g.neighbors(v)) {
      if (inside[static_cast<std::size_t>(u)] && dist[static_cast<std::size_t>(u)] < 0) {
        dist[static_cast<std::size_t>(u)] = dist[static_cast<std::size_t>(v)] + 1;
        queue.push_back(u);
      }
    }
  }
  return dist;
}

class Bisector {
 public:
  Bisector(const WeightedGraph& g, std::uint64_t seed, std::vector<Index>& assignment)
      : g_(g), rng_(seed), assignment_(assignment),
        inside_(static_cast<std::size_t>(g.num_vertices()), 0) {}

  void split(std::vector<Index> vertices, Index parts, Index first) {
    if (parts == 1) {
      for (Index v : vertices) assignment_[static_cast<std::size_t>(v)] = first;
      return;
    }
    const Index left_parts = parts / 2;
    const auto n = static_cast<Index>(vertices.size());
    const Index left_size = (n * left_parts + parts / 2) / parts;
    order(vertices);
    std::vector<Index> left(vertices.begin(), vertices.begin() + left_size);
    std::vector<Index> right(vertices.begin() + left_size, vertices.end());
    split(std::move(left), left_parts, first);
    split(std::move(right), parts - left_parts, first + left_parts);
  }

 private:
  void order(std::vector<Index>& vertices) {
    if (g_.has_coords()) {
      const DenseMatrix& x = g_.coords();
      int axis = 0;
      double widest = -1.0;
      for (int c = 0; c < g_.dim(); ++c) {
        double lo = INFINITY, hi = -INFINITY;
        for (Index v : vertices) {
          lo = std::min(lo, x(v, c));
          hi = std::max(hi, x(v, c));
        }
        if (hi - lo > widest + 1e-12) {
          widest = hi - lo;
          axis = c;
        }
      }
      std::sort(vertices.begin(), vertices.end(), [&](Index a, Index b) {
        for (int c = 0; c < g_.dim(); ++c) {
          const int cc = (axis + c) % g_.dim();
          if (x(a, cc) != x(b, cc)) return x(a, cc) < x(b, cc);
        }
        return a < b;
      });
      return;
    }
    // Pseudo-peripheral start: two BFS sweeps from a seeded vertex.
    for (Index v : vertices) inside_[static_cast<std::size_t>(v)] = 1;
    Index start = vertices[rng_.below(vertices.size())];
    std::vector<Index> dist;
    for (int sweep = 0; sweep < 2; ++sweep) {
      dist = bfs_within(g_, inside_, start);
      Index far = start;
      for (Index v : vertices) {
        if (dist[static_cast<std::size_t>(v)] > dist[static_cast<std::size_t>(far)]) far = v;
      }
      start = far;
    }
    dist = bfs_within(g_, inside_, start);
    for (Index v : vertices) inside_[static_cast<std::size_t>(v)] = 0;
    auto key = [&dist](Index v) {
      const Index d = dist[static_cast<std::size_t>(v)];
      return d < 0 ? std::numeric_limits<Index>::max() : d;
    };
    std::sort(vertices.begin(), vertices.end(), [&](Index a, Index b) {
      return key(a) != key(b) ? key(a) < key(b) : a < b;
    });
  }

  const WeightedGraph& g_;
  Rng rng_;
  std::vector<Index>& assignment_;
  std::vector<char> inside_;
};

bool ratio_ok(Index max_size, Index min_size, double tol) {
  return static_cast<double>(max_size) <= (1.0 + tol) * static_cast<double>(min_size) + 1e-12;
}

void refine(const WeightedGraph& g, std::vector<Index>& assignment, Index parts,
            const PartitionOptions& options) {
  std::vector<Index> size(static_cast<std::size_t>(parts), 0);
  for (Index k : assignment) ++size[static_cast<std::size_t>(k)];
  std::vector<double> conn(static_cast<std::size_t>(parts), 0.0);
  std::vector<Index> touched;
  for (int sweep = 0; sweep < options.refine_sweeps; ++sweep) {
    Index moves = 0;
    for (Index v = 0; v < g.num_vertices(); ++v) {
      const Index p = assignment[static_cast<std::size_t>(v)];
      touched.clear();
      for (const auto& [u, w] : g.neighbors(v)) {
        const Index q = assignment[static_cast<std::size_t>(u)];
        if (conn[static_cast<std::size_t>(q)] == 0.0) touched.push_back(q);
        conn[static_cast<std::size_t>(q)] += std::abs(w) + 1e-300;
      }
      Index best = -1;
      double best_gain = 0.0;
      for (Index q : touched) {
        if (q == p) continue;
        const double gain = conn[static_cast<std::size_t>(q)] - conn[static_cast<std::size_t>(p)];
        if (gain > best_gain * (1 + 1e-12) + 1e-300 && size[static_cast<std::size_t>(p)] > 1) {
          const Index old_max = *std::max_element(size.begin(), size.end());
          const Index old_min = *std::min_element(size.begin(), size.end());
          --size[static_cast<std::size_t>(p)];
          ++size[static_cast<std::size_t>(q)];
          const Index new_max = *std::max_element(size.begin(), size.end());
          const Index new_min = *std::min_element(size.begin(), size.end());
          ++size[static_cast<std::size_t>(p)];
          --size[static_cast<std::size_t>(q)];
          if (ratio_ok(new_max, new_min, options.balance_tol) ||
              (new_max <= old_max && new_min >= old_min)) {
            best = q;
            best_gain = gain;
          }
        }
      }
      for (Index q : touched) conn[static_cast<std::size_t>(q)] = 0.0;
      if (best >= 0) {
        assignment[static_cast<std::size_t>(v)] = best;
        --size[static_cast<std::size_t>(p)];
        ++size[static_cast<std::size_t>(best)];
        ++moves;
      }
    }
    if (moves == 0) break;
  }
}

}  // namespace

Partition partition_balanced(const WeightedGraph& graph, Index num_subdomains,
                             std::uint64_t seed, const PartitionOptions& options) {
  const Index n = graph.num_vertices();
  if (num_subdomains < 1 || num_subdomains > n) {
    throw Error(ErrorCode::invalid_argument,
                "partition: need 1 <= N_omega <= n (got " + std::to_string(num_subdomains) +
                    " for n = " + std::to_string(n) + ")");
  }
  std::vector<Index> label;
  const Index ncomp = graph.components(label);
  if (ncomp > 1) {
    std::vector<Index> sizes(static_cast<std::size_t>(ncomp), 0);
    for (Index l : label) ++sizes[static_cast<std::size_t>(l)];
    std::ostringstream msg;
    msg << "partition: graph is disconnected (" << ncomp << " components, sizes";
    for (Index c = 0; c < std::min<Index>(ncomp, 8); ++c) msg << ' ' << sizes[static_cast<std::size_t>(c)];
    if (ncomp > 8) msg << " ...";
    msg << ")";
    throw Error(ErrorCode::disconnected_graph, msg.str());
  }
  std::vector<Index> assignment(static_cast<std::size_t>(n), 0);
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  Bisector(graph, seed, assignment).split(std::move(all), num_subdomains, 0);
  if (num_subdomains > 1) refine(graph, assignment, num_subdomains, options);

  Partition p = Partition::from_assignment(std::move(assignment), num_subdomains);
  std::vector<char> inside(static_cast<std::size_t>(n), 0);
  for (Index k = 0; k < p.num_subdomains(); ++k) {
    const auto& s = p.subdomains[static_cast<std::size_t>(k)];
    for (Index v : s) inside[static_cast<std::size_t>(v)] = 1;
    const auto dist = bfs_within(graph, inside, s[0]);
    const bool connected = std::all_of(s.begin(), s.end(), [&](Index v) { return dist[static_cast<std::size_t>(v)] >= 0; });
    if (!connected) p.disconnected.push_back(k);
    for (Index v : s) inside[static_cast<std::size_t>(v)] = 0;
  }
  return p;
}

namespace {

/// Uniform bucket grid for radius queries.
class BucketGrid {
 public:
  BucketGrid(const DenseMatrix& x, double cell) : x_(x), cell_(cell) {
    lo_ = x.colwise().minCoeff().transpose();
    for (Index v = 0; v < x.rows(); ++v) buckets_[key(cell_of(v))].push_back(v);
  }

  template <typename F>
  void for_each_near(Index v, F&& visit) const {
    const auto c = cell_of(v);
    const int d = static_cast<int>(x_.cols());
    std::array<Index, 3> off{-1, -1, -1};
    while (true) {
      std::array<Index, 3> nb{0, 0, 0};
      for (int k = 0; k < d; ++k) nb[static_cast<std::size_t>(k)] = c[static_cast<std::size_t>(k)] + off[static_cast<std::size_t>(k)];
      auto it = buckets_.find(key(nb));
      if (it != buckets_.end()) {
        for (Index u : it->second) visit(u);
      }
      int k = 0;
      while (k < d && off[static_cast<std::size_t>(k)] == 1) off[static_cast<std::size_t>(k++)] = -1;
      if (k == d) break;
      ++off[static_cast<std::size_t>(k)];
    }
  }

 private:
  std::array<Index, 3> cell_of(Index v) const {
    std::array<Index, 3> c{0, 0, 0};
    for (int k = 0; k < x_.cols(); ++k) {
      c[static_cast<std::size_t>(k)] = static_cast<Index>(std::floor((x_(v, k) - lo_[k]) / cell_));
    }
    return c;
  }
  static std::uint64_t key(const std::array<Index, 3>& c) {
    std::uint64_t h = 1469598103934665603ULL;
    for (Index x : c) h = (h ^ static_cast<std::uint64_t>(x + (1 << 20))) * 1099511628211ULL;
    return h;
  }

  const DenseMatrix& x_;
  double cell_;
  Eigen::VectorXd lo_;
  std::unordered_map<std::uint64_t, std::vector<Index>> buckets_;
};

}  // namespace

Partition oversample(const WeightedGraph& graph, Partition partition, double delta_h,
                     OversampleMode mode) {
  if (!graph.has_coords()) {
    throw Error(ErrorCode::missing_coordinates,
                "oversample: graph has no coordinates; use graph-distance (hop) oversampling");
  }
  if (!(delta_h >= 0)) throw Error(ErrorCode::invalid_argument, "oversample: delta_H must be >= 0");
  const Index n = graph.num_vertices();
  const DenseMatrix& x = graph.coords();
  // Relative slack so that a vertex exactly delta_H away on a uniform grid
  // is not lost to rounding of the coordinates.
  const double reach = delta_h * (1.0 + 1e-12);
  const double diameter = (x.colwise().maxCoeff() - x.colwise().minCoeff()).norm();

  std::vector<char> mark(static_cast<std::size_t>(n), 0);
  partition.oversampled.clear();
  std::unique_ptr<BucketGrid> grid;
  if (delta_h > 0 && delta_h < diameter) grid = std::make_unique<BucketGrid>(x, delta_h);
  for (const auto& sub : partition.subdomains) {
    std::vector<Index> members(sub.begin(), sub.end());
    if (delta_h >= diameter) {
      members.resize(static_cast<std::size_t>(n));
      std::iota(members.begin(), members.end(), Index{0});
    } else {
      for (Index v : sub) mark[static_cast<std::size_t>(v)] = 1;
      auto consider = [&](Index u, Index v) {
        if (!mark[static_cast<std::size_t>(v)] && (x.row(u) - x.row(v)).norm() <= reach) {
          mark[static_cast<std::size_t>(v)] = 1;
          members.push_back(v);
        }
      };
      for (Index u : sub) {
        if (grid) {
          grid->for_each_near(u, [&](Index v) { consider(u, v); });
        } else {
          for (Index v = 0; v < n; ++v) consider(u, v);
        }
      }
      for (Index v : members) mark[static_cast<std::size_t>(v)] = 0;
    }
    if (mode == OversampleMode::subdomain_closure) {
      std::vector<char> take(static_cast<std::size_t>(partition.num_subdomains()), 0);
      for (Index v : members) take[static_cast<std::size_t>(partition.assignment[static_cast<std::size_t>(v)])] = 1;
      members.clear();
      for (Index k = 0; k < partition.num_subdomains(); ++k) {
        if (take[static_cast<std::size_t>(k)]) {
          const auto& s = partition.subdomains[static_cast<std::size_t>(k)];
          members.insert(members.end(), s.begin(), s.end());
        }
      }
    }
    partition.oversampled.push_back(IndexSet::sorted(std::move(members), n));
  }
  partition.delta = delta_h;
  return partition;
}

Partition graph_distance_oversample(const WeightedGraph& graph, Partition partition, Index hops) {
  if (hops < 0) throw Error(ErrorCode::invalid_argument, "graph_distance_oversample: hops must be >= 0");
  const Index n = graph.num_vertices();
  std::vector<Index> dist(static_cast<std::size_t>(n), -1);
  partition.oversampled.clear();
  for (const auto& sub : partition.subdomains) {
    std::vector<Index> members;
    std::deque<Index> queue;
    for (Index v : sub) {
      dist[static_cast<std::size_t>(v)] = 0;
      queue.push_back(v);
      members.push_back(v);
    }
    while (!queue.empty()) {
      const Index v = queue.front();
      queue.pop_front();
      if (dist[static_cast<std::size_t>(v)] == hops) continue;
      for (const auto& [u, w] : graph.neighbors(v)) {
        if (dist[static_cast<std::size_t>(u)] < 0) {
          dist[static_cast<std::size_t>(u)] = dist[static_cast<std::size_t>(v)] + 1;
          members.push_back(u);
          queue.push_back(u);
        }
      }
    }
    for (Index v : members) dist[static_cast<std::size_t>(v)] = -1;
    partition.oversampled.push_back(IndexSet::sorted(std::move(members), n));
  }
  partition.delta = static_cast<double>(hops);
  return partition;
}

void write_partition(std::ostream& out, const Partition& partition) {
  for (Index v = 0; v < partition.num_vertices; ++v) {
    out << v << ' ' << partition.assignment[static_cast<std::size_t>(v)] << '\n';
  }
}

Partition read_partition(std::istream& in) {
  std::vector<std::pair<Index, Index>> rows;
  std::string line;
  Index max_k = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '%' || line[0] == '#') continue;
    std::istringstream ss(line);
    Index v, k;
    if (!(ss >> v >> k)) throw Error(ErrorCode::parse_error, "partition: bad line '" + line + "'");
    rows.emplace_back(v, k);
    max_k = std::max(max_k, k);
  }
  std::vector<Index> assignment(rows.size(), -1);
  for (const auto& [v, k] : rows) {
    if (v < 0 || v >= static_cast<Index>(rows.size()) || assignment[static_cast<std::size_t>(v)] >= 0) {
      throw Error(ErrorCode::parse_error, "partition: vertex ids must be 0..n-1, each once");
    }
    assignment[static_cast<std::size_t>(v)] = k;
  }
  return Partition::from_assignment(std::move(assignment), max_k + 1);
}

}  // namespace msgr
