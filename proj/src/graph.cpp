#include "msgr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace msgr {

WeightedGraph::WeightedGraph(Index n, DenseMatrix coords, std::vector<Edge> edges)
    : n_(n), coords_(std::move(coords)), edges_(std::move(edges)) {
  if (n < 0) throw Error(ErrorCode::invalid_graph, "graph: negative vertex count");
  if (coords_.size() > 0) {
    if (coords_.rows() != n || (coords_.cols() != 2 && coords_.cols() != 3)) {
      throw Error(ErrorCode::invalid_graph,
                  "graph: coordinates must be n x 2 or n x 3");
    }
  }
  for (auto& e : edges_) {
    if (e.i > e.j) std::swap(e.i, e.j);
    if (e.i < 0 || e.j >= n) {
      throw Error(ErrorCode::invalid_graph,
                  "graph: edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                      ") out of range");
    }
    if (e.i == e.j) {
      throw Error(ErrorCode::invalid_graph,
                  "graph: self loop at vertex " + std::to_string(e.i));
    }
    if (!std::isfinite(e.w)) {
      throw Error(ErrorCode::invalid_graph, "graph: non-finite edge weight");
    }
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  for (std::size_t k = 1; k < edges_.size(); ++k) {
    if (edges_[k].i == edges_[k - 1].i && edges_[k].j == edges_[k - 1].j) {
      throw Error(ErrorCode::invalid_graph,
                  "graph: duplicate edge (" + std::to_string(edges_[k].i) + "," +
                      std::to_string(edges_[k].j) + ")");
    }
  }
  build_adjacency();
}

void WeightedGraph::build_adjacency() {
  std::vector<Index> count(static_cast<std::size_t>(n_) + 1, 0);
  for (const auto& e : edges_) {
    ++count[static_cast<std::size_t>(e.i) + 1];
    ++count[static_cast<std::size_t>(e.j) + 1];
  }
  for (std::size_t v = 1; v < count.size(); ++v) count[v] += count[v - 1];
  offsets_ = count;
  adjacency_.assign(static_cast<std::size_t>(count.back()), {0, 0.0});
  std::vector<Index> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges_) {
    adjacency_[static_cast<std::size_t>(fill[static_cast<std::size_t>(e.i)]++)] = {e.j, e.w};
    adjacency_[static_cast<std::size_t>(fill[static_cast<std::size_t>(e.j)]++)] = {e.i, e.w};
  }
  for (Index v = 0; v < n_; ++v) {
    auto b = adjacency_.begin() + offsets_[static_cast<std::size_t>(v)];
    auto e = adjacency_.begin() + offsets_[static_cast<std::size_t>(v) + 1];
    std::sort(b, e, [](const auto& x, const auto& y) { return x.first < y.first; });
  }
}

Vector WeightedGraph::degrees() const {
  Vector d = Vector::Zero(n_);
  for (const auto& e : edges_) {
    d[e.i] += std::abs(e.w);
    d[e.j] += std::abs(e.w);
  }
  return d;
}

bool WeightedGraph::all_positive() const {
  return std::all_of(edges_.begin(), edges_.end(), [](const Edge& e) { return e.w > 0; });
}

Index WeightedGraph::components(std::vector<Index>& label) const {
  label.assign(static_cast<std::size_t>(n_), -1);
  Index count = 0;
  std::deque<Index> queue;
  for (Index s = 0; s < n_; ++s) {
    if (label[static_cast<std::size_t>(s)] >= 0) continue;
    label[static_cast<std::size_t>(s)] = count;
    queue.push_back(s);
    while (!queue.empty()) {
      const Index v = queue.front();
      queue.pop_front();
      for (const auto& [u, w] : neighbors(v)) {
        if (label[static_cast<std::size_t>(u)] < 0) {
          label[static_cast<std::size_t>(u)] = count;
          queue.push_back(u);
        }
      }
    }
    ++count;
  }
  return count;
}

WeightedGraph WeightedGraph::induced(const IndexSet& keep) const {
  std::vector<Edge> sub;
  for (const auto& e : edges_) {
    const Index a = keep.local(e.i);
    const Index b = keep.local(e.j);
    if (a >= 0 && b >= 0) sub.push_back({a, b, e.w});
  }
  DenseMatrix xy;
  if (has_coords()) {
    xy.resize(keep.size(), coords_.cols());
    for (Index k = 0; k < keep.size(); ++k) xy.row(k) = coords_.row(keep[k]);
  }
  WeightedGraph g(keep.size(), std::move(xy), std::move(sub));
  if (capacity) {
    Vector c(keep.size());
    for (Index k = 0; k < keep.size(); ++k) c[k] = (*capacity)[keep[k]];
    g.capacity = std::move(c);
  }
  if (source.size() == n_) {
    g.source.resize(keep.size());
    for (Index k = 0; k < keep.size(); ++k) g.source[k] = source[keep[k]];
  }
  return g;
}

SparseMatrix assemble_signed_laplacian(const WeightedGraph& graph) {
  const Index n = graph.num_vertices();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(n + 2 * graph.num_edges()));
  const Vector d = graph.degrees();
  for (Index i = 0; i < n; ++i) t.emplace_back(i, i, d[i]);
  for (const auto& e : graph.edges()) {
    t.emplace_back(e.i, e.j, -e.w);
    t.emplace_back(e.j, e.i, -e.w);
  }
  return from_triplets(n, n, t);
}

BoundarySystem apply_boundary(const SparseMatrix& laplacian, const WeightedGraph& graph) {
  const Index n = graph.num_vertices();
  if (laplacian.rows() != n || laplacian.cols() != n) {
    throw Error(ErrorCode::invalid_argument, "apply_boundary: dimension mismatch");
  }
  if (graph.robin.empty() && graph.dirichlet.empty()) {
    throw Error(ErrorCode::singular_system,
                "singular system: no boundary vertex and no Dirichlet elimination");
  }
  Vector alpha = Vector::Zero(n);
  Vector f = Vector::Zero(n);
  for (const auto& r : graph.robin) {
    if (r.vertex < 0 || r.vertex >= n) {
      throw Error(ErrorCode::invalid_argument,
                  "apply_boundary: robin vertex " + std::to_string(r.vertex) + " out of range");
    }
    if (r.alpha < 0) {
      throw Error(ErrorCode::invalid_argument, "apply_boundary: negative robin coefficient");
    }
    alpha[r.vertex] += r.alpha;
    f[r.vertex] += r.alpha * r.value;
  }
  if (graph.source.size() == n) f += graph.source;
  SparseMatrix a = laplacian;
  for (Index i = 0; i < n; ++i) {
    if (alpha[i] != 0.0) a.coeffRef(i, i) += alpha[i];
  }
  a.makeCompressed();
  return {std::move(a), std::move(f)};
}

Vector ReducedSystem::expand(const Vector& u_free) const {
  Vector u = prescribed;
  for (Index k = 0; k < free.size(); ++k) u[free[k]] = u_free[k];
  return u;
}

ReducedSystem eliminate_dirichlet(const SparseMatrix& a, const Vector& f,
                                  const std::vector<DirichletCondition>& dirichlet) {
  const Index n = a.rows();
  Vector g = Vector::Zero(n);
  std::vector<char> fixed(static_cast<std::size_t>(n), 0);
  for (const auto& d : dirichlet) {
    if (d.vertex < 0 || d.vertex >= n) {
      throw Error(ErrorCode::invalid_argument,
                  "eliminate_dirichlet: vertex " + std::to_string(d.vertex) + " out of range");
    }
    if (fixed[static_cast<std::size_t>(d.vertex)]) {
      throw Error(ErrorCode::invalid_argument,
                  "eliminate_dirichlet: vertex " + std::to_string(d.vertex) + " listed twice");
    }
    fixed[static_cast<std::size_t>(d.vertex)] = 1;
    g[d.vertex] = d.value;
  }
  std::vector<Index> free_ids;
  for (Index v = 0; v < n; ++v) {
    if (!fixed[static_cast<std::size_t>(v)]) free_ids.push_back(v);
  }
  IndexSet free(std::move(free_ids), n);
  const Vector ag = a * g;
  Vector f_int(free.size());
  for (Index k = 0; k < free.size(); ++k) f_int[k] = f[free[k]] - ag[free[k]];
  SparseMatrix a_int = restrict_submatrix(a, free, free);
  return {std::move(a_int), std::move(f_int), std::move(free), std::move(g)};
}

SparseMatrix restrict_submatrix(const SparseMatrix& a, const IndexSet& rows,
                                const IndexSet& cols) {
  if (rows.universe() != a.rows() || cols.universe() != a.cols()) {
    throw Error(ErrorCode::invalid_argument, "restrict_submatrix: index set universe mismatch");
  }
  std::vector<Triplet> t;
  for (Index lc = 0; lc < cols.size(); ++lc) {
    for (SparseMatrix::InnerIterator it(a, cols[lc]); it; ++it) {
      const Index lr = rows.local(it.row());
      if (lr >= 0) t.emplace_back(lr, lc, it.value());
    }
  }
  return from_triplets(rows.size(), cols.size(), t);
}

namespace {

void require_length(const Vector& v, Index n, const char* what) {
  if (v.size() != n) {
    throw Error(ErrorCode::invalid_argument, std::string(what) + ": dimension mismatch");
  }
}

double checked_sqrt(double q, double scale, const char* what) {
  if (q < -1e-12 * scale) {
    throw Error(ErrorCode::indefinite_operator,
                std::string("indefinite operator in ") + what + ": quadratic form " +
                    std::to_string(q));
  }
  return std::sqrt(std::max(q, 0.0));
}

}  // namespace

double norm_D(const Vector& v, const SparseMatrix& a) {
  require_length(v, a.rows(), "norm_D");
  Vector d = Vector::Zero(a.rows());
  for (Index c = 0; c < a.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) {
      if (it.row() != it.col()) d[it.row()] += std::abs(it.value());
    }
  }
  return std::sqrt(v.cwiseAbs2().dot(d));
}

double norm_D(const Vector& v, const WeightedGraph& graph) {
  require_length(v, graph.num_vertices(), "norm_D");
  return std::sqrt(v.cwiseAbs2().dot(graph.degrees()));
}

double norm_A(const Vector& v, const SparseMatrix& a) {
  require_length(v, a.rows(), "norm_A");
  return checked_sqrt(v.dot(a * v), v.squaredNorm(), "norm_A");
}

double norm_L(const Vector& v, const WeightedGraph& graph) {
  require_length(v, graph.num_vertices(), "norm_L");
  double q = 0.0;
  for (const auto& e : graph.edges()) {
    const double d = v[e.i] - v[e.j];
    q += e.w * d * d;
  }
  return checked_sqrt(q, v.squaredNorm(), "norm_L");
}

}  // namespace msgr
