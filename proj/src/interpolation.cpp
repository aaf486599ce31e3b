#include "msgr/interpolation.hpp"

#include <algorithm>
#include <map>
#include <ostream>

#include "msgr/graph.hpp"
#include "msgr/solvers.hpp"

namespace msgr {

std::string to_string(ProlongationKind kind) {
  switch (kind) {
    case ProlongationKind::cf_global: return "CF-glo";
    case ProlongationKind::cf_local: return "CF-loc";
    case ProlongationKind::mc_global: return "MC-glo";
    case ProlongationKind::mc_local: return "MC-loc";
  }
  return "?";
}

ProlongationKind parse_prolongation_kind(const std::string& name) {
  std::string s;
  for (char c : name) {
    if (c != '-' && c != '_') s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (s == "cfglo" || s == "cfglobal") return ProlongationKind::cf_global;
  if (s == "cfloc" || s == "cflocal") return ProlongationKind::cf_local;
  if (s == "mcglo" || s == "mcglobal") return ProlongationKind::mc_global;
  if (s == "mcloc" || s == "mclocal") return ProlongationKind::mc_local;
  throw Error(ErrorCode::config_error, "unknown prolongation method '" + name + "'");
}

bool is_local(ProlongationKind kind) {
  return kind == ProlongationKind::cf_local || kind == ProlongationKind::mc_local;
}

bool is_cf(ProlongationKind kind) {
  return kind == ProlongationKind::cf_global || kind == ProlongationKind::cf_local;
}

CFSplit cf_split(const ClusterSet& clusters) {
  std::vector<Index> c;
  c.reserve(clusters.aggregates.size());
  for (const auto& a : clusters.aggregates) c.push_back(a.centroid);
  IndexSet coarse(std::move(c), clusters.num_vertices);
  IndexSet fine = coarse.complement();
  return {std::move(coarse), std::move(fine)};
}

namespace {

std::vector<ColumnInfo> column_info(const ClusterSet& clusters, bool with_centroid) {
  std::vector<ColumnInfo> info;
  for (const auto& a : clusters.aggregates) {
    info.push_back({a.subdomain, a.local, with_centroid ? a.centroid : -1});
  }
  return info;
}

void check_operator(const SparseMatrix& a, const ClusterSet& clusters, const char* what) {
  if (a.rows() != a.cols() || a.rows() != clusters.num_vertices) {
    throw Error(ErrorCode::invalid_argument, std::string(what) + ": operator size does not match clusters");
  }
}

void check_oversampled(const Partition& partition, const ClusterSet& clusters, const char* what) {
  if (partition.num_vertices != clusters.num_vertices ||
      static_cast<Index>(partition.oversampled.size()) != partition.num_subdomains() ||
      partition.num_subdomains() < clusters.num_subdomains()) {
    throw Error(ErrorCode::invalid_argument, std::string(what) + ": partition does not match clusters");
  }
}

constexpr Index kBlock = 256;

}  // namespace

Prolongation cf_ideal_global(const SparseMatrix& a, const ClusterSet& clusters) {
  check_operator(a, clusters, "cf_ideal_global");
  const CFSplit split = cf_split(clusters);
  const Index nc = split.coarse.size();
  std::vector<Triplet> t;
  for (Index j = 0; j < nc; ++j) t.emplace_back(split.coarse[j], j, 1.0);
  if (!split.fine.empty() && nc > 0) {
    const SparseMatrix aff = restrict_submatrix(a, split.fine, split.fine);
    const SparseMatrix afc = restrict_submatrix(a, split.fine, split.coarse);
    const SpdFactorization solver(aff, "A_FF");
    for (Index j0 = 0; j0 < nc; j0 += kBlock) {
      const Index cols = std::min(kBlock, nc - j0);
      const DenseMatrix rhs = -DenseMatrix(afc.middleCols(j0, cols));
      const DenseMatrix w = solver.solve(rhs);
      for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < w.rows(); ++i) {
          if (w(i, j) != 0.0) t.emplace_back(split.fine[i], j0 + j, w(i, j));
        }
      }
    }
  }
  Prolongation out;
  out.kind = ProlongationKind::cf_global;
  out.p = from_triplets(a.rows(), nc, t);
  out.columns = column_info(clusters, true);
  return out;
}

Prolongation cf_ideal_local(const SparseMatrix& a, const ClusterSet& clusters, const Partition& partition) {
  check_operator(a, clusters, "cf_ideal_local");
  check_oversampled(partition, clusters, "cf_ideal_local");
  const CFSplit split = cf_split(clusters);
  std::vector<ProlongationColumn> columns;
  for (Index k = 0; k < clusters.num_subdomains(); ++k) {
    const Index c0 = clusters.first[static_cast<std::size_t>(k)];
    const Index c1 = clusters.first[static_cast<std::size_t>(k) + 1];
    if (c0 == c1) continue;
    const IndexSet& region = partition.oversampled[static_cast<std::size_t>(k)];
    std::vector<Index> fine_ids;
    for (Index v : region) {
      if (!split.coarse.contains(v)) fine_ids.push_back(v);
    }
    const IndexSet fine(fine_ids, a.rows());
    SpdFactorization solver;
    SparseMatrix aff;
    if (!fine.empty()) {
      aff = restrict_submatrix(a, fine, fine);
      try {
        solver.compute(aff, "local A_FF");
      } catch (const Error& e) {
        throw Error(e.code(), std::string(e.what()) + " in subdomain " + std::to_string(k));
      }
    }
    std::vector<Index> centroids;
    for (Index c = c0; c < c1; ++c) centroids.push_back(clusters.aggregates[static_cast<std::size_t>(c)].centroid);
    const IndexSet targets(centroids, a.rows());
    DenseMatrix w;
    if (!fine.empty()) w = solver.solve(DenseMatrix(-DenseMatrix(restrict_submatrix(a, fine, targets))));
    for (Index c = c0; c < c1; ++c) {
      const auto& agg = clusters.aggregates[static_cast<std::size_t>(c)];
      ProlongationColumn col;
      col.info = {agg.subdomain, agg.local, agg.centroid};
      col.entries.emplace_back(agg.centroid, 1.0);
      for (Index i = 0; i < fine.size(); ++i) {
        const double v = w(i, c - c0);
        if (v != 0.0) col.entries.emplace_back(fine[i], v);
      }
      columns.push_back(std::move(col));
    }
  }
  Prolongation out = assemble_prolongation(ProlongationKind::cf_local, a.rows(), std::move(columns));
  out.delta = partition.delta;
  return out;
}

SparseMatrix build_constraints(const ClusterSet& clusters, const std::vector<Index>& scope) {
  std::vector<Index> rows = scope;
  if (rows.empty()) {
    rows.resize(static_cast<std::size_t>(clusters.size()));
    for (Index c = 0; c < clusters.size(); ++c) rows[static_cast<std::size_t>(c)] = c;
  }
  std::vector<Triplet> t;
  std::vector<char> seen(static_cast<std::size_t>(clusters.size()), 0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Index c = rows[r];
    if (c < 0 || c >= clusters.size() || seen[static_cast<std::size_t>(c)]) {
      throw Error(ErrorCode::infeasible_constraints,
                  "constraints: duplicate or invalid aggregate " + std::to_string(c) + " (rank-deficient S)");
    }
    seen[static_cast<std::size_t>(c)] = 1;
    const auto& members = clusters.aggregates[static_cast<std::size_t>(c)].members;
    const double s = 1.0 / static_cast<double>(members.size());
    for (Index v : members) t.emplace_back(static_cast<Index>(r), v, s);
  }
  return from_triplets(static_cast<Index>(rows.size()), clusters.num_vertices, t);
}

Prolongation mc_global(const SparseMatrix& a, const ClusterSet& clusters) {
  check_operator(a, clusters, "mc_global");
  const Index n = a.rows(), nc = clusters.size();
  const SparseMatrix s = build_constraints(clusters);
  const LuFactorization solver(saddle_matrix(a, s), "global saddle-point system");
  std::vector<Triplet> t;
  for (Index j0 = 0; j0 < nc; j0 += kBlock) {
    const Index cols = std::min(kBlock, nc - j0);
    DenseMatrix rhs = DenseMatrix::Zero(n + nc, cols);
    for (Index j = 0; j < cols; ++j) rhs(n + j0 + j, j) = 1.0;
    const DenseMatrix x = solver.solve(rhs);
    for (Index j = 0; j < cols; ++j) {
      for (Index i = 0; i < n; ++i) {
        if (x(i, j) != 0.0) t.emplace_back(i, j0 + j, x(i, j));
      }
    }
  }
  Prolongation out;
  out.kind = ProlongationKind::mc_global;
  out.p = from_triplets(n, nc, t);
  out.columns = column_info(clusters, false);
  std::vector<Index> all(static_cast<std::size_t>(nc));
  for (Index c = 0; c < nc; ++c) all[static_cast<std::size_t>(c)] = c;
  out.constrained.assign(static_cast<std::size_t>(nc), all);
  return out;
}

Prolongation mc_local(const SparseMatrix& a, const ClusterSet& clusters, const Partition& partition,
                      PartialAggregatePolicy policy) {
  check_operator(a, clusters, "mc_local");
  check_oversampled(partition, clusters, "mc_local");
  const Index n = a.rows();
  // Row-wise neighbour lists from the symmetric sparsity of A.
  std::vector<std::vector<Index>> nbr(static_cast<std::size_t>(n));
  for (Index c = 0; c < a.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) {
      if (it.row() != it.col() && it.value() != 0.0) nbr[static_cast<std::size_t>(it.row())].push_back(c);
    }
  }

  std::vector<ProlongationColumn> columns;
  std::vector<std::vector<Index>> scopes;
  std::vector<std::string> reports;
  for (Index k = 0; k < clusters.num_subdomains(); ++k) {
    const Index c0 = clusters.first[static_cast<std::size_t>(k)];
    const Index c1 = clusters.first[static_cast<std::size_t>(k) + 1];
    if (c0 == c1) continue;
    const IndexSet& region = partition.oversampled[static_cast<std::size_t>(k)];

    std::vector<Index> interior_ids;
    for (Index v : region) {
      const auto& nb = nbr[static_cast<std::size_t>(v)];
      const bool ring = std::any_of(nb.begin(), nb.end(), [&](Index u) { return !region.contains(u); });
      if (!ring) interior_ids.push_back(v);
    }
    const IndexSet interior(interior_ids, n);
    if (interior.size() < region.size()) {
      reports.push_back("subdomain " + std::to_string(k) + ": boundary ring of " +
                        std::to_string(region.size() - interior.size()) + " vertices fixed to zero");
    }

    // Constrained aggregates: those touching the region, subject to policy.
    std::map<Index, Index> inside_count;
    for (Index v : region) ++inside_count[clusters.aggregate_of[static_cast<std::size_t>(v)]];
    std::vector<Index> scope;
    std::vector<Triplet> t;
    std::vector<Index> row_of(static_cast<std::size_t>(c1 - c0), -1);
    for (const auto& [g, count] : inside_count) {
      const auto& agg = clusters.aggregates[static_cast<std::size_t>(g)];
      const bool full = count == static_cast<Index>(agg.members.size());
      if (!full && policy == PartialAggregatePolicy::unconstrained) continue;
      const double s = 1.0 / static_cast<double>(full ? agg.members.size() : static_cast<std::size_t>(count));
      const Index row = static_cast<Index>(scope.size());
      bool any = false;
      for (Index v : agg.members) {
        const Index l = interior.contains(v) ? interior.local(v) : -1;
        if (l >= 0) {
          t.emplace_back(row, l, s);
          any = true;
        }
      }
      if (!any) {
        if (g >= c0 && g < c1) {
          throw Error(ErrorCode::infeasible_constraints,
                      "mc_local: aggregate (" + std::to_string(k) + ", " + std::to_string(agg.local) +
                          ") lies entirely in the boundary ring of its oversampled region");
        }
        continue;
      }
      if (g >= c0 && g < c1) row_of[static_cast<std::size_t>(g - c0)] = row;
      if (full) scope.push_back(g);
      else scope.push_back(-1 - g);  // renormalized partial row
    }
    const Index m = static_cast<Index>(scope.size());
    const SparseMatrix s_loc = from_triplets(m, interior.size(), t);
    const SparseMatrix a_loc = restrict_submatrix(a, interior, interior);
    std::unique_ptr<LuFactorization> solver;
    try {
      solver = std::make_unique<LuFactorization>(saddle_matrix(a_loc, s_loc), "local saddle-point system");
    } catch (const Error& e) {
      throw Error(e.code(), std::string(e.what()) + " in subdomain " + std::to_string(k));
    }
    DenseMatrix rhs = DenseMatrix::Zero(interior.size() + m, c1 - c0);
    for (Index c = c0; c < c1; ++c) rhs(interior.size() + row_of[static_cast<std::size_t>(c - c0)], c - c0) = 1.0;
    const DenseMatrix x = solver->solve(rhs);

    std::vector<Index> full_scope;
    for (Index g : scope) {
      if (g >= 0) full_scope.push_back(g);
    }
    for (Index c = c0; c < c1; ++c) {
      const auto& agg = clusters.aggregates[static_cast<std::size_t>(c)];
      ProlongationColumn col;
      col.info = {agg.subdomain, agg.local, -1};
      for (Index i = 0; i < interior.size(); ++i) {
        const double v = x(i, c - c0);
        if (v != 0.0) col.entries.emplace_back(interior[i], v);
      }
      columns.push_back(std::move(col));
      scopes.push_back(full_scope);
    }
  }
  Prolongation out = assemble_prolongation(ProlongationKind::mc_local, n, std::move(columns));
  out.delta = partition.delta;
  out.constrained = std::move(scopes);  // columns were produced in (k, r) order already
  out.reports = std::move(reports);
  return out;
}

Prolongation build_prolongation(ProlongationKind kind, const SparseMatrix& a,
                                const ClusterSet& clusters, const Partition& partition) {
  switch (kind) {
    case ProlongationKind::cf_global: return cf_ideal_global(a, clusters);
    case ProlongationKind::cf_local: return cf_ideal_local(a, clusters, partition);
    case ProlongationKind::mc_global: return mc_global(a, clusters);
    case ProlongationKind::mc_local: return mc_local(a, clusters, partition);
  }
  throw Error(ErrorCode::invalid_argument, "unknown prolongation kind");
}

Prolongation assemble_prolongation(ProlongationKind kind, Index rows,
                                   std::vector<ProlongationColumn> columns) {
  std::stable_sort(columns.begin(), columns.end(), [](const auto& x, const auto& y) {
    return x.info.subdomain != y.info.subdomain ? x.info.subdomain < y.info.subdomain
                                                : x.info.aggregate < y.info.aggregate;
  });
  std::vector<Triplet> t;
  Prolongation out;
  out.kind = kind;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const auto& col = columns[j];
    if (j > 0 && col.info.subdomain == columns[j - 1].info.subdomain &&
        col.info.aggregate == columns[j - 1].info.aggregate) {
      throw Error(ErrorCode::invalid_argument,
                  "assemble_prolongation: duplicate column (" + std::to_string(col.info.subdomain) + ", " +
                      std::to_string(col.info.aggregate) + ")");
    }
    for (const auto& [i, v] : col.entries) {
      if (i < 0 || i >= rows) throw Error(ErrorCode::invalid_argument, "assemble_prolongation: row out of range");
      t.emplace_back(i, static_cast<Index>(j), v);
    }
    out.columns.push_back(col.info);
  }
  out.p = from_triplets(rows, static_cast<Index>(columns.size()), t);
  return out;
}

void write_column_info(std::ostream& out, const Prolongation& p) {
  for (std::size_t j = 0; j < p.columns.size(); ++j) {
    const auto& c = p.columns[j];
    out << j << ' ' << c.subdomain << ' ' << c.aggregate << ' ' << c.centroid << '\n';
  }
}

}  // namespace msgr
