#include "msgr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "msgr/io.hpp"

namespace msgr {

std::vector<AggregateContrast> cluster_contrast(const WeightedGraph& graph, const ClusterSet& clusters,
                                                std::vector<std::string>* reports) {
  if (clusters.num_vertices != graph.num_vertices()) {
    throw Error(ErrorCode::invalid_argument, "cluster_contrast: clusters and graph differ in size");
  }
  const auto m = static_cast<std::size_t>(clusters.size());
  std::vector<double> wmin(m, std::numeric_limits<double>::infinity()), wmax(m, 0.0);
  std::vector<Index> count(m, 0);
  for (const Edge& e : graph.edges()) {
    const Index ai = clusters.aggregate_of[static_cast<std::size_t>(e.i)];
    if (ai != clusters.aggregate_of[static_cast<std::size_t>(e.j)]) continue;
    const auto k = static_cast<std::size_t>(ai);
    const double w = std::abs(e.w);
    wmin[k] = std::min(wmin[k], w);
    wmax[k] = std::max(wmax[k], w);
    ++count[k];
  }
  const Vector d = graph.degrees();
  const double dmax = d.size() ? d.maxCoeff() : 0.0;
  const double eps = dmax > 0 ? 1e-12 * dmax : 1.0;

  std::vector<AggregateContrast> out(m);
  for (std::size_t k = 0; k < m; ++k) {
    const Aggregate& ag = clusters.aggregates[k];
    out[k].internal_edges = count[k];
    if (count[k] == 0 || !(wmin[k] > 0)) {
      out[k].weight_ratio = 1.0;
      if (reports) {
        reports->push_back("aggregate (" + std::to_string(ag.subdomain) + "," +
                           std::to_string(ag.local) + ") has no internal edge with nonzero weight; C_ratio set to 1");
      }
    } else {
      out[k].weight_ratio = wmax[k] / wmin[k];
    }
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (Index v : ag.members) {
      const double dv = std::max(d[v], eps);
      lo = std::min(lo, dv);
      hi = std::max(hi, dv);
    }
    out[k].degree_ratio = ag.members.empty() ? 1.0 : hi / lo;
  }
  return out;
}

double diameter(const DenseMatrix& coords, std::span<const Index> members) {
  double best = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      best = std::max(best, (coords.row(members[i]) - coords.row(members[j])).squaredNorm());
    }
  }
  return std::sqrt(best);
}

std::vector<double> cluster_diameter(const WeightedGraph& graph, const ClusterSet& clusters) {
  if (!graph.has_coords()) {
    throw Error(ErrorCode::missing_coordinates, "cluster diameters need vertex coordinates");
  }
  std::vector<double> out;
  out.reserve(clusters.aggregates.size());
  for (const Aggregate& ag : clusters.aggregates) out.push_back(diameter(graph.coords(), ag.members));
  return out;
}

double dual_norm_f(const Vector& f, const WeightedGraph& graph) {
  if (f.size() != graph.num_vertices()) throw Error(ErrorCode::invalid_argument, "dual_norm_f: size mismatch");
  const Vector d = graph.degrees();
  const double dmax = d.size() ? d.maxCoeff() : 0.0;
  const double eps = dmax > 0 ? 1e-12 * dmax : 1.0;
  double s = 0.0;
  for (Index i = 0; i < f.size(); ++i) s += f[i] * f[i] / std::max(d[i], eps);
  return std::sqrt(s);
}

namespace {

double ratio_or_zero(double num, double den) {
  if (num == 0.0) return 0.0;
  if (std::isnan(den)) return std::numeric_limits<double>::quiet_NaN();
  if (!(den > 0)) return std::numeric_limits<double>::infinity();
  return num / den;
}

}  // namespace

ConvergenceReport verify_bound(const RunArtifacts& run) {
  if (!run.graph || !run.clusters) throw Error(ErrorCode::invalid_argument, "verify_bound: graph and clusters required");
  const WeightedGraph& g = *run.graph;
  const ClusterSet& cs = *run.clusters;
  const Index n = g.num_vertices();
  if (run.a.rows() != n || run.f.size() != n || run.u.size() != n || run.u_ms.size() != n || run.p.rows() != n) {
    throw Error(ErrorCode::invalid_argument, "verify_bound: artifact dimensions disagree");
  }

  ConvergenceReport rep;
  const auto contrast = cluster_contrast(g, cs, &rep.notes);
  std::vector<double> h;
  if (g.has_coords()) {
    h = cluster_diameter(g, cs);
  } else {
    h.assign(cs.aggregates.size(), std::numeric_limits<double>::quiet_NaN());
    rep.notes.emplace_back("graph has no coordinates; diameters and fitted constants are undefined");
  }
  rep.h = g.has_coords() ? 0.0 : std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < cs.aggregates.size(); ++k) {
    const Aggregate& ag = cs.aggregates[k];
    rep.aggregates.push_back({ag.subdomain, ag.local, static_cast<Index>(ag.members.size()), h[k], contrast[k]});
    if (g.has_coords()) rep.h = std::max(rep.h, h[k]);
    rep.c_ratio = std::max(rep.c_ratio, contrast[k].weight_ratio);
    rep.c_ratio_degree = std::max(rep.c_ratio_degree, contrast[k].degree_ratio);
  }

  const Vector e = run.u - run.u_ms;
  rep.f_dual = dual_norm_f(run.f, g);
  rep.error_a = norm_A(e, run.a);
  rep.error_d = norm_D(e, g);
  const double scale = rep.h * std::sqrt(rep.c_ratio);
  rep.c_fit = ratio_or_zero(rep.error_a, scale * rep.f_dual);
  rep.c_fit_d = ratio_or_zero(rep.error_d, scale * rep.error_a);

  const Vector r = run.p.transpose() * (run.a * e);
  rep.orthogonality = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
  const double finf = run.f.size() ? run.f.cwiseAbs().maxCoeff() : 0.0;
  rep.orthogonality_relative = ratio_or_zero(rep.orthogonality, finf);
  rep.max_overlap = run.partition ? run.partition->max_overlap() : 1;
  return rep;
}

void write_report_csv(std::ostream& out, const ConvergenceReport& report) {
  using io::format_double;
  out << "row,subdomain,aggregate,size,H,C_ratio,C_ratio_degree,internal_edges,"
         "error_A,error_D,f_dual,C_fit,c_fit_d,orthogonality,max_overlap\n";
  for (const AggregateReport& a : report.aggregates) {
    out << "aggregate," << a.subdomain << ',' << a.aggregate << ',' << a.size << ',' << format_double(a.h)
        << ',' << format_double(a.contrast.weight_ratio) << ',' << format_double(a.contrast.degree_ratio)
        << ',' << a.contrast.internal_edges << ",,,,,,,\n";
  }
  Index total = 0;
  for (const AggregateReport& a : report.aggregates) total += a.size;
  out << "summary,,," << total << ',' << format_double(report.h) << ',' << format_double(report.c_ratio) << ','
      << format_double(report.c_ratio_degree) << ",," << format_double(report.error_a) << ','
      << format_double(report.error_d) << ',' << format_double(report.f_dual) << ','
      << format_double(report.c_fit) << ',' << format_double(report.c_fit_d) << ','
      << format_double(report.orthogonality) << ',' << report.max_overlap << '\n';
}

}  // namespace msgr
