#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "msgr/analysis.hpp"
#include "msgr/coarse.hpp"
#include "msgr/experiment.hpp"
#include "msgr/interpolation.hpp"
#include "msgr/partition.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace msgr;

namespace {

ExperimentConfig config_from(const std::string& text, const std::vector<std::string>& overrides) {
  std::istringstream in(text);
  return parse_config(in, overrides);
}

std::vector<Index> ids(const IndexSet& s) { return {s.begin(), s.end()}; }

py::dict row_dict(const ResultRow& r) {
  py::dict d("test"_a = r.test, "method"_a = r.method(), "scope"_a = r.scope(), "n_omega"_a = r.n_omega,
             "m"_a = r.m, "seed"_a = r.seed, "status"_a = r.status);
  d["delta_h"] = r.delta_h ? py::cast(*r.delta_h) : py::none();
  if (r.ok()) {
    d["e1"] = r.e1;
    d["e2"] = r.e2;
    d["n"] = r.n;
    d["n_c"] = r.n_c;
  }
  if (r.report) {
    d["h"] = r.report->h;
    d["c_ratio"] = r.report->c_ratio;
    d["c_fit"] = r.report->c_fit;
    d["orthogonality"] = r.report->orthogonality_relative;
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multiscale coarse spaces on weighted graphs";
  m.attr("__version__") = "0.1.0";
  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  py::class_<LinearProblem>(m, "Problem")
      .def_readonly("name", &LinearProblem::name)
      .def_readonly("a", &LinearProblem::a)
      .def_readonly("f", &LinearProblem::f)
      .def_readonly("capacity", &LinearProblem::capacity)
      .def_property_readonly("coords", [](const LinearProblem& p) { return p.graph.coords(); })
      .def_property_readonly("num_vertices", [](const LinearProblem& p) { return p.graph.num_vertices(); })
      .def_property_readonly("edges",
                             [](const LinearProblem& p) {
                               std::vector<std::tuple<Index, Index, double>> out;
                               for (const Edge& e : p.graph.edges()) out.emplace_back(e.i, e.j, e.w);
                               return out;
                             })
      .def("__repr__", [](const LinearProblem& p) {
        return "<Problem " + p.name + " n=" + std::to_string(p.a.rows()) + ">";
      });

  py::class_<Partition>(m, "Partition")
      .def_readonly("assignment", &Partition::assignment)
      .def_readonly("delta", &Partition::delta)
      .def_property_readonly("num_subdomains", &Partition::num_subdomains)
      .def_property_readonly("subdomains",
                             [](const Partition& p) {
                               std::vector<std::vector<Index>> out;
                               for (const auto& s : p.subdomains) out.push_back(ids(s));
                               return out;
                             })
      .def_property_readonly("oversampled",
                             [](const Partition& p) {
                               std::vector<std::vector<Index>> out;
                               for (const auto& s : p.oversampled) out.push_back(ids(s));
                               return out;
                             })
      .def("max_overlap", &Partition::max_overlap);

  py::class_<ClusterSet>(m, "ClusterSet")
      .def_readonly("labels", &ClusterSet::aggregate_of)
      .def_readonly("reports", &ClusterSet::reports)
      .def_property_readonly("size", &ClusterSet::size)
      .def_property_readonly("centroids",
                             [](const ClusterSet& c) {
                               std::vector<Index> out;
                               for (const Aggregate& a : c.aggregates) out.push_back(a.centroid);
                               return out;
                             })
      .def_property_readonly("subdomain_of", [](const ClusterSet& c) {
        std::vector<Index> out;
        for (const Aggregate& a : c.aggregates) out.push_back(a.subdomain);
        return out;
      });

  m.def(
      "build_problem",
      [](const std::vector<std::string>& overrides, std::uint64_t seed) {
        return build_problem(config_from("", overrides).problem, seed);
      },
      "overrides"_a, "seed"_a = 0, "Builds a problem from [problem] section overrides such as 'problem.nx=20'.");

  m.def(
      "partition",
      [](const LinearProblem& p, Index n_omega, std::uint64_t seed, double delta_h, const std::string& mode) {
        Partition part = partition_balanced(p.graph, n_omega, seed);
        if (mode == "hops") return graph_distance_oversample(p.graph, std::move(part), static_cast<Index>(delta_h));
        if (delta_h <= 0.0) return part;
        const OversampleMode om = mode == "closure" ? OversampleMode::subdomain_closure : OversampleMode::vertex;
        if (mode != "closure" && mode != "vertex") throw Error(ErrorCode::invalid_argument, "unknown mode " + mode);
        return oversample(p.graph, std::move(part), delta_h, om);
      },
      "problem"_a, "n_omega"_a, "seed"_a = 0, "delta_h"_a = 0.0, "mode"_a = "vertex");

  m.def(
      "cluster",
      [](const LinearProblem& p, const Partition& part, Index m, std::uint64_t seed, const std::string& centroid,
         int restarts) {
        ClusterOptions opt;
        opt.per_subdomain = {m};
        opt.kmeans.restarts = restarts;
        if (centroid == "spectral") opt.centroid_rule = CentroidRule::spectral;
        else if (centroid != "physical") throw Error(ErrorCode::invalid_argument, "unknown centroid rule " + centroid);
        return cluster_subdomains(p.graph, part, opt, seed);
      },
      "problem"_a, "partition"_a, "m"_a, "seed"_a = 0, "centroid"_a = "physical", "restarts"_a = 10);

  m.def(
      "prolongation",
      [](const std::string& kind, const LinearProblem& p, const ClusterSet& c, const Partition& part) {
        return build_prolongation(parse_prolongation_kind(kind), p.a, c, part).p;
      },
      "kind"_a, "problem"_a, "clusters"_a, "partition"_a, "Kind is one of CF-glo, CF-loc, MC-glo, MC-loc.");

  m.def(
      "constraints", [](const ClusterSet& c) { return build_constraints(c); }, "clusters"_a);

  m.def(
      "solve_coarse",
      [](const SparseMatrix& a, const Vector& f, const SparseMatrix& p) {
        const SteadySolution s = solve_steady(galerkin_coarse(a, f, p));
        return py::make_tuple(s.u_c, s.u_ms);
      },
      "a"_a, "f"_a, "p"_a, "Returns (u_c, P u_c) for the Galerkin coarse system.");

  m.def("solve_fine", &solve_fine, "a"_a, "f"_a);

  m.def(
      "solve_transient",
      [](const Vector& capacity, const SparseMatrix& a, const Vector& f, const Vector& u0, double tau, Index steps,
         std::optional<SparseMatrix> p) {
        TransientConfig tc;
        tc.tau = tau;
        tc.steps = steps;
        tc.u0 = u0;
        return solve_parabolic(capacity, a, f, tc, p).states;
      },
      "capacity"_a, "a"_a, "f"_a, "u0"_a, "tau"_a, "steps"_a, "p"_a = py::none(),
      "Backward Euler states at t = 0, tau, ..., steps * tau.");

  m.def(
      "relative_errors",
      [](const Vector& u, const Vector& u_ms, const SparseMatrix& a) {
        const ErrorPair e = relative_errors(u, u_ms, a);
        return py::make_tuple(e.e1, e.e2);
      },
      "u"_a, "u_ms"_a, "a"_a, "Euclidean and energy relative errors in percent.");

  m.def("galerkin_residual", &galerkin_residual, "p"_a, "a"_a, "f"_a, "u_ms"_a);

  m.def(
      "run_experiment",
      [](const std::string& config, const std::vector<std::string>& overrides) {
        const std::vector<ResultRow> rows = run_experiment(config_from(config, overrides));
        py::list out;
        for (const ResultRow& r : rows) out.append(row_dict(r));
        return out;
      },
      "config"_a = "", "overrides"_a = std::vector<std::string>{});

  m.def("config_reference", &config_reference);
}
