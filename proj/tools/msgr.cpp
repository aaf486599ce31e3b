// msgr: command line front end for graph-based multiscale coarsening.
//
//   msgr generate --family fem --nx 40 --ny 40 --prefix out/channels
//   msgr partition --graph out/channels.graph --n-omega 25 --out part.txt
//   msgr cluster --graph out/channels.graph --partition part.txt --m 8 --out clusters.txt
//   msgr prolong --matrix out/channels.mtx --graph out/channels.graph --partition part.txt \
//                --clusters clusters.txt --method MC-glo --out P.mtx
//   msgr solve --matrix out/channels.mtx --rhs out/channels.rhs --prolongation P.mtx --out ums.txt
//   msgr run --config sweep.ini
//   msgr report --csv msgr-out/results.csv

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "msgr/experiment.hpp"
#include "msgr/io.hpp"

namespace {

using namespace msgr;

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::invalid_argument, "cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::invalid_argument, "cannot write " + path);
  return out;
}

/// Config text from an optional file plus section.key=value overrides.
ExperimentConfig make_config(const std::string& path, const std::vector<std::string>& overrides) {
  if (path.empty()) {
    std::istringstream empty;
    return parse_config(empty, overrides);
  }
  auto in = open_in(path);
  return parse_config(in, overrides);
}

Partition load_partition(const std::string& path) {
  auto in = open_in(path);
  return read_partition(in);
}

Partition oversampled(const WeightedGraph& g, Partition p, double delta, const std::string& rule) {
  if (rule == "vertex") return oversample(g, std::move(p), delta, OversampleMode::vertex);
  if (rule == "closure") return oversample(g, std::move(p), delta, OversampleMode::subdomain_closure);
  if (rule == "hops") {
    return graph_distance_oversample(g, std::move(p), std::isinf(delta) ? g.num_vertices() : std::llround(delta));
  }
  throw Error(ErrorCode::config_error, "unknown oversampling rule '" + rule + "'");
}

struct GenerateArgs {
  std::string config, family, prefix = "problem";
  std::vector<std::string> sets;
  Index nx = 0, ny = 0;
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& a) {
  std::vector<std::string> sets = a.sets;
  if (!a.family.empty()) sets.push_back("problem.family=" + a.family);
  if (a.nx > 0) sets.push_back("problem.nx=" + std::to_string(a.nx));
  if (a.ny > 0) sets.push_back("problem.ny=" + std::to_string(a.ny));
  const ExperimentConfig cfg = make_config(a.config, sets);
  const LinearProblem lp = build_problem(cfg.problem, a.seed);
  {
    auto out = open_out(a.prefix + ".graph");
    io::write_graph(out, lp.graph);
  }
  io::write_matrix_market_file(a.prefix + ".mtx", lp.a);
  io::write_vector_file(a.prefix + ".rhs", lp.f);
  if (lp.capacity.size() > 0) io::write_vector_file(a.prefix + ".cap", lp.capacity);
  std::cout << lp.name << ": n = " << lp.a.rows() << ", nnz = " << lp.a.nonZeros() << ", edges = "
            << lp.graph.num_edges() << "\n";
  return 0;
}

struct PartitionArgs {
  std::string graph, out;
  Index n_omega = 16;
  std::uint64_t seed = 0;
  double balance_tol = 0.1;
};

int cmd_partition(const PartitionArgs& a) {
  const WeightedGraph g = io::read_graph_file(a.graph);
  PartitionOptions opts;
  opts.balance_tol = a.balance_tol;
  const Partition p = partition_balanced(g, a.n_omega, a.seed, opts);
  auto out = open_out(a.out);
  write_partition(out, p);
  std::cout << p.num_subdomains() << " subdomains, sizes " << p.min_size() << ".." << p.max_size() << "\n";
  for (Index k : p.disconnected) std::cout << "note: subdomain " << k << " is disconnected\n";
  return 0;
}

struct ClusterArgs {
  std::string graph, partition, out, centroid = "physical";
  Index m = 4;
  int restarts = 10;
  bool keep_fragments = false;
  std::uint64_t seed = 0;
};

int cmd_cluster(const ClusterArgs& a) {
  const WeightedGraph g = io::read_graph_file(a.graph);
  const Partition p = load_partition(a.partition);
  ClusterOptions opts;
  opts.per_subdomain = {a.m};
  opts.kmeans.restarts = a.restarts;
  opts.merge_fragments = !a.keep_fragments;
  if (a.centroid == "spectral") opts.centroid_rule = CentroidRule::spectral;
  else if (a.centroid != "physical") throw Error(ErrorCode::config_error, "unknown centroid rule " + a.centroid);
  const ClusterSet cs = cluster_subdomains(g, p, opts, a.seed);
  auto out = open_out(a.out);
  write_clusters(out, cs);
  std::cout << cs.size() << " aggregates\n";
  for (const auto& r : cs.reports) std::cout << "note: " << r << "\n";
  return 0;
}

struct ProlongArgs {
  std::string matrix, graph, partition, clusters, method = "MC-glo", oversample = "vertex", out;
  double delta = 0.1;
};

int cmd_prolong(const ProlongArgs& a) {
  const SparseMatrix A = io::read_matrix_market_file(a.matrix);
  const WeightedGraph g = io::read_graph_file(a.graph);
  const ProlongationKind kind = parse_prolongation_kind(a.method);
  Partition p = load_partition(a.partition);
  if (is_local(kind)) p = oversampled(g, std::move(p), a.delta, a.oversample);
  ClusterSet cs = [&] {
    auto in = open_in(a.clusters);
    return read_clusters(in);
  }();
  const Prolongation P = build_prolongation(kind, A, cs, p);
  io::write_matrix_market_file(a.out, P.p);
  auto meta = open_out(a.out + ".cols");
  write_column_info(meta, P);
  std::cout << to_string(kind) << ": " << P.rows() << " x " << P.cols() << ", nnz = " << P.p.nonZeros() << "\n";
  for (const auto& r : P.reports) std::cout << "note: " << r << "\n";
  return 0;
}

struct SolveArgs {
  std::string matrix, rhs, prolongation, reference, capacity, out;
  double tau = 0.0;
  Index steps = 0;
  double initial = 0.0;
};

int cmd_solve(const SolveArgs& a) {
  const SparseMatrix A = io::read_matrix_market_file(a.matrix);
  const Vector f = io::read_vector_file(a.rhs);
  std::optional<SparseMatrix> P;
  if (!a.prolongation.empty()) P = io::read_matrix_market_file(a.prolongation);
  Vector u;
  if (a.steps > 0) {
    const Vector c = a.capacity.empty() ? Vector::Ones(A.rows()) : io::read_vector_file(a.capacity);
    TransientConfig tc;
    tc.tau = a.tau;
    tc.steps = a.steps;
    tc.u0 = Vector::Constant(A.rows(), a.initial);
    u = solve_parabolic(c, A, f, tc, P).states.back();
  } else if (P) {
    u = solve_steady(galerkin_coarse(A, f, *P)).u_ms;
  } else {
    u = solve_fine(A, f);
  }
  if (!a.out.empty()) io::write_vector_file(a.out, u);
  if (!a.reference.empty()) {
    const ErrorPair e = relative_errors(io::read_vector_file(a.reference), u, A);
    std::cout << "e1 = " << io::format_double(e.e1) << " %, e2 = " << io::format_double(e.e2) << " %\n";
  }
  if (P) std::cout << "galerkin residual = " << io::format_double(galerkin_residual(*P, A, f, u)) << "\n";
  return 0;
}

struct RunArgs {
  std::string config, output;
  std::vector<std::string> sets;
  int workers = 0;
  bool summary = false;
};

int cmd_run(const RunArgs& a) {
  std::vector<std::string> sets = a.sets;
  if (!a.output.empty()) sets.push_back("experiment.output=" + a.output);
  if (a.workers > 0) sets.push_back("experiment.workers=" + std::to_string(a.workers));
  const ExperimentConfig cfg = make_config(a.config, sets);
  const Index failed = run(cfg);
  const auto results = (std::filesystem::path(cfg.output) / "results.csv").string();
  std::cout << "wrote " << results << "\n";
  if (a.summary) {
    auto in = open_in(results);
    std::cout << emit_summary(in);
  }
  if (failed > 0) {
    std::cerr << failed << " row(s) failed; see the status column\n";
    return 1;
  }
  return 0;
}

int cmd_report(const std::string& csv) {
  auto in = open_in(csv);
  std::cout << emit_summary(in);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-based multiscale coarsening: partition, cluster, prolong and solve"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a test problem (graph, operator, rhs)");
  g->add_option("--config", gen.config, "Experiment config supplying the [problem] section");
  g->add_option("--family", gen.family, "fem | heat | pore | file");
  g->add_option("--nx", gen.nx, "Grid or lattice size in x");
  g->add_option("--ny", gen.ny, "Grid or lattice size in y");
  g->add_option("--set", gen.sets, "Config override section.key=value (repeatable)");
  g->add_option("--seed", gen.seed, "Seed for random generators");
  g->add_option("--prefix", gen.prefix, "Output prefix for .graph/.mtx/.rhs/.cap")->capture_default_str();

  PartitionArgs part;
  auto* p = app.add_subcommand("partition", "Balanced partition into subdomains");
  p->add_option("--graph", part.graph, "Graph file")->required();
  p->add_option("--n-omega", part.n_omega, "Number of subdomains")->capture_default_str();
  p->add_option("--seed", part.seed, "Seed")->capture_default_str();
  p->add_option("--balance-tol", part.balance_tol, "Allowed max/min size excess")->capture_default_str();
  p->add_option("--out", part.out, "Partition file (vertex subdomain)")->required();

  ClusterArgs clu;
  auto* c = app.add_subcommand("cluster", "Spectral clustering inside every subdomain");
  c->add_option("--graph", clu.graph, "Graph file")->required();
  c->add_option("--partition", clu.partition, "Partition file")->required();
  c->add_option("--m", clu.m, "Clusters per subdomain")->capture_default_str();
  c->add_option("--seed", clu.seed, "Seed")->capture_default_str();
  c->add_option("--restarts", clu.restarts, "k-means++ starts, lowest inertia wins")->capture_default_str()->check(CLI::PositiveNumber);
  c->add_flag("--keep-fragments", clu.keep_fragments, "Leave disconnected k-means clusters as they are");
  c->add_option("--centroid", clu.centroid, "physical | spectral")->capture_default_str();
  c->add_option("--out", clu.out, "Cluster file (vertex subdomain aggregate is_centroid)")->required();

  ProlongArgs pro;
  auto* r = app.add_subcommand("prolong", "Build a prolongation operator");
  r->add_option("--matrix", pro.matrix, "Operator (Matrix Market)")->required();
  r->add_option("--graph", pro.graph, "Graph file")->required();
  r->add_option("--partition", pro.partition, "Partition file")->required();
  r->add_option("--clusters", pro.clusters, "Cluster file")->required();
  r->add_option("--method", pro.method, "CF-glo | CF-loc | MC-glo | MC-loc")->capture_default_str();
  r->add_option("--delta", pro.delta, "Oversampling distance (local methods)")->capture_default_str();
  r->add_option("--oversample", pro.oversample, "vertex | closure | hops")->capture_default_str();
  r->add_option("--out", pro.out, "Prolongation (Matrix Market); metadata goes to <out>.cols")->required();

  SolveArgs sol;
  auto* s = app.add_subcommand("solve", "Fine or coarse (Galerkin) solve");
  s->add_option("--matrix", sol.matrix, "Operator (Matrix Market)")->required();
  s->add_option("--rhs", sol.rhs, "Right-hand side vector")->required();
  s->add_option("--prolongation", sol.prolongation, "Prolongation; omit for the fine solve");
  s->add_option("--reference", sol.reference, "Reference solution; prints e1 and e2");
  s->add_option("--steps", sol.steps, "Backward Euler steps (0 = steady)")->capture_default_str();
  s->add_option("--tau", sol.tau, "Time step");
  s->add_option("--capacity", sol.capacity, "Capacity vector (default ones)");
  s->add_option("--initial", sol.initial, "Constant initial state")->capture_default_str();
  s->add_option("--out", sol.out, "Solution vector output");

  RunArgs run_args;
  auto* x = app.add_subcommand("run", "Run a full parameter sweep");
  x->add_option("--config", run_args.config, "Experiment config (INI)");
  x->add_option("--set", run_args.sets, "Config override section.key=value (repeatable)");
  x->add_option("--output", run_args.output, "Output directory");
  x->add_option("--workers", run_args.workers, "Concurrent jobs");
  x->add_flag("--summary", run_args.summary, "Print the error table after the run");
  x->footer("Config keys and defaults:\n\n" + config_reference());

  std::string csv;
  auto* rep = app.add_subcommand("report", "Pivot a results CSV into error tables");
  rep->add_option("--csv", csv, "results.csv from `run`")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*g) return cmd_generate(gen);
    if (*p) return cmd_partition(part);
    if (*c) return cmd_cluster(clu);
    if (*r) return cmd_prolong(pro);
    if (*s) return cmd_solve(sol);
    if (*x) return cmd_run(run_args);
    if (*rep) return cmd_report(csv);
  } catch (const Error& e) {
    std::cerr << "msgr: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "msgr: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
