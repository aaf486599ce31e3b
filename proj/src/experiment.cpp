#include "msgr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "msgr/io.hpp"

namespace msgr {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

std::string to_string(ProblemFamily family) {
  switch (family) {
    case ProblemFamily::fem: return "fem";
    case ProblemFamily::heat: return "heat";
    case ProblemFamily::pore: return "pore";
    case ProblemFamily::file: return "file";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Problems

namespace {

SourceProfile source_profile(const ProblemConfig& c) {
  if (c.load == "uniform") return {};
  if (c.load == "wave") return wave_profile();
  if (c.load == "bump") return gaussian_bump(Point2(c.load_x, c.load_y), c.load_width);
  throw Error(ErrorCode::config_error, "unknown source profile '" + c.load + "'");
}

}  // namespace

LinearProblem build_problem(const ProblemConfig& c, std::uint64_t seed) {
  switch (c.family) {
    case ProblemFamily::fem: {
      FemGridSpec spec;
      if (c.field == "channels") {
        spec = channel_problem(c.nx, c.ny, c.contrast, c.perforated);
      } else if (c.field == "rotated") {
        spec.nx = c.nx;
        spec.ny = c.ny;
        spec.field = TensorField::rotated(c.d1, c.d2, c.theta);
      } else if (c.field == "isotropic") {
        spec.nx = c.nx;
        spec.ny = c.ny;
      } else {
        throw Error(ErrorCode::config_error, "unknown fem field '" + c.field + "'");
      }
      spec.source = c.source;
      spec.load = source_profile(c);
      return make_problem("fem-" + c.field, gen_fem_grid(spec));
    }
    case ProblemFamily::heat: {
      DirectionField b;
      if (c.direction == "circular") {
        b = circular_direction(Point2(c.center_x, c.center_y));
      } else if (c.direction == "constant") {
        b = constant_direction(c.angle);
      } else {
        throw Error(ErrorCode::config_error, "unknown heat direction '" + c.direction + "'");
      }
      return make_problem("heat", gen_aniso_heat(c.nx, c.ny, c.k_par, c.k_perp, b, c.source, source_profile(c)));
    }
    case ProblemFamily::pore: {
      PoreNetworkSpec spec = c.pore;
      spec.nx = c.nx;
      spec.ny = c.ny;
      spec.channels = PoreNetworkSpec::with_default_channels(c.nx, c.ny).channels;
      return make_problem("pore", gen_pore_network(spec, seed));
    }
    case ProblemFamily::file: {
      std::optional<SparseMatrix> a;
      std::optional<Vector> f;
      if (!c.matrix_path.empty()) a = io::read_matrix_market_file(c.matrix_path);
      if (!c.rhs_path.empty()) f = io::read_vector_file(c.rhs_path);
      WeightedGraph g;
      if (!c.graph_path.empty()) {
        g = io::read_graph_file(c.graph_path);
      } else if (a) {
        g = io::graph_from_operator(*a);
      } else {
        throw Error(ErrorCode::config_error, "file problem needs a graph or a matrix");
      }
      return make_problem(fs::path(c.graph_path.empty() ? c.matrix_path : c.graph_path).stem().string(), g,
                          std::move(a), std::move(f));
    }
  }
  throw Error(ErrorCode::config_error, "unknown problem family");
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::config_error, "config: bad value '" + value + "' for " + key);
}

double parse_real(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) bad_value(key, value);
    return x;
  } catch (const std::logic_error&) {
    bad_value(key, value);
  }
}

long long parse_integer(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) bad_value(key, value);
    return x;
  } catch (const std::logic_error&) {
    bad_value(key, value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  bad_value(key, value);
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"experiment", {"name", "seeds", "output", "workers", "record_runtime", "reports", "export_vectors"}},
      {"problem",
       {"family", "nx", "ny", "source", "load", "load_x", "load_y", "load_width", "field", "contrast", "perforated", "d1", "d2", "theta", "k_par", "k_perp",
        "direction", "angle", "center_x", "center_y", "graph", "matrix", "rhs", "fine_radius_min",
        "fine_radius_max", "coarse_radius_min", "coarse_radius_max", "viscosity", "jitter",
        "diagonal_probability", "capacity_min", "capacity_max", "outflow_alpha", "source_strength"}},
      {"sweep", {"n_omega", "m", "delta_h", "methods", "oversample", "centroid", "partial", "kmeans_restarts"}},
      {"transient", {"tau", "steps", "initial"}},
  };
  return keys;
}

ExperimentConfig from_tree(const pt::ptree& tree) {
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) throw Error(ErrorCode::config_error, "config: unknown section [" + section + "]");
    if (!body.data().empty() && body.empty()) {
      throw Error(ErrorCode::config_error, "config: key '" + section + "' outside a section");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) {
        throw Error(ErrorCode::config_error, "config: unknown key '" + key + "' in [" + section + "]");
      }
    }
  }

  ExperimentConfig c;
  auto get = [&tree](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return trim(*v);
    return std::nullopt;
  };
  auto real = [&](const std::string& path, double& out) {
    if (auto v = get(path)) out = parse_real(path, *v);
  };
  auto integer = [&](const std::string& path, auto& out) {
    if (auto v = get(path)) out = static_cast<std::remove_reference_t<decltype(out)>>(parse_integer(path, *v));
  };
  auto boolean = [&](const std::string& path, bool& out) {
    if (auto v = get(path)) out = parse_bool(path, *v);
  };
  auto text = [&](const std::string& path, std::string& out) {
    if (auto v = get(path)) out = *v;
  };

  text("experiment.name", c.name);
  text("experiment.output", c.output);
  integer("experiment.workers", c.workers);
  boolean("experiment.record_runtime", c.record_runtime);
  boolean("experiment.reports", c.write_reports);
  boolean("experiment.export_vectors", c.export_vectors);
  if (auto v = get("experiment.seeds")) {
    c.seeds.clear();
    for (const auto& s : split_list(*v)) {
      const long long x = parse_integer("experiment.seeds", s);
      if (x < 0) bad_value("experiment.seeds", s);
      c.seeds.push_back(static_cast<std::uint64_t>(x));
    }
  }

  ProblemConfig& p = c.problem;
  if (auto v = get("problem.family")) {
    if (*v == "fem") p.family = ProblemFamily::fem;
    else if (*v == "heat") p.family = ProblemFamily::heat;
    else if (*v == "pore") p.family = ProblemFamily::pore;
    else if (*v == "file") p.family = ProblemFamily::file;
    else bad_value("problem.family", *v);
  }
  if (p.family == ProblemFamily::pore) p.nx = p.ny = 64;
  integer("problem.nx", p.nx);
  integer("problem.ny", p.ny);
  real("problem.source", p.source);
  text("problem.load", p.load);
  real("problem.load_x", p.load_x);
  real("problem.load_y", p.load_y);
  real("problem.load_width", p.load_width);
  text("problem.field", p.field);
  real("problem.contrast", p.contrast);
  boolean("problem.perforated", p.perforated);
  real("problem.d1", p.d1);
  real("problem.d2", p.d2);
  real("problem.theta", p.theta);
  real("problem.k_par", p.k_par);
  real("problem.k_perp", p.k_perp);
  text("problem.direction", p.direction);
  real("problem.angle", p.angle);
  real("problem.center_x", p.center_x);
  real("problem.center_y", p.center_y);
  text("problem.graph", p.graph_path);
  text("problem.matrix", p.matrix_path);
  text("problem.rhs", p.rhs_path);
  real("problem.fine_radius_min", p.pore.fine_radius_min);
  real("problem.fine_radius_max", p.pore.fine_radius_max);
  real("problem.coarse_radius_min", p.pore.coarse_radius_min);
  real("problem.coarse_radius_max", p.pore.coarse_radius_max);
  real("problem.viscosity", p.pore.viscosity);
  real("problem.jitter", p.pore.jitter);
  real("problem.diagonal_probability", p.pore.diagonal_probability);
  real("problem.capacity_min", p.pore.capacity_min);
  real("problem.capacity_max", p.pore.capacity_max);
  real("problem.outflow_alpha", p.pore.outflow_alpha);
  real("problem.source_strength", p.pore.source_strength);

  if (auto v = get("sweep.n_omega")) {
    c.n_omega.clear();
    for (const auto& s : split_list(*v)) c.n_omega.push_back(parse_integer("sweep.n_omega", s));
  }
  if (auto v = get("sweep.m")) {
    c.m.clear();
    for (const auto& s : split_list(*v)) c.m.push_back(parse_integer("sweep.m", s));
  }
  if (auto v = get("sweep.delta_h")) {
    c.delta_h.clear();
    for (const auto& s : split_list(*v)) c.delta_h.push_back(parse_real("sweep.delta_h", s));
  }
  if (auto v = get("sweep.methods")) {
    c.methods.clear();
    for (const auto& s : split_list(*v)) c.methods.push_back(parse_prolongation_kind(s));
  }
  if (auto v = get("sweep.oversample")) {
    if (*v == "vertex") c.oversample = OversampleRule::vertex;
    else if (*v == "closure") c.oversample = OversampleRule::closure;
    else if (*v == "hops") c.oversample = OversampleRule::hops;
    else bad_value("sweep.oversample", *v);
  }
  if (auto v = get("sweep.centroid")) {
    if (*v == "physical") c.centroid = CentroidRule::physical;
    else if (*v == "spectral") c.centroid = CentroidRule::spectral;
    else bad_value("sweep.centroid", *v);
  }
  {
    Index restarts = c.kmeans_restarts;
    integer("sweep.kmeans_restarts", restarts);
    c.kmeans_restarts = static_cast<int>(restarts);
  }
  if (auto v = get("sweep.partial")) {
    if (*v == "unconstrained") c.partial = PartialAggregatePolicy::unconstrained;
    else if (*v == "intersection") c.partial = PartialAggregatePolicy::constrain_intersection;
    else bad_value("sweep.partial", *v);
  }

  if (tree.find("transient") != tree.not_found()) {
    TransientSettings t;
    real("transient.tau", t.tau);
    integer("transient.steps", t.steps);
    real("transient.initial", t.initial);
    c.transient = t;
  }
  c.validate();
  return c;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::config_error, "config: " + what); };
  if (n_omega.empty()) fail("n_omega list is empty");
  if (m.empty()) fail("m list is empty");
  if (delta_h.empty()) fail("delta_h list is empty");
  if (methods.empty()) fail("method list is empty");
  if (seeds.empty()) fail("seed list is empty");
  for (Index v : n_omega) {
    if (v < 1) fail("n_omega entries must be >= 1");
  }
  for (Index v : m) {
    if (v < 1) fail("m entries must be >= 1");
  }
  for (double d : delta_h) {
    if (!(d >= 0)) fail("delta_h entries must be >= 0");
  }
  if (workers < 1) fail("workers must be >= 1");
  if (kmeans_restarts < 1) fail("kmeans_restarts must be >= 1");
  if (problem.family != ProblemFamily::file && (problem.nx < 2 || problem.ny < 2)) fail("nx and ny must be >= 2");
  if (transient) {
    if (!(transient->tau > 0)) fail("transient tau must be positive");
    if (transient->steps < 1) fail("transient steps must be >= 1");
  }
  if (output.empty()) fail("output directory is empty");
}

ExperimentConfig parse_config(std::istream& in, const std::vector<std::string>& overrides) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::config_error, std::string("config: ") + e.what());
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    const std::string key = eq == std::string::npos ? "" : trim(o.substr(0, eq));
    if (key.find('.') == std::string::npos) {
      throw Error(ErrorCode::config_error, "config: override '" + o + "' is not section.key=value");
    }
    tree.put(pt::ptree::path_type(key, '.'), trim(o.substr(eq + 1)));
  }
  return from_tree(tree);
}

ExperimentConfig parse_config(std::istream& in) { return parse_config(in, {}); }

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config_error, "config: cannot open " + path);
  return parse_config(in);
}

std::string config_reference() {
  return R"([experiment]
name = <family>            # value of the test column
seeds = 0                  # comma list; one problem/partition/clustering per seed
output = msgr-out          # output directory
workers = 1                # concurrent (seed, N_omega) jobs
record_runtime = false     # write wall-clock ms into results.csv (else 0)
reports = true             # per-row convergence reports under reports/
export_vectors = false     # write A, u and u_ms under vectors/

[problem]
family = fem               # fem | heat | pore | file
nx = 40                    # grid or lattice size (pore default 64)
ny = 40
source = 1                 # source magnitude (fem, heat)
load = uniform             # source profile: uniform | wave | bump
load_x = 0.3               # bump center and width
load_y = 0.6
load_width = 0.1
field = channels           # fem: channels | rotated | isotropic
contrast = 1e4             # channel conductivity over background
perforated = false         # channels field: cut four circular holes
d1 = 1                     # rotated field principal values and angle
d2 = 1e-4
theta = 1.0471975511965976
k_par = 1                  # heat: conductivity along and across b
k_perp = 1e-3
direction = circular       # heat: circular | constant
angle = 0                  # constant direction angle
center_x = 0.5             # circular direction center
center_y = 0.5
graph =                    # file: graph text file
matrix =                   # file: Matrix Market operator
rhs =                      # file: right-hand side vector
fine_radius_min = 0.05     # pore: radii relative to lattice spacing
fine_radius_max = 0.15
coarse_radius_min = 0.6
coarse_radius_max = 0.9
viscosity = 1e-3
jitter = 0.2
diagonal_probability = 0.1
capacity_min = 0.1
capacity_max = 0.82
outflow_alpha = 1
source_strength = 1

[sweep]
n_omega = 16               # comma lists
m = 4
delta_h = 0.1              # 'inf' oversamples to the whole graph
methods = CF-glo, CF-loc, MC-glo, MC-loc
oversample = vertex        # vertex | closure | hops (delta_h counted in hops)
centroid = physical        # physical | spectral
partial = unconstrained    # MC-loc cut aggregates: unconstrained | intersection
kmeans_restarts = 10       # k-means++ starts per subdomain, lowest inertia wins

[transient]                # presence of the section enables backward Euler
tau = 5
steps = 20
initial = 0                # constant initial state
)";
}

// ---------------------------------------------------------------------------
// Sweep

std::string ResultRow::method() const { return is_cf(kind) ? "CF" : "MC"; }
std::string ResultRow::scope() const { return is_local(kind) ? "loc" : "glo"; }

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string describe(const std::exception& e) {
  std::string msg;
  if (const auto* err = dynamic_cast<const Error*>(&e)) msg = to_string(err->code()) + ": ";
  msg += e.what();
  std::replace(msg.begin(), msg.end(), ',', ';');
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  return "error: " + msg;
}

struct SeedContext {
  std::optional<LinearProblem> problem;
  Vector u_steady;
  Vector u_final;
  Vector capacity;
  TransientConfig transient;
  std::string error;
};

SeedContext prepare_seed(const ExperimentConfig& config, std::uint64_t seed) {
  SeedContext ctx;
  try {
    ctx.problem = build_problem(config.problem, seed);
    const LinearProblem& lp = *ctx.problem;
    ctx.u_steady = solve_fine(lp.a, lp.f);
    if (config.transient) {
      const Index n = lp.a.rows();
      ctx.capacity = lp.capacity.size() == n ? lp.capacity : Vector::Ones(n);
      ctx.transient.tau = config.transient->tau;
      ctx.transient.steps = config.transient->steps;
      ctx.transient.u0 = Vector::Constant(n, config.transient->initial);
      ctx.u_final = solve_parabolic(ctx.capacity, lp.a, lp.f, ctx.transient).states.back();
    }
  } catch (const std::exception& e) {
    ctx.error = describe(e);
  }
  return ctx;
}

struct Job {
  std::size_t seed_index = 0;
  Index n_omega = 0;
};

/// Enumerates the rows of one job in output order.
std::vector<ResultRow> job_rows(const ExperimentConfig& c, const Job& job, const std::string& test) {
  std::vector<ResultRow> rows;
  auto add = [&](ProlongationKind kind, Index m, std::optional<double> delta) {
    ResultRow r;
    r.test = test;
    r.kind = kind;
    r.n_omega = job.n_omega;
    r.m = m;
    r.delta_h = delta;
    r.seed = c.seeds[job.seed_index];
    rows.push_back(std::move(r));
  };
  for (Index m : c.m) {
    for (ProlongationKind k : c.methods) {
      if (!is_local(k)) add(k, m, std::nullopt);
    }
    for (double d : c.delta_h) {
      for (ProlongationKind k : c.methods) {
        if (is_local(k)) add(k, m, d);
      }
    }
  }
  return rows;
}

void fail_rows(std::vector<ResultRow>& rows, std::size_t begin, std::size_t end, const std::string& status) {
  for (std::size_t i = begin; i < end; ++i) rows[i].status = status;
}

void solve_row(ResultRow& row, const ExperimentConfig& config, const SeedContext& ctx,
               const ClusterSet& clusters, const Partition& partition) {
  const LinearProblem& lp = *ctx.problem;
  try {
    auto t0 = Clock::now();
    const Prolongation p = row.kind == ProlongationKind::mc_local
                               ? mc_local(lp.a, clusters, partition, config.partial)
                               : build_prolongation(row.kind, lp.a, clusters, partition);
    row.times.prolong_ms = ms_since(t0);
    t0 = Clock::now();
    const CoarseModel model = galerkin_coarse(lp.a, lp.f, p.p);
    const SteadySolution steady = solve_steady(model);
    ErrorPair err;
    Vector final_ms;
    if (config.transient) {
      final_ms = solve_parabolic(ctx.capacity, lp.a, lp.f, ctx.transient, p.p).states.back();
      err = relative_errors(ctx.u_final, final_ms, lp.a);
    } else {
      err = relative_errors(ctx.u_steady, steady.u_ms, lp.a);
    }
    row.times.solve_ms = ms_since(t0);
    row.e1 = err.e1;
    row.e2 = err.e2;
    row.n = lp.a.rows();
    row.n_c = p.cols();
    RunArtifacts art{&lp.graph, &clusters, &partition, lp.a, lp.f, p.p, ctx.u_steady, steady.u_ms};
    row.report = verify_bound(art);
    if (config.export_vectors) row.u_ms = config.transient ? final_ms : steady.u_ms;
  } catch (const std::exception& e) {
    row.status = describe(e);
  }
}

Partition oversample_for(const ExperimentConfig& c, const WeightedGraph& g, const Partition& base, double delta) {
  switch (c.oversample) {
    case OversampleRule::vertex: return oversample(g, base, delta, OversampleMode::vertex);
    case OversampleRule::closure: return oversample(g, base, delta, OversampleMode::subdomain_closure);
    case OversampleRule::hops: {
      const Index hops = std::isinf(delta) ? g.num_vertices() : static_cast<Index>(std::llround(delta));
      return graph_distance_oversample(g, base, hops);
    }
  }
  return base;
}

std::vector<ResultRow> run_job(const ExperimentConfig& c, const Job& job, const SeedContext& ctx) {
  const std::uint64_t seed = c.seeds[job.seed_index];
  std::vector<ResultRow> rows = job_rows(c, job, c.label());
  if (!ctx.error.empty()) {
    fail_rows(rows, 0, rows.size(), ctx.error);
    return rows;
  }
  const LinearProblem& lp = *ctx.problem;
  const WeightedGraph& g = lp.graph;

  auto t0 = Clock::now();
  Partition base;
  try {
    base = partition_balanced(g, job.n_omega, seed);
  } catch (const std::exception& e) {
    fail_rows(rows, 0, rows.size(), describe(e));
    return rows;
  }
  const double partition_ms = ms_since(t0);

  std::size_t next = 0;
  for (Index m : c.m) {
    std::size_t count = 0;
    for (ProlongationKind k : c.methods) count += is_local(k) ? c.delta_h.size() : 1;
    const std::size_t begin = next, end = next + count;
    next = end;

    t0 = Clock::now();
    ClusterSet clusters;
    try {
      ClusterOptions opts;
      opts.per_subdomain = {m};
      opts.centroid_rule = c.centroid;
      opts.kmeans.restarts = c.kmeans_restarts;
      clusters = cluster_subdomains(g, base, opts, seed);
    } catch (const std::exception& e) {
      fail_rows(rows, begin, end, describe(e));
      continue;
    }
    const double cluster_ms = ms_since(t0);

    std::size_t i = begin;
    for (ProlongationKind k : c.methods) {
      if (is_local(k)) continue;
      rows[i].times.partition_ms = partition_ms;
      rows[i].times.cluster_ms = cluster_ms;
      solve_row(rows[i], c, ctx, clusters, base);
      ++i;
    }
    for (double d : c.delta_h) {
      std::size_t local_count = 0;
      for (ProlongationKind k : c.methods) local_count += is_local(k) ? 1 : 0;
      if (local_count == 0) continue;
      t0 = Clock::now();
      Partition over;
      try {
        over = oversample_for(c, g, base, d);
      } catch (const std::exception& e) {
        fail_rows(rows, i, i + local_count, describe(e));
        i += local_count;
        continue;
      }
      const double over_ms = ms_since(t0);
      for (ProlongationKind k : c.methods) {
        if (!is_local(k)) continue;
        rows[i].times.partition_ms = partition_ms + over_ms;
        rows[i].times.cluster_ms = cluster_ms;
        solve_row(rows[i], c, ctx, clusters, over);
        ++i;
      }
    }
  }
  return rows;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::vector<SeedContext> contexts;
  contexts.reserve(config.seeds.size());
  for (std::uint64_t s : config.seeds) contexts.push_back(prepare_seed(config, s));

  std::vector<Job> jobs;
  for (std::size_t s = 0; s < config.seeds.size(); ++s) {
    for (Index n : config.n_omega) jobs.push_back({s, n});
  }
  std::vector<std::vector<ResultRow>> results(jobs.size());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (std::size_t j = cursor++; j < jobs.size(); j = cursor++) {
      results[j] = run_job(config, jobs[j], contexts[jobs[j].seed_index]);
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(config.workers), jobs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<ResultRow> rows;
  for (auto& r : results) std::move(r.begin(), r.end(), std::back_inserter(rows));
  return rows;
}

namespace {

std::string delta_text(const ResultRow& r) { return r.delta_h ? io::format_double(*r.delta_h) : ""; }

std::string row_key(const ResultRow& r) {
  std::string key = r.test + '_' + r.method() + '-' + r.scope() + "_N" + std::to_string(r.n_omega) + "_M" +
                    std::to_string(r.m);
  if (r.delta_h) key += "_d" + delta_text(r);
  return key + "_s" + std::to_string(r.seed);
}

}  // namespace

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows, bool record_runtime) {
  using io::format_double;
  out << "test,method,scope,N_omega,M,delta_H,e1,e2,n,n_c,runtime_ms,status,seed\n";
  for (const ResultRow& r : rows) {
    out << r.test << ',' << r.method() << ',' << r.scope() << ',' << r.n_omega << ',' << r.m << ','
        << delta_text(r) << ',';
    if (r.ok()) {
      out << format_double(r.e1) << ',' << format_double(r.e2) << ',' << r.n << ',' << r.n_c << ',';
    } else {
      out << ",,,,";
    }
    out << (record_runtime ? format_double(r.times.total()) : std::string("0")) << ',' << r.status << ','
        << r.seed << '\n';
  }
}

void write_timings_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  using io::format_double;
  out << "test,method,scope,N_omega,M,delta_H,seed,partition_ms,cluster_ms,prolong_ms,solve_ms,total_ms\n";
  for (const ResultRow& r : rows) {
    out << r.test << ',' << r.method() << ',' << r.scope() << ',' << r.n_omega << ',' << r.m << ','
        << delta_text(r) << ',' << r.seed << ',' << format_double(r.times.partition_ms) << ','
        << format_double(r.times.cluster_ms) << ',' << format_double(r.times.prolong_ms) << ','
        << format_double(r.times.solve_ms) << ',' << format_double(r.times.total()) << '\n';
  }
}

void write_bounds_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  using io::format_double;
  out << "test,method,scope,N_omega,M,delta_H,seed,H,C_ratio,C_ratio_degree,f_dual,error_A,C_fit,"
         "c_fit_d,orthogonality_relative,max_overlap\n";
  for (const ResultRow& r : rows) {
    if (!r.report) continue;
    const ConvergenceReport& b = *r.report;
    out << r.test << ',' << r.method() << ',' << r.scope() << ',' << r.n_omega << ',' << r.m << ','
        << delta_text(r) << ',' << r.seed << ',' << format_double(b.h) << ',' << format_double(b.c_ratio) << ','
        << format_double(b.c_ratio_degree) << ',' << format_double(b.f_dual) << ','
        << format_double(b.error_a) << ',' << format_double(b.c_fit) << ',' << format_double(b.c_fit_d)
        << ',' << format_double(b.orthogonality_relative) << ',' << b.max_overlap << '\n';
  }
}

Index run(const ExperimentConfig& config) {
  const std::vector<ResultRow> rows = run_experiment(config);
  const fs::path dir(config.output);
  fs::create_directories(dir);
  auto open = [](const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw Error(ErrorCode::invalid_argument, "cannot write " + p.string());
    return out;
  };
  {
    auto out = open(dir / "results.csv");
    write_results_csv(out, rows, config.record_runtime);
  }
  {
    auto out = open(dir / "timings.csv");
    write_timings_csv(out, rows);
  }
  {
    auto out = open(dir / "bounds.csv");
    write_bounds_csv(out, rows);
  }
  if (config.write_reports) {
    fs::create_directories(dir / "reports");
    for (const ResultRow& r : rows) {
      if (!r.report) continue;
      auto out = open(dir / "reports" / (row_key(r) + ".csv"));
      write_report_csv(out, *r.report);
    }
  }
  if (config.export_vectors) {
    fs::create_directories(dir / "vectors");
    for (std::uint64_t s : config.seeds) {
      const SeedContext ctx = prepare_seed(config, s);
      if (!ctx.problem) continue;
      const std::string stem = config.label() + "_s" + std::to_string(s);
      io::write_matrix_market_file((dir / "vectors" / (stem + "_A.mtx")).string(), ctx.problem->a);
      io::write_vector_file((dir / "vectors" / (stem + "_f.txt")).string(), ctx.problem->f);
      io::write_vector_file((dir / "vectors" / (stem + "_u.txt")).string(),
                            config.transient ? ctx.u_final : ctx.u_steady);
    }
    for (const ResultRow& r : rows) {
      if (r.u_ms.size() > 0) io::write_vector_file((dir / "vectors" / (row_key(r) + "_ums.txt")).string(), r.u_ms);
    }
  }
  Index failed = 0;
  for (const ResultRow& r : rows) failed += r.ok() ? 0 : 1;
  return failed;
}

// ---------------------------------------------------------------------------
// Summary

std::string emit_summary(std::istream& csv) {
  std::string line;
  std::vector<std::string> header;
  if (!std::getline(csv, line)) return "";
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(trim(cell));
  }
  auto column = [&header](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::parse_error, "summary: missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_test = column("test"), c_method = column("method"), c_scope = column("scope"),
                    c_n = column("N_omega"), c_m = column("M"), c_delta = column("delta_H"), c_e1 = column("e1"),
                    c_e2 = column("e2"), c_status = column("status");
  const auto seed_it = std::find(header.begin(), header.end(), "seed");
  const bool has_seed = seed_it != header.end();
  const std::size_t c_seed = static_cast<std::size_t>(seed_it - header.begin());

  struct Block {
    std::set<std::string> methods;
    // (M, scope order, delta) -> method -> (e1, e2) text
    std::map<std::tuple<long long, int, double>, std::map<std::string, std::pair<std::string, std::string>>> cells;
  };
  std::map<std::tuple<std::string, std::string, long long>, Block> blocks;
  std::set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(csv, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> f;
    {
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) f.push_back(trim(cell));
      if (!line.empty() && line.back() == ',') f.emplace_back();
    }
    if (f.size() < header.size()) {
      throw Error(ErrorCode::parse_error, "summary: short row at line " + std::to_string(line_no));
    }
    const std::string seed = has_seed ? f[c_seed] : "";
    const std::string key = f[c_test] + '|' + seed + '|' + f[c_n] + '|' + f[c_m] + '|' + f[c_scope] + '|' +
                            f[c_delta] + '|' + f[c_method];
    if (!seen.insert(key).second) {
      throw Error(ErrorCode::parse_error, "summary: duplicated row key at line " + std::to_string(line_no));
    }
    Block& b = blocks[{f[c_test], seed, parse_integer("N_omega", f[c_n])}];
    b.methods.insert(f[c_method]);
    const int scope_order = f[c_scope] == "glo" ? 0 : 1;
    const double delta = f[c_delta].empty() ? 0.0 : parse_real("delta_H", f[c_delta]);
    auto& cell = b.cells[{parse_integer("M", f[c_m]), scope_order, delta}][f[c_method]];
    if (f[c_status] == "ok") {
      auto fixed = [](const std::string& s) {
        std::ostringstream o;
        o << std::fixed << std::setprecision(2) << parse_real("e", s);
        return o.str();
      };
      cell = {fixed(f[c_e1]), fixed(f[c_e2])};
    } else {
      cell = {"fail", "fail"};
    }
  }

  std::ostringstream out;
  bool first = true;
  for (const auto& [bkey, block] : blocks) {
    const auto& [test, seed, n_omega] = bkey;
    if (!first) out << '\n';
    first = false;
    out << test << "  N_omega = " << n_omega;
    if (!seed.empty()) out << "  seed = " << seed;
    out << "  (relative errors in %)\n";
    std::ostringstream head;
    head << std::left << std::setw(6) << "M" << std::setw(14) << "scope";
    for (const auto& m : block.methods) head << std::right << std::setw(10) << (m + " e1") << std::setw(10) << (m + " e2");
    out << head.str() << '\n' << std::string(head.str().size(), '-') << '\n';
    for (const auto& [ckey, by_method] : block.cells) {
      const auto& [m, scope_order, delta] = ckey;
      const std::string scope = scope_order == 0 ? "glo" : "loc d=" + io::format_double(delta);
      out << std::left << std::setw(6) << m << std::setw(14) << scope;
      for (const auto& method : block.methods) {
        const auto it = by_method.find(method);
        const auto cell = it == by_method.end() ? std::pair<std::string, std::string>{"-", "-"} : it->second;
        out << std::right << std::setw(10) << cell.first << std::setw(10) << cell.second;
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace msgr
