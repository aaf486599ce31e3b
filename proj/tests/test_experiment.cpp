#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "msgr/experiment.hpp"
#include "msgr/io.hpp"
#include "msgr/partition.hpp"

using namespace msgr;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text, const std::vector<std::string>& overrides = {}) {
  std::istringstream in(text);
  return parse_config(in, overrides);
}

std::optional<ErrorCode> code_of(const std::string& text) {
  try {
    (void)parse(text);
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

std::string results_text(const ExperimentConfig& c) {
  std::ostringstream out;
  write_results_csv(out, run_experiment(c), false);
  return out.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("msgr_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* small_fem = R"(
[problem]
family = fem
nx = 12
ny = 12
field = channels
load = bump
[sweep]
n_omega = 4
m = 2
delta_h = 0.2
)";

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("config defaults and explicit values") {
  const ExperimentConfig c = parse(R"(
# comment
[experiment]
name = demo
seeds = 0, 3
[problem]
family = heat
nx = 20
ny = 21
k_perp = 1e-9
[sweep]
n_omega = 4, 16
m = 1,2 , 4
delta_h = 0.1, inf
methods = MC-glo, CF-loc
[transient]
steps = 7
)");
  CHECK(c.label() == "demo");
  CHECK(c.seeds == std::vector<std::uint64_t>{0, 3});
  CHECK(c.problem.family == ProblemFamily::heat);
  CHECK(c.problem.nx == 20);
  CHECK(c.problem.ny == 21);
  CHECK(c.problem.k_perp == 1e-9);
  CHECK(c.n_omega == std::vector<Index>{4, 16});
  CHECK(c.m == std::vector<Index>{1, 2, 4});
  REQUIRE(c.delta_h.size() == 2);
  CHECK(std::isinf(c.delta_h[1]));
  CHECK(c.methods == std::vector<ProlongationKind>{ProlongationKind::mc_global, ProlongationKind::cf_local});
  REQUIRE(c.transient);
  CHECK(c.transient->steps == 7);
  CHECK(c.transient->tau == 5.0);
  CHECK(c.kmeans_restarts == 10);

  const ExperimentConfig d = parse("");
  CHECK(d.label() == "fem");
  CHECK(d.methods.size() == 4);
  CHECK_FALSE(d.transient);
  CHECK(parse("[problem]\nfamily = pore\n").problem.nx == 64);
}

TEST_CASE("overrides replace and add keys") {
  const ExperimentConfig c = parse(small_fem, {"sweep.m=8", "experiment.name = over", "transient.tau=2"});
  CHECK(c.m == std::vector<Index>{8});
  CHECK(c.label() == "over");
  REQUIRE(c.transient);
  CHECK(c.transient->tau == 2.0);
  CHECK_THROWS_AS(parse(small_fem, {"m=8"}), Error);
}

TEST_CASE("config errors") {
  CHECK(code_of("[sweep]\nmethods =\n") == ErrorCode::config_error);
  CHECK(code_of("[sweep]\nm =\n") == ErrorCode::config_error);
  CHECK(code_of("[sweep]\nmethods = MC-glo, XY-glo\n").has_value());
  CHECK(code_of("[sweep]\nn_omega = 0\n") == ErrorCode::config_error);
  CHECK(code_of("[sweep]\ndelta_h = -1\n") == ErrorCode::config_error);
  CHECK(code_of("[sweep]\nkmeans_restarts = 0\n") == ErrorCode::config_error);
  CHECK(code_of("[problem]\nnx = ten\n") == ErrorCode::config_error);
  CHECK(code_of("[problem]\nfamily = plasma\n") == ErrorCode::config_error);
  CHECK(code_of("[problem]\ncolour = red\n") == ErrorCode::config_error);
  CHECK(code_of("[solver]\ntol = 1\n") == ErrorCode::config_error);
  CHECK(code_of("[transient]\nsteps = 0\n") == ErrorCode::config_error);
  CHECK(code_of("[experiment]\nworkers = 0\n") == ErrorCode::config_error);
  CHECK(code_of("[experiment]\nseeds = -1\n") == ErrorCode::config_error);
  CHECK_THROWS_AS(load_config("/nonexistent/msgr.ini"), Error);
}

TEST_CASE("the config reference names every section") {
  const std::string ref = config_reference();
  for (const char* s : {"[experiment]", "[problem]", "[sweep]", "[transient]", "kmeans_restarts"}) {
    CHECK(ref.find(s) != std::string::npos);
  }
}

TEST_CASE("rows come out in sweep order") {
  ExperimentConfig c = parse(small_fem, {"sweep.m=1,2", "sweep.delta_h=0.1,0.2"});
  const auto rows = run_experiment(c);
  // Per M: two global rows then two local rows per delta.
  REQUIRE(rows.size() == 12);
  CHECK(rows[0].kind == ProlongationKind::cf_global);
  CHECK(rows[1].kind == ProlongationKind::mc_global);
  CHECK(rows[2].kind == ProlongationKind::cf_local);
  CHECK(*rows[2].delta_h == 0.1);
  CHECK(rows[3].kind == ProlongationKind::mc_local);
  CHECK(*rows[4].delta_h == 0.2);
  CHECK(rows[6].m == 2);
  for (const auto& r : rows) {
    CHECK(r.ok());
    CHECK(r.n_c == 4 * r.m);
    CHECK(r.delta_h.has_value() == (r.scope() == "loc"));
  }
}

TEST_CASE("full local rank reproduces the fine solution with CF-glo") {
  ExperimentConfig c = parse(small_fem, {"sweep.methods=CF-glo"});
  const LinearProblem lp = build_problem(c.problem, 0);
  const Partition p = partition_balanced(lp.graph, 4, 0);
  c.m = {p.max_size()};
  const auto rows = run_experiment(c);
  REQUIRE(rows.size() == 1);
  REQUIRE(rows[0].ok());
  CHECK(rows[0].n_c == rows[0].n);
  CHECK(rows[0].e1 <= 1e-7);
  CHECK(rows[0].e2 <= 1e-7);
}

TEST_CASE("MC-glo error decreases strictly as M doubles") {
  const ExperimentConfig c = parse(R"(
[problem]
family = fem
nx = 30
ny = 30
field = channels
load = bump
[sweep]
n_omega = 4
m = 1, 2, 4, 8, 16, 32
methods = MC-glo
)");
  const auto rows = run_experiment(c);
  REQUIRE(rows.size() == 6);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    INFO("M = ", rows[i].m);
    CHECK(rows[i].e1 < rows[i - 1].e1);
  }
}

TEST_CASE("identical configs give identical tables for any worker count") {
  ExperimentConfig c = parse(small_fem, {"sweep.n_omega=2,4,6", "experiment.seeds=0,1"});
  const std::string first = results_text(c);
  CHECK(first == results_text(c));
  c.workers = 4;
  CHECK(first == results_text(c));
}

TEST_CASE("seeds change the pore network") {
  const ExperimentConfig c = parse("[problem]\nfamily = pore\nnx = 12\nny = 12\n[sweep]\nn_omega = 4\nm = 2\n"
                                   "methods = MC-glo\n[experiment]\nseeds = 0, 1\n");
  const auto rows = run_experiment(c);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].e1 != rows[1].e1);
}

TEST_CASE("stage failures are recorded per row and the sweep continues") {
  ExperimentConfig c = parse(small_fem, {"sweep.m=2,500", "sweep.methods=CF-glo,MC-glo"});
  c.n_omega = {4, 400};
  const auto rows = run_experiment(c);
  REQUIRE(rows.size() == 8);
  // 12x12 with Dirichlet sides keeps 100 unknowns, so 400 subdomains fail.
  for (std::size_t i = 0; i < 4; ++i) CHECK(rows[i].ok());
  for (std::size_t i = 4; i < 8; ++i) {
    CHECK_FALSE(rows[i].ok());
    CHECK(rows[i].status.rfind("error: ", 0) == 0);
    CHECK(rows[i].status.find(',') == std::string::npos);
  }

  ExperimentConfig missing = parse("[problem]\nfamily = file\nmatrix = /nonexistent.mtx\n");
  missing.output = scratch_dir("missing").string();
  CHECK(run(missing) == 4);
  const std::string csv = slurp(fs::path(missing.output) / "results.csv");
  CHECK(csv.find(",,,,0,error: ") != std::string::npos);
}

TEST_CASE("run writes the tables and per-row reports") {
  ExperimentConfig c = parse(small_fem);
  c.output = scratch_dir("layout").string();
  CHECK(run(c) == 0);
  const fs::path dir(c.output);
  const std::string results = slurp(dir / "results.csv");
  CHECK(results.rfind("test,method,scope,N_omega,M,delta_H,e1,e2,n,n_c,runtime_ms,status,seed\n", 0) == 0);
  CHECK(std::count(results.begin(), results.end(), '\n') == 5);
  CHECK(fs::exists(dir / "timings.csv"));
  CHECK(fs::exists(dir / "bounds.csv"));
  CHECK(fs::exists(dir / "reports" / "fem_MC-loc_N4_M2_d0.2_s0.csv"));
  CHECK(fs::exists(dir / "reports" / "fem_CF-glo_N4_M2_s0.csv"));
  CHECK(results == slurp(dir / "results.csv"));
  fs::remove_all(dir);
}

TEST_CASE("errors are recomputable from exported vectors") {
  for (const char* extra : {"", "transient.steps=4"}) {
    std::vector<std::string> overrides{"experiment.export_vectors=true"};
    if (*extra) overrides.emplace_back(extra);
    ExperimentConfig c = parse(small_fem, overrides);
    c.output = scratch_dir("vectors").string();
    REQUIRE(run(c) == 0);
    const fs::path v = fs::path(c.output) / "vectors";
    const SparseMatrix a = io::read_matrix_market_file((v / "fem_s0_A.mtx").string());
    const Vector u = io::read_vector_file((v / "fem_s0_u.txt").string());
    for (const ResultRow& r : run_experiment(c)) {
      std::string key = "fem_" + r.method() + "-" + r.scope() + "_N4_M2";
      if (r.delta_h) key += "_d0.2";
      const Vector u_ms = io::read_vector_file((v / (key + "_s0_ums.txt")).string());
      const ErrorPair e = relative_errors(u, u_ms, a);
      CHECK(e.e1 == doctest::Approx(r.e1).epsilon(1e-12));
      CHECK(e.e2 == doctest::Approx(r.e2).epsilon(1e-12));
    }
    fs::remove_all(c.output);
  }
}

TEST_CASE("summary of an empty table is empty") {
  std::istringstream none("");
  CHECK(emit_summary(none).empty());
  std::istringstream header_only("test,method,scope,N_omega,M,delta_H,e1,e2,n,n_c,runtime_ms,status,seed\n");
  CHECK(emit_summary(header_only).empty());
}

TEST_CASE("summary of a single row is a single cell") {
  std::istringstream csv(
      "test,method,scope,N_omega,M,delta_H,e1,e2,n,n_c,runtime_ms,status,seed\n"
      "fem,MC,glo,25,4,,1.23456,0.5,100,100,0,ok,0\n");
  const std::string s = emit_summary(csv);
  CHECK(s.find("N_omega = 25") != std::string::npos);
  CHECK(s.find("1.23") != std::string::npos);
  CHECK(s.find("0.50") != std::string::npos);
  CHECK(s.find("CF") == std::string::npos);
}

TEST_CASE("summary rejects duplicated keys") {
  std::istringstream csv(
      "test,method,scope,N_omega,M,delta_H,e1,e2,n,n_c,runtime_ms,status,seed\n"
      "fem,MC,glo,25,4,,1,1,100,100,0,ok,0\n"
      "fem,MC,glo,25,4,,2,2,100,100,0,ok,0\n");
  CHECK_THROWS_AS(emit_summary(csv), Error);
}

TEST_CASE("summary of a sweep lists every M and scope") {
  ExperimentConfig c = parse(small_fem, {"sweep.m=1,2"});
  std::istringstream csv(results_text(c));
  const std::string s = emit_summary(csv);
  CHECK(s.find("CF e1") != std::string::npos);
  CHECK(s.find("MC e2") != std::string::npos);
  CHECK(std::count(s.begin(), s.end(), '\n') >= 6);
}

}  // TEST_SUITE
