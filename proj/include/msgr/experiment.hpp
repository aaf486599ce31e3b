#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "msgr/analysis.hpp"
#include "msgr/coarse.hpp"
#include "msgr/problems.hpp"

namespace msgr {

enum class ProblemFamily { fem, heat, pore, file };

std::string to_string(ProblemFamily family);

struct ProblemConfig {
  ProblemFamily family = ProblemFamily::fem;
  Index nx = 40;
  Index ny = 40;
  double source = 1.0;
  /// fem and heat source profile: "uniform", "wave" or "bump".
  std::string load = "uniform";
  double load_x = 0.3;
  double load_y = 0.6;
  double load_width = 0.1;

  /// fem: "channels", "rotated" or "isotropic".
  std::string field = "channels";
  double contrast = 1e4;
  bool perforated = false;
  double d1 = 1.0;
  double d2 = 1e-4;
  double theta = 1.0471975511965976;

  /// heat: "circular" (around center) or "constant" (at angle).
  double k_par = 1.0;
  double k_perp = 1e-3;
  std::string direction = "circular";
  double angle = 0.0;
  double center_x = 0.5;
  double center_y = 0.5;

  /// pore: lattice size comes from nx, ny; the network is drawn per seed.
  PoreNetworkSpec pore;

  /// file: graph text file and/or Matrix Market operator and rhs vector.
  std::string graph_path;
  std::string matrix_path;
  std::string rhs_path;
};

/// Builds the boundary-conditioned system of one sweep seed.
LinearProblem build_problem(const ProblemConfig& config, std::uint64_t seed);

enum class OversampleRule { vertex, closure, hops };

struct TransientSettings {
  double tau = 5.0;
  Index steps = 20;
  /// Constant initial state.
  double initial = 0.0;
};

struct ExperimentConfig {
  std::string name;
  ProblemConfig problem;
  std::vector<Index> n_omega{16};
  std::vector<Index> m{4};
  std::vector<double> delta_h{0.1};
  std::vector<ProlongationKind> methods{ProlongationKind::cf_global, ProlongationKind::cf_local,
                                        ProlongationKind::mc_global, ProlongationKind::mc_local};
  std::vector<std::uint64_t> seeds{0};
  OversampleRule oversample = OversampleRule::vertex;
  CentroidRule centroid = CentroidRule::physical;
  PartialAggregatePolicy partial = PartialAggregatePolicy::unconstrained;
  int kmeans_restarts = 10;
  std::optional<TransientSettings> transient;

  std::string output = "msgr-out";
  int workers = 1;
  /// Write wall-clock times into the runtime_ms column instead of 0.
  bool record_runtime = false;
  bool write_reports = true;
  bool export_vectors = false;

  /// Throws config_error on empty lists or out-of-range values.
  void validate() const;
  std::string label() const { return name.empty() ? to_string(problem.family) : name; }
};

/// INI-style text: [section] headers, key = value lines, '#' or ';'
/// comment lines. Unknown sections or keys are a config_error.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
/// Applies "section.key=value" overrides on top of a config text.
ExperimentConfig parse_config(std::istream& in, const std::vector<std::string>& overrides);

/// Annotated text listing every key with its default.
std::string config_reference();

struct StageTimes {
  double partition_ms = 0.0;
  double cluster_ms = 0.0;
  double prolong_ms = 0.0;
  double solve_ms = 0.0;
  double total() const { return partition_ms + cluster_ms + prolong_ms + solve_ms; }
};

struct ResultRow {
  std::string test;
  ProlongationKind kind = ProlongationKind::cf_global;
  Index n_omega = 0;
  Index m = 0;
  /// Unset for global methods.
  std::optional<double> delta_h;
  std::uint64_t seed = 0;
  double e1 = 0.0;
  double e2 = 0.0;
  Index n = 0;
  Index n_c = 0;
  StageTimes times;
  /// "ok" or the error that stopped the row.
  std::string status = "ok";
  std::optional<ConvergenceReport> report;
  /// Multiscale solution, kept only when vectors are exported.
  Vector u_ms;

  bool ok() const { return status == "ok"; }
  std::string method() const;  // "CF" or "MC"
  std::string scope() const;   // "glo" or "loc"
};

/// Runs the full sweep. Rows come back in a fixed order (seed, N_omega, M,
/// global methods, then delta_H and local methods) regardless of workers.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

/// test,method,scope,N_omega,M,delta_H,e1,e2,n,n_c,runtime_ms,status,seed
void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows, bool record_runtime);
void write_timings_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_bounds_csv(std::ostream& out, const std::vector<ResultRow>& rows);

/// run_experiment plus every output file under config.output. Returns the
/// number of failed rows.
Index run(const ExperimentConfig& config);

/// Pivots a results CSV into blocks per (test, seed, N_omega): rows
/// M x scope, columns method x (e1, e2). Throws on duplicated keys.
std::string emit_summary(std::istream& csv);

}  // namespace msgr
