#pragma once

#include <optional>
#include <vector>

#include "msgr/interpolation.hpp"

namespace msgr {

/// Galerkin coarse model with R = P^T.
struct CoarseModel {
  SparseMatrix p;
  SparseMatrix r;
  SparseMatrix a_c;
  Vector f_c;
  /// R C P for transient problems.
  std::optional<SparseMatrix> c_c;
  /// Fine operator and load, used to refine the coarse solution.
  SparseMatrix a;
  Vector f;

  Index fine_size() const { return p.rows(); }
  Index coarse_size() const { return p.cols(); }
};

/// A_c = P^T A P, f_c = P^T f. Throws asymmetric_operator when A is
/// symmetric but A_c drifts beyond 1e-10 relative.
CoarseModel galerkin_coarse(const SparseMatrix& a, const Vector& f, const SparseMatrix& p);

struct SteadySolution {
  Vector u_c;
  Vector u_ms;
};

SteadySolution solve_steady(const CoarseModel& model);

/// Above this size the fine solver switches to conjugate gradients.
inline constexpr Index kDirectSolveLimit = 200000;

/// Sparse Cholesky, or CG to relative residual 1e-12 above kDirectSolveLimit.
Vector solve_fine(const SparseMatrix& a, const Vector& f);

struct TransientConfig {
  double tau = 1.0;
  Index steps = 1;
  Vector u0;

  double final_time() const { return tau * static_cast<double>(steps); }
  void validate(Index n) const;
};

/// States at t = 0, tau, ..., steps * tau. For coarse runs `coarse` holds
/// the coarse states and `states` the prolongated P u_c.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> coarse;
};

/// Backward Euler for C u' + A u = f with C = diag(capacity). With a
/// prolongation the coarse system C_c = P^T C P, A_c = P^T A P is stepped
/// from the least-squares projection of u0 (P^T P u_c0 = P^T u0).
Trajectory solve_parabolic(const Vector& capacity, const SparseMatrix& a, const Vector& f,
                           const TransientConfig& config,
                           const std::optional<SparseMatrix>& p = std::nullopt);

struct ErrorPair {
  double e1 = 0.0;  // Euclidean, percent
  double e2 = 0.0;  // energy, percent
};

/// Relative errors of u_ms against the reference u, in percent.
ErrorPair relative_errors(const Vector& u, const Vector& u_ms, const SparseMatrix& a);

/// max_i |(P^T (f - A u_ms))_i|, accumulated in extended precision.
double galerkin_residual(const SparseMatrix& p, const SparseMatrix& a, const Vector& f,
                         const Vector& u_ms);

}  // namespace msgr
