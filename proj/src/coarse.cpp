#include "msgr/coarse.hpp"

#include <cmath>

#include "msgr/graph.hpp"
#include "msgr/solvers.hpp"

namespace msgr {

namespace {

using ExtVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

ExtVector ext_product(const SparseMatrix& m, const ExtVector& x) {
  ExtVector y = ExtVector::Zero(m.rows());
  for (Index c = 0; c < m.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) y[it.row()] += static_cast<long double>(it.value()) * x[c];
  }
  return y;
}

ExtVector ext_transpose_product(const SparseMatrix& m, const ExtVector& x) {
  ExtVector y = ExtVector::Zero(m.cols());
  for (Index c = 0; c < m.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) y[c] += static_cast<long double>(it.value()) * x[it.row()];
  }
  return y;
}

/// P^T (f - A u) with u given on the fine level.
ExtVector ext_galerkin_residual(const SparseMatrix& p, const SparseMatrix& a, const Vector& f, const ExtVector& u) {
  return ext_transpose_product(p, f.cast<long double>() - ext_product(a, u));
}

}  // namespace

CoarseModel galerkin_coarse(const SparseMatrix& a, const Vector& f, const SparseMatrix& p) {
  if (a.rows() != a.cols() || p.rows() != a.rows() || f.size() != a.rows()) {
    throw Error(ErrorCode::invalid_argument, "galerkin_coarse: dimension mismatch");
  }
  CoarseModel m;
  m.p = p;
  m.r = p.transpose();
  const SparseMatrix ap = a * p;
  m.a_c = (m.r * ap).pruned(0.0);
  m.a_c.makeCompressed();
  m.f_c = m.r * f;
  m.a = a;
  m.f = f;
  if (asymmetry(a) <= 1e-12) {
    // Rounding in the triple product breaks exact symmetry; bound the
    // drift relative to the largest coarse entry, then symmetrize.
    double scale = 0.0;
    for (Index c = 0; c < m.a_c.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(m.a_c, c); it; ++it) scale = std::max(scale, std::abs(it.value()));
    }
    const SparseMatrix diff = m.a_c - SparseMatrix(m.a_c.transpose());
    double drift = 0.0;
    for (Index c = 0; c < diff.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(diff, c); it; ++it) drift = std::max(drift, std::abs(it.value()));
    }
    if (drift > 1e-10 * std::max(scale, 1e-300)) {
      throw Error(ErrorCode::asymmetric_operator,
                  "galerkin_coarse: coarse operator asymmetry " + std::to_string(drift / scale));
    }
    m.a_c = symmetrize(m.a_c);
  }
  return m;
}

SteadySolution solve_steady(const CoarseModel& model) {
  const SpdFactorization solver(model.a_c, "coarse operator A_c");
  SteadySolution s;
  s.u_c = solver.solve(model.f_c);
  if (model.a.rows() == model.p.rows() && model.f.size() == model.p.rows()) {
    // Iterative refinement against the fine residual, kept while it helps.
    auto residual = [&model](const Vector& u_c) {
      return ext_galerkin_residual(model.p, model.a, model.f, ext_product(model.p, u_c.cast<long double>()));
    };
    ExtVector r = residual(s.u_c);
    for (int step = 0; step < 3 && r.size() > 0; ++step) {
      const Vector next = s.u_c + solver.solve(Vector(r.cast<double>()));
      ExtVector r_next = residual(next);
      if (!(r_next.cwiseAbs().maxCoeff() < r.cwiseAbs().maxCoeff())) break;
      s.u_c = next;
      r = std::move(r_next);
    }
  }
  s.u_ms = model.p * s.u_c;
  return s;
}

Vector solve_fine(const SparseMatrix& a, const Vector& f) {
  if (a.rows() != f.size()) throw Error(ErrorCode::invalid_argument, "solve_fine: dimension mismatch");
  if (a.rows() > kDirectSolveLimit) return conjugate_gradient(a, f, 1e-12);
  return SpdFactorization(a, "fine operator A").solve(f);
}

void TransientConfig::validate(Index n) const {
  if (!(tau > 0)) throw Error(ErrorCode::invalid_argument, "transient: time step must be positive");
  if (steps < 1) throw Error(ErrorCode::invalid_argument, "transient: need at least one step");
  if (u0.size() != n) throw Error(ErrorCode::invalid_argument, "transient: initial state has wrong size");
}

Trajectory solve_parabolic(const Vector& capacity, const SparseMatrix& a, const Vector& f,
                           const TransientConfig& config, const std::optional<SparseMatrix>& p) {
  const Index n = a.rows();
  config.validate(n);
  if (capacity.size() != n || f.size() != n) {
    throw Error(ErrorCode::invalid_argument, "solve_parabolic: dimension mismatch");
  }
  if ((capacity.array() <= 0).any()) {
    throw Error(ErrorCode::invalid_argument, "solve_parabolic: capacities must be positive");
  }
  SparseMatrix c(n, n);
  c.reserve(Eigen::VectorX<std::int64_t>::Constant(n, 1));
  for (Index i = 0; i < n; ++i) c.insert(i, i) = capacity[i];
  c.makeCompressed();

  Trajectory tr;
  tr.times.push_back(0.0);
  const double inv_tau = 1.0 / config.tau;
  if (!p) {
    const SparseMatrix lhs = SparseMatrix(c * inv_tau) + a;
    const SpdFactorization solver(lhs, "C/tau + A");
    Vector u = config.u0;
    tr.states.push_back(u);
    for (Index s = 1; s <= config.steps; ++s) {
      u = solver.solve(Vector(capacity.cwiseProduct(u) * inv_tau + f));
      tr.times.push_back(config.tau * static_cast<double>(s));
      tr.states.push_back(u);
    }
    return tr;
  }

  const SparseMatrix& pm = *p;
  if (pm.rows() != n) throw Error(ErrorCode::invalid_argument, "solve_parabolic: prolongation size mismatch");
  const SparseMatrix r = pm.transpose();
  const SparseMatrix a_c = symmetrize(r * a * pm);
  const SparseMatrix c_c = symmetrize(r * c * pm);
  const Vector f_c = r * f;
  const SparseMatrix gram = symmetrize(r * pm);
  Vector u_c = SpdFactorization(gram, "P^T P").solve(Vector(r * config.u0));
  const SparseMatrix lhs = SparseMatrix(c_c * inv_tau) + a_c;
  const SpdFactorization solver(lhs, "coarse C_c/tau + A_c");
  tr.coarse.push_back(u_c);
  tr.states.push_back(pm * u_c);
  for (Index s = 1; s <= config.steps; ++s) {
    u_c = solver.solve(Vector(c_c * u_c * inv_tau + f_c));
    tr.times.push_back(config.tau * static_cast<double>(s));
    tr.coarse.push_back(u_c);
    tr.states.push_back(pm * u_c);
  }
  return tr;
}

ErrorPair relative_errors(const Vector& u, const Vector& u_ms, const SparseMatrix& a) {
  if (u.size() != u_ms.size() || u.size() != a.rows()) {
    throw Error(ErrorCode::invalid_argument, "errors: dimension mismatch");
  }
  const double nu = u.norm();
  if (!(nu > 0)) throw Error(ErrorCode::invalid_argument, "errors: reference solution is zero");
  const Vector e = u - u_ms;
  ErrorPair out;
  out.e1 = 100.0 * e.norm() / nu;
  out.e2 = 100.0 * norm_A(e, a) / norm_A(u, a);
  return out;
}

double galerkin_residual(const SparseMatrix& p, const SparseMatrix& a, const Vector& f, const Vector& u_ms) {
  if (p.rows() != a.rows() || f.size() != a.rows() || u_ms.size() != a.rows()) {
    throw Error(ErrorCode::invalid_argument, "galerkin_residual: dimension mismatch");
  }
  const ExtVector r = ext_galerkin_residual(p, a, f, u_ms.cast<long double>());
  return r.size() ? static_cast<double>(r.cwiseAbs().maxCoeff()) : 0.0;
}

}  // namespace msgr
