#include <doctest.h>

#include <cmath>

#include "msgr/coarse.hpp"
#include "msgr/solvers.hpp"
#include "support.hpp"

using namespace msgr;

namespace {

struct Fixture {
  LinearProblem problem;
  Partition partition;
  ClusterSet clusters;
  Vector u;

  Fixture(Index nx, Index n_omega, Index m, double delta) : problem(msgr::testing::fem_problem(nx, nx, channel_problem(nx, nx, 1e4).field)) {
    partition = oversample(problem.graph, partition_balanced(problem.graph, n_omega, 0), delta);
    ClusterOptions opt;
    opt.per_subdomain = {m};
    clusters = cluster_subdomains(problem.graph, partition, opt, 0);
    u = solve_fine(problem.a, problem.f);
  }

  SparseMatrix basis(ProlongationKind kind) const {
    return build_prolongation(kind, problem.a, clusters, partition).p;
  }
};

constexpr ProlongationKind kAllKinds[] = {ProlongationKind::cf_global, ProlongationKind::cf_local,
                                          ProlongationKind::mc_global, ProlongationKind::mc_local};

SparseMatrix hstack(const SparseMatrix& a, const SparseMatrix& b) {
  std::vector<Triplet> t;
  for (Index c = 0; c < a.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) t.emplace_back(it.row(), c, it.value());
  }
  for (Index c = 0; c < b.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(b, c); it; ++it) t.emplace_back(it.row(), a.cols() + c, it.value());
  }
  return from_triplets(a.rows(), a.cols() + b.cols(), t);
}

}  // namespace

TEST_SUITE("coarse") {

TEST_CASE("identity prolongation reproduces the fine problem") {
  const LinearProblem lp = msgr::testing::fem_problem(9, 9);
  const CoarseModel model = galerkin_coarse(lp.a, lp.f, identity(lp.a.rows()));
  CHECK(to_dense(model.a_c) == to_dense(lp.a));
  const SteadySolution sol = solve_steady(model);
  const Vector u = solve_fine(lp.a, lp.f);
  CHECK((sol.u_ms - u).norm() <= 1e-13 * u.norm());
}

TEST_CASE("a single constant column sums the operator and the load") {
  const LinearProblem lp = msgr::testing::fem_problem(7, 6);
  const Index n = lp.a.rows();
  std::vector<Triplet> t;
  for (Index v = 0; v < n; ++v) t.emplace_back(v, 0, 1.0);
  const CoarseModel model = galerkin_coarse(lp.a, lp.f, from_triplets(n, 1, t));
  CHECK(model.a_c.coeff(0, 0) == doctest::Approx(Vector::Ones(n).dot(lp.a * Vector::Ones(n))).epsilon(1e-14));
  CHECK(model.f_c[0] == doctest::Approx(lp.f.sum()).epsilon(1e-14));
}

TEST_CASE("ideal interpolation coarse operator equals the dense Schur complement") {
  const Fixture fx(12, 4, 3, 0.0);
  const Prolongation p = cf_ideal_global(fx.problem.a, fx.clusters);
  const CoarseModel model = galerkin_coarse(fx.problem.a, fx.problem.f, p.p);
  const DenseMatrix a = to_dense(fx.problem.a);
  const CFSplit split = cf_split(fx.clusters);
  const Index nc = split.coarse.size(), nf = split.fine.size();
  DenseMatrix acc(nc, nc), acf(nc, nf), aff(nf, nf);
  for (Index i = 0; i < nc; ++i) {
    for (Index j = 0; j < nc; ++j) acc(i, j) = a(split.coarse[i], split.coarse[j]);
    for (Index j = 0; j < nf; ++j) acf(i, j) = a(split.coarse[i], split.fine[j]);
  }
  for (Index i = 0; i < nf; ++i) {
    for (Index j = 0; j < nf; ++j) aff(i, j) = a(split.fine[i], split.fine[j]);
  }
  const DenseMatrix schur = acc - acf * aff.ldlt().solve(acf.transpose());
  DenseMatrix ac(nc, nc);
  for (Index i = 0; i < nc; ++i) {
    for (Index j = 0; j < nc; ++j) {
      ac(split.coarse.local(p.columns[static_cast<std::size_t>(i)].centroid),
         split.coarse.local(p.columns[static_cast<std::size_t>(j)].centroid)) = model.a_c.coeff(i, j);
    }
  }
  CHECK(msgr::testing::rel_diff(ac, schur) <= 1e-10);
}

TEST_CASE("zero load gives a zero multiscale solution") {
  const Fixture fx(10, 4, 2, 0.1);
  for (ProlongationKind kind : kAllKinds) {
    const SteadySolution sol = solve_steady(galerkin_coarse(fx.problem.a, Vector::Zero(fx.problem.a.rows()), fx.basis(kind)));
    CHECK(sol.u_ms.norm() == 0.0);
  }
}

TEST_CASE("ideal interpolation is exact at the coarse points") {
  const Fixture fx(16, 4, 4, 0.0);
  const Prolongation p = cf_ideal_global(fx.problem.a, fx.clusters);
  const SteadySolution sol = solve_steady(galerkin_coarse(fx.problem.a, fx.problem.f, p.p));
  double worst = 0.0;
  for (Index c = 0; c < p.cols(); ++c) {
    const Index v = p.columns[static_cast<std::size_t>(c)].centroid;
    worst = std::max(worst, std::abs(sol.u_ms[v] - fx.u[v]) / std::abs(fx.u[v]));
    CHECK(sol.u_c[c] == doctest::Approx(fx.u[v]).epsilon(1e-9));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("fine solver") {
  SUBCASE("scalar") {
    const SparseMatrix a = from_triplets(1, 1, {{0, 0, 2.0}});
    CHECK(solve_fine(a, Vector::Constant(1, 4.0))[0] == doctest::Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("one-dimensional Poisson") {
    const SparseMatrix l = assemble_signed_laplacian(msgr::testing::path_graph(5));
    const ReducedSystem red = eliminate_dirichlet(l, Vector::Ones(5), {{0, 0.0}, {4, 0.0}});
    const Vector u = solve_fine(red.a, red.f);
    CHECK(u[0] == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(u[1] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(u[2] == doctest::Approx(1.5).epsilon(1e-14));
  }
  SUBCASE("identity") {
    const Vector f = msgr::testing::random_vector(6, 3);
    CHECK(solve_fine(identity(6), f) == f);
  }
  SUBCASE("conjugate gradients agree with the factorization") {
    const LinearProblem lp = msgr::testing::fem_problem(20, 20);
    const Vector direct = solve_fine(lp.a, lp.f);
    const Vector cg = conjugate_gradient(lp.a, lp.f, 1e-12);
    CHECK((cg - direct).norm() <= 1e-9 * direct.norm());
  }
}

TEST_CASE("backward Euler without operator or load keeps the initial state") {
  const Index n = 5;
  TransientConfig cfg;
  cfg.tau = 0.7;
  cfg.steps = 4;
  cfg.u0 = msgr::testing::random_vector(n, 1);
  const SparseMatrix zero(n, n);
  const Trajectory tr = solve_parabolic(Vector::Constant(n, 2.0), zero, Vector::Zero(n), cfg);
  REQUIRE(tr.states.size() == 5);
  for (const Vector& s : tr.states) CHECK((s - cfg.u0).norm() <= 1e-15);
  CHECK(tr.times.back() == doctest::Approx(cfg.final_time()));
}

TEST_CASE("backward Euler on the scalar decay equation") {
  const double c = 2.0, a = 3.0, tau = 0.25;
  TransientConfig cfg;
  cfg.tau = tau;
  cfg.steps = 6;
  cfg.u0 = Vector::Ones(1);
  const Trajectory tr = solve_parabolic(Vector::Constant(1, c), from_triplets(1, 1, {{0, 0, a}}), Vector::Zero(1), cfg);
  for (Index k = 0; k <= 6; ++k) {
    CHECK(tr.states[static_cast<std::size_t>(k)][0] ==
          doctest::Approx(std::pow(1.0 + a * tau / c, -static_cast<double>(k))).epsilon(1e-14));
  }
}

TEST_CASE("identity coarse model reproduces the fine trajectory") {
  const LinearProblem lp = make_problem("pore", gen_pore_network(PoreNetworkSpec::with_default_channels(16, 16), 0));
  TransientConfig cfg;
  cfg.tau = 5.0;
  cfg.steps = 20;
  cfg.u0 = Vector::Zero(lp.a.rows());
  const Trajectory fine = solve_parabolic(lp.capacity, lp.a, lp.f, cfg);
  const Trajectory coarse = solve_parabolic(lp.capacity, lp.a, lp.f, cfg, identity(lp.a.rows()));
  REQUIRE(coarse.states.size() == fine.states.size());
  for (std::size_t k = 0; k < fine.states.size(); ++k) {
    CHECK((coarse.states[k] - fine.states[k]).norm() <= 1e-12 * std::max(1.0, fine.states[k].norm()));
  }
}

TEST_CASE("coarse initial state is the least-squares projection") {
  const Fixture fx(10, 2, 3, 0.0);
  const SparseMatrix p = fx.basis(ProlongationKind::mc_global);
  const Index n = p.rows();
  TransientConfig cfg;
  cfg.tau = 1.0;
  cfg.steps = 1;
  cfg.u0 = msgr::testing::random_vector(n, 9);
  const Trajectory tr = solve_parabolic(Vector::Ones(n), fx.problem.a, fx.problem.f, cfg, p);
  const DenseMatrix pd = to_dense(p);
  const Vector ls = pd.colPivHouseholderQr().solve(cfg.u0);
  CHECK((tr.coarse[0] - ls).norm() <= 1e-10 * ls.norm());
  CHECK((tr.states[0] - pd * ls).norm() <= 1e-10 * cfg.u0.norm());
}

TEST_CASE("transient input checks") {
  TransientConfig cfg;
  cfg.tau = 1.0;
  cfg.steps = 2;
  cfg.u0 = Vector::Zero(2);
  const SparseMatrix a = identity(2);
  CHECK_THROWS_AS(solve_parabolic(Vector::Constant(2, -1.0), a, Vector::Zero(2), cfg), Error);
  cfg.tau = 0.0;
  CHECK_THROWS_AS(solve_parabolic(Vector::Ones(2), a, Vector::Zero(2), cfg), Error);
  cfg.tau = 1.0;
  cfg.u0 = Vector::Zero(3);
  CHECK_THROWS_AS(solve_parabolic(Vector::Ones(2), a, Vector::Zero(2), cfg), Error);
}

TEST_CASE("relative errors in percent") {
  const Vector u = msgr::testing::random_vector(4, 2);
  const SparseMatrix a = msgr::testing::random_spd(4, 2);
  const ErrorPair same = relative_errors(u, u, a);
  CHECK(same.e1 == 0.0);
  CHECK(same.e2 == 0.0);
  const ErrorPair zero = relative_errors(u, Vector::Zero(4), a);
  CHECK(zero.e1 == doctest::Approx(100.0));
  CHECK(zero.e2 == doctest::Approx(100.0));
  const ErrorPair unit = relative_errors(Vector::Unit(2, 0), Vector::Zero(2), identity(2));
  CHECK(unit.e1 == doctest::Approx(100.0));
  CHECK(unit.e2 == doctest::Approx(100.0));
}

TEST_CASE("property: Galerkin orthogonality for every construction") {
  const Fixture fx(16, 4, 3, 0.15);
  const double finf = fx.problem.f.cwiseAbs().maxCoeff();
  for (ProlongationKind kind : kAllKinds) {
    const SparseMatrix p = fx.basis(kind);
    const SteadySolution sol = solve_steady(galerkin_coarse(fx.problem.a, fx.problem.f, p));
    CHECK(galerkin_residual(p, fx.problem.a, fx.problem.f, sol.u_ms) <= 1e-9 * finf);
  }
}

TEST_CASE("property: coarse perturbations never reduce the energy error") {
  const Fixture fx(14, 4, 3, 0.15);
  for (ProlongationKind kind : kAllKinds) {
    const SparseMatrix p = fx.basis(kind);
    const SteadySolution sol = solve_steady(galerkin_coarse(fx.problem.a, fx.problem.f, p));
    const double best = norm_A(fx.u - sol.u_ms, fx.problem.a);
    for (std::uint64_t trial = 0; trial < 8; ++trial) {
      const Vector dv = 1e-2 * msgr::testing::random_vector(p.cols(), 100 + trial);
      const double moved = norm_A(fx.u - (sol.u_ms + p * dv), fx.problem.a);
      CHECK(moved * moved >= best * best - 1e-10);
    }
  }
}

TEST_CASE("property: enlarging the coarse space never increases the energy error") {
  const Fixture fx(16, 4, 2, 0.15);
  const SparseMatrix small = fx.basis(ProlongationKind::mc_global);
  for (ProlongationKind extra : {ProlongationKind::cf_global, ProlongationKind::mc_local}) {
    const SparseMatrix big = hstack(small, fx.basis(extra));
    const ErrorPair e_small = relative_errors(fx.u, solve_steady(galerkin_coarse(fx.problem.a, fx.problem.f, small)).u_ms, fx.problem.a);
    const ErrorPair e_big = relative_errors(fx.u, solve_steady(galerkin_coarse(fx.problem.a, fx.problem.f, big)).u_ms, fx.problem.a);
    CHECK(e_big.e2 <= e_small.e2 + 1e-8);
  }
  const SparseMatrix all = identity(fx.problem.a.rows());
  const ErrorPair e_full = relative_errors(fx.u, solve_steady(galerkin_coarse(fx.problem.a, fx.problem.f, all)).u_ms, fx.problem.a);
  CHECK(e_full.e2 <= 1e-8);
}

TEST_CASE("refinement against the fine residual does not worsen the Galerkin residual") {
  const Fixture fx(40, 16, 4, 0.2);
  const SparseMatrix p = fx.basis(ProlongationKind::mc_global);
  const CoarseModel model = galerkin_coarse(fx.problem.a, fx.problem.f, p);
  CoarseModel bare = model;
  bare.a = SparseMatrix();
  bare.f = Vector();
  const double refined = galerkin_residual(p, fx.problem.a, fx.problem.f, solve_steady(model).u_ms);
  const double plain = galerkin_residual(p, fx.problem.a, fx.problem.f, solve_steady(bare).u_ms);
  const double finf = fx.problem.f.cwiseAbs().maxCoeff();
  CHECK(refined <= plain);
  CHECK(refined <= 1e-9 * finf);
  CHECK((solve_steady(model).u_c - solve_steady(bare).u_c).norm() <= 1e-6 * solve_steady(bare).u_c.norm());
}

TEST_CASE("asymmetric coarse operators are rejected") {
  const SparseMatrix a = from_triplets(2, 2, {{0, 0, 2.0}, {0, 1, -1.0}, {1, 0, -1.0}, {1, 1, 2.0}});
  const CoarseModel model = galerkin_coarse(a, Vector::Ones(2), identity(2));
  CHECK(asymmetry(model.a_c) == 0.0);
  CHECK_THROWS_AS(galerkin_coarse(a, Vector::Ones(3), identity(2)), Error);
}

}  // TEST_SUITE
