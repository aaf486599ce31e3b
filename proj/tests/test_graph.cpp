#include <doctest.h>

#include <sstream>

#include <Eigen/Eigenvalues>

#include "msgr/graph.hpp"
#include "msgr/io.hpp"
#include "support.hpp"

using namespace msgr;
using msgr::testing::path_graph;

TEST_SUITE("graph") {

TEST_CASE("laplacian of a single positive edge") {
  const WeightedGraph g(2, {}, {{0, 1, 1.0}});
  DenseMatrix expect(2, 2);
  expect << 1, -1, -1, 1;
  CHECK(to_dense(assemble_signed_laplacian(g)).isApprox(expect));
}

TEST_CASE("laplacian of a single negative edge uses |w| on the diagonal") {
  const WeightedGraph g(2, {}, {{0, 1, -2.0}});
  DenseMatrix expect(2, 2);
  expect << 2, 2, 2, 2;
  CHECK(to_dense(assemble_signed_laplacian(g)).isApprox(expect));
}

TEST_CASE("laplacian of a weighted path matches the dense oracle") {
  const WeightedGraph g(3, {}, {{0, 1, 3.0}, {1, 2, 5.0}});
  const DenseMatrix l = to_dense(assemble_signed_laplacian(g));
  CHECK(l(0, 0) == 3.0);
  CHECK(l(1, 1) == 8.0);
  CHECK(l(2, 2) == 5.0);
  CHECK(l(0, 1) == -3.0);
  CHECK(l(1, 2) == -5.0);
  CHECK(l(0, 2) == 0.0);
}

TEST_CASE("graph construction rejects self loops, duplicates and bad ids") {
  CHECK_THROWS_AS(WeightedGraph(2, {}, {{1, 1, 1.0}}), Error);
  CHECK_THROWS_AS(WeightedGraph(3, {}, {{0, 1, 1.0}, {1, 0, 2.0}}), Error);
  CHECK_THROWS_AS(WeightedGraph(2, {}, {{0, 2, 1.0}}), Error);
  const WeightedGraph flipped(2, {}, {{1, 0, 4.0}});
  CHECK(flipped.edges()[0].i == 0);
  CHECK(flipped.edges()[0].j == 1);
}

TEST_CASE("robin data adds alpha to the diagonal and alpha g to the load") {
  WeightedGraph g = path_graph(3);
  g.robin.push_back({0, 1.0, 5.0});
  const auto sys = apply_boundary(assemble_signed_laplacian(g), g);
  DenseMatrix expect = to_dense(assemble_signed_laplacian(g));
  expect(0, 0) += 1.0;
  CHECK(to_dense(sys.a).isApprox(expect));
  CHECK(sys.f.isApprox(Vector::Map(std::vector<double>{5, 0, 0}.data(), 3)));
}

TEST_CASE("pure Neumann graph is reported as a singular system") {
  const WeightedGraph g = path_graph(3);
  try {
    (void)apply_boundary(assemble_signed_laplacian(g), g);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::singular_system);
  }
}

TEST_CASE("two strong robin ends make the path operator positive definite") {
  WeightedGraph g = path_graph(4);
  g.robin.push_back({0, 10.0, 0.0});
  g.robin.push_back({3, 10.0, 0.0});
  const auto sys = apply_boundary(assemble_signed_laplacian(g), g);
  const Eigen::SelfAdjointEigenSolver<DenseMatrix> es(to_dense(sys.a));
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  CHECK(es.eigenvalues().minCoeff() == doctest::Approx(0.9009804864072144).epsilon(1e-12));
}

TEST_CASE("apply_boundary keeps symmetry and touches only the diagonal") {
  WeightedGraph g = msgr::testing::grid_graph(5, 4);
  for (Index v = 0; v < 5; ++v) g.robin.push_back({v, 0.5 + static_cast<double>(v), 1.0});
  const SparseMatrix l = assemble_signed_laplacian(g);
  const auto sys = apply_boundary(l, g);
  CHECK(asymmetry(sys.a) == 0.0);
  DenseMatrix diff = to_dense(sys.a) - to_dense(l);
  diff.diagonal().setZero();
  CHECK(diff.norm() == 0.0);
}

TEST_CASE("eliminating nothing returns the same operator and identity map") {
  const SparseMatrix a = msgr::testing::random_spd(6, 1);
  const Vector f = msgr::testing::random_vector(6, 2);
  const auto red = eliminate_dirichlet(a, f, {});
  CHECK(to_dense(red.a) == to_dense(a));
  CHECK(red.f == f);
  for (Index k = 0; k < 6; ++k) CHECK(red.free[k] == k);
}

TEST_CASE("one-dimensional Poisson with zero ends solves to (1.5, 2, 1.5)") {
  const WeightedGraph g = path_graph(5);
  const SparseMatrix l = assemble_signed_laplacian(g);
  Vector f = Vector::Ones(5);
  const auto red = eliminate_dirichlet(l, f, {{0, 0.0}, {4, 0.0}});
  const Vector u = to_dense(red.a).ldlt().solve(red.f);
  REQUIRE(u.size() == 3);
  CHECK(u[0] == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(u[1] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(u[2] == doctest::Approx(1.5).epsilon(1e-14));
  const Vector full = red.expand(u);
  CHECK(full[0] == 0.0);
  CHECK(full[4] == 0.0);
}

TEST_CASE("nonzero Dirichlet values move to the right-hand side") {
  const WeightedGraph g = path_graph(3);
  const SparseMatrix l = assemble_signed_laplacian(g);
  const auto red = eliminate_dirichlet(l, Vector::Zero(3), {{0, 1.0}, {2, 3.0}});
  REQUIRE(red.a.rows() == 1);
  const Vector u = red.expand(Vector::Constant(1, red.f[0] / red.a.coeff(0, 0)));
  CHECK(u[1] == doctest::Approx(2.0));
}

TEST_CASE("eliminating every vertex leaves an empty system that reconstructs g") {
  const SparseMatrix l = assemble_signed_laplacian(path_graph(3));
  const auto red = eliminate_dirichlet(l, Vector::Zero(3), {{0, 1.0}, {1, 2.0}, {2, 3.0}});
  CHECK(red.a.rows() == 0);
  const Vector u = red.expand(Vector());
  CHECK(u[0] == 1.0);
  CHECK(u[1] == 2.0);
  CHECK(u[2] == 3.0);
}

TEST_CASE("elimination rejects out-of-range and repeated vertices") {
  const SparseMatrix l = assemble_signed_laplacian(path_graph(3));
  CHECK_THROWS_AS(eliminate_dirichlet(l, Vector::Zero(3), {{3, 0.0}}), Error);
  CHECK_THROWS_AS(eliminate_dirichlet(l, Vector::Zero(3), {{1, 0.0}, {1, 1.0}}), Error);
}

TEST_CASE("submatrix extraction") {
  SUBCASE("full index sets give the same matrix") {
    const SparseMatrix a = msgr::testing::random_spd(5, 3);
    const IndexSet all = IndexSet::range(5);
    CHECK(to_dense(restrict_submatrix(a, all, all)) == to_dense(a));
  }
  SUBCASE("a single diagonal entry") {
    SparseMatrix d = from_triplets(3, 3, {{0, 0, 1.0}, {1, 1, 2.0}, {2, 2, 3.0}});
    const IndexSet s({2}, 3);
    const DenseMatrix r = to_dense(restrict_submatrix(d, s, s));
    CHECK(r.rows() == 1);
    CHECK(r(0, 0) == 3.0);
  }
  SUBCASE("leading block of the path laplacian") {
    const IndexSet s({0, 1}, 3);
    DenseMatrix expect(2, 2);
    expect << 1, -1, -1, 2;
    CHECK(to_dense(restrict_submatrix(assemble_signed_laplacian(path_graph(3)), s, s)) == expect);
  }
  SUBCASE("extraction then re-embedding is entry-exact") {
    const SparseMatrix a = msgr::testing::random_spd(8, 4);
    const IndexSet s({1, 4, 6, 7}, 8);
    const DenseMatrix sub = to_dense(restrict_submatrix(a, s, s));
    const DenseMatrix full = to_dense(a);
    for (Index i = 0; i < s.size(); ++i) {
      for (Index j = 0; j < s.size(); ++j) CHECK(sub(i, j) == full(s[i], s[j]));
    }
  }
}

TEST_CASE("weighted norms") {
  SUBCASE("zero vector") {
    const WeightedGraph g = path_graph(4);
    const Vector z = Vector::Zero(4);
    CHECK(norm_L(z, g) == 0.0);
    CHECK(norm_D(z, g) == 0.0);
    CHECK(norm_A(z, assemble_signed_laplacian(g)) == 0.0);
  }
  SUBCASE("single edge") {
    const WeightedGraph g(2, {}, {{0, 1, 1.0}});
    const Vector v = Vector::Unit(2, 0);
    CHECK(norm_L(v, g) == doctest::Approx(1.0));
    CHECK(norm_D(v, g) == doctest::Approx(1.0));
  }
  SUBCASE("indefinite form is rejected") {
    const SparseMatrix m = from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, -1.0}});
    try {
      (void)norm_A(Vector::Unit(2, 1), m);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::indefinite_operator);
    }
  }
}

TEST_CASE("property: edge-sum and quadratic-form norms agree for positive weights") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::vector<Edge> edges;
    for (Index k = 0; k < 11; ++k) edges.push_back({k, k + 1, rng.uniform(0.01, 10.0)});
    for (Index k = 0; k < 9; k += 3) edges.push_back({k, k + 3, rng.uniform(0.01, 10.0)});
    const WeightedGraph g(12, {}, edges);
    const Vector v = msgr::testing::random_vector(12, seed + 100);
    const double quad = v.dot(assemble_signed_laplacian(g) * v);
    CHECK(norm_L(v, g) * norm_L(v, g) == doctest::Approx(quad).epsilon(1e-10));
  }
}

TEST_CASE("property: positive-weight laplacians annihilate constants") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::vector<Edge> edges;
    for (Index k = 0; k + 1 < 30; ++k) edges.push_back({k, k + 1, std::pow(10.0, rng.uniform(-4, 4))});
    const SparseMatrix l = assemble_signed_laplacian(WeightedGraph(30, {}, edges));
    const Vector r = l * Vector::Ones(30);
    CHECK(r.cwiseAbs().maxCoeff() <= 1e-13 * l.diagonal().cwiseAbs().maxCoeff());
    CHECK(asymmetry(l) == 0.0);
  }
}

TEST_CASE("induced subgraph relabels vertices and keeps coordinates") {
  const WeightedGraph g = path_graph(5, 2.0);
  const WeightedGraph sub = g.induced(IndexSet({1, 2, 4}, 5));
  CHECK(sub.num_vertices() == 3);
  CHECK(sub.num_edges() == 1);
  CHECK(sub.edges()[0].w == 2.0);
  CHECK(sub.point(2)[0] == 4.0);
  std::vector<Index> label;
  CHECK(sub.components(label) == 2);
}

TEST_CASE("graph text format round trip") {
  WeightedGraph g = msgr::testing::grid_graph(3, 3);
  g.capacity = Vector::LinSpaced(9, 0.1, 0.9);
  g.robin.push_back({2, 1.5, 0.25});
  g.dirichlet.push_back({0, 1.0});
  std::stringstream ss;
  io::write_graph(ss, g);
  const WeightedGraph h = io::read_graph(ss);
  CHECK(h.num_vertices() == 9);
  CHECK(h.num_edges() == g.num_edges());
  CHECK(h.coords() == g.coords());
  CHECK(*h.capacity == *g.capacity);
  REQUIRE(h.robin.size() == 1);
  CHECK(h.robin[0].alpha == 1.5);
  REQUIRE(h.dirichlet.size() == 1);
  CHECK(h.dirichlet[0].value == 1.0);
}

TEST_CASE("matrix market round trip and operator graph") {
  const SparseMatrix a = msgr::testing::random_spd(7, 9);
  std::stringstream ss;
  io::write_matrix_market(ss, a);
  const SparseMatrix b = io::read_matrix_market(ss);
  CHECK(to_dense(a) == to_dense(b));
  const WeightedGraph g = io::graph_from_operator(a);
  CHECK_FALSE(g.has_coords());
  for (const Edge& e : g.edges()) CHECK(e.w == -a.coeff(e.i, e.j));
}

TEST_CASE("malformed graph text is a parse error") {
  std::istringstream in("3 2\n0 0\n1 0\n");
  try {
    (void)io::read_graph(in);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse_error);
  }
}

}  // TEST_SUITE
