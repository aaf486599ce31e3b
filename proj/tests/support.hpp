#pragma once

#include <cmath>
#include <vector>

#include "msgr/graph.hpp"
#include "msgr/problems.hpp"
#include "msgr/random.hpp"

namespace msgr::testing {

inline WeightedGraph path_graph(Index n, double w = 1.0) {
  std::vector<Edge> edges;
  for (Index k = 0; k + 1 < n; ++k) edges.push_back({k, k + 1, w});
  DenseMatrix coords(n, 2);
  for (Index k = 0; k < n; ++k) coords.row(k) << static_cast<double>(k), 0.0;
  return WeightedGraph(n, coords, edges);
}

/// nx x ny lattice on the unit square with unit weights, vertex j * nx + i.
inline WeightedGraph grid_graph(Index nx, Index ny) {
  std::vector<Edge> edges;
  DenseMatrix coords(nx * ny, 2);
  for (Index j = 0; j < ny; ++j) {
    for (Index i = 0; i < nx; ++i) {
      const Index v = j * nx + i;
      coords.row(v) << static_cast<double>(i) / static_cast<double>(nx - 1),
          static_cast<double>(j) / static_cast<double>(ny - 1);
      if (i + 1 < nx) edges.push_back({v, v + 1, 1.0});
      if (j + 1 < ny) edges.push_back({v, v + nx, 1.0});
    }
  }
  return WeightedGraph(nx * ny, coords, edges);
}

/// Small boundary-conditioned FEM system on the unit square.
inline LinearProblem fem_problem(Index nx, Index ny, const TensorField& field = TensorField::isotropic()) {
  FemGridSpec spec;
  spec.nx = nx;
  spec.ny = ny;
  spec.field = field;
  spec.load = gaussian_bump(Point2(0.3, 0.6), 0.15);
  return make_problem("fem", gen_fem_grid(spec));
}

inline Vector random_vector(Index n, std::uint64_t seed) {
  Rng rng(seed);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.uniform(-1.0, 1.0);
  return v;
}

/// Dense random SPD matrix with a sparse pattern of a path plus chords.
inline SparseMatrix random_spd(Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Triplet> t;
  Vector diag = Vector::Zero(n);
  auto add = [&](Index i, Index j) {
    const double w = rng.uniform(0.1, 2.0);
    t.emplace_back(i, j, -w);
    t.emplace_back(j, i, -w);
    diag[i] += w;
    diag[j] += w;
  };
  for (Index k = 0; k + 1 < n; ++k) add(k, k + 1);
  for (Index k = 0; k + 3 < n; k += 2) add(k, k + 3);
  for (Index k = 0; k < n; ++k) t.emplace_back(k, k, diag[k] + rng.uniform(0.05, 0.5));
  return from_triplets(n, n, t);
}

inline double rel_diff(const DenseMatrix& a, const DenseMatrix& b) {
  const double s = b.norm();
  return s > 0 ? (a - b).norm() / s : (a - b).norm();
}

}  // namespace msgr::testing
