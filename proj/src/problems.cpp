#include "msgr/problems.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "msgr/random.hpp"

namespace msgr {

bool Channel::contains(const Point2& x) const {
  const Point2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0 ? std::clamp((x - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (x - (a + t * ab)).norm() <= half_width;
}

TensorField TensorField::isotropic(double k) {
  TensorField f;
  f.background = k;
  return f;
}

TensorField TensorField::rotated(double d1, double d2, double theta) {
  TensorField f;
  f.kind = Kind::rotated;
  f.d1 = d1;
  f.d2 = d2;
  f.theta = theta;
  return f;
}

int TensorField::region(const Point2& x) const {
  for (std::size_t r = 0; r < channels.size(); ++r) {
    if (channels[r].contains(x)) return static_cast<int>(r) + 1;
  }
  return 0;
}

namespace {

Tensor2 base_tensor(const TensorField& f) {
  if (f.kind == TensorField::Kind::isotropic) return Tensor2::Identity();
  Tensor2 rot;
  rot << std::cos(f.theta), -std::sin(f.theta), std::sin(f.theta), std::cos(f.theta);
  const Tensor2 d = Eigen::Vector2d(f.d1, f.d2).asDiagonal();
  return rot.transpose() * d * rot;
}

}  // namespace

Tensor2 TensorField::at(const Point2& x) const {
  const int r = region(x);
  if (r > 0) return channels[static_cast<std::size_t>(r - 1)].multiplier * Tensor2::Identity();
  return background * base_tensor(*this);
}

Point2 TensorField::strong_direction() const {
  Eigen::SelfAdjointEigenSolver<Tensor2> eig(base_tensor(*this));
  Point2 v = eig.eigenvectors().col(1);
  if (v.x() < 0 || (v.x() == 0 && v.y() < 0)) v = -v;
  return v;
}

void TensorField::validate() const {
  if (!(d1 > 0) || !(d2 > 0) || !(background > 0)) {
    throw Error(ErrorCode::invalid_argument,
                "tensor field: eigenvalues and multipliers must be positive");
  }
  for (const auto& c : channels) {
    if (!(c.multiplier > 0)) {
      throw Error(ErrorCode::invalid_argument, "tensor field: channel multiplier must be positive");
    }
  }
}

Eigen::Matrix3d p1_local_stiffness(const Eigen::Matrix<double, 3, 2>& v, const Tensor2& k) {
  Eigen::Matrix2d jac;
  jac.col(0) = (v.row(1) - v.row(0)).transpose();
  jac.col(1) = (v.row(2) - v.row(0)).transpose();
  const double det = jac.determinant();
  if (std::abs(det) <= 0.0) {
    throw Error(ErrorCode::invalid_argument, "p1_local_stiffness: degenerate triangle");
  }
  // Reference gradients of the barycentric functions, mapped by J^{-T}.
  Eigen::Matrix<double, 3, 2> ref;
  ref << -1, -1, 1, 0, 0, 1;
  const Eigen::Matrix<double, 3, 2> grads = ref * jac.inverse();
  return 0.5 * std::abs(det) * grads * k * grads.transpose();
}

namespace {

using TensorAt = std::function<Tensor2(const Point2&)>;

GeneratedProblem assemble_grid(Index nx, Index ny, const TensorAt& k_at, double source,
                               const SourceProfile& load,
                               const std::vector<Hole>& holes, bool dirichlet_box) {
  if (nx < 2 || ny < 2) {
    throw Error(ErrorCode::invalid_argument, "fem grid: nx and ny must be at least 2");
  }
  const double hx = 1.0 / static_cast<double>(nx - 1);
  const double hy = 1.0 / static_cast<double>(ny - 1);
  const Index n_all = nx * ny;
  auto vid = [nx](Index i, Index j) { return j * nx + i; };
  auto pos = [&](Index v) { return Point2(static_cast<double>(v % nx) * hx, static_cast<double>(v / nx) * hy); };

  std::vector<Triplet> t;
  std::vector<double> support(static_cast<std::size_t>(n_all), 0.0);
  std::vector<char> used(static_cast<std::size_t>(n_all), 0);
  for (Index j = 0; j + 1 < ny; ++j) {
    for (Index i = 0; i + 1 < nx; ++i) {
      const Index v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      const std::array<std::array<Index, 3>, 2> tris{{{v00, v10, v11}, {v00, v11, v01}}};
      for (const auto& tri : tris) {
        Eigen::Matrix<double, 3, 2> xy;
        for (int a = 0; a < 3; ++a) xy.row(a) = pos(tri[static_cast<std::size_t>(a)]).transpose();
        const Point2 bary = xy.colwise().mean().transpose();
        bool removed = false;
        for (const auto& h : holes) removed = removed || h.contains(bary);
        if (removed) continue;
        const Tensor2 k = k_at(bary);
        if (k(0, 0) <= 0 || k.determinant() <= 0 || std::abs(k(0, 1) - k(1, 0)) > 1e-14 * k.norm()) {
          throw Error(ErrorCode::invalid_argument,
                      "fem grid: conductivity tensor is not symmetric positive definite");
        }
        const Eigen::Matrix3d ke = p1_local_stiffness(xy, k);
        const double area = 0.5 * hx * hy;
        for (int a = 0; a < 3; ++a) {
          const Index va = tri[static_cast<std::size_t>(a)];
          used[static_cast<std::size_t>(va)] = 1;
          support[static_cast<std::size_t>(va)] += area;
          for (int b = 0; b < 3; ++b) t.emplace_back(va, tri[static_cast<std::size_t>(b)], ke(a, b));
        }
      }
    }
  }

  std::vector<Index> kept;
  for (Index v = 0; v < n_all; ++v) {
    if (used[static_cast<std::size_t>(v)]) kept.push_back(v);
  }
  const IndexSet keep(kept, n_all);
  const Index n = keep.size();
  for (auto& x : t) x = Triplet(keep.local(x.row()), keep.local(x.col()), x.value());
  SparseMatrix a = from_triplets(n, n, t);

  double scale = 0.0;
  for (Index c = 0; c < a.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) scale = std::max(scale, std::abs(it.value()));
  }
  a.prune([scale](const Index&, const Index&, const double& v) { return std::abs(v) > 1e-14 * scale; });
  a.makeCompressed();

  DenseMatrix coords(n, 2);
  Vector f(n);
  std::vector<DirichletCondition> box;
  for (Index k = 0; k < n; ++k) {
    const Index v = keep[k];
    coords.row(k) = pos(v).transpose();
    f[k] = source * support[static_cast<std::size_t>(v)] / 3.0;
    if (load) f[k] *= load(pos(v));
    const Index i = v % nx, j = v / nx;
    if (i == 0 || j == 0 || i == nx - 1 || j == ny - 1) box.push_back({k, 0.0});
  }
  std::vector<Edge> edges;
  for (Index c = 0; c < a.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) {
      if (it.row() < it.col()) edges.push_back({it.row(), it.col(), -it.value()});
    }
  }
  WeightedGraph g(n, std::move(coords), std::move(edges));
  if (dirichlet_box) g.dirichlet = std::move(box);
  return {std::move(g), std::move(a), std::move(f)};
}

}  // namespace

GeneratedProblem gen_fem_grid(const FemGridSpec& spec) {
  spec.field.validate();
  const TensorField& field = spec.field;
  return assemble_grid(spec.nx, spec.ny, [&field](const Point2& x) { return field.at(x); },
                       spec.source, spec.load, spec.holes, spec.dirichlet_box);
}

SourceProfile gaussian_bump(Point2 center, double width) {
  if (!(width > 0)) throw Error(ErrorCode::invalid_argument, "gaussian_bump: width must be positive");
  const double scale = 0.5 / (width * width);
  return [center, scale](const Point2& x) { return std::exp(-scale * (x - center).squaredNorm()); };
}

SourceProfile wave_profile() {
  return [](const Point2& x) {
    return 1.0 + 0.9 * std::sin(2.0 * std::numbers::pi * x[0]) * std::cos(2.0 * std::numbers::pi * x[1]);
  };
}

FemGridSpec channel_problem(Index nx, Index ny, double contrast, bool perforated) {
  if (!(contrast > 0)) throw Error(ErrorCode::invalid_argument, "channel_problem: contrast must be positive");
  FemGridSpec spec;
  spec.nx = nx;
  spec.ny = ny;
  spec.field = TensorField::isotropic(1.0);
  spec.field.channels = {
      {Point2(0.1, 0.3), Point2(0.9, 0.3), 0.03, contrast},
      {Point2(0.1, 0.7), Point2(0.9, 0.7), 0.03, contrast},
      {Point2(0.2, 0.15), Point2(0.8, 0.85), 0.025, contrast},
  };
  if (perforated) {
    spec.holes = {{Point2(0.25, 0.5), 0.07}, {Point2(0.75, 0.5), 0.07},
                  {Point2(0.5, 0.12), 0.05}, {Point2(0.5, 0.88), 0.05}};
  }
  return spec;
}

GeneratedProblem gen_fem_grid(Index nx, Index ny, const TensorField& field, double source) {
  FemGridSpec spec;
  spec.nx = nx;
  spec.ny = ny;
  spec.field = field;
  spec.source = source;
  return gen_fem_grid(spec);
}

DirectionField constant_direction(double angle) {
  const Point2 b(std::cos(angle), std::sin(angle));
  return [b](const Point2&) { return b; };
}

DirectionField circular_direction(Point2 center) {
  return [center](const Point2& x) {
    const Point2 r = x - center;
    const double len = r.norm();
    if (len == 0.0) return Point2(1.0, 0.0);
    return Point2(-r.y() / len, r.x() / len);
  };
}

GeneratedProblem gen_aniso_heat(Index nx, Index ny, double k_par, double k_perp,
                                const DirectionField& b, double source, const SourceProfile& load) {
  if (!(k_perp > 0) || !(k_par >= k_perp)) {
    throw Error(ErrorCode::invalid_argument, "aniso heat: require k_par >= k_perp > 0");
  }
  const double k_delta = k_par - k_perp;
  auto k_at = [&](const Point2& x) -> Tensor2 {
    const Point2 dir = b(x);
    if (std::abs(dir.norm() - 1.0) > 1e-8) {
      throw Error(ErrorCode::invalid_argument, "aniso heat: direction field is not unit length");
    }
    return k_perp * Tensor2::Identity() + k_delta * dir * dir.transpose();
  };
  return assemble_grid(nx, ny, k_at, source, load, {}, true);
}

double poiseuille_conductance(double radius, double length, double viscosity) {
  return std::numbers::pi * std::pow(radius, 4) / (8.0 * viscosity * length);
}

PoreNetworkSpec PoreNetworkSpec::with_default_channels(Index nx, Index ny) {
  PoreNetworkSpec s;
  s.nx = nx;
  s.ny = ny;
  const Index r1 = ny / 3, r2 = (2 * ny) / 3, mid = nx / 2;
  s.channels.push_back({{{0, r1}, {nx - 1, r1}}});
  s.channels.push_back({{{0, r2}, {(3 * nx) / 4, r2}}});
  s.channels.push_back({{{mid, r1}, {mid, r2}}});
  return s;
}

void PoreNetworkSpec::validate() const {
  auto bad = [](const std::string& what) {
    throw Error(ErrorCode::invalid_argument, "pore network: " + what);
  };
  if (nx < 2 || ny < 2) bad("lattice needs at least 2 x 2 pores");
  if (!(fine_radius_min > 0) || fine_radius_max < fine_radius_min) bad("bad fine radius range");
  if (!(coarse_radius_min > 0) || coarse_radius_max < coarse_radius_min) bad("bad coarse radius range");
  if (!(viscosity > 0)) bad("viscosity must be positive");
  if (jitter < 0 || jitter >= 0.5) bad("jitter must lie in [0, 0.5)");
  if (!(capacity_min > 0) || capacity_max < capacity_min) bad("bad capacity range");
  if (outflow_alpha < 0) bad("negative outflow coefficient");
  for (const auto& c : channels) {
    for (std::size_t k = 0; k < c.points.size(); ++k) {
      const auto [i, j] = c.points[k];
      if (i < 0 || i >= nx || j < 0 || j >= ny) bad("channel point outside the lattice");
      if (k > 0) {
        const auto [pi, pj] = c.points[k - 1];
        if (pi != i && pj != j) bad("channel segments must be axis aligned");
      }
    }
  }
}

WeightedGraph gen_pore_network(const PoreNetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  const Index nx = spec.nx, ny = spec.ny, n = nx * ny;
  const double h = 1.0 / static_cast<double>(nx - 1);
  auto vid = [nx](Index i, Index j) { return j * nx + i; };

  DenseMatrix coords(n, 2);
  for (Index j = 0; j < ny; ++j) {
    for (Index i = 0; i < nx; ++i) {
      const double dx = (i == 0 || i == nx - 1) ? 0.0 : rng.uniform(-spec.jitter, spec.jitter);
      const double dy = (j == 0 || j == ny - 1) ? 0.0 : rng.uniform(-spec.jitter, spec.jitter);
      coords(vid(i, j), 0) = (static_cast<double>(i) + dx) * h;
      coords(vid(i, j), 1) = (static_cast<double>(j) + dy) * h;
    }
  }

  std::vector<char> channel_edge;  // indexed like `edges`
  std::vector<Edge> edges;
  auto log_uniform = [&rng](double lo, double hi) {
    return lo == hi ? lo : std::exp(rng.uniform(std::log(lo), std::log(hi)));
  };
  auto add = [&](Index a, Index b) {
    const double len = (coords.row(a) - coords.row(b)).norm() / h * spec.spacing;
    const double r = log_uniform(spec.fine_radius_min, spec.fine_radius_max) * spec.spacing;
    edges.push_back({a, b, poiseuille_conductance(r, len, spec.viscosity)});
  };
  for (Index j = 0; j < ny; ++j) {
    for (Index i = 0; i < nx; ++i) {
      if (i + 1 < nx) add(vid(i, j), vid(i + 1, j));
      if (j + 1 < ny) add(vid(i, j), vid(i, j + 1));
      if (i + 1 < nx && j + 1 < ny && rng.uniform() < spec.diagonal_probability) {
        if (rng.uniform() < 0.5) {
          add(vid(i, j), vid(i + 1, j + 1));
        } else {
          add(vid(i + 1, j), vid(i, j + 1));
        }
      }
    }
  }

  // Channel throats get coarse-scale radii.
  WeightedGraph lattice(n, coords, edges);
  std::vector<Edge> out = lattice.edges();
  auto find_edge = [&out](Index a, Index b) -> Edge& {
    if (a > b) std::swap(a, b);
    auto it = std::lower_bound(out.begin(), out.end(), Edge{a, b, 0.0}, [](const Edge& x, const Edge& y) {
      return x.i != y.i ? x.i < y.i : x.j < y.j;
    });
    return *it;
  };
  Vector source = Vector::Zero(n);
  for (const auto& c : spec.channels) {
    if (c.points.empty()) continue;
    source[vid(c.points.front().first, c.points.front().second)] = spec.source_strength;
    for (std::size_t k = 1; k < c.points.size(); ++k) {
      auto [i0, j0] = c.points[k - 1];
      const auto [i1, j1] = c.points[k];
      while (i0 != i1 || j0 != j1) {
        const Index ni = i0 + (i1 > i0) - (i1 < i0);
        const Index nj = j0 + (j1 > j0) - (j1 < j0);
        const Index a = vid(i0, j0), b = vid(ni, nj);
        const double len = (coords.row(a) - coords.row(b)).norm() / h * spec.spacing;
        const double r = log_uniform(spec.coarse_radius_min, spec.coarse_radius_max) * spec.spacing;
        find_edge(a, b).w = poiseuille_conductance(r, len, spec.viscosity);
        i0 = ni;
        j0 = nj;
      }
    }
  }

  WeightedGraph g(n, std::move(coords), std::move(out));
  Vector cap(n);
  for (Index v = 0; v < n; ++v) cap[v] = rng.uniform(spec.capacity_min, spec.capacity_max);
  g.capacity = std::move(cap);
  for (Index j = 0; j < ny; ++j) g.robin.push_back({vid(nx - 1, j), spec.outflow_alpha, 0.0});
  g.source = std::move(source);
  return g;
}

LinearProblem make_problem(std::string name, const WeightedGraph& graph,
                           std::optional<SparseMatrix> a, std::optional<Vector> f) {
  const Index n = graph.num_vertices();
  SparseMatrix op;
  Vector rhs;
  if (!a) {
    auto sys = apply_boundary(assemble_signed_laplacian(graph), graph);
    op = std::move(sys.a);
    rhs = std::move(sys.f);
  } else {
    if (a->rows() != n || a->cols() != n) {
      throw Error(ErrorCode::invalid_argument, "make_problem: operator dimension mismatch");
    }
    op = *a;
    rhs = f ? *f : Vector::Zero(n);
    if (rhs.size() != n) throw Error(ErrorCode::invalid_argument, "make_problem: rhs dimension mismatch");
    for (const auto& r : graph.robin) {
      op.coeffRef(r.vertex, r.vertex) += r.alpha;
      rhs[r.vertex] += r.alpha * r.value;
    }
    if (graph.source.size() == n) rhs += graph.source;
    op.makeCompressed();
  }
  require_symmetric(op, 1e-12, "make_problem");
  ReducedSystem red = eliminate_dirichlet(op, rhs, graph.dirichlet);
  LinearProblem p;
  p.name = std::move(name);
  p.graph = graph.induced(red.free);
  p.a = red.a;
  p.f = red.f;
  if (p.graph.capacity) p.capacity = *p.graph.capacity;
  p.reduction = std::move(red);
  return p;
}

LinearProblem make_problem(std::string name, const GeneratedProblem& generated) {
  return make_problem(std::move(name), generated.graph, generated.a, generated.f);
}

}  // namespace msgr
