#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "msgr/graph.hpp"

namespace msgr {

using Point2 = Eigen::Vector2d;
using Tensor2 = Eigen::Matrix2d;

/// Capsule-shaped region (segment a-b thickened by half_width) carrying an
/// isotropic coefficient K_r. Used for high-conductivity channels.
struct Channel {
  Point2 a = Point2::Zero();
  Point2 b = Point2::Zero();
  double half_width = 0.0;
  double multiplier = 1.0;

  bool contains(const Point2& x) const;
};

struct Hole {
  Point2 center = Point2::Zero();
  double radius = 0.0;

  bool contains(const Point2& x) const { return (x - center).norm() < radius; }
};

/// Piecewise-constant conductivity. The background is either isotropic
/// (background * I) or the rotated tensor background * R^T diag(d1, d2) R
/// with R = [cos -sin; sin cos]. Channels override the background with an
/// isotropic K_r; the first channel containing a point wins.
struct TensorField {
  enum class Kind { isotropic, rotated };

  Kind kind = Kind::isotropic;
  double d1 = 1.0;
  double d2 = 1.0;
  double theta = 0.0;
  double background = 1.0;
  std::vector<Channel> channels;

  static TensorField isotropic(double k = 1.0);
  static TensorField rotated(double d1, double d2, double theta);

  /// 0 for the background, 1 + channel index otherwise.
  int region(const Point2& x) const;
  Tensor2 at(const Point2& x) const;
  /// Unit eigenvector of the background tensor for its largest eigenvalue.
  Point2 strong_direction() const;
  void validate() const;
};

/// Output of a generator: the full graph (boundary data attached), the
/// operator before boundary conditions and the load vector.
struct GeneratedProblem {
  WeightedGraph graph;
  SparseMatrix a;
  Vector f;
};

/// Spatial profile q(x) multiplying a uniform source.
using SourceProfile = std::function<double(const Point2&)>;

/// exp(-|x - center|^2 / (2 width^2)).
SourceProfile gaussian_bump(Point2 center, double width);
/// 1 + 0.9 sin(2 pi x) cos(2 pi y).
SourceProfile wave_profile();

struct FemGridSpec {
  Index nx = 2;
  Index ny = 2;
  TensorField field;
  double source = 1.0;
  /// Optional source profile q(x); the lumped load becomes
  /// source * q(x_i) * |supp phi_i| / 3.
  SourceProfile load;
  /// Elements whose barycenter lies in a hole are removed (perforations).
  std::vector<Hole> holes;
  /// Attach zero Dirichlet data on the outer box boundary.
  bool dirichlet_box = true;
};

/// Unit-square problem with a background of conductivity 1 crossed by
/// three channels of conductivity `contrast` (two horizontal bands and
/// one diagonal) and, optionally, four circular perforations between them.
FemGridSpec channel_problem(Index nx, Index ny, double contrast, bool perforated = false);

/// Element stiffness area * G K G^T of a P1 triangle, rows/cols in vertex order.
Eigen::Matrix3d p1_local_stiffness(const Eigen::Matrix<double, 3, 2>& vertices,
                                   const Tensor2& k);

/// P1 stiffness on the unit square with nx x ny vertices, each cell split
/// into two triangles along its (0,0)-(1,1) diagonal. K is evaluated at the
/// element barycenter; the load is lumped, f_i = source * |supp phi_i| / 3.
/// Graph edges carry w_ij = -a_ij (signed), so the signed Laplacian of the
/// graph reproduces the off-diagonal part of A.
GeneratedProblem gen_fem_grid(const FemGridSpec& spec);
GeneratedProblem gen_fem_grid(Index nx, Index ny, const TensorField& field, double source);

/// Unit field direction b(x) for the anisotropic heat model.
using DirectionField = std::function<Point2(const Point2&)>;

DirectionField constant_direction(double angle);
/// Counter-clockwise circles around center.
DirectionField circular_direction(Point2 center);

/// -div(k_perp grad u) - div((k_par - k_perp) b (b . grad u)) = source.
GeneratedProblem gen_aniso_heat(Index nx, Index ny, double k_par, double k_perp,
                                const DirectionField& b, double source = 1.0,
                                const SourceProfile& load = {});

/// Lattice path in (column, row) lattice coordinates; consecutive points
/// must share a row or a column.
struct ChannelPath {
  std::vector<std::pair<Index, Index>> points;
};

struct PoreNetworkSpec {
  Index nx = 64;
  Index ny = 64;
  /// Throat radii relative to the lattice spacing, sampled log-uniformly.
  double fine_radius_min = 0.05;
  double fine_radius_max = 0.15;
  double coarse_radius_min = 0.6;
  double coarse_radius_max = 0.9;
  double viscosity = 1e-3;
  /// Physical lattice spacing entering the conductance formula; pore
  /// coordinates themselves are normalized to the unit box.
  double spacing = 1.0;
  /// Random pore displacement as a fraction of the spacing.
  double jitter = 0.2;
  /// Probability of an extra diagonal throat per lattice cell.
  double diagonal_probability = 0.1;
  std::vector<ChannelPath> channels;
  double capacity_min = 0.1;
  double capacity_max = 0.82;
  /// Robin coefficient on the right boundary (outflow, g = 0).
  double outflow_alpha = 1.0;
  /// Point source at the first vertex of every channel.
  double source_strength = 1.0;

  /// Two horizontal channels entering from the left plus a vertical link.
  static PoreNetworkSpec with_default_channels(Index nx, Index ny);
  void validate() const;
};

/// Hagen-Poiseuille conductance pi r^4 / (8 mu l).
double poiseuille_conductance(double radius, double length, double viscosity);

/// Deterministic per seed; coordinates in [0,1] x [0, (ny-1)/(nx-1)].
WeightedGraph gen_pore_network(const PoreNetworkSpec& spec, std::uint64_t seed);

/// A boundary-conditioned SPD system on the free vertices together with the
/// graph restricted to those vertices.
struct LinearProblem {
  std::string name;
  WeightedGraph graph;
  SparseMatrix a;
  Vector f;
  /// Per free vertex, empty when the graph has no capacity data.
  Vector capacity;
  ReducedSystem reduction;
};

/// Applies Robin data (when `a` is empty the operator is L + B from the
/// graph) and eliminates Dirichlet vertices.
LinearProblem make_problem(std::string name, const WeightedGraph& graph,
                           std::optional<SparseMatrix> a = std::nullopt,
                           std::optional<Vector> f = std::nullopt);
LinearProblem make_problem(std::string name, const GeneratedProblem& generated);

}  // namespace msgr
