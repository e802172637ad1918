#pragma once

#include <optional>
#include <variant>
#include <vector>

#include <json.hpp>

#include "nonsmooth/common.hpp"
#include "nonsmooth/lp.hpp"

namespace nonsmooth {

/// Exact polytope operations are restricted to this ambient dimension.
inline constexpr Eigen::Index kMaxPolytopeDim = 4;

/// Convex hull of a finite vertex list; an empty list is the empty set.
struct VPolytope {
  Eigen::Index dim = 0;
  std::vector<Vec> vertices;

  VPolytope() = default;
  VPolytope(Eigen::Index d, std::vector<Vec> v) : dim(d), vertices(std::move(v)) {}

  bool empty() const { return vertices.empty(); }
  static VPolytope point(const Vec& p) { return VPolytope(p.size(), {p}); }
  /// The segment [lo, hi] of the real line.
  static VPolytope interval(double lo, double hi);
};

/// {z : normal^T z <= offset}.
struct Halfspace {
  Vec normal;
  double offset = 0.0;
};

/// Intersection of finitely many halfspaces; may be empty or unbounded.
struct HPolyhedron {
  Eigen::Index dim = 0;
  std::vector<Halfspace> halfspaces;

  HPolyhedron() = default;
  explicit HPolyhedron(Eigen::Index d) : dim(d) {}

  void add(Vec normal, double offset);
  /// Axis-aligned box lo <= z <= hi.
  static HPolyhedron box(const Vec& lo, const Vec& hi);
};

/// Closed Euclidean ball; the only non-polyhedral convex piece supported.
struct Ball {
  Vec center;
  double radius = 0.0;

  Eigen::Index dim() const { return center.size(); }
};

using ConvexPiece = std::variant<VPolytope, HPolyhedron, Ball>;

Eigen::Index piece_dim(const ConvexPiece& piece);

/// Finite, possibly non-convex union of convex pieces. No components means
/// the empty set.
struct SetUnion {
  Eigen::Index dim = 0;
  std::vector<ConvexPiece> components;

  SetUnion() = default;
  explicit SetUnion(Eigen::Index d) : dim(d) {}
  SetUnion(Eigen::Index d, std::vector<ConvexPiece> c)
      : dim(d), components(std::move(c)) {}

  static SetUnion of(ConvexPiece piece);
  bool empty() const { return components.empty(); }
};

/// Polyhedral cone. V-rep: cone(generators) (no generators is {0}).
/// H-rep: {v : a^T v <= 0 for every a in facets} (no facets is R^n).
struct Cone {
  Eigen::Index dim = 0;
  std::optional<std::vector<Vec>> generators;
  std::optional<std::vector<Vec>> facets;

  static Cone from_generators(Eigen::Index dim, std::vector<Vec> gens);
  static Cone from_facets(Eigen::Index dim, std::vector<Vec> facets);
  /// Both representations; throws kInvalidArgument unless they describe
  /// the same cone (checked for dim <= kMaxPolytopeDim).
  static Cone from_both(Eigen::Index dim, std::vector<Vec> gens,
                        std::vector<Vec> facets);
};

// ---------------------------------------------------------------------------
// Linear programming over an H-polyhedron.

/// minimize objective^T z over the polyhedron (free variables).
LpResult lp_solve(const Vec& objective, const HPolyhedron& constraints);

// ---------------------------------------------------------------------------
// Hulls and vertex enumeration.

/// Irredundant vertex set of conv(points), lexicographically sorted.
VPolytope conv_hull(const std::vector<Vec>& points, Eigen::Index dim);
inline VPolytope conv_hull(const VPolytope& p) { return conv_hull(p.vertices, p.dim); }

/// Vertices of a bounded H-polyhedron (dim <= kMaxPolytopeDim). Throws
/// kUnsupported when the polyhedron is unbounded.
VPolytope vertices_of(const HPolyhedron& h, double tol = 1e-9);

/// Converts a polyhedral piece to V-rep; throws kUnsupported for balls of
/// dimension > 1.
VPolytope to_vpolytope(const ConvexPiece& piece);

VPolytope minkowski_sum(const VPolytope& a, const VPolytope& b);
/// {M v : v in p}.
VPolytope linear_image(const Mat& m, const VPolytope& p);
ConvexPiece translate(const ConvexPiece& piece, const Vec& shift);
SetUnion translate(const SetUnion& set, const Vec& shift);

// ---------------------------------------------------------------------------
// Support functions and membership.

/// max over the set of s^T d. Throws kEmptySet on an empty set.
double support_value(const VPolytope& s, const Vec& d);
double support_value(const ConvexPiece& s, const Vec& d);
double support_value(const SetUnion& s, const Vec& d);

/// Infinity-norm distance from z to the piece (0 inside).
double linf_distance(const ConvexPiece& piece, const Vec& z);

bool contains(const VPolytope& s, const Vec& z, double tol = 1e-9);
bool contains(const HPolyhedron& s, const Vec& z, double tol = 1e-9);
bool contains(const Ball& s, const Vec& z, double tol = 1e-9);
bool contains(const ConvexPiece& s, const Vec& z, double tol = 1e-9);
bool contains(const SetUnion& s, const Vec& z, double tol = 1e-9);

/// Convex weights lambda with sum lambda_i v_i = z (to tol), if any.
std::optional<Vec> convex_weights(const VPolytope& s, const Vec& z, double tol = 1e-9);

// ---------------------------------------------------------------------------
// Cones.

/// Extreme rays (plus +/- a lineality basis) of {v : rows(A) v >= 0}.
/// Rays are unit length and sorted lexicographically.
std::vector<Vec> cone_rays_from_inequalities(const Mat& a, double tol = 1e-10);

/// {v : v^T r >= 0 for every r in C}; carries both representations.
Cone dual_cone(const Cone& c);

/// Generator form of a cone (computing it from facets when needed).
std::vector<Vec> cone_generators(const Cone& c);
/// Non-redundant unit generators of the cone.
std::vector<Vec> cone_extreme_generators(const Cone& c);
bool cone_contains(const Cone& c, const Vec& v, double tol = 1e-9);
/// conv({0} U unit extreme generators); equal cones have equal caps.
VPolytope cone_cap(const Cone& c);

// ---------------------------------------------------------------------------
// Distances.

/// Closest point of conv(points) to the origin (Wolfe's min-norm point).
Vec min_norm_point(const std::vector<Vec>& points);

/// Euclidean distance from z to a convex piece.
double distance(const ConvexPiece& piece, const Vec& z);
double distance(const SetUnion& set, const Vec& z);

/// Symmetric Hausdorff distance. Exact for 1-D interval unions and when
/// the target of each one-sided term is a single convex piece; otherwise
/// the sup runs over vertices plus deterministic samples of each source
/// piece. Throws kEmptySet on an empty operand.
double set_distance(const SetUnion& a, const SetUnion& b);

// ---------------------------------------------------------------------------
// JSON: {"vertices": [[..]]} | {"halfspaces": [{"a": [..], "b": ..}]} |
// {"ball": {"center": [..], "radius": r}}; unions as {"components": [..]}.

nlohmann::json to_json(const ConvexPiece& piece);
nlohmann::json to_json(const SetUnion& set);
nlohmann::json to_json(const Cone& cone);
nlohmann::json vec_to_json(const Vec& v);
Vec vec_from_json(const nlohmann::json& j);
SetUnion set_from_json(const nlohmann::json& j);

}  // namespace nonsmooth
