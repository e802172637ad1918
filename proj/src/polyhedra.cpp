#include "nonsmooth/polyhedra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nonsmooth/rng.hpp"

namespace nonsmooth {

namespace {

bool lex_less(const Vec& a, const Vec& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

bool near(const Vec& a, const Vec& b, double tol) {
  return (a - b).lpNorm<Eigen::Infinity>() <= tol * (1.0 + std::max(a.lpNorm<Eigen::Infinity>(),
                                                                    b.lpNorm<Eigen::Infinity>()));
}

void sort_unique(std::vector<Vec>& v, double tol) {
  std::sort(v.begin(), v.end(), lex_less);
  std::vector<Vec> out;
  for (auto& p : v) {
    bool dup = false;
    for (const auto& q : out) {
      if (near(p, q, tol)) {
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(std::move(p));
  }
  v = std::move(out);
}

void require_cap(Eigen::Index dim, const char* what) {
  if (dim > kMaxPolytopeDim) {
    throw Error(ErrorCode::kDimensionCapExceeded,
                std::string(what) + ": dimension " + std::to_string(dim) +
                    " exceeds " + std::to_string(kMaxPolytopeDim));
  }
}

// Calls f(indices) for every k-subset of {0..n-1} in lexicographic order.
template <class F>
void for_each_subset(Eigen::Index n, Eigen::Index k, F&& f) {
  if (k > n) return;
  std::vector<Eigen::Index> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    f(idx);
    Eigen::Index i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (Eigen::Index j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

Mat columns(const std::vector<Vec>& pts, Eigen::Index dim) {
  Mat m(dim, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t j = 0; j < pts.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = pts[j];
  return m;
}

// min tau s.t. |V lambda - z|_inf <= tau, lambda >= 0, and sum lambda = 1
// when `convex`; returns (tau, lambda).
std::pair<double, Vec> combination_residual(const Mat& v, const Vec& z, bool convex) {
  const Eigen::Index m = v.cols();
  const Eigen::Index d = v.rows();
  LinearProgram lp(m + 1);
  lp.nonneg.assign(static_cast<std::size_t>(m + 1), true);
  lp.objective[m] = 1.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    Vec row = Vec::Zero(m + 1);
    row.head(m) = v.row(i).transpose();
    row[m] = -1.0;
    lp.add_le(row, z[i]);
    row.head(m) = -v.row(i).transpose();
    lp.add_le(row, -z[i]);
  }
  if (convex) {
    Vec row = Vec::Zero(m + 1);
    row.head(m).setOnes();
    lp.add_eq(row, 1.0);
  }
  const LpResult r = solve_lp(lp);
  if (!r.optimal()) {
    return {std::numeric_limits<double>::infinity(), Vec()};
  }
  return {r.x[m], r.x.head(m)};
}

Mat normalized_rows(const Mat& a, std::vector<bool>* zero = nullptr) {
  Mat out = a;
  if (zero) zero->assign(static_cast<std::size_t>(a.rows()), false);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double n = a.row(i).norm();
    if (n > 0.0) {
      out.row(i) /= n;
    } else if (zero) {
      (*zero)[static_cast<std::size_t>(i)] = true;
    }
  }
  return out;
}

Mat rows_of(const std::vector<Vec>& vs, Eigen::Index dim) {
  Mat m(static_cast<Eigen::Index>(vs.size()), dim);
  for (std::size_t i = 0; i < vs.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = vs[i].transpose();
  return m;
}

std::optional<Interval> as_interval(const ConvexPiece& piece) {
  if (piece_dim(piece) != 1) return std::nullopt;
  if (const auto* b = std::get_if<Ball>(&piece)) {
    return Interval{b->center[0] - b->radius, b->center[0] + b->radius};
  }
  const VPolytope v = to_vpolytope(piece);
  if (v.empty()) return std::nullopt;
  double lo = v.vertices[0][0], hi = lo;
  for (const auto& p : v.vertices) {
    lo = std::min(lo, p[0]);
    hi = std::max(hi, p[0]);
  }
  return Interval{lo, hi};
}

double point_to_intervals(double a, const std::vector<Interval>& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& iv : b) {
    const double d = a < iv.lo ? iv.lo - a : (a > iv.hi ? a - iv.hi : 0.0);
    best = std::min(best, d);
  }
  return best;
}

// sup over a in A of dist(a, B), all intervals.
double interval_excess(const std::vector<Interval>& a, std::vector<Interval> b) {
  std::sort(b.begin(), b.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  double worst = 0.0;
  for (const auto& iv : a) {
    worst = std::max(worst, point_to_intervals(iv.lo, b));
    worst = std::max(worst, point_to_intervals(iv.hi, b));
    for (std::size_t k = 0; k + 1 < b.size(); ++k) {
      const double mid = 0.5 * (b[k].hi + b[k + 1].lo);
      if (mid >= iv.lo && mid <= iv.hi) worst = std::max(worst, point_to_intervals(mid, b));
    }
  }
  return worst;
}

// Vertices plus deterministic interior samples of a source piece.
std::vector<Vec> probe_points(const ConvexPiece& piece) {
  std::vector<Vec> pts;
  CounterRng rng(0x5EEDULL);
  if (const auto* b = std::get_if<Ball>(&piece)) {
    const Eigen::Index n = b->dim();
    for (int k = 0; k < 256; ++k) {
      Vec g = rng.normal_vec(n);
      if (g.norm() == 0.0) continue;
      pts.push_back(b->center + b->radius * g / g.norm());
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      pts.push_back(b->center + b->radius * Vec::Unit(n, i));
      pts.push_back(b->center - b->radius * Vec::Unit(n, i));
    }
    return pts;
  }
  const VPolytope v = to_vpolytope(piece);
  pts = v.vertices;
  const std::size_t m = v.vertices.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      for (int k = 1; k < 8; ++k) {
        const double t = k / 8.0;
        pts.push_back((1.0 - t) * v.vertices[i] + t * v.vertices[j]);
      }
    }
  }
  for (int k = 0; k < 128 && m > 2; ++k) {
    Vec w(static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = -std::log(1.0 - rng.uniform());
    w /= w.sum();
    Vec p = Vec::Zero(v.dim);
    for (std::size_t i = 0; i < m; ++i) p += w[static_cast<Eigen::Index>(i)] * v.vertices[i];
    pts.push_back(p);
  }
  return pts;
}

// sup over a in A of dist(a, B).
double excess(const SetUnion& a, const SetUnion& b) {
  double worst = 0.0;
  for (const auto& piece : a.components) {
    std::vector<Vec> pts;
    if (b.components.size() == 1 && !std::holds_alternative<Ball>(piece)) {
      // Distance to a convex set is convex, so the sup sits at a vertex.
      pts = to_vpolytope(piece).vertices;
    } else {
      pts = probe_points(piece);
    }
    for (const auto& p : pts) worst = std::max(worst, distance(b, p));
  }
  return worst;
}

}  // namespace

VPolytope VPolytope::interval(double lo, double hi) {
  if (lo > hi) return VPolytope(1, {});
  if (lo == hi) return VPolytope(1, {Vec::Constant(1, lo)});
  return VPolytope(1, {Vec::Constant(1, lo), Vec::Constant(1, hi)});
}

void HPolyhedron::add(Vec normal, double offset) {
  require_dim(normal.size(), dim, "HPolyhedron::add");
  halfspaces.push_back(Halfspace{std::move(normal), offset});
}

HPolyhedron HPolyhedron::box(const Vec& lo, const Vec& hi) {
  require_dim(hi.size(), lo.size(), "HPolyhedron::box");
  HPolyhedron h(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    h.add(Vec::Unit(lo.size(), i), hi[i]);
    h.add(-Vec::Unit(lo.size(), i), -lo[i]);
  }
  return h;
}

Eigen::Index piece_dim(const ConvexPiece& piece) {
  return std::visit(
      [](const auto& p) -> Eigen::Index {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return p.dim();
        } else {
          return p.dim;
        }
      },
      piece);
}

SetUnion SetUnion::of(ConvexPiece piece) {
  const Eigen::Index d = piece_dim(piece);
  SetUnion s(d);
  if (const auto* v = std::get_if<VPolytope>(&piece); v && v->empty()) return s;
  s.components.push_back(std::move(piece));
  return s;
}

Cone Cone::from_generators(Eigen::Index dim, std::vector<Vec> gens) {
  for (const auto& g : gens) require_dim(g.size(), dim, "Cone::from_generators");
  Cone c;
  c.dim = dim;
  c.generators = std::move(gens);
  return c;
}

Cone Cone::from_facets(Eigen::Index dim, std::vector<Vec> facets) {
  for (const auto& a : facets) require_dim(a.size(), dim, "Cone::from_facets");
  Cone c;
  c.dim = dim;
  c.facets = std::move(facets);
  return c;
}

Cone Cone::from_both(Eigen::Index dim, std::vector<Vec> gens, std::vector<Vec> facets) {
  Cone v = from_generators(dim, gens);
  Cone h = from_facets(dim, facets);
  if (dim <= kMaxPolytopeDim) {
    for (const auto& g : gens) {
      if (!cone_contains(h, g, 1e-8)) {
        throw Error(ErrorCode::kInvalidArgument, "Cone::from_both: generator violates a facet");
      }
    }
    for (const auto& r : cone_generators(h)) {
      if (!cone_contains(v, r, 1e-8)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "Cone::from_both: facets admit a ray outside cone(generators)");
      }
    }
  }
  Cone c;
  c.dim = dim;
  c.generators = std::move(gens);
  c.facets = std::move(facets);
  return c;
}

LpResult lp_solve(const Vec& objective, const HPolyhedron& constraints) {
  require_dim(objective.size(), constraints.dim, "lp_solve");
  LinearProgram lp(constraints.dim);
  lp.objective = objective;
  for (const auto& h : constraints.halfspaces) lp.add_le(h.normal, h.offset);
  return solve_lp(lp);
}

VPolytope conv_hull(const std::vector<Vec>& points, Eigen::Index dim) {
  require_cap(dim, "conv_hull");
  for (const auto& p : points) require_dim(p.size(), dim, "conv_hull");
  std::vector<Vec> pts = points;
  sort_unique(pts, 1e-12);
  if (pts.size() <= 2) return VPolytope(dim, pts);
  if (dim == 1) return VPolytope(dim, {pts.front(), pts.back()});

  // Drop each point that lies in the hull of the remaining ones.
  std::vector<bool> keep(pts.size(), true);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::vector<Vec> others;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (j != i && keep[j]) others.push_back(pts[j]);
    }
    if (others.empty()) continue;
    const double scale = 1.0 + pts[i].lpNorm<Eigen::Infinity>();
    if (combination_residual(columns(others, dim), pts[i], true).first <= 1e-10 * scale) {
      keep[i] = false;
    }
  }
  std::vector<Vec> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (keep[i]) out.push_back(pts[i]);
  }
  return VPolytope(dim, out);
}

VPolytope vertices_of(const HPolyhedron& h, double tol) {
  const Eigen::Index d = h.dim;
  require_cap(d, "vertices_of");
  if (d == 0) return VPolytope(0, {Vec()});

  // Boundedness and feasibility via coordinate LPs.
  for (Eigen::Index i = 0; i < d; ++i) {
    for (double s : {1.0, -1.0}) {
      const LpResult r = lp_solve(s * Vec::Unit(d, i), h);
      if (r.status == LpStatus::kInfeasible) return VPolytope(d, {});
      if (r.status == LpStatus::kUnbounded) {
        throw Error(ErrorCode::kUnsupported, "vertices_of: unbounded polyhedron");
      }
    }
  }

  std::vector<Halfspace> hs;
  for (const auto& s : h.halfspaces) {
    const double n = s.normal.norm();
    if (n == 0.0) continue;
    Halfspace u{s.normal / n, s.offset / n};
    bool dup = false;
    for (const auto& t : hs) {
      if ((t.normal - u.normal).norm() <= 1e-12 && std::abs(t.offset - u.offset) <= 1e-12) {
        dup = true;
        break;
      }
    }
    if (!dup) hs.push_back(u);
  }
  const Eigen::Index m = static_cast<Eigen::Index>(hs.size());
  std::vector<Vec> verts;
  for_each_subset(m, d, [&](const std::vector<Eigen::Index>& idx) {
    Mat a(d, d);
    Vec b(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      a.row(k) = hs[static_cast<std::size_t>(idx[k])].normal.transpose();
      b[k] = hs[static_cast<std::size_t>(idx[k])].offset;
    }
    Eigen::FullPivLU<Mat> lu(a);
    if (lu.rank() < d) return;
    const Vec x = lu.solve(b);
    const double scale = 1.0 + x.lpNorm<Eigen::Infinity>();
    for (const auto& s : hs) {
      if (s.normal.dot(x) > s.offset + tol * scale) return;
    }
    verts.push_back(x);
  });
  return conv_hull(verts, d);
}

VPolytope to_vpolytope(const ConvexPiece& piece) {
  if (const auto* v = std::get_if<VPolytope>(&piece)) return *v;
  if (const auto* h = std::get_if<HPolyhedron>(&piece)) return vertices_of(*h);
  const Ball& b = std::get<Ball>(piece);
  if (b.dim() != 1) {
    throw Error(ErrorCode::kUnsupported, "to_vpolytope: ball of dimension > 1");
  }
  return VPolytope::interval(b.center[0] - b.radius, b.center[0] + b.radius);
}

VPolytope minkowski_sum(const VPolytope& a, const VPolytope& b) {
  require_dim(b.dim, a.dim, "minkowski_sum");
  std::vector<Vec> pts;
  for (const auto& p : a.vertices) {
    for (const auto& q : b.vertices) pts.push_back(p + q);
  }
  return conv_hull(pts, a.dim);
}

VPolytope linear_image(const Mat& m, const VPolytope& p) {
  require_dim(m.cols(), p.dim, "linear_image");
  std::vector<Vec> pts;
  for (const auto& v : p.vertices) pts.push_back(m * v);
  return conv_hull(pts, m.rows());
}

ConvexPiece translate(const ConvexPiece& piece, const Vec& shift) {
  require_dim(shift.size(), piece_dim(piece), "translate");
  if (const auto* v = std::get_if<VPolytope>(&piece)) {
    VPolytope out = *v;
    for (auto& p : out.vertices) p += shift;
    return out;
  }
  if (const auto* h = std::get_if<HPolyhedron>(&piece)) {
    HPolyhedron out = *h;
    for (auto& s : out.halfspaces) s.offset += s.normal.dot(shift);
    return out;
  }
  Ball b = std::get<Ball>(piece);
  b.center += shift;
  return b;
}

SetUnion translate(const SetUnion& set, const Vec& shift) {
  SetUnion out(set.dim);
  for (const auto& c : set.components) out.components.push_back(translate(c, shift));
  return out;
}

double support_value(const VPolytope& s, const Vec& d) {
  if (s.empty()) throw Error(ErrorCode::kEmptySet, "support_value of empty polytope");
  require_dim(d.size(), s.dim, "support_value");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : s.vertices) best = std::max(best, v.dot(d));
  return best;
}

double support_value(const ConvexPiece& s, const Vec& d) {
  if (const auto* v = std::get_if<VPolytope>(&s)) return support_value(*v, d);
  if (const auto* b = std::get_if<Ball>(&s)) {
    require_dim(d.size(), b->dim(), "support_value");
    return b->center.dot(d) + b->radius * d.norm();
  }
  const HPolyhedron& h = std::get<HPolyhedron>(s);
  const LpResult r = lp_solve(-d, h);
  if (r.status == LpStatus::kInfeasible) {
    throw Error(ErrorCode::kEmptySet, "support_value of empty polyhedron");
  }
  if (r.status == LpStatus::kUnbounded) return std::numeric_limits<double>::infinity();
  return -r.value;
}

double support_value(const SetUnion& s, const Vec& d) {
  if (s.empty()) throw Error(ErrorCode::kEmptySet, "support_value of empty set");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& c : s.components) best = std::max(best, support_value(c, d));
  return best;
}

double linf_distance(const ConvexPiece& piece, const Vec& z) {
  require_dim(z.size(), piece_dim(piece), "linf_distance");
  if (const auto* v = std::get_if<VPolytope>(&piece)) {
    if (v->empty()) return std::numeric_limits<double>::infinity();
    return combination_residual(columns(v->vertices, v->dim), z, true).first;
  }
  if (const auto* h = std::get_if<HPolyhedron>(&piece)) {
    // min tau s.t. y in H, |y - z|_inf <= tau.
    const Eigen::Index n = h->dim;
    LinearProgram lp(n + 1);
    lp.objective[n] = 1.0;
    for (const auto& s : h->halfspaces) {
      Vec row = Vec::Zero(n + 1);
      row.head(n) = s.normal;
      lp.add_le(row, s.offset);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      Vec row = Vec::Zero(n + 1);
      row[i] = 1.0;
      row[n] = -1.0;
      lp.add_le(row, z[i]);
      row[i] = -1.0;
      lp.add_le(row, -z[i]);
    }
    const LpResult r = solve_lp(lp);
    if (!r.optimal()) return std::numeric_limits<double>::infinity();
    return std::max(0.0, r.x[n]);
  }
  // Exact for balls via a 1-D search over the sup-norm radius.
  const Ball& b = std::get<Ball>(piece);
  const Vec w = z - b.center;
  if (w.norm() <= b.radius) return 0.0;
  double lo = 0.0, hi = w.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    // Distance from the box w + [-mid, mid]^n to the origin.
    const Vec closest = w.cwiseSign().cwiseProduct((w.cwiseAbs().array() - mid).max(0.0).matrix());
    if (closest.norm() <= b.radius) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

bool contains(const VPolytope& s, const Vec& z, double tol) {
  if (s.empty()) return false;
  return linf_distance(ConvexPiece(s), z) <= tol * (1.0 + z.lpNorm<Eigen::Infinity>());
}

bool contains(const HPolyhedron& s, const Vec& z, double tol) {
  require_dim(z.size(), s.dim, "contains");
  for (const auto& h : s.halfspaces) {
    if (h.normal.dot(z) > h.offset + tol * (1.0 + h.normal.norm() * z.norm())) return false;
  }
  return true;
}

bool contains(const Ball& s, const Vec& z, double tol) {
  require_dim(z.size(), s.dim(), "contains");
  return (z - s.center).norm() <= s.radius + tol * (1.0 + z.norm());
}

bool contains(const ConvexPiece& s, const Vec& z, double tol) {
  return std::visit([&](const auto& p) { return contains(p, z, tol); }, s);
}

bool contains(const SetUnion& s, const Vec& z, double tol) {
  require_dim(z.size(), s.dim, "contains");
  for (const auto& c : s.components) {
    if (contains(c, z, tol)) return true;
  }
  return false;
}

std::optional<Vec> convex_weights(const VPolytope& s, const Vec& z, double tol) {
  if (s.empty()) return std::nullopt;
  require_dim(z.size(), s.dim, "convex_weights");
  auto [tau, lambda] = combination_residual(columns(s.vertices, s.dim), z, true);
  if (tau > tol * (1.0 + z.lpNorm<Eigen::Infinity>())) return std::nullopt;
  return lambda;
}

std::vector<Vec> cone_rays_from_inequalities(const Mat& a, double tol) {
  const Eigen::Index n = a.cols();
  std::vector<bool> zero;
  Mat rows = normalized_rows(a, &zero);
  {
    std::vector<Vec> kept;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      if (!zero[static_cast<std::size_t>(i)]) kept.push_back(rows.row(i).transpose());
    }
    rows = rows_of(kept, n);
  }

  std::vector<Vec> rays;
  // Lineality space = null space of the rows; the pointed part lives in the
  // row space.
  Mat q;
  if (rows.rows() == 0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      rays.push_back(Vec::Unit(n, i));
      rays.push_back(-Vec::Unit(n, i));
    }
    sort_unique(rays, 1e-9);
    return rays;
  }
  Eigen::JacobiSVD<Mat> svd(rows, Eigen::ComputeFullV);
  const Vec& sv = svd.singularValues();
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > 1e-10 * std::max(1.0, sv[0])) ++r;
  }
  const Mat& v = svd.matrixV();
  for (Eigen::Index i = r; i < n; ++i) {
    rays.push_back(v.col(i));
    rays.push_back(-v.col(i));
  }
  q = v.leftCols(r);
  const Mat reduced = rows * q;  // full column rank r

  auto feasible = [&](const Vec& u) {
    return (reduced * u).minCoeff() >= -tol * std::max(1.0, u.norm());
  };
  auto push = [&](const Vec& u) {
    Vec w = q * u;
    const double norm = w.norm();
    if (norm > 0.0) rays.push_back(w / norm);
  };
  if (r == 1) {
    for (double s : {1.0, -1.0}) {
      const Vec u = Vec::Constant(1, s);
      if (feasible(u)) push(u);
    }
  } else if (r >= 2) {
    for_each_subset(reduced.rows(), r - 1, [&](const std::vector<Eigen::Index>& idx) {
      Mat sub(r - 1, r);
      for (Eigen::Index k = 0; k < r - 1; ++k) sub.row(k) = reduced.row(idx[k]);
      Eigen::FullPivLU<Mat> lu(sub);
      lu.setThreshold(1e-10);
      if (lu.rank() != r - 1) return;
      const Mat ker = lu.kernel();
      if (ker.cols() != 1) return;
      Vec u = ker.col(0);
      u /= u.norm();
      for (double s : {1.0, -1.0}) {
        if (feasible(s * u)) push(s * u);
      }
    });
  }
  sort_unique(rays, 1e-9);
  return rays;
}

std::vector<Vec> cone_generators(const Cone& c) {
  if (c.generators) return *c.generators;
  require_cap(c.dim, "cone_generators");
  const std::vector<Vec>& f = *c.facets;
  // a^T v <= 0  <=>  (-a)^T v >= 0.
  return cone_rays_from_inequalities(-rows_of(f, c.dim));
}

Cone dual_cone(const Cone& c) {
  require_cap(c.dim, "dual_cone");
  const std::vector<Vec> gens = cone_generators(c);
  std::vector<Vec> facets;
  for (const auto& g : gens) facets.push_back(-g);
  Cone out;
  out.dim = c.dim;
  out.generators = cone_rays_from_inequalities(rows_of(gens, c.dim));
  out.facets = std::move(facets);
  return out;
}

std::vector<Vec> cone_extreme_generators(const Cone& c) {
  std::vector<Vec> gens;
  for (const auto& g : cone_generators(c)) {
    const double n = g.norm();
    if (n > 0.0) gens.push_back(g / n);
  }
  sort_unique(gens, 1e-10);
  std::vector<bool> keep(gens.size(), true);
  for (std::size_t i = 0; i < gens.size(); ++i) {
    std::vector<Vec> others;
    for (std::size_t j = 0; j < gens.size(); ++j) {
      if (j != i && keep[j]) others.push_back(gens[j]);
    }
    if (others.empty()) continue;
    if (combination_residual(columns(others, c.dim), gens[i], false).first <= 1e-10) {
      keep[i] = false;
    }
  }
  std::vector<Vec> out;
  for (std::size_t i = 0; i < gens.size(); ++i) {
    if (keep[i]) out.push_back(gens[i]);
  }
  return out;
}

bool cone_contains(const Cone& c, const Vec& v, double tol) {
  require_dim(v.size(), c.dim, "cone_contains");
  const double scale = 1.0 + v.norm();
  if (c.facets) {
    for (const auto& a : *c.facets) {
      const double n = a.norm();
      if (n > 0.0 && a.dot(v) / n > tol * scale) return false;
    }
    return true;
  }
  const std::vector<Vec>& g = *c.generators;
  if (g.empty()) return v.norm() <= tol * scale;
  return combination_residual(columns(g, c.dim), v, false).first <= tol * scale;
}

VPolytope cone_cap(const Cone& c) {
  require_cap(c.dim, "cone_cap");
  // Canonical rays come from the H-description, which is unique up to
  // scaling for pointed cones.
  std::vector<Vec> facets;
  if (c.facets) {
    facets = *c.facets;
  } else {
    const Cone dual = dual_cone(c);
    for (const auto& r : *dual.generators) facets.push_back(-r);
  }
  std::vector<Vec> rays = cone_generators(Cone::from_facets(c.dim, facets));
  rays.push_back(Vec::Zero(c.dim));
  return conv_hull(rays, c.dim);
}

Vec min_norm_point(const std::vector<Vec>& points) {
  if (points.empty()) throw Error(ErrorCode::kEmptySet, "min_norm_point of empty set");
  const Eigen::Index d = points[0].size();
  double scale = 0.0;
  for (const auto& p : points) {
    require_dim(p.size(), d, "min_norm_point");
    scale = std::max(scale, p.squaredNorm());
  }
  const double tol = 1e-12 * std::max(scale, 1e-300);

  std::size_t start = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].squaredNorm() < points[start].squaredNorm()) start = i;
  }
  std::vector<std::size_t> active{start};
  Vec lambda = Vec::Ones(1);
  Vec x = points[start];

  for (int major = 0; major < 1000; ++major) {
    std::size_t j = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double v = x.dot(points[i]);
      if (v < best) {
        best = v;
        j = i;
      }
    }
    if (x.squaredNorm() - best <= tol) return x;
    if (std::find(active.begin(), active.end(), j) != active.end()) return x;
    active.push_back(j);
    lambda.conservativeResize(lambda.size() + 1);
    lambda[lambda.size() - 1] = 0.0;

    for (int minor = 0; minor < 1000; ++minor) {
      const Eigen::Index k = static_cast<Eigen::Index>(active.size());
      Mat p(d, k);
      for (Eigen::Index i = 0; i < k; ++i) p.col(i) = points[active[static_cast<std::size_t>(i)]];
      // Affine min-norm point: [P^T P, 1; 1^T, 0][mu; theta] = [0; 1].
      Mat kkt = Mat::Zero(k + 1, k + 1);
      kkt.topLeftCorner(k, k) = p.transpose() * p;
      kkt.topRightCorner(k, 1).setOnes();
      kkt.bottomLeftCorner(1, k).setOnes();
      Vec rhs = Vec::Zero(k + 1);
      rhs[k] = 1.0;
      const Vec mu = kkt.completeOrthogonalDecomposition().solve(rhs).head(k);
      if (mu.minCoeff() > 1e-14) {
        lambda = mu;
        x = p * lambda;
        break;
      }
      double theta = 1.0;
      for (Eigen::Index i = 0; i < k; ++i) {
        if (mu[i] <= 1e-14 && lambda[i] - mu[i] > 0.0) {
          theta = std::min(theta, lambda[i] / (lambda[i] - mu[i]));
        }
      }
      lambda = (1.0 - theta) * lambda + theta * mu;
      std::vector<std::size_t> next;
      std::vector<double> next_lambda;
      for (Eigen::Index i = 0; i < k; ++i) {
        if (lambda[i] > 1e-14) {
          next.push_back(active[static_cast<std::size_t>(i)]);
          next_lambda.push_back(lambda[i]);
        }
      }
      if (next.empty()) {
        next.push_back(active.back());
        next_lambda.push_back(1.0);
      }
      active = next;
      lambda = Eigen::Map<Vec>(next_lambda.data(), static_cast<Eigen::Index>(next_lambda.size()));
      lambda /= lambda.sum();
      x = Vec::Zero(d);
      for (std::size_t i = 0; i < active.size(); ++i) {
        x += lambda[static_cast<Eigen::Index>(i)] * points[active[i]];
      }
    }
  }
  return x;
}

double distance(const ConvexPiece& piece, const Vec& z) {
  require_dim(z.size(), piece_dim(piece), "distance");
  if (const auto* b = std::get_if<Ball>(&piece)) {
    return std::max(0.0, (z - b->center).norm() - b->radius);
  }
  const VPolytope v = to_vpolytope(piece);
  if (v.empty()) return std::numeric_limits<double>::infinity();
  std::vector<Vec> shifted;
  for (const auto& p : v.vertices) shifted.push_back(p - z);
  return min_norm_point(shifted).norm();
}

double distance(const SetUnion& set, const Vec& z) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : set.components) best = std::min(best, distance(c, z));
  return best;
}

double set_distance(const SetUnion& a, const SetUnion& b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::kEmptySet, "set_distance of empty set");
  require_dim(b.dim, a.dim, "set_distance");
  if (a.dim == 1) {
    std::vector<Interval> ia, ib;
    for (const auto& c : a.components) {
      if (auto iv = as_interval(c)) ia.push_back(*iv);
    }
    for (const auto& c : b.components) {
      if (auto iv = as_interval(c)) ib.push_back(*iv);
    }
    if (ia.empty() || ib.empty()) throw Error(ErrorCode::kEmptySet, "set_distance of empty set");
    return std::max(interval_excess(ia, ib), interval_excess(ib, ia));
  }
  return std::max(excess(a, b), excess(b, a));
}

nlohmann::json vec_to_json(const Vec& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Vec vec_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::kInvalidArgument, "expected a JSON array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

nlohmann::json to_json(const ConvexPiece& piece) {
  nlohmann::json j;
  if (const auto* v = std::get_if<VPolytope>(&piece)) {
    j["vertices"] = nlohmann::json::array();
    for (const auto& p : v->vertices) j["vertices"].push_back(vec_to_json(p));
  } else if (const auto* h = std::get_if<HPolyhedron>(&piece)) {
    j["halfspaces"] = nlohmann::json::array();
    for (const auto& s : h->halfspaces) {
      j["halfspaces"].push_back({{"a", vec_to_json(s.normal)}, {"b", s.offset}});
    }
  } else {
    const Ball& b = std::get<Ball>(piece);
    j["ball"] = {{"center", vec_to_json(b.center)}, {"radius", b.radius}};
  }
  return j;
}

nlohmann::json to_json(const SetUnion& set) {
  nlohmann::json j;
  j["dim"] = set.dim;
  j["components"] = nlohmann::json::array();
  for (const auto& c : set.components) j["components"].push_back(to_json(c));
  return j;
}

nlohmann::json to_json(const Cone& cone) {
  nlohmann::json j;
  j["dim"] = cone.dim;
  auto list = [](const std::vector<Vec>& vs) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& v : vs) a.push_back(vec_to_json(v));
    return a;
  };
  if (cone.generators) j["generators"] = list(*cone.generators);
  if (cone.facets) j["facets"] = list(*cone.facets);
  return j;
}

namespace {

ConvexPiece piece_from_json(const nlohmann::json& j, Eigen::Index dim) {
  if (j.contains("vertices")) {
    VPolytope v(dim, {});
    for (const auto& p : j["vertices"]) v.vertices.push_back(vec_from_json(p));
    for (const auto& p : v.vertices) require_dim(p.size(), dim, "set_from_json");
    return v;
  }
  if (j.contains("halfspaces")) {
    HPolyhedron h(dim);
    for (const auto& s : j["halfspaces"]) h.add(vec_from_json(s.at("a")), s.at("b").get<double>());
    return h;
  }
  if (j.contains("ball")) {
    Ball b{vec_from_json(j["ball"].at("center")), j["ball"].at("radius").get<double>()};
    require_dim(b.dim(), dim, "set_from_json");
    return b;
  }
  throw Error(ErrorCode::kInvalidArgument, "unrecognized convex piece JSON");
}

Eigen::Index infer_dim(const nlohmann::json& j) {
  if (j.contains("vertices") && !j["vertices"].empty()) {
    return static_cast<Eigen::Index>(j["vertices"][0].size());
  }
  if (j.contains("halfspaces") && !j["halfspaces"].empty()) {
    return static_cast<Eigen::Index>(j["halfspaces"][0].at("a").size());
  }
  if (j.contains("ball")) return static_cast<Eigen::Index>(j["ball"].at("center").size());
  return 0;
}

}  // namespace

SetUnion set_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "expected a JSON object");
  if (j.contains("components")) {
    Eigen::Index dim = j.contains("dim") ? j["dim"].get<Eigen::Index>() : 0;
    if (!j.contains("dim")) {
      for (const auto& c : j["components"]) dim = std::max(dim, infer_dim(c));
    }
    SetUnion s(dim);
    for (const auto& c : j["components"]) {
      ConvexPiece p = piece_from_json(c, dim);
      if (const auto* v = std::get_if<VPolytope>(&p); v && v->empty()) continue;
      s.components.push_back(std::move(p));
    }
    return s;
  }
  const Eigen::Index dim = j.contains("dim") ? j["dim"].get<Eigen::Index>() : infer_dim(j);
  return SetUnion::of(piece_from_json(j, dim));
}

}  // namespace nonsmooth
