#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "nonsmooth/subdiff.hpp"

namespace nonsmooth {

const char* to_string(SubdiffKind kind) {
  switch (kind) {
    case SubdiffKind::kFrechet: return "frechet";
    case SubdiffKind::kLimiting: return "limiting";
    case SubdiffKind::kClarke: return "clarke";
    case SubdiffKind::kBouligand: return "bouligand";
    case SubdiffKind::kConvex: return "convex";
  }
  return "?";
}

const char* to_string(Exactness e) { return e == Exactness::kExact ? "exact" : "sampled"; }

const char* to_string(DerivKind kind) { return kind == DerivKind::kOrdinary ? "ordinary" : "clarke"; }

nlohmann::json to_json(const SubdiffSet& s) {
  nlohmann::json j;
  j["kind"] = to_string(s.kind);
  j["at"] = vec_to_json(s.at);
  j["exactness"] = to_string(s.exactness);
  j["tolerance"] = s.tolerance;
  j["empty"] = s.empty();
  j["set"] = to_json(s.set);
  return j;
}

namespace {

double act_tol(double v) { return kExactActivityTol * (1.0 + std::abs(v)); }

// (value, f'(x, d)) by the directional derivative rules.
std::pair<double, double> dd_node(const Node& n, const Point& x, const Vec& d) {
  switch (n.kind) {
    case NodeKind::kConst: return {n.scalar, 0.0};
    case NodeKind::kVar: return {x[n.index], d[n.index]};
    case NodeKind::kAffine: return {n.coeffs.dot(x) + n.scalar, n.coeffs.dot(d)};
    case NodeKind::kSum: {
      double v = 0.0, dd = 0.0;
      for (const auto& c : n.children) {
        auto [cv, cd] = dd_node(*c, x, d);
        v += cv;
        dd += cd;
      }
      return {v, dd};
    }
    case NodeKind::kScale: {
      auto [v, dd] = dd_node(*n.children[0], x, d);
      return {n.scalar * v, n.scalar * dd};
    }
    case NodeKind::kMax:
    case NodeKind::kMin: {
      const bool is_max = n.kind == NodeKind::kMax;
      std::vector<std::pair<double, double>> cs;
      for (const auto& c : n.children) cs.push_back(dd_node(*c, x, d));
      double best = cs[0].first;
      for (const auto& c : cs) best = is_max ? std::max(best, c.first) : std::min(best, c.first);
      std::optional<double> dd;
      for (const auto& c : cs) {
        if (std::abs(c.first - best) > act_tol(best)) continue;
        dd = !dd ? c.second : (is_max ? std::max(*dd, c.second) : std::min(*dd, c.second));
      }
      return {best, *dd};
    }
    case NodeKind::kAbs: {
      auto [v, dd] = dd_node(*n.children[0], x, d);
      if (v > act_tol(v)) return {v, dd};
      if (v < -act_tol(v)) return {-v, -dd};
      return {0.0, std::abs(dd)};
    }
    case NodeKind::kSq: {
      auto [v, dd] = dd_node(*n.children[0], x, d);
      return {v * v, 2.0 * v * dd};
    }
    case NodeKind::kBuiltin: {
      auto [u, a] = dd_node(*n.children[0], x, d);
      const BuiltinFn& b = find_builtin(n.name);
      for (const auto& k : b.kinks) {
        if (std::abs(u - k.at) > act_tol(k.at)) continue;
        if (a == 0.0) return {b.value(u), 0.0};
        const Interval q = a > 0.0 ? k.dini_right.scaled(a) : k.dini_left.scaled(-a);
        if (!q.degenerate()) {
          throw Error(ErrorCode::kUseSampled,
                      "dir_deriv: '" + n.name + "' is not directionally differentiable here");
        }
        return {b.value(u), q.lo};
      }
      return {b.value(u), b.derivative(u) * a};
    }
  }
  return {0.0, 0.0};
}

bool pa_or_plq(const Expr& e) {
  const FragmentClass fc = classify_fragment(e);
  return fc == FragmentClass::kPA || fc == FragmentClass::kPLQ;
}

SubdiffSet make_set(SubdiffKind kind, const Point& x, std::vector<ConvexPiece> pieces) {
  SubdiffSet s;
  s.kind = kind;
  s.at = x;
  s.set = SetUnion(x.size(), std::move(pieces));
  return s;
}

std::vector<Vec> distinct_gradients(const LocalModel& m) {
  std::vector<Vec> out;
  for (const auto& p : m.pieces) {
    const double scale = 1.0 + p.gradient.lpNorm<Eigen::Infinity>();
    bool dup = false;
    for (const auto& q : out) {
      if ((q - p.gradient).lpNorm<Eigen::Infinity>() <= 1e-12 * scale) {
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(p.gradient);
  }
  std::sort(out.begin(), out.end(), [](const Vec& a, const Vec& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Faces of the hyperplane arrangement cut out by the piece rows. Frechet
// sets are constant on the relatively open faces, so the limiting set is
// the union of the Frechet sets of all faces.

struct Arrangement {
  Eigen::Index dim = 0;
  std::vector<Vec> rows;
  // Per piece: (row index, orientation) for each of its rows.
  std::vector<std::vector<std::pair<std::size_t, int>>> refs;
};

Arrangement arrangement(const LocalModel& m) {
  Arrangement a;
  a.dim = m.dim;
  for (const auto& p : m.pieces) {
    std::vector<std::pair<std::size_t, int>> refs;
    for (Eigen::Index i = 0; i < p.rows.rows(); ++i) {
      const Vec r = p.rows.row(i).transpose() / p.rows.row(i).norm();
      std::optional<std::pair<std::size_t, int>> hit;
      for (std::size_t k = 0; k < a.rows.size() && !hit; ++k) {
        if ((a.rows[k] - r).lpNorm<Eigen::Infinity>() <= 1e-9) hit = {k, 1};
        else if ((a.rows[k] + r).lpNorm<Eigen::Infinity>() <= 1e-9) hit = {k, -1};
      }
      if (!hit) {
        a.rows.push_back(r);
        hit = {a.rows.size() - 1, 1};
      }
      refs.push_back(*hit);
    }
    a.refs.push_back(std::move(refs));
  }
  return a;
}

// A point of the relatively open face with the given row signs.
std::optional<Vec> face_witness(const Arrangement& a, const std::vector<int>& signs) {
  LinearProgram lp(a.dim);
  for (std::size_t k = 0; k < signs.size(); ++k) {
    if (signs[k] == 0) lp.add_eq(a.rows[k], 0.0);
    else lp.add_ge(signs[k] * a.rows[k], 1.0);
  }
  const LpResult r = solve_lp(lp);
  if (!r.optimal()) return std::nullopt;
  return r.x;
}

std::vector<std::vector<int>> arrangement_faces(const Arrangement& a) {
  std::vector<std::pair<std::vector<int>, Vec>> faces{{{}, Vec::Zero(a.dim)}};
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    std::vector<std::pair<std::vector<int>, Vec>> next;
    for (const auto& [signs, w] : faces) {
      const double t = a.rows[k].dot(w);
      for (int s : {1, 0, -1}) {
        std::vector<int> ext = signs;
        ext.push_back(s);
        const bool known = (s == 1 && t > 1e-9) || (s == -1 && t < -1e-9) ||
                           (s == 0 && std::abs(t) <= 1e-12 &&
                            std::all_of(signs.begin(), signs.end(), [](int v) { return v == 0; }));
        if (known) {
          next.emplace_back(std::move(ext), w);
        } else if (auto h = face_witness(a, ext)) {
          next.emplace_back(std::move(ext), *h);
        }
      }
    }
    faces = std::move(next);
  }
  std::vector<std::vector<int>> out;
  for (auto& f : faces) out.push_back(std::move(f.first));
  return out;
}

VPolytope frechet_at_face(const LocalModel& m, const Arrangement& a, const std::vector<int>& signs) {
  HPolyhedron h(m.dim);
  for (std::size_t p = 0; p < m.pieces.size(); ++p) {
    std::vector<Vec> tight;
    bool inside = true;
    for (const auto& [k, o] : a.refs[p]) {
      if (signs[k] == 0) tight.push_back(o * a.rows[k]);
      else if (signs[k] != o) inside = false;
    }
    if (!inside) continue;
    Mat t(static_cast<Eigen::Index>(tight.size()), m.dim);
    for (std::size_t i = 0; i < tight.size(); ++i) t.row(static_cast<Eigen::Index>(i)) = tight[i].transpose();
    for (const Vec& r : cone_rays_from_inequalities(t)) h.add(r, m.pieces[p].gradient.dot(r));
  }
  return vertices_of(h);
}

void require_frechet_dim(const Expr& e) {
  if (e.dim() > kMaxFrechetDim) {
    throw Error(ErrorCode::kDimensionCapExceeded,
                "frechet/limiting: PA dimension " + std::to_string(e.dim()) + " exceeds " +
                    std::to_string(kMaxFrechetDim));
  }
}

enum class Route { kLocal, kGerm };

// PA trees use the local model; other one-dimensional trees use the germ
// engine; PLQ trees use the local model unless Frechet-type sets are asked.
Route route(const Expr& e, bool frechet_type, const char* what) {
  const FragmentClass fc = classify_fragment(e);
  if (fc == FragmentClass::kPA) {
    if (frechet_type) require_frechet_dim(e);
    return Route::kLocal;
  }
  if (e.dim() == 1) return Route::kGerm;
  if (fc == FragmentClass::kPLQ) {
    if (!frechet_type) return Route::kLocal;
    throw Error(ErrorCode::kUnsupported, std::string(what) + ": exact sets for PLQ need dimension 1");
  }
  throw Error(ErrorCode::kUseSampled, std::string(what) + ": no exact rule for fragment " + to_string(fc));
}

// Drops components contained in another component.
std::vector<ConvexPiece> reduce_union(const std::vector<VPolytope>& parts) {
  std::vector<ConvexPiece> out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    bool covered = false;
    for (std::size_t j = 0; j < parts.size() && !covered; ++j) {
      if (i == j) continue;
      const bool inside = std::all_of(parts[i].vertices.begin(), parts[i].vertices.end(),
                                      [&](const Vec& v) { return contains(parts[j], v, 1e-9); });
      if (!inside) continue;
      const bool mutual = std::all_of(parts[j].vertices.begin(), parts[j].vertices.end(),
                                      [&](const Vec& v) { return contains(parts[i], v, 1e-9); });
      covered = !mutual || j < i;
    }
    if (!covered) out.emplace_back(parts[i]);
  }
  return out;
}

}  // namespace

DirDerivValue dir_deriv(const Expr& e, const Point& x, const Vec& d) {
  require_dim(x.size(), e.dim(), "dir_deriv");
  require_dim(d.size(), e.dim(), "dir_deriv: direction");
  if (pa_or_plq(e)) {
    DirDerivValue r;
    r.value = dd_node(e.root(), x, d).second;
    return r;
  }
  if (e.dim() == 1) return dir_deriv_1d(e, x[0], d[0]);
  throw Error(ErrorCode::kUseSampled,
              std::string("dir_deriv: no exact rule for fragment ") + to_string(classify_fragment(e)));
}

DirDerivValue clarke_dir_deriv(const Expr& e, const Point& x, const Vec& d) {
  require_dim(d.size(), e.dim(), "clarke_dir_deriv: direction");
  DirDerivValue r;
  r.kind = DerivKind::kClarke;
  if (route(e, false, "clarke_dir_deriv") == Route::kGerm) return clarke_dir_deriv_1d(e, x[0], d[0]);
  const LocalModel m = local_model(e, x);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& p : m.pieces) best = std::max(best, p.gradient.dot(d));
  r.value = best;
  return r;
}

SubdiffSet bouligand(const Expr& e, const Point& x) {
  require_dim(x.size(), e.dim(), "bouligand");
  if (route(e, false, "bouligand") == Route::kGerm) return bouligand_1d(e, x[0]);
  std::vector<ConvexPiece> pts;
  for (const auto& g : distinct_gradients(local_model(e, x))) pts.emplace_back(VPolytope::point(g));
  return make_set(SubdiffKind::kBouligand, x, std::move(pts));
}

SubdiffSet clarke(const Expr& e, const Point& x) {
  require_dim(x.size(), e.dim(), "clarke");
  if (route(e, false, "clarke") == Route::kGerm) return clarke_1d(e, x[0]);
  if (e.dim() > kMaxPolytopeDim) {
    throw Error(ErrorCode::kDimensionCapExceeded, "clarke: dimension " + std::to_string(e.dim()));
  }
  return make_set(SubdiffKind::kClarke, x,
                  {conv_hull(distinct_gradients(local_model(e, x)), e.dim())});
}

SubdiffSet frechet(const Expr& e, const Point& x) {
  require_dim(x.size(), e.dim(), "frechet");
  if (route(e, true, "frechet") == Route::kGerm) return frechet_1d(e, x[0]);
  const LocalModel m = local_model(e, x);
  const Arrangement a = arrangement(m);
  VPolytope f = frechet_at_face(m, a, std::vector<int>(a.rows.size(), 0));
  std::vector<ConvexPiece> parts;
  if (!f.empty()) parts.emplace_back(std::move(f));
  return make_set(SubdiffKind::kFrechet, x, std::move(parts));
}

SubdiffSet limiting(const Expr& e, const Point& x) {
  require_dim(x.size(), e.dim(), "limiting");
  if (route(e, true, "limiting") == Route::kGerm) return limiting_1d(e, x[0]);
  const LocalModel m = local_model(e, x);
  const Arrangement a = arrangement(m);
  std::vector<VPolytope> parts;
  for (const auto& signs : arrangement_faces(a)) {
    VPolytope f = frechet_at_face(m, a, signs);
    if (f.empty()) continue;
    const bool dup = std::any_of(parts.begin(), parts.end(), [&](const VPolytope& p) {
      if (p.vertices.size() != f.vertices.size()) return false;
      for (std::size_t i = 0; i < p.vertices.size(); ++i) {
        if ((p.vertices[i] - f.vertices[i]).lpNorm<Eigen::Infinity>() > 1e-12) return false;
      }
      return true;
    });
    if (!dup) parts.push_back(std::move(f));
  }
  return make_set(SubdiffKind::kLimiting, x, reduce_union(parts));
}

}  // namespace nonsmooth
