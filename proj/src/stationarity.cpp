#include "nonsmooth/stationarity.hpp"

#include <cmath>
#include <limits>

#include "nonsmooth/lp.hpp"

namespace nonsmooth {

namespace {

// Point of the piece nearest to the origin.
Vec nearest_to_origin(const ConvexPiece& piece) {
  if (const auto* b = std::get_if<Ball>(&piece)) {
    const double n = b->center.norm();
    if (n <= b->radius) return Vec::Zero(b->center.size());
    return b->center * (1.0 - b->radius / n);
  }
  return min_norm_point(to_vpolytope(piece).vertices);
}

MembershipRecord membership(const SubdiffSet& s, double tol) {
  MembershipRecord r;
  r.kind = s.kind;
  r.distance = std::numeric_limits<double>::infinity();
  for (const auto& c : s.set.components) {
    const Vec p = nearest_to_origin(c);
    if (p.norm() < r.distance) {
      r.distance = p.norm();
      r.nearest = p;
    }
  }
  r.member = r.distance <= tol;
  return r;
}

nlohmann::json to_json(const MembershipRecord& m) {
  nlohmann::json j{{"kind", to_string(m.kind)}, {"member", m.member}};
  j["distance"] = std::isfinite(m.distance) ? nlohmann::json(m.distance) : nlohmann::json(nullptr);
  j["nearest"] = m.nearest ? vec_to_json(*m.nearest) : nlohmann::json(nullptr);
  return j;
}

// min g^T d over {d : rows d >= 0, extra d <= 0, |d|_inf <= 1}.
LpResult sweep_piece(const Vec& g, const Mat& rows, const Mat& extra) {
  const Eigen::Index n = g.size();
  LinearProgram lp(n);
  lp.objective = g;
  for (Eigen::Index r = 0; r < rows.rows(); ++r) lp.add_ge(rows.row(r).transpose(), 0.0);
  for (Eigen::Index r = 0; r < extra.rows(); ++r) lp.add_le(extra.row(r).transpose(), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    lp.add_le(Vec::Unit(n, i), 1.0);
    lp.add_ge(Vec::Unit(n, i), -1.0);
  }
  return solve_lp_lexmin(lp);
}

// Minimum of f'(x, .) over the box intersected with {extra d <= 0}.
DescentWitness sweep(const Expr& e, const Point& x, const Mat& extra) {
  DescentWitness best;
  best.value = std::numeric_limits<double>::infinity();
  if (e.dim() == 1 && extra.rows() == 0) {
    // Lower Dini derivatives along +1 and -1; they equal f' when it exists.
    const Germ1D g = germ_1d(e, x[0]);
    const double plus = g.dini_pos.lo, minus = g.dini_neg.lo;
    best.direction = Vec::Constant(1, plus <= minus ? 1.0 : -1.0);
    best.value = std::min(plus, minus);
    return best;
  }
  const LocalModel m = local_model(e, x);
  for (const auto& p : m.pieces) {
    const LpResult r = sweep_piece(p.gradient, p.rows, extra);
    if (!r.optimal()) continue;
    if (r.value < best.value - 1e-12) {
      best.value = r.value;
      best.direction = r.x;
    }
  }
  if (!std::isfinite(best.value)) throw Error(ErrorCode::kEmptySet, "sweep: no feasible direction");
  return best;
}

}  // namespace

nlohmann::json to_json(const StationarityReport& r) {
  nlohmann::json j{{"is_d", r.is_d}, {"is_l", r.is_l}, {"is_C", r.is_C}, {"tol", r.tol}};
  j["sweep_min"] = r.sweep_min;
  j["membership"] = {to_json(r.frechet), to_json(r.limiting), to_json(r.clarke)};
  if (r.witness) {
    j["witness"] = {{"direction", vec_to_json(r.witness->direction)}, {"dir_deriv", r.witness->value}};
  } else {
    j["witness"] = nullptr;
  }
  return j;
}

StationarityReport classify(const Expr& e, const Point& x, double tol) {
  require_dim(x.size(), e.dim(), "classify");
  StationarityReport r;
  r.tol = tol;
  r.frechet = membership(frechet(e, x), tol);
  r.limiting = membership(limiting(e, x), tol);
  r.clarke = membership(clarke(e, x), tol);
  r.is_d = r.frechet.member;
  r.is_l = r.limiting.member;
  r.is_C = r.clarke.member;
  const DescentWitness w = sweep(e, x, Mat(0, e.dim()));
  r.sweep_min = w.value;
  if (!r.is_d) r.witness = w;
  return r;
}

SampledStationarity classify_sampled(const GradientFn& g, const Point& x, double tol, const SampleOptions& options) {
  SampledStationarity r;
  r.estimate = gradient_sampling(g, x, options);
  r.distance = distance(r.estimate.set.set, Vec::Zero(x.size()));
  r.is_C = r.distance <= tol;
  return r;
}

ConstrainedSweep constrained_d_stationarity(const Expr& e, const HPolyhedron& c, const Point& x, double tol) {
  require_dim(x.size(), e.dim(), "constrained_d_stationarity");
  require_dim(c.dim, e.dim(), "constrained_d_stationarity");
  if (!contains(c, x, 1e-9)) throw Error(ErrorCode::kInfeasiblePoint, "constrained_d_stationarity: x is outside C");
  std::vector<Vec> active;
  for (const auto& h : c.halfspaces) {
    if (h.normal.dot(x) >= h.offset - 1e-9 * (1.0 + std::abs(h.offset))) active.push_back(h.normal);
  }
  Mat extra(static_cast<Eigen::Index>(active.size()), e.dim());
  for (std::size_t i = 0; i < active.size(); ++i) extra.row(static_cast<Eigen::Index>(i)) = active[i].transpose();
  const DescentWitness w = sweep(e, x, extra);
  return ConstrainedSweep{w.value >= -tol, w.value, w.direction};
}

// ---------------------------------------------------------------------------

const char* to_string(Curvature c) {
  switch (c) {
    case Curvature::kAffine: return "affine";
    case Curvature::kConvex: return "convex";
    case Curvature::kConcave: return "concave";
    case Curvature::kUnknown: return "unknown";
  }
  return "?";
}

namespace {

Curvature negate(Curvature c) {
  if (c == Curvature::kConvex) return Curvature::kConcave;
  if (c == Curvature::kConcave) return Curvature::kConvex;
  return c;
}

// Convex if every term is convex or affine; likewise for concave.
Curvature combine(Curvature a, Curvature b) {
  if (a == Curvature::kAffine) return b;
  if (b == Curvature::kAffine) return a;
  return a == b ? a : Curvature::kUnknown;
}

Curvature curvature_node(const Node& n) {
  switch (n.kind) {
    case NodeKind::kConst:
    case NodeKind::kVar:
    case NodeKind::kAffine: return Curvature::kAffine;
    case NodeKind::kSum: {
      Curvature c = Curvature::kAffine;
      for (const auto& ch : n.children) c = combine(c, curvature_node(*ch));
      return c;
    }
    case NodeKind::kScale: {
      const Curvature c = curvature_node(*n.children[0]);
      if (n.scalar == 0.0) return Curvature::kAffine;
      return n.scalar > 0.0 ? c : negate(c);
    }
    case NodeKind::kMax:
    case NodeKind::kMin: {
      const Curvature want = n.kind == NodeKind::kMax ? Curvature::kConvex : Curvature::kConcave;
      for (const auto& ch : n.children) {
        const Curvature c = curvature_node(*ch);
        if (c != Curvature::kAffine && c != want) return Curvature::kUnknown;
      }
      return want;
    }
    case NodeKind::kAbs:
    case NodeKind::kSq:
      return curvature_node(*n.children[0]) == Curvature::kAffine ? Curvature::kConvex : Curvature::kUnknown;
    case NodeKind::kBuiltin: return Curvature::kUnknown;
  }
  return Curvature::kUnknown;
}

}  // namespace

Curvature curvature(const Expr& e) { return curvature_node(e.root()); }

OptimalityCertificate convex_optimality_check(const ConvexObjective& g, const ConvexSetSpec& c, const Point& x,
                                              double tol) {
  require_dim(x.size(), spec_dim(c), "convex_optimality_check");
  const Cone normals = normal_cone(c, x);  // throws when x is outside C
  const std::vector<Vec> gens = cone_generators(normals);
  OptimalityCertificate cert;
  SubdiffSet sub;
  if (const auto* e = std::get_if<Expr>(&g)) {
    const Curvature k = curvature(*e);
    cert.convexity_certified = k == Curvature::kConvex || k == Curvature::kAffine;
    sub = clarke(*e, x);
  } else {
    const CatalogPtr& item = std::get<CatalogPtr>(g);
    if (!item) throw Error(ErrorCode::kInvalidArgument, "convex_optimality_check: null catalog item");
    cert.convexity_certified = true;
    sub = convex_catalog_subdiff(*item, x);
  }
  const Eigen::Index n = x.size();
  const ConvexPiece& piece = sub.set.components.at(0);

  if (const auto* b = std::get_if<Ball>(&piece)) {
    bool trivial = true;
    for (const auto& v : gens) trivial = trivial && v.norm() == 0.0;
    if (!trivial) throw Error(ErrorCode::kUnsupported, "convex_optimality_check: ball subdifferential with a normal cone");
    cert.s = nearest_to_origin(*b);
    cert.nu = Vec::Zero(n);
    cert.residual = cert.s.lpNorm<Eigen::Infinity>();
    cert.optimal = cert.residual <= tol;
    return cert;
  }

  // Variables: lambda (vertices), mu (generators), tau.
  const std::vector<Vec> verts = to_vpolytope(piece).vertices;
  const Eigen::Index nv = static_cast<Eigen::Index>(verts.size());
  const Eigen::Index ng = static_cast<Eigen::Index>(gens.size());
  LinearProgram lp(nv + ng + 1);
  lp.nonneg.assign(static_cast<std::size_t>(nv + ng + 1), true);
  lp.objective[nv + ng] = 1.0;
  Vec ones = Vec::Zero(nv + ng + 1);
  ones.head(nv).setOnes();
  lp.add_eq(ones, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vec row = Vec::Zero(nv + ng + 1);
    for (Eigen::Index k = 0; k < nv; ++k) row[k] = verts[k][i];
    for (Eigen::Index k = 0; k < ng; ++k) row[nv + k] = gens[k][i];
    row[nv + ng] = -1.0;
    lp.add_le(row, 0.0);  // (s + nu)_i <= tau
    row.head(nv + ng) *= -1.0;
    lp.add_le(row, 0.0);  // -(s + nu)_i <= tau
  }
  const LpResult r = solve_lp(lp);
  if (!r.optimal()) throw Error(ErrorCode::kUnsupported, "convex_optimality_check: residual LP failed");
  cert.s = Vec::Zero(n);
  cert.nu = Vec::Zero(n);
  for (Eigen::Index k = 0; k < nv; ++k) cert.s += r.x[k] * verts[k];
  for (Eigen::Index k = 0; k < ng; ++k) cert.nu += r.x[nv + k] * gens[k];
  cert.residual = (cert.s + cert.nu).lpNorm<Eigen::Infinity>();
  cert.optimal = cert.residual <= tol;
  return cert;
}

// ---------------------------------------------------------------------------

double lspar_dir_deriv(const LsparDataset& data, const Mat& w, const Mat& d, double activity_tol) {
  require_dim(d.rows(), w.rows(), "lspar_dir_deriv");
  require_dim(d.cols(), w.cols(), "lspar_dir_deriv");
  const Vec r = lspar_predict(data, w) - data.y;
  const auto active = lspar_active_sets(data, w, activity_tol);
  double total = 0.0;
  for (Eigen::Index s = 0; s < data.size(); ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int i : active[s]) best = std::max(best, d.row(i).dot(data.x.row(s)));
    total += r[s] * best;
  }
  return total / static_cast<double>(data.size());
}

LsparCheck lspar_d_stationarity_check(const LsparDataset& data, const Mat& w, double tol, double activity_tol) {
  const Eigen::Index k = w.rows(), n = w.cols();
  const Eigen::Index nd = k * n;
  const double inv_n = 1.0 / static_cast<double>(data.size());
  const Vec r = lspar_predict(data, w) - data.y;
  const auto active = lspar_active_sets(data, w, activity_tol);
  const double r_tol = 1e-12 * (1.0 + data.y.lpNorm<Eigen::Infinity>());

  // D is flattened row-major: variable i * n + j is d_i[j].
  Vec linear = Vec::Zero(nd);
  std::vector<Eigen::Index> convex_ties, concave_ties;
  for (Eigen::Index s = 0; s < data.size(); ++s) {
    if (std::abs(r[s]) <= r_tol) continue;
    if (active[s].size() == 1) {
      linear.segment(active[s][0] * n, n) += inv_n * r[s] * data.x.row(s).transpose();
    } else if (r[s] > 0.0) {
      convex_ties.push_back(s);
    } else {
      concave_ties.push_back(s);
    }
  }
  std::size_t count = 1;
  for (Eigen::Index s : concave_ties) {
    count *= active[s].size();
    if (count > kMaxLsparSelections) {
      throw Error(ErrorCode::kTooManyTies, "lspar_d_stationarity_check: more than " +
                                               std::to_string(kMaxLsparSelections) + " branch selections");
    }
  }

  const Eigen::Index nt = static_cast<Eigen::Index>(convex_ties.size());
  LinearProgram base(nd + nt);
  base.objective.head(nd) = linear;
  for (Eigen::Index j = 0; j < nd; ++j) {
    base.add_le(Vec::Unit(nd + nt, j), 1.0);
    base.add_ge(Vec::Unit(nd + nt, j), -1.0);
  }
  for (Eigen::Index t = 0; t < nt; ++t) {
    const Eigen::Index s = convex_ties[t];
    base.objective[nd + t] = inv_n * r[s];
    for (int i : active[s]) {
      Vec row = Vec::Zero(nd + nt);
      row.segment(i * n, n) = data.x.row(s).transpose();
      row[nd + t] = -1.0;
      base.add_le(row, 0.0);  // d_i^T x_s <= t_s
    }
  }

  LsparCheck out;
  out.tol = tol;
  out.selections = count;
  out.min_value = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> pick(concave_ties.size(), 0);
  for (std::size_t sel = 0; sel < count; ++sel) {
    LinearProgram lp = base;
    for (std::size_t t = 0; t < concave_ties.size(); ++t) {
      const Eigen::Index s = concave_ties[t];
      const int i = active[s][pick[t]];
      lp.objective.segment(i * n, n) += inv_n * r[s] * data.x.row(s).transpose();
    }
    const LpResult res = solve_lp_lexmin(lp);
    if (res.optimal() && res.value < out.min_value - 1e-15) {
      out.min_value = res.value;
      out.witness = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          res.x.data(), k, n);
    }
    for (std::size_t t = 0; t < pick.size(); ++t) {  // odometer
      if (++pick[t] < active[concave_ties[t]].size()) break;
      pick[t] = 0;
    }
  }
  if (!std::isfinite(out.min_value)) throw Error(ErrorCode::kUnsupported, "lspar_d_stationarity_check: LP failed");
  out.stationary = out.min_value >= -tol;
  return out;
}

}  // namespace nonsmooth
