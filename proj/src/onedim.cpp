#include <algorithm>
#include <cmath>
#include <vector>

#include "nonsmooth/subdiff.hpp"

namespace nonsmooth {

namespace {

double act_tol(double v) { return kExactActivityTol * (1.0 + std::abs(v)); }

[[noreturn]] void unsupported(const std::string& what) {
  throw Error(ErrorCode::kUnsupported, "germ_1d: " + what);
}

Interval add(const Interval& a, const Interval& b) {
  if (!a.degenerate() && !b.degenerate()) unsupported("sum of two oscillating terms");
  return a + b;
}

Germ1D scaled(const Germ1D& g, double c) {
  return Germ1D{c * g.value, g.dini_pos.scaled(c), g.dini_neg.scaled(c), g.cluster_right.scaled(c),
                g.cluster_left.scaled(c)};
}

bool close(const Interval& a, const Interval& b) {
  const double tol = act_tol(std::max(std::abs(a.lo), std::abs(a.hi)));
  return std::abs(a.lo - b.lo) <= tol && std::abs(a.hi - b.hi) <= tol;
}

// Extreme one-sided slope among tied children and the cluster set on that
// side. `dini` and `cluster` select the side.
void pick_side(const std::vector<Germ1D>& cs, const std::vector<std::size_t>& active, bool is_max,
               Interval Germ1D::*dini, Interval Germ1D::*cluster, Germ1D& out) {
  for (std::size_t i : active) {
    if (!(cs[i].*dini).degenerate()) unsupported("tie between oscillating branches");
  }
  double best = (cs[active[0]].*dini).lo;
  for (std::size_t i : active) {
    const double s = (cs[i].*dini).lo;
    best = is_max ? std::max(best, s) : std::min(best, s);
  }
  std::vector<std::size_t> winners;
  for (std::size_t i : active) {
    if (std::abs((cs[i].*dini).lo - best) <= act_tol(best)) winners.push_back(i);
  }
  const Interval c = cs[winners[0]].*cluster;
  for (std::size_t i : winners) {
    const Interval ci = cs[i].*cluster;
    if (winners.size() > 1 && (!ci.degenerate() || !close(ci, c))) {
      unsupported("tie between branches with different gradient limits");
    }
  }
  out.*dini = Interval::point(best);
  out.*cluster = c;
}

// Side of |.| at a zero of the child; `a` is the child's one-sided slope.
void abs_side(const Interval& dini, const Interval& cluster, Interval& dini_out, Interval& cluster_out) {
  if (!dini.degenerate()) unsupported("abs of an oscillating term at its zero");
  const double a = dini.lo;
  if (std::abs(a) <= act_tol(0.0)) {
    if (!cluster.degenerate()) unsupported("abs of an oscillating term at its zero");
    dini_out = Interval::point(0.0);
    cluster_out = Interval::point(0.0);
    return;
  }
  dini_out = Interval::point(std::abs(a));
  cluster_out = a > 0.0 ? cluster : cluster.scaled(-1.0);
}

// Side of phi(child) at a kink of phi.
void kink_side(const BuiltinKink& k, const Interval& dini, const Interval& cluster, Interval& dini_out,
               Interval& cluster_out) {
  if (!dini.degenerate() || !cluster.degenerate()) unsupported("builtin of an oscillating term at a kink");
  const double a = dini.lo;
  if (std::abs(a) <= act_tol(0.0)) {
    dini_out = Interval::point(0.0);
    cluster_out = Interval::point(0.0);
    return;
  }
  dini_out = a > 0.0 ? k.dini_right.scaled(a) : k.dini_left.scaled(-a);
  cluster_out = (a > 0.0 ? k.cluster_right : k.cluster_left).scaled(cluster.lo);
}

Germ1D germ_node(const Node& n, double x) {
  switch (n.kind) {
    case NodeKind::kConst: {
      const Interval z = Interval::point(0.0);
      return Germ1D{n.scalar, z, z, z, z};
    }
    case NodeKind::kVar:
      return Germ1D{x, Interval::point(1.0), Interval::point(-1.0), Interval::point(1.0),
                    Interval::point(1.0)};
    case NodeKind::kAffine: {
      const double a = n.coeffs[0];
      return Germ1D{a * x + n.scalar, Interval::point(a), Interval::point(-a), Interval::point(a),
                    Interval::point(a)};
    }
    case NodeKind::kSum: {
      Germ1D g = germ_node(*n.children[0], x);
      for (std::size_t i = 1; i < n.children.size(); ++i) {
        const Germ1D c = germ_node(*n.children[i], x);
        g.value += c.value;
        g.dini_pos = add(g.dini_pos, c.dini_pos);
        g.dini_neg = add(g.dini_neg, c.dini_neg);
        g.cluster_right = add(g.cluster_right, c.cluster_right);
        g.cluster_left = add(g.cluster_left, c.cluster_left);
      }
      return g;
    }
    case NodeKind::kScale: return scaled(germ_node(*n.children[0], x), n.scalar);
    case NodeKind::kMax:
    case NodeKind::kMin: {
      const bool is_max = n.kind == NodeKind::kMax;
      std::vector<Germ1D> cs;
      for (const auto& c : n.children) cs.push_back(germ_node(*c, x));
      double best = cs[0].value;
      for (const auto& c : cs) best = is_max ? std::max(best, c.value) : std::min(best, c.value);
      std::vector<std::size_t> active;
      for (std::size_t i = 0; i < cs.size(); ++i) {
        if (std::abs(cs[i].value - best) <= act_tol(best)) active.push_back(i);
      }
      if (active.size() == 1) return cs[active[0]];
      Germ1D g;
      g.value = best;
      pick_side(cs, active, is_max, &Germ1D::dini_pos, &Germ1D::cluster_right, g);
      pick_side(cs, active, is_max, &Germ1D::dini_neg, &Germ1D::cluster_left, g);
      return g;
    }
    case NodeKind::kAbs: {
      const Germ1D c = germ_node(*n.children[0], x);
      if (c.value > act_tol(c.value)) return c;
      if (c.value < -act_tol(c.value)) return scaled(c, -1.0);
      Germ1D g;
      abs_side(c.dini_pos, c.cluster_right, g.dini_pos, g.cluster_right);
      abs_side(c.dini_neg, c.cluster_left, g.dini_neg, g.cluster_left);
      return g;
    }
    case NodeKind::kSq: {
      const Germ1D c = germ_node(*n.children[0], x);
      if (std::abs(c.value) <= act_tol(c.value)) {
        const Interval z = Interval::point(0.0);
        return Germ1D{0.0, z, z, z, z};
      }
      Germ1D g = scaled(c, 2.0 * c.value);
      g.value = c.value * c.value;
      return g;
    }
    case NodeKind::kBuiltin: {
      const Germ1D c = germ_node(*n.children[0], x);
      const BuiltinFn& b = find_builtin(n.name);
      Germ1D g;
      g.value = b.value(c.value);
      for (const auto& k : b.kinks) {
        if (std::abs(c.value - k.at) > act_tol(k.at)) continue;
        kink_side(k, c.dini_pos, c.cluster_right, g.dini_pos, g.cluster_right);
        kink_side(k, c.dini_neg, c.cluster_left, g.dini_neg, g.cluster_left);
        return g;
      }
      const double s = b.derivative(c.value);
      g.dini_pos = c.dini_pos.scaled(s);
      g.dini_neg = c.dini_neg.scaled(s);
      g.cluster_right = c.cluster_right.scaled(s);
      g.cluster_left = c.cluster_left.scaled(s);
      return g;
    }
  }
  return {};
}

SubdiffSet interval_set(SubdiffKind kind, double x, std::vector<Interval> parts) {
  std::sort(parts.begin(), parts.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> merged;
  for (const auto& p : parts) {
    if (!merged.empty() && p.lo <= merged.back().hi + act_tol(merged.back().hi)) {
      merged.back().hi = std::max(merged.back().hi, p.hi);
    } else {
      merged.push_back(p);
    }
  }
  SubdiffSet s;
  s.kind = kind;
  s.at = Vec::Constant(1, x);
  s.set = SetUnion(1);
  for (const auto& m : merged) s.set.components.emplace_back(VPolytope::interval(m.lo, m.hi));
  return s;
}

std::vector<Interval> frechet_parts(const Germ1D& g) {
  // s is a Frechet subgradient iff s <= liminf of the right quotients and
  // -s <= liminf of the left quotients.
  const double lo = -g.dini_neg.lo;
  const double hi = g.dini_pos.lo;
  if (lo <= hi) return {Interval{lo, hi}};
  if (lo - hi <= act_tol(std::max(std::abs(lo), std::abs(hi)))) return {Interval::point(0.5 * (lo + hi))};
  return {};
}

}  // namespace

Germ1D germ_1d(const Expr& e, double x) {
  require_dim(e.dim(), 1, "germ_1d");
  return germ_node(e.root(), x);
}

DirDerivValue dir_deriv_1d(const Expr& e, double x, double d) {
  DirDerivValue r;
  if (d == 0.0) return r;
  const Germ1D g = germ_1d(e, x);
  const Interval q = d > 0.0 ? g.dini_pos.scaled(d) : g.dini_neg.scaled(-d);
  if (!q.degenerate()) {
    throw Error(ErrorCode::kUseSampled, "dir_deriv_1d: difference quotients oscillate in [" +
                                            std::to_string(q.lo) + ", " + std::to_string(q.hi) + "]");
  }
  r.value = q.lo;
  return r;
}

DirDerivValue clarke_dir_deriv_1d(const Expr& e, double x, double d) {
  const Germ1D g = germ_1d(e, x);
  const double lo = std::min(g.cluster_right.lo, g.cluster_left.lo);
  const double hi = std::max(g.cluster_right.hi, g.cluster_left.hi);
  DirDerivValue r;
  r.kind = DerivKind::kClarke;
  r.value = d >= 0.0 ? d * hi : d * lo;
  return r;
}

SubdiffSet bouligand_1d(const Expr& e, double x) {
  const Germ1D g = germ_1d(e, x);
  return interval_set(SubdiffKind::kBouligand, x, {g.cluster_right, g.cluster_left});
}

SubdiffSet clarke_1d(const Expr& e, double x) {
  const Germ1D g = germ_1d(e, x);
  return interval_set(SubdiffKind::kClarke, x,
                      {Interval{std::min(g.cluster_right.lo, g.cluster_left.lo),
                                std::max(g.cluster_right.hi, g.cluster_left.hi)}});
}

SubdiffSet frechet_1d(const Expr& e, double x) {
  return interval_set(SubdiffKind::kFrechet, x, frechet_parts(germ_1d(e, x)));
}

SubdiffSet limiting_1d(const Expr& e, double x) {
  const Germ1D g = germ_1d(e, x);
  std::vector<Interval> parts = frechet_parts(g);
  parts.push_back(g.cluster_right);
  parts.push_back(g.cluster_left);
  return interval_set(SubdiffKind::kLimiting, x, std::move(parts));
}

}  // namespace nonsmooth
