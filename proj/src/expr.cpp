#include "nonsmooth/expr.hpp"

#include <algorithm>
#include <cmath>

namespace nonsmooth {

const char* to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::kConst: return "const";
    case NodeKind::kVar: return "var";
    case NodeKind::kAffine: return "affine";
    case NodeKind::kSum: return "sum";
    case NodeKind::kScale: return "scale";
    case NodeKind::kMax: return "max";
    case NodeKind::kMin: return "min";
    case NodeKind::kAbs: return "abs";
    case NodeKind::kSq: return "sq";
    case NodeKind::kBuiltin: return "builtin";
  }
  return "?";
}

const char* to_string(FragmentClass c) {
  switch (c) {
    case FragmentClass::kPA: return "PA";
    case FragmentClass::kPLQ: return "PLQ";
    case FragmentClass::kSmooth1D: return "SMOOTH1D";
    case FragmentClass::kGeneral: return "GENERAL";
  }
  return "?";
}

namespace {

void validate(const Node& n, Eigen::Index dim) {
  switch (n.kind) {
    case NodeKind::kVar:
      if (n.index < 0 || n.index >= dim) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "var index " + std::to_string(n.index) + " outside dimension " +
                        std::to_string(dim));
      }
      break;
    case NodeKind::kAffine:
      require_dim(n.coeffs.size(), dim, "affine coefficients");
      break;
    case NodeKind::kMax:
    case NodeKind::kMin:
      if (n.children.size() < 2) {
        throw Error(ErrorCode::kInvalidArgument, "max/min needs at least two children");
      }
      break;
    case NodeKind::kSum:
      if (n.children.empty()) throw Error(ErrorCode::kInvalidArgument, "empty sum");
      break;
    case NodeKind::kScale:
    case NodeKind::kAbs:
    case NodeKind::kSq:
    case NodeKind::kBuiltin:
      if (n.children.size() != 1) {
        throw Error(ErrorCode::kInvalidArgument, "unary node needs exactly one child");
      }
      if (n.kind == NodeKind::kBuiltin) find_builtin(n.name);
      break;
    case NodeKind::kConst:
      break;
  }
  for (const auto& c : n.children) validate(*c, dim);
}

NodePtr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

Expr combine(NodeKind kind, std::vector<Expr> terms, double scalar = 0.0, std::string name = {}) {
  Node n;
  n.kind = kind;
  n.scalar = scalar;
  n.name = std::move(name);
  Eigen::Index dim = 0;
  for (auto& t : terms) {
    dim = std::max(dim, t.dim());
    n.children.push_back(t.node());
  }
  return Expr(make(std::move(n)), dim);
}

double eval_node(const Node& n, const Point& x) {
  switch (n.kind) {
    case NodeKind::kConst: return n.scalar;
    case NodeKind::kVar: return x[n.index];
    case NodeKind::kAffine: return n.coeffs.dot(x) + n.scalar;
    case NodeKind::kSum: {
      double s = 0.0;
      for (const auto& c : n.children) s += eval_node(*c, x);
      return s;
    }
    case NodeKind::kScale: return n.scalar * eval_node(*n.children[0], x);
    case NodeKind::kMax: {
      double m = eval_node(*n.children[0], x);
      for (std::size_t i = 1; i < n.children.size(); ++i) m = std::max(m, eval_node(*n.children[i], x));
      return m;
    }
    case NodeKind::kMin: {
      double m = eval_node(*n.children[0], x);
      for (std::size_t i = 1; i < n.children.size(); ++i) m = std::min(m, eval_node(*n.children[i], x));
      return m;
    }
    case NodeKind::kAbs: return std::abs(eval_node(*n.children[0], x));
    case NodeKind::kSq: {
      const double v = eval_node(*n.children[0], x);
      return v * v;
    }
    case NodeKind::kBuiltin: return find_builtin(n.name).value(eval_node(*n.children[0], x));
  }
  return 0.0;
}

bool has_builtin_node(const Node& n) {
  if (n.kind == NodeKind::kBuiltin) return true;
  return std::any_of(n.children.begin(), n.children.end(),
                     [](const NodePtr& c) { return has_builtin_node(*c); });
}

bool is_pa(const Node& n) {
  switch (n.kind) {
    case NodeKind::kConst:
    case NodeKind::kVar:
    case NodeKind::kAffine: return true;
    case NodeKind::kSq:
    case NodeKind::kBuiltin: return false;
    default:
      return std::all_of(n.children.begin(), n.children.end(),
                         [](const NodePtr& c) { return is_pa(*c); });
  }
}

bool is_plq(const Node& n) {
  if (is_pa(n)) return true;
  switch (n.kind) {
    case NodeKind::kSq: return is_pa(*n.children[0]);
    case NodeKind::kSum:
    case NodeKind::kScale:
      return std::all_of(n.children.begin(), n.children.end(),
                         [](const NodePtr& c) { return is_plq(*c); });
    default: return false;
  }
}

double pattern_node(const Node& n, const Point& x, double tol, int& counter,
                    std::vector<NodeActivity>& out) {
  const int id = counter++;
  switch (n.kind) {
    case NodeKind::kMax:
    case NodeKind::kMin: {
      const std::size_t slot = out.size();
      out.push_back(NodeActivity{id, n.kind, {}, 0, 0.0});
      std::vector<double> v;
      for (const auto& c : n.children) v.push_back(pattern_node(*c, x, tol, counter, out));
      const bool is_max = n.kind == NodeKind::kMax;
      const double best = is_max ? *std::max_element(v.begin(), v.end())
                                 : *std::min_element(v.begin(), v.end());
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (is_max ? v[i] >= best - tol : v[i] <= best + tol) {
          out[slot].active.push_back(static_cast<int>(i));
        }
      }
      out[slot].value = best;
      return best;
    }
    case NodeKind::kAbs: {
      const std::size_t slot = out.size();
      out.push_back(NodeActivity{id, n.kind, {}, 0, 0.0});
      const double v = pattern_node(*n.children[0], x, tol, counter, out);
      out[slot].sign = std::abs(v) <= tol ? 0 : (v > 0 ? 1 : -1);
      out[slot].value = std::abs(v);
      return std::abs(v);
    }
    default: {
      for (const auto& c : n.children) pattern_node(*c, x, tol, counter, out);
      return eval_node(n, x);
    }
  }
}

std::pair<double, Vec> grad_node(const Node& n, const Point& x) {
  const Eigen::Index d = x.size();
  switch (n.kind) {
    case NodeKind::kConst: return {n.scalar, Vec::Zero(d)};
    case NodeKind::kVar: return {x[n.index], Vec::Unit(d, n.index)};
    case NodeKind::kAffine: return {n.coeffs.dot(x) + n.scalar, n.coeffs};
    case NodeKind::kSum: {
      double v = 0.0;
      Vec g = Vec::Zero(d);
      for (const auto& c : n.children) {
        auto [cv, cg] = grad_node(*c, x);
        v += cv;
        g += cg;
      }
      return {v, g};
    }
    case NodeKind::kScale: {
      auto [v, g] = grad_node(*n.children[0], x);
      return {n.scalar * v, n.scalar * g};
    }
    case NodeKind::kMax:
    case NodeKind::kMin: {
      auto best = grad_node(*n.children[0], x);
      for (std::size_t i = 1; i < n.children.size(); ++i) {
        auto cur = grad_node(*n.children[i], x);
        const bool better = n.kind == NodeKind::kMax ? cur.first > best.first : cur.first < best.first;
        if (better) best = std::move(cur);
      }
      return best;
    }
    case NodeKind::kAbs: {
      auto [v, g] = grad_node(*n.children[0], x);
      return {std::abs(v), sign0(v) * g};
    }
    case NodeKind::kSq: {
      auto [v, g] = grad_node(*n.children[0], x);
      return {v * v, 2.0 * v * g};
    }
    case NodeKind::kBuiltin: {
      auto [v, g] = grad_node(*n.children[0], x);
      const BuiltinFn& b = find_builtin(n.name);
      return {b.value(v), b.derivative(v) * g};
    }
  }
  return {0.0, Vec::Zero(d)};
}

NodePtr compose_node(const NodePtr& n, const Mat& a0, const Vec& b) {
  switch (n->kind) {
    case NodeKind::kConst: return n;
    case NodeKind::kVar: {
      Node out;
      out.kind = NodeKind::kAffine;
      out.coeffs = a0.row(n->index).transpose();
      out.scalar = b[n->index];
      return make(std::move(out));
    }
    case NodeKind::kAffine: {
      Node out;
      out.kind = NodeKind::kAffine;
      out.coeffs = a0.transpose() * n->coeffs;
      out.scalar = n->coeffs.dot(b) + n->scalar;
      return make(std::move(out));
    }
    default: {
      Node out = *n;
      for (auto& c : out.children) c = compose_node(c, a0, b);
      return make(std::move(out));
    }
  }
}

}  // namespace

Expr::Expr(NodePtr root, Eigen::Index dim) : root_(std::move(root)), dim_(dim) {
  if (!root_) throw Error(ErrorCode::kInvalidArgument, "null expression");
  if (dim_ < 0) throw Error(ErrorCode::kInvalidArgument, "negative dimension");
  validate(*root_, dim_);
}

Expr Expr::with_dim(Eigen::Index n) const { return Expr(root_, n); }

Expr constant(double c, Eigen::Index dim) {
  Node n;
  n.kind = NodeKind::kConst;
  n.scalar = c;
  return Expr(make(std::move(n)), dim);
}

Expr var(Eigen::Index i, Eigen::Index dim) {
  Node n;
  n.kind = NodeKind::kVar;
  n.index = i;
  return Expr(make(std::move(n)), dim < 0 ? i + 1 : dim);
}

Expr affine(Vec a, double b) {
  Node n;
  n.kind = NodeKind::kAffine;
  const Eigen::Index d = a.size();
  n.coeffs = std::move(a);
  n.scalar = b;
  return Expr(make(std::move(n)), d);
}

Expr sum(std::vector<Expr> terms) { return combine(NodeKind::kSum, std::move(terms)); }
Expr scale(double c, const Expr& e) { return combine(NodeKind::kScale, {e}, c); }
Expr max_of(std::vector<Expr> terms) { return combine(NodeKind::kMax, std::move(terms)); }
Expr min_of(std::vector<Expr> terms) { return combine(NodeKind::kMin, std::move(terms)); }
Expr abs(const Expr& e) { return combine(NodeKind::kAbs, {e}); }
Expr sq(const Expr& e) { return combine(NodeKind::kSq, {e}); }
Expr builtin(const std::string& name, const Expr& e) {
  return combine(NodeKind::kBuiltin, {e}, 0.0, name);
}

Expr operator+(const Expr& a, const Expr& b) { return sum({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return sum({a, scale(-1.0, b)}); }
Expr operator-(const Expr& a) { return scale(-1.0, a); }
Expr operator*(double c, const Expr& e) { return scale(c, e); }

Expr compose_affine(const Expr& g, const Mat& a0, const Vec& b) {
  require_dim(a0.rows(), g.dim(), "compose_affine: rows of A0");
  require_dim(b.size(), g.dim(), "compose_affine: offset");
  return Expr(compose_node(g.node(), a0, b), a0.cols());
}

double eval(const Expr& e, const Point& x) {
  require_dim(x.size(), e.dim(), "eval");
  return eval_node(e.root(), x);
}

FragmentClass classify_fragment(const Expr& e) {
  if (has_builtin_node(e.root())) {
    return e.dim() == 1 ? FragmentClass::kSmooth1D : FragmentClass::kGeneral;
  }
  if (is_pa(e.root())) return FragmentClass::kPA;
  if (is_plq(e.root())) return FragmentClass::kPLQ;
  return FragmentClass::kGeneral;
}

bool ActivePattern::smooth() const {
  for (const auto& a : entries) {
    if (a.kind == NodeKind::kAbs ? a.sign == 0 : a.active.size() != 1) return false;
  }
  return true;
}

ActivePattern active_pattern(const Expr& e, const Point& x, double tol) {
  require_dim(x.size(), e.dim(), "active_pattern");
  if (tol < 0.0) throw Error(ErrorCode::kInvalidArgument, "negative activity tolerance");
  ActivePattern p;
  int counter = 0;
  pattern_node(e.root(), x, tol, counter, p.entries);
  return p;
}

Vec selection_gradient(const Expr& e, const Point& x) {
  require_dim(x.size(), e.dim(), "selection_gradient");
  return grad_node(e.root(), x).second;
}

bool same_tree(const Node& a, const Node& b) {
  if (a.kind != b.kind || a.scalar != b.scalar || a.index != b.index || a.name != b.name ||
      a.coeffs.size() != b.coeffs.size() || a.children.size() != b.children.size()) {
    return false;
  }
  if (a.coeffs != b.coeffs) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    if (!same_tree(*a.children[i], *b.children[i])) return false;
  }
  return true;
}

}  // namespace nonsmooth
