#include <algorithm>
#include <cmath>

#include "nonsmooth/subdiff.hpp"

namespace nonsmooth {

namespace {

struct Piece {
  Vec g;
  std::vector<Vec> rows;  // unit length
};

struct Local {
  double value = 0.0;
  std::vector<Piece> pieces;
};

double act_tol(double v) { return kExactActivityTol * (1.0 + std::abs(v)); }

bool lex_less(const Vec& a, const Vec& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

// Appends r / |r| unless r vanishes relative to `scale`.
void push_row(std::vector<Vec>& rows, const Vec& r, double scale) {
  const double n = r.norm();
  if (n <= 1e-9 * scale) return;
  rows.push_back(r / n);
}

Mat to_mat(const std::vector<Vec>& rows, Eigen::Index dim) {
  Mat m(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return m;
}

void canonicalize(Piece& p) {
  std::sort(p.rows.begin(), p.rows.end(), lex_less);
  std::vector<Vec> out;
  for (auto& r : p.rows) {
    if (out.empty() || (out.back() - r).lpNorm<Eigen::Infinity>() > 1e-12) out.push_back(std::move(r));
  }
  p.rows = std::move(out);
}

bool same_piece(const Piece& a, const Piece& b) {
  if (a.rows.size() != b.rows.size()) return false;
  if ((a.g - b.g).lpNorm<Eigen::Infinity>() > 1e-12 * (1.0 + a.g.lpNorm<Eigen::Infinity>())) return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    if ((a.rows[i] - b.rows[i]).lpNorm<Eigen::Infinity>() > 1e-12) return false;
  }
  return true;
}

// Keeps pieces whose cone has interior, without duplicates.
std::vector<Piece> prune(std::vector<Piece> in, Eigen::Index dim) {
  std::vector<Piece> out;
  for (auto& p : in) {
    canonicalize(p);
    bool dup = false;
    for (const auto& q : out) {
      if (same_piece(p, q)) {
        dup = true;
        break;
      }
    }
    if (dup) continue;
    if (!p.rows.empty() && !cone_has_interior(to_mat(p.rows, dim))) continue;
    out.push_back(std::move(p));
  }
  return out;
}

std::size_t product_size(const std::vector<const std::vector<Piece>*>& lists) {
  std::size_t total = 1;
  for (const auto* l : lists) {
    total *= l->size();
    if (total > kMaxLocalPieces) {
      throw Error(ErrorCode::kUnsupported,
                  "local_model: more than " + std::to_string(kMaxLocalPieces) + " candidate pieces");
    }
  }
  return total;
}

// Calls f(choice) for every choice of one piece per list.
template <class F>
void for_each_choice(const std::vector<const std::vector<Piece>*>& lists, F&& f) {
  product_size(lists);
  std::vector<std::size_t> idx(lists.size(), 0);
  while (true) {
    f(idx);
    std::size_t k = 0;
    while (k < lists.size() && ++idx[k] == lists[k]->size()) idx[k++] = 0;
    if (k == lists.size()) return;
  }
}

Local local_node(const Node& n, const Point& x) {
  const Eigen::Index d = x.size();
  switch (n.kind) {
    case NodeKind::kConst: return {n.scalar, {Piece{Vec::Zero(d), {}}}};
    case NodeKind::kVar: return {x[n.index], {Piece{Vec::Unit(d, n.index), {}}}};
    case NodeKind::kAffine: return {n.coeffs.dot(x) + n.scalar, {Piece{n.coeffs, {}}}};
    case NodeKind::kScale: {
      Local c = local_node(*n.children[0], x);
      c.value *= n.scalar;
      for (auto& p : c.pieces) p.g *= n.scalar;
      return c;
    }
    case NodeKind::kSum: {
      std::vector<Local> cs;
      for (const auto& c : n.children) cs.push_back(local_node(*c, x));
      std::vector<const std::vector<Piece>*> lists;
      Local out;
      for (const auto& c : cs) {
        out.value += c.value;
        lists.push_back(&c.pieces);
      }
      std::vector<Piece> cand;
      for_each_choice(lists, [&](const std::vector<std::size_t>& idx) {
        Piece p{Vec::Zero(d), {}};
        for (std::size_t k = 0; k < idx.size(); ++k) {
          const Piece& q = (*lists[k])[idx[k]];
          p.g += q.g;
          p.rows.insert(p.rows.end(), q.rows.begin(), q.rows.end());
        }
        cand.push_back(std::move(p));
      });
      out.pieces = cand.size() == 1 ? std::move(cand) : prune(std::move(cand), d);
      return out;
    }
    case NodeKind::kMax:
    case NodeKind::kMin: {
      const bool is_max = n.kind == NodeKind::kMax;
      std::vector<Local> cs;
      for (const auto& c : n.children) cs.push_back(local_node(*c, x));
      double best = cs[0].value;
      for (const auto& c : cs) best = is_max ? std::max(best, c.value) : std::min(best, c.value);
      std::vector<const std::vector<Piece>*> lists;
      for (const auto& c : cs) {
        if (std::abs(c.value - best) <= act_tol(best)) lists.push_back(&c.pieces);
      }
      if (lists.size() == 1) return {best, *lists[0]};
      if (product_size(lists) * lists.size() > kMaxLocalPieces) {
        throw Error(ErrorCode::kUnsupported, "local_model: too many candidate pieces at a max/min node");
      }
      std::vector<Piece> cand;
      for_each_choice(lists, [&](const std::vector<std::size_t>& idx) {
        std::vector<Vec> base;
        double scale = 1.0;
        for (std::size_t k = 0; k < idx.size(); ++k) {
          const Piece& q = (*lists[k])[idx[k]];
          base.insert(base.end(), q.rows.begin(), q.rows.end());
          scale = std::max(scale, q.g.lpNorm<Eigen::Infinity>());
        }
        if (!base.empty() && !cone_has_interior(to_mat(base, d))) return;
        for (std::size_t i = 0; i < idx.size(); ++i) {
          const Vec& gi = (*lists[i])[idx[i]].g;
          Piece p{gi, base};
          for (std::size_t j = 0; j < idx.size(); ++j) {
            if (j == i) continue;
            const Vec& gj = (*lists[j])[idx[j]].g;
            push_row(p.rows, is_max ? Vec(gi - gj) : Vec(gj - gi), scale);
          }
          cand.push_back(std::move(p));
        }
      });
      return {best, prune(std::move(cand), d)};
    }
    case NodeKind::kAbs: {
      Local c = local_node(*n.children[0], x);
      if (c.value > act_tol(c.value)) return c;
      if (c.value < -act_tol(c.value)) {
        c.value = -c.value;
        for (auto& p : c.pieces) p.g = -p.g;
        return c;
      }
      std::vector<Piece> cand;
      for (const auto& p : c.pieces) {
        const double scale = 1.0 + p.g.lpNorm<Eigen::Infinity>();
        if (p.g.norm() <= 1e-9 * scale) {
          cand.push_back(Piece{Vec::Zero(d), p.rows});
          continue;
        }
        for (double s : {1.0, -1.0}) {
          Piece q{s * p.g, p.rows};
          push_row(q.rows, s * p.g, scale);
          cand.push_back(std::move(q));
        }
      }
      return {0.0, prune(std::move(cand), d)};
    }
    case NodeKind::kSq: {
      Local c = local_node(*n.children[0], x);
      const double v = c.value;
      if (std::abs(v) <= act_tol(v)) return {0.0, {Piece{Vec::Zero(d), {}}}};
      for (auto& p : c.pieces) p.g *= 2.0 * v;
      c.value = v * v;
      return c;
    }
    case NodeKind::kBuiltin:
      throw Error(ErrorCode::kUseSampled, "local_model: builtin '" + n.name + "' has no exact local model");
  }
  return {};
}

}  // namespace

bool cone_has_interior(const Mat& rows) {
  const Eigen::Index n = rows.cols();
  LinearProgram lp(n);
  bool any = false;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const double norm = rows.row(i).norm();
    if (norm == 0.0) continue;
    lp.add_ge(rows.row(i).transpose() / norm, 1.0);
    any = true;
  }
  if (!any) return true;
  return solve_lp(lp).optimal();
}

LocalModel local_model(const Expr& e, const Point& x) {
  require_dim(x.size(), e.dim(), "local_model");
  const FragmentClass fc = classify_fragment(e);
  if (fc != FragmentClass::kPA && fc != FragmentClass::kPLQ) {
    throw Error(ErrorCode::kUseSampled, std::string("local_model: fragment ") + to_string(fc));
  }
  if (e.dim() > kMaxLpVariables) {
    throw Error(ErrorCode::kDimensionCapExceeded, "local_model: dimension " + std::to_string(e.dim()));
  }
  Local l = local_node(e.root(), x);
  LocalModel m;
  m.dim = e.dim();
  m.value = l.value;
  for (auto& p : l.pieces) m.pieces.push_back(LocalPiece{std::move(p.g), to_mat(p.rows, e.dim())});
  return m;
}

}  // namespace nonsmooth
