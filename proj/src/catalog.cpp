#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "nonsmooth/subdiff.hpp"

namespace nonsmooth {

namespace {

CatalogPtr make(CatalogItem item) { return std::make_shared<const CatalogItem>(std::move(item)); }

SubdiffSet convex_set(const Point& x, ConvexPiece piece) {
  SubdiffSet s;
  s.kind = SubdiffKind::kConvex;
  s.at = x;
  s.set = SetUnion::of(std::move(piece));
  return s;
}

// Vertices of the product of [lo_i, hi_i], lexicographically sorted.
VPolytope box_vertices(const Vec& lo, const Vec& hi) {
  std::vector<Vec> verts{Vec::Zero(lo.size())};
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    std::vector<Vec> next;
    for (const auto& v : verts) {
      Vec a = v;
      a[i] = lo[i];
      next.push_back(a);
      if (hi[i] != lo[i]) {
        a[i] = hi[i];
        next.push_back(a);
      }
    }
    verts = std::move(next);
  }
  return VPolytope(lo.size(), std::move(verts));
}

ConvexPiece only_piece(const SubdiffSet& s) {
  if (s.set.components.size() != 1) {
    throw Error(ErrorCode::kUnsupported, "catalog: expected a single convex component");
  }
  return s.set.components[0];
}

ConvexPiece scale_piece(double c, const ConvexPiece& p) {
  if (const auto* b = std::get_if<Ball>(&p)) return Ball{c * b->center, std::abs(c) * b->radius};
  const VPolytope v = to_vpolytope(p);
  return linear_image(c * Mat::Identity(v.dim, v.dim), v);
}

ConvexPiece add_pieces(const ConvexPiece& a, const ConvexPiece& b) {
  const auto* ba = std::get_if<Ball>(&a);
  const auto* bb = std::get_if<Ball>(&b);
  if (ba && bb) return Ball{ba->center + bb->center, ba->radius + bb->radius};
  if (ba || bb) {
    const Ball& ball = ba ? *ba : *bb;
    const VPolytope v = to_vpolytope(ba ? b : a);
    if (v.vertices.size() != 1) {
      throw Error(ErrorCode::kUnsupported, "catalog: sum of a ball and a polytope is neither");
    }
    return Ball{ball.center + v.vertices[0], ball.radius};
  }
  return minkowski_sum(to_vpolytope(a), to_vpolytope(b));
}

}  // namespace

CatalogPtr l1_norm(Eigen::Index n) { return make(CatalogItem{CatalogKind::kL1Norm, n, {}, 1, 1, {}, {}, {}, {}}); }

CatalogPtr l2_norm(Eigen::Index n) { return make(CatalogItem{CatalogKind::kL2Norm, n, {}, 1, 1, {}, {}, {}, {}}); }

CatalogPtr max_of_smooth(Eigen::Index n, std::vector<SmoothFn> pieces) {
  if (pieces.empty()) throw Error(ErrorCode::kInvalidArgument, "max_of_smooth: no pieces");
  return make(CatalogItem{CatalogKind::kMaxOfSmooth, n, std::move(pieces), 1, 1, {}, {}, {}, {}});
}

CatalogPtr max_of_affine(const Mat& a, const Vec& b) {
  require_dim(b.size(), a.rows(), "max_of_affine");
  std::vector<SmoothFn> pieces;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const Vec ai = a.row(i).transpose();
    const double bi = b[i];
    pieces.push_back(SmoothFn{[ai, bi](const Vec& x) { return ai.dot(x) + bi; },
                              [ai](const Vec&) { return ai; }});
  }
  return max_of_smooth(a.cols(), std::move(pieces));
}

CatalogPtr scaled_sum(double alpha1, CatalogPtr f1, double alpha2, CatalogPtr f2) {
  require_dim(f2->dim, f1->dim, "scaled_sum");
  if (alpha1 < 0.0 || alpha2 < 0.0) {
    throw Error(ErrorCode::kUnsupported, "scaled_sum: negative weights break convexity");
  }
  return make(CatalogItem{CatalogKind::kScaledSum, f1->dim, {}, alpha1, alpha2, std::move(f1),
                          std::move(f2), {}, {}});
}

CatalogPtr affine_compose(const Mat& a0, const Vec& b, CatalogPtr g) {
  require_dim(a0.rows(), g->dim, "affine_compose");
  require_dim(b.size(), g->dim, "affine_compose: offset");
  return make(CatalogItem{CatalogKind::kAffineCompose, a0.cols(), {}, 1, 1, std::move(g), {}, a0, b});
}

double catalog_value(const CatalogItem& item, const Vec& x) {
  require_dim(x.size(), item.dim, "catalog_value");
  switch (item.kind) {
    case CatalogKind::kL1Norm: return x.lpNorm<1>();
    case CatalogKind::kL2Norm: return x.norm();
    case CatalogKind::kMaxOfSmooth: {
      double best = item.pieces[0].value(x);
      for (const auto& p : item.pieces) best = std::max(best, p.value(x));
      return best;
    }
    case CatalogKind::kScaledSum:
      return item.alpha1 * catalog_value(*item.f1, x) + item.alpha2 * catalog_value(*item.f2, x);
    case CatalogKind::kAffineCompose: return catalog_value(*item.f1, item.a0 * x + item.b);
  }
  return 0.0;
}

SubdiffSet convex_catalog_subdiff(const CatalogItem& item, const Point& x) {
  require_dim(x.size(), item.dim, "convex_catalog_subdiff");
  const Eigen::Index n = item.dim;
  switch (item.kind) {
    case CatalogKind::kL1Norm: {
      Vec lo(n), hi(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        lo[i] = x[i] > 0.0 ? 1.0 : -1.0;
        hi[i] = x[i] < 0.0 ? -1.0 : 1.0;
      }
      if (n <= kMaxPolytopeDim) return convex_set(x, box_vertices(lo, hi));
      return convex_set(x, HPolyhedron::box(lo, hi));
    }
    case CatalogKind::kL2Norm: {
      const double r = x.norm();
      if (r == 0.0) return convex_set(x, Ball{Vec::Zero(n), 1.0});
      return convex_set(x, VPolytope::point(x / r));
    }
    case CatalogKind::kMaxOfSmooth: {
      std::vector<double> v;
      for (const auto& p : item.pieces) v.push_back(p.value(x));
      const double best = *std::max_element(v.begin(), v.end());
      std::vector<Vec> grads;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] >= best - kExactActivityTol * (1.0 + std::abs(best))) grads.push_back(item.pieces[i].gradient(x));
      }
      return convex_set(x, conv_hull(grads, n));
    }
    case CatalogKind::kScaledSum: {
      const ConvexPiece a = scale_piece(item.alpha1, only_piece(convex_catalog_subdiff(*item.f1, x)));
      const ConvexPiece b = scale_piece(item.alpha2, only_piece(convex_catalog_subdiff(*item.f2, x)));
      return convex_set(x, add_pieces(a, b));
    }
    case CatalogKind::kAffineCompose: {
      const ConvexPiece inner = only_piece(convex_catalog_subdiff(*item.f1, item.a0 * x + item.b));
      const Mat at = item.a0.transpose();
      if (const auto* ball = std::get_if<Ball>(&inner)) {
        // A ball maps to a ball when A0 A0^T is a multiple of the identity.
        const Mat gram = item.a0 * item.a0.transpose();
        const double c2 = item.a0.rows() > 0 ? gram(0, 0) : 0.0;
        if (item.a0.rows() != item.a0.cols() ||
            (gram - c2 * Mat::Identity(gram.rows(), gram.cols())).lpNorm<Eigen::Infinity>() > 1e-12 * (1.0 + c2)) {
          throw Error(ErrorCode::kUnsupported, "affine_compose: image of a ball is an ellipsoid");
        }
        return convex_set(x, Ball{at * ball->center, std::sqrt(c2) * ball->radius});
      }
      return convex_set(x, linear_image(at, to_vpolytope(inner)));
    }
  }
  throw Error(ErrorCode::kUnsupported, "convex_catalog_subdiff: unknown item");
}

// ---------------------------------------------------------------------------

bool EigmaxSubdiff::contains(const Mat& z, double tol) const {
  const Eigen::Index n = basis.rows();
  if (z.rows() != n || z.cols() != n) return false;
  if ((z - z.transpose()).lpNorm<Eigen::Infinity>() > tol) return false;
  // z = U (U^T z U) U^T with U^T z U psd of unit trace.
  const Mat inner = basis.transpose() * z * basis;
  if ((basis * inner * basis.transpose() - z).lpNorm<Eigen::Infinity>() > tol) return false;
  if (std::abs(inner.trace() - 1.0) > tol) return false;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (inner + inner.transpose()));
  return es.eigenvalues().minCoeff() >= -tol;
}

std::vector<Mat> EigmaxSubdiff::extreme_points(int samples) const {
  std::vector<Mat> out;
  if (multiplicity() == 1) {
    out.push_back(basis.col(0) * basis.col(0).transpose());
  } else if (multiplicity() == 2) {
    for (int k = 0; k < samples; ++k) {
      const double t = 3.141592653589793 * k / samples;
      const Vec u = std::cos(t) * basis.col(0) + std::sin(t) * basis.col(1);
      out.push_back(u * u.transpose());
    }
  } else {
    throw Error(ErrorCode::kUnsupported, "eigmax: extreme points need multiplicity <= 2");
  }
  return out;
}

EigmaxSubdiff eigmax_subdiff(const Mat& m, double tol) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::kNonSymmetric, "eigmax_subdiff: matrix is not square");
  if (m.rows() > kMaxPolytopeDim) {
    throw Error(ErrorCode::kDimensionCapExceeded, "eigmax_subdiff: order " + std::to_string(m.rows()));
  }
  if ((m - m.transpose()).lpNorm<Eigen::Infinity>() > tol * (1.0 + m.lpNorm<Eigen::Infinity>())) {
    throw Error(ErrorCode::kNonSymmetric, "eigmax_subdiff: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  const Vec& lam = es.eigenvalues();  // ascending
  const Eigen::Index n = m.rows();
  const double top = lam[n - 1];
  Eigen::Index k = 1;
  while (k < n && top - lam[n - 1 - k] <= tol * (1.0 + std::abs(top))) ++k;
  EigmaxSubdiff s;
  s.lambda_max = top;
  s.basis = es.eigenvectors().rightCols(k);
  return s;
}

// ---------------------------------------------------------------------------

Eigen::Index spec_dim(const ConvexSetSpec& c) {
  if (const auto* h = std::get_if<HPolyhedron>(&c)) return h->dim;
  return std::get<Ball>(c).dim();
}

bool contains(const ConvexSetSpec& c, const Vec& x, double tol) {
  if (const auto* h = std::get_if<HPolyhedron>(&c)) return contains(*h, x, tol);
  return contains(std::get<Ball>(c), x, tol);
}

Cone normal_cone(const ConvexSetSpec& c, const Point& x, double tol) {
  const Eigen::Index n = spec_dim(c);
  require_dim(x.size(), n, "normal_cone");
  if (!contains(c, x, tol)) throw Error(ErrorCode::kInfeasiblePoint, "normal_cone: point is outside the set");
  std::vector<Vec> gens;
  if (const auto* h = std::get_if<HPolyhedron>(&c)) {
    for (const auto& s : h->halfspaces) {
      const double norm = s.normal.norm();
      if (norm == 0.0) continue;
      if (std::abs(s.normal.dot(x) - s.offset) <= tol * (1.0 + std::abs(s.offset))) gens.push_back(s.normal / norm);
    }
  } else {
    const Ball& b = std::get<Ball>(c);
    const Vec r = x - b.center;
    if (std::abs(r.norm() - b.radius) <= tol * (1.0 + b.radius) && r.norm() > 0.0) gens.push_back(r / r.norm());
  }
  std::vector<Vec> unique;
  for (auto& g : gens) {
    const bool dup = std::any_of(unique.begin(), unique.end(),
                                 [&](const Vec& u) { return (u - g).lpNorm<Eigen::Infinity>() <= 1e-12; });
    if (!dup) unique.push_back(std::move(g));
  }
  return Cone::from_generators(n, std::move(unique));
}

SubdiffSet weakly_convex_subdiff(const SubdiffSet& h_subdiff, double rho, const Point& x) {
  if (rho < 0.0) throw Error(ErrorCode::kInvalidArgument, "weakly_convex_subdiff: negative rho");
  require_dim(x.size(), h_subdiff.set.dim, "weakly_convex_subdiff");
  SubdiffSet s = h_subdiff;
  s.kind = SubdiffKind::kClarke;
  s.at = x;
  s.set = translate(h_subdiff.set, -rho * x);
  return s;
}

}  // namespace nonsmooth
