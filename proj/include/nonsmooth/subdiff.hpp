#pragma once

#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "nonsmooth/expr.hpp"
#include "nonsmooth/polyhedra.hpp"

namespace nonsmooth {

enum class SubdiffKind { kFrechet, kLimiting, kClarke, kBouligand, kConvex };
enum class Exactness { kExact, kSampled };
enum class DerivKind { kOrdinary, kClarke };

const char* to_string(SubdiffKind kind);
const char* to_string(Exactness e);
const char* to_string(DerivKind kind);

/// A subdifferential at `at`. Frechet, Clarke and Convex sets have at most
/// one convex component; Bouligand sets are finite point sets for PA and
/// PLQ input; limiting sets may be non-convex unions. `tolerance` is the
/// resolution of sampled sets and 0 for exact ones.
struct SubdiffSet {
  SubdiffKind kind = SubdiffKind::kClarke;
  SetUnion set;
  Point at;
  Exactness exactness = Exactness::kExact;
  double tolerance = 0.0;

  bool empty() const { return set.empty(); }
  bool contains(const Vec& s, double tol = 1e-9) const { return nonsmooth::contains(set, s, tol); }
};

nlohmann::json to_json(const SubdiffSet& s);

/// One-sided directional derivative value. Finite-difference estimates
/// carry the quotient sequence and its spread.
struct DirDerivValue {
  double value = 0.0;
  DerivKind kind = DerivKind::kOrdinary;
  Exactness exactness = Exactness::kExact;
  bool convergent = true;
  double oscillation = 0.0;  // spread of the last few quotients
  double amplitude = 0.0;    // spread of all quotients
  std::vector<double> trace;
};

/// Activity tolerance of the exact engines, relative to 1 + |node value|.
inline constexpr double kExactActivityTol = 1e-12;

// ---------------------------------------------------------------------------
// Exact oracles. PA and PLQ trees use the local piece model below; other
// trees in dimension 1 use the one-dimensional germ engine.

/// f'(x, d). Throws kUseSampled when no exact rule applies.
DirDerivValue dir_deriv(const Expr& e, const Point& x, const Vec& d);
/// f°(x, d) = max over the Bouligand set of s^T d.
DirDerivValue clarke_dir_deriv(const Expr& e, const Point& x, const Vec& d);

SubdiffSet bouligand(const Expr& e, const Point& x);
SubdiffSet clarke(const Expr& e, const Point& x);
/// PA up to dimension 3, or any tree in dimension 1.
SubdiffSet frechet(const Expr& e, const Point& x);
SubdiffSet limiting(const Expr& e, const Point& x);

/// Largest dimension for exact Frechet and limiting sets of PA trees.
inline constexpr Eigen::Index kMaxFrechetDim = 3;

// ---------------------------------------------------------------------------
// Local piece model of a PA/PLQ tree: near x, f(x + h) agrees to first
// order with g^T h on the cone {h : rows h >= 0} of each piece, and the
// cones of the pieces cover R^n. Only essentially active pieces (cones
// with non-empty interior) are kept.

struct LocalPiece {
  Vec gradient;
  Mat rows;
};

struct LocalModel {
  Eigen::Index dim = 0;
  double value = 0.0;
  std::vector<LocalPiece> pieces;
};

/// Throws kUseSampled for trees outside PA/PLQ and kUnsupported when the
/// number of candidate pieces exceeds kMaxLocalPieces.
LocalModel local_model(const Expr& e, const Point& x);

inline constexpr std::size_t kMaxLocalPieces = 4096;

/// Strict feasibility of {h : rows h > 0} (zero rows ignored).
bool cone_has_interior(const Mat& rows);

// ---------------------------------------------------------------------------
// One-dimensional germ engine. Dini intervals bound the quotients
// (f(x + t d) - f(x)) / t as t -> 0+ for d = +1 and d = -1; cluster
// intervals bound f'(y) as y -> x from the right and from the left.
// Throws kUnsupported when the tree mixes oscillating pieces in a way the
// rules cannot resolve.

struct Germ1D {
  double value = 0.0;
  Interval dini_pos;
  Interval dini_neg;
  Interval cluster_right;
  Interval cluster_left;
};

Germ1D germ_1d(const Expr& e, double x);

/// f'(x, d) for d != 0; throws kUseSampled when the quotient oscillates.
DirDerivValue dir_deriv_1d(const Expr& e, double x, double d);
DirDerivValue clarke_dir_deriv_1d(const Expr& e, double x, double d);
SubdiffSet bouligand_1d(const Expr& e, double x);
SubdiffSet clarke_1d(const Expr& e, double x);
SubdiffSet frechet_1d(const Expr& e, double x);
SubdiffSet limiting_1d(const Expr& e, double x);

// ---------------------------------------------------------------------------
// Convex catalog.

struct SmoothFn {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
};

struct CatalogItem;
using CatalogPtr = std::shared_ptr<const CatalogItem>;

enum class CatalogKind { kL1Norm, kL2Norm, kMaxOfSmooth, kScaledSum, kAffineCompose };

struct CatalogItem {
  CatalogKind kind = CatalogKind::kL1Norm;
  Eigen::Index dim = 0;
  std::vector<SmoothFn> pieces;  // MaxOfSmooth
  double alpha1 = 1.0;           // ScaledSum
  double alpha2 = 1.0;
  CatalogPtr f1;  // ScaledSum, AffineCompose (inner g)
  CatalogPtr f2;
  Mat a0;  // AffineCompose: x -> g(a0 x + b)
  Vec b;
};

CatalogPtr l1_norm(Eigen::Index n);
CatalogPtr l2_norm(Eigen::Index n);
CatalogPtr max_of_smooth(Eigen::Index n, std::vector<SmoothFn> pieces);
/// max_i (rows(a)_i^T x + b_i).
CatalogPtr max_of_affine(const Mat& a, const Vec& b);
CatalogPtr scaled_sum(double alpha1, CatalogPtr f1, double alpha2, CatalogPtr f2);
CatalogPtr affine_compose(const Mat& a0, const Vec& b, CatalogPtr g);

double catalog_value(const CatalogItem& item, const Vec& x);
/// Closed-form convex subdifferential with Sign(0) = [-1, 1]. Throws
/// kUnsupported for compositions whose result is neither a polytope nor a
/// ball.
SubdiffSet convex_catalog_subdiff(const CatalogItem& item, const Point& x);

/// conv{u u^T : u a unit top eigenvector} = {U Z U^T : Z psd, tr Z = 1}.
struct EigmaxSubdiff {
  double lambda_max = 0.0;
  Mat basis;  // n x k, orthonormal columns spanning the top eigenspace

  Eigen::Index multiplicity() const { return basis.cols(); }
  bool contains(const Mat& z, double tol = 1e-9) const;
  /// Extreme points u u^T; exact for multiplicity 1, `samples` points of
  /// the circle of extreme points for multiplicity 2.
  std::vector<Mat> extreme_points(int samples = 64) const;
};

/// Throws kNonSymmetric and kDimensionCapExceeded (n > kMaxPolytopeDim).
EigmaxSubdiff eigmax_subdiff(const Mat& m, double tol = 1e-9);

using ConvexSetSpec = std::variant<HPolyhedron, Ball>;

bool contains(const ConvexSetSpec& c, const Vec& x, double tol = 1e-9);
Eigen::Index spec_dim(const ConvexSetSpec& c);

/// Generated by the normals of the constraints active at x; throws
/// kInfeasiblePoint when x is outside C.
Cone normal_cone(const ConvexSetSpec& c, const Point& x, double tol = 1e-9);

/// The Clarke set of f = h - (rho/2)|.|^2 from the convex set of h.
SubdiffSet weakly_convex_subdiff(const SubdiffSet& h_subdiff, double rho, const Point& x);

// ---------------------------------------------------------------------------
// Numeric oracles for general locally Lipschitz functions.

using Evaluator = std::function<double(const Vec&)>;
using GradientFn = std::function<Vec(const Vec&)>;

Evaluator evaluator(const Expr& e);
/// The selection gradient; a gradient wherever f is differentiable.
GradientFn gradient_fn(const Expr& e);

struct FdOptions {
  int k_first = 8;  // t_k = 2^-k for k = k_first..k_last
  int k_last = 40;
  int window = 5;
  double tol = 1e-6;
};

/// Last difference quotient; NON_CONVERGENT (convergent = false) when the
/// last `window` quotients spread by more than tol.
DirDerivValue fd_dir_deriv(const Evaluator& f, const Point& x, const Vec& d,
                           const FdOptions& options = {});

struct SampleOptions {
  double radius = 1e-3;
  int rungs = 5;  // radius_k = radius * 2^-k
  int samples = 4000;
  std::uint64_t seed = 42;
};

/// Largest quotient (f(y + t d) - f(y)) / t over sampled |y - x| <= r and
/// log-uniform t in (0, r]; reports the final rung, with one trace entry
/// per rung.
DirDerivValue sampled_clarke_dd(const Evaluator& f, const Point& x, const Vec& d,
                                const SampleOptions& options = {});

struct SampledSubdiff {
  SubdiffSet set;
  std::vector<double> trace;  // Hausdorff distance between consecutive rungs
};

/// Hull of gradients sampled in balls of shrinking radius around x.
SampledSubdiff gradient_sampling(const GradientFn& g, const Point& x,
                                 const SampleOptions& options = {1e-2, 5, 500, 42});

}  // namespace nonsmooth
