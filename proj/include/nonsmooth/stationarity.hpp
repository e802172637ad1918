#pragma once

#include <optional>
#include <variant>

#include <json.hpp>

#include "nonsmooth/lspar.hpp"
#include "nonsmooth/subdiff.hpp"

namespace nonsmooth {

/// Outcome of testing 0 in a subdifferential: the distance from 0 to the
/// set and the nearest point found (absent for an empty set).
struct MembershipRecord {
  SubdiffKind kind = SubdiffKind::kClarke;
  bool member = false;
  double distance = 0.0;
  std::optional<Vec> nearest;
};

struct DescentWitness {
  Vec direction;
  double value = 0.0;  // f'(x, direction)
};

/// Flags follow the chain d => l => C. The witness minimizes f'(x, .) over
/// the unit infinity-ball and is present exactly when the point is not
/// d-stationary.
struct StationarityReport {
  bool is_d = false;
  bool is_l = false;
  bool is_C = false;
  std::optional<DescentWitness> witness;
  MembershipRecord frechet;
  MembershipRecord limiting;
  MembershipRecord clarke;
  double sweep_min = 0.0;  // min of f'(x, d) over |d|_inf <= 1
  double tol = 1e-8;
};

nlohmann::json to_json(const StationarityReport& r);

/// Exact classification for PA trees up to dimension 3 and for trees the
/// one-dimensional germ engine handles. In dimension 1 the sweep compares
/// d = +1 then d = -1; otherwise one LP per local piece, min g^T d over the
/// piece cone within the box, ties going to the earlier piece and then to
/// the lexicographically smallest minimizer.
StationarityReport classify(const Expr& e, const Point& x, double tol = 1e-8);

/// C-stationarity from a gradient-sampling estimate of the Clarke set.
struct SampledStationarity {
  bool is_C = false;
  double distance = 0.0;
  SampledSubdiff estimate;
};

SampledStationarity classify_sampled(const GradientFn& g, const Point& x, double tol = 0.05,
                                     const SampleOptions& options = {1e-2, 5, 500, 42});

/// min f'(x, d) over d in the tangent cone of the polyhedron C at x and
/// |d|_inf <= 1, for a PA tree f. Non-negative (within tol) iff x is
/// d-stationary for f + indicator of C.
struct ConstrainedSweep {
  bool is_d = false;
  double min_value = 0.0;
  Vec direction;
};

ConstrainedSweep constrained_d_stationarity(const Expr& e, const HPolyhedron& c, const Point& x, double tol = 1e-8);

// ---------------------------------------------------------------------------
// Convex optimality: 0 in dg(x) + N_C(x).

enum class Curvature { kAffine, kConvex, kConcave, kUnknown };

const char* to_string(Curvature c);

/// Syntactic curvature from composition rules: sums and positive scalings
/// preserve convexity, max of convex and min of concave terms, |affine|
/// and (affine)^2 are convex. kUnknown is not a proof of non-convexity.
Curvature curvature(const Expr& e);

struct OptimalityCertificate {
  bool optimal = false;
  Vec s;               // element of dg(x)
  Vec nu;              // element of N_C(x)
  double residual = 0.0;  // |s + nu|_inf
  bool convexity_certified = false;
};

using ConvexObjective = std::variant<Expr, CatalogPtr>;

/// LP over convex weights on the vertices of dg(x) and conic weights on the
/// generators of N_C(x), minimizing the residual |s + nu|_inf. Throws
/// kInfeasiblePoint when x is outside C, and kUnsupported when dg(x) is a
/// ball and N_C(x) is not {0}.
OptimalityCertificate convex_optimality_check(const ConvexObjective& g, const ConvexSetSpec& c,
                                              const Point& x, double tol = 1e-8);

// ---------------------------------------------------------------------------
// LSPAR d-stationarity.

struct LsparCheck {
  bool stationary = false;
  double min_value = 0.0;  // min of f'(W; D) over |D|_inf <= 1
  Mat witness;             // minimizing D
  std::size_t selections = 1;
  double tol = 1e-6;
};

/// Largest number of branch selections before kTooManyTies.
inline constexpr std::size_t kMaxLsparSelections = std::size_t{1} << 12;

/// f'(W; D) = (1/N) sum_s r_s max_{i in I_s} d_i^T x_s with r_s = g_s - y_s.
/// Samples with r_s > 0 and ties enter through epigraph variables; samples
/// with r_s < 0 and ties are enumerated, one LP per selection.
LsparCheck lspar_d_stationarity_check(const LsparDataset& data, const Mat& w, double tol = 1e-6,
                                      double activity_tol = 1e-8);

/// f'(W; D) evaluated directly.
double lspar_dir_deriv(const LsparDataset& data, const Mat& w, const Mat& d, double activity_tol = 1e-8);

}  // namespace nonsmooth
