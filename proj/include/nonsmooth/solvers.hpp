#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nonsmooth/lspar.hpp"
#include "nonsmooth/stationarity.hpp"
#include "nonsmooth/subdiff.hpp"

namespace nonsmooth {

enum class StepKind { kConstant, kDiminishing, kGeometric, kPolyak };

/// Constant(a): a. Diminishing(c): c / sqrt(k + 1). Geometric(a0, q):
/// a0 q^k. Polyak(f*, margin): (f(x_k) - f* + margin) / |s_k|^2.
struct StepSchedule {
  StepKind kind = StepKind::kDiminishing;
  double p1 = 1.0;
  double p2 = 0.0;

  static StepSchedule constant(double alpha);
  static StepSchedule diminishing(double c);
  static StepSchedule geometric(double alpha0, double q);
  static StepSchedule polyak(double f_star, double margin = 0.0);

  /// "constant:A", "diminishing:C", "geometric:A0,Q", "polyak:FSTAR[,MARGIN]".
  static StepSchedule parse(const std::string& text);
  std::string to_string() const;

  double step(int k, double f, const Vec& s) const;
};

struct SubgradOracle {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> subgradient;
};

/// Value and selection gradient of a tree (Sign(0) = 0 at Abs kinks, the
/// first active child at Max/Min ties).
SubgradOracle oracle_from_expr(const Expr& e);

enum class Termination { kMaxIter, kTarget, kZeroSubgradient, kStationary };

const char* to_string(Termination t);

/// Entry k of `objective`, `steps`, `dist_ref` and `wall_ms` refers to
/// iterate k; steps[k] is the step taken from iterate k (0 for the last).
/// `iterates` keeps every `thin`-th iterate and always the last one.
struct SolverTrace {
  std::vector<Vec> iterates;
  std::vector<int> iterate_index;
  std::vector<double> objective;
  std::vector<double> steps;
  std::vector<double> dist_ref;
  std::vector<double> wall_ms;
  Vec best_point;
  double best_objective = 0.0;
  Termination termination = Termination::kMaxIter;
  std::uint64_t seed = 0;

  int iterations() const { return static_cast<int>(objective.size()) - 1; }
  double final_objective() const { return objective.back(); }

  /// Columns iter,f,step,dist_ref,wall_ms; dist_ref is empty when absent.
  std::string to_csv() const;
};

struct SolverOptions {
  int max_iter = 1000;
  double grad_tol = 0.0;              // stop when |s| <= grad_tol
  std::optional<double> target;       // stop when f <= target
  std::function<double(const Vec&)> distance;  // recorded in dist_ref
  int thin = 1;
  std::uint64_t seed = 0;
};

/// x_{k+1} = x_k - alpha_k s_k.
SolverTrace subgradient_method(const SubgradOracle& oracle, const Vec& x0, const StepSchedule& schedule,
                               const SolverOptions& options = {});

/// Euclidean projection. Boxes (axis-aligned halfspaces only) are clamped and
/// balls scaled exactly; other polyhedra use Dykstra's alternating
/// projections, throwing kProjectionNotConverged after max_iter sweeps.
Vec project(const ConvexSetSpec& c, const Vec& x, int max_iter = 10000, double tol = 1e-12);

/// x_{k+1} = P_C(x_k - alpha_k s_k), starting from P_C(x0).
SolverTrace projected_subgradient(const SubgradOracle& oracle, const ConvexSetSpec& c, const Vec& x0,
                                  const StepSchedule& schedule, const SolverOptions& options = {});

/// argmin_w (1/2N) |y - X w|^2 + (c/2) |w - anchor|^2 by a Cholesky solve of
/// (X^T X / N + c I) w = X^T y / N + c anchor. N defaults to rows(X).
Vec ridge_ls_solve(const Mat& x, const Vec& y, double c, const Vec& anchor, double n_normalizer = 0.0);

// ---------------------------------------------------------------------------
// LSPAR solvers.

struct MmParams {
  double eps0 = -1.0;  // negative: 0.1 mean |y|
  double c0 = 1.0;
  double c_min = 1e-6;  // floor for c after accepted steps
  double eta = 1e-4;
  double shrink = 0.5;  // eps <- shrink eps and c <- c / shrink on rejection
  int max_outer = 500;
  std::size_t selection_cap = 256;
  double min_step = 1e-12;  // shorter steps count as rejections
  double tie_tol = 1e-4;    // floor of the near-tie threshold of region candidates
  int max_region_ties = 3;
  double check_tol = 1e-6;
  double activity_tol = 1e-8;
};

/// One outer iteration: the best candidate and whether it was accepted.
struct MmStep {
  double f_before = 0.0;
  double f_after = 0.0;
  double step_sq = 0.0;  // |W_hat - W_k|_F^2
  double eps = 0.0;
  double c = 0.0;
  std::size_t candidates = 0;
  bool accepted = false;
};

struct MmResult {
  SolverTrace trace;  // one entry per outer iteration, points are row-major W
  Mat w;
  std::vector<MmStep> steps;
  bool certificate = false;
  std::optional<LsparCheck> check;  // absent when the check hit kTooManyTies
};

/// Majorization-minimization with epsilon-active selections. Candidates
/// are enumerated best-first by total activity margin; each solves one
/// ridge problem per piece on the samples assigned to it. Further
/// candidates handle samples with positive residual near a kink: for each
/// choice of the leading piece, the ridge problem restricted to the region
/// where that piece stays on top (a small QP). The best true
/// objective is accepted under sufficient decrease; otherwise the run ends
/// if W passes lspar_d_stationarity_check, and eps shrinks while c grows if
/// not. After an accepted step c relaxes to max(c_min, shrink c).
MmResult mm_lspar(const LsparDataset& data, const Mat& w0, const MmParams& params = {});

/// The selections mm_lspar would enumerate at W: for each sample, the
/// chosen piece index.
std::vector<std::vector<int>> mm_selections(const LsparDataset& data, const Mat& w, double eps, std::size_t cap);

/// W_{k+1} = W_k - alpha_k G(W_k) with the smallest-index argmax rule.
SolverTrace pseudo_subgradient_lspar(const LsparDataset& data, const Mat& w0, const StepSchedule& schedule,
                                     int max_iter);

/// Row-major flattening used for W in traces.
Vec flatten(const Mat& w);
Mat unflatten(const Vec& v, Eigen::Index rows, Eigen::Index cols);

}  // namespace nonsmooth
