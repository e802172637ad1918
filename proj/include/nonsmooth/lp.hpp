#pragma once

#include <vector>

#include "nonsmooth/common.hpp"

namespace nonsmooth {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

const char* to_string(LpStatus status);

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  Vec x;
  double value = 0.0;

  bool optimal() const { return status == LpStatus::kOptimal; }
};

/// minimize c^T z  subject to  A_ub z <= b_ub,  A_eq z = b_eq,
/// z_j >= 0 for every j with nonneg[j] (an empty `nonneg` means all free).
struct LinearProgram {
  Vec objective;
  Mat a_ub;
  Vec b_ub;
  Mat a_eq;
  Vec b_eq;
  std::vector<bool> nonneg;

  explicit LinearProgram(Eigen::Index num_vars = 0)
      : objective(Vec::Zero(num_vars)),
        a_ub(0, num_vars),
        b_ub(0),
        a_eq(0, num_vars),
        b_eq(0) {}

  Eigen::Index num_vars() const { return objective.size(); }

  void add_le(const Vec& row, double rhs);
  void add_ge(const Vec& row, double rhs) { add_le(-row, -rhs); }
  void add_eq(const Vec& row, double rhs);
};

/// Largest number of structural variables the dense simplex accepts.
inline constexpr Eigen::Index kMaxLpVariables = 64;

struct SimplexOptions {
  double pivot_tol = 1e-9;
  double feasibility_tol = 1e-9;
  int max_pivots = 200000;
};

/// Two-phase dense tableau simplex with Bland's anti-cycling rule.
LpResult solve_lp(const LinearProgram& lp, const SimplexOptions& options = {});

/// Minimizes `objective` over the polyhedron, then breaks ties by the
/// lexicographically smallest point of the optimal face (coordinate by
/// coordinate, each within `face_tol` of the previous optimum). `value` is
/// the objective at the returned point, so it may exceed the optimum by up
/// to face_tol.
LpResult solve_lp_lexmin(const LinearProgram& lp, double face_tol = 1e-10);

}  // namespace nonsmooth
