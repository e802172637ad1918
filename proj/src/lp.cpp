#include "nonsmooth/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nonsmooth {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::kDimensionCapExceeded: return "DIMENSION_CAP_EXCEEDED";
    case ErrorCode::kUseSampled: return "USE_SAMPLED";
    case ErrorCode::kEmptySet: return "EMPTY_SET";
    case ErrorCode::kUnsupported: return "UNSUPPORTED";
    case ErrorCode::kInfeasiblePoint: return "INFEASIBLE_POINT";
    case ErrorCode::kTooManyTies: return "TOO_MANY_TIES";
    case ErrorCode::kProjectionNotConverged: return "PROJECTION_NOT_CONVERGED";
    case ErrorCode::kParse: return "PARSE_ERROR";
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::kNonSymmetric: return "NON_SYMMETRIC";
    case ErrorCode::kIo: return "IO_ERROR";
  }
  return "UNKNOWN";
}

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal: return "OPTIMAL";
    case LpStatus::kInfeasible: return "INFEASIBLE";
    case LpStatus::kUnbounded: return "UNBOUNDED";
  }
  return "UNKNOWN";
}

void LinearProgram::add_le(const Vec& row, double rhs) {
  require_dim(row.size(), num_vars(), "LinearProgram::add_le");
  a_ub.conservativeResize(a_ub.rows() + 1, num_vars());
  a_ub.row(a_ub.rows() - 1) = row.transpose();
  b_ub.conservativeResize(b_ub.size() + 1);
  b_ub[b_ub.size() - 1] = rhs;
}

void LinearProgram::add_eq(const Vec& row, double rhs) {
  require_dim(row.size(), num_vars(), "LinearProgram::add_eq");
  a_eq.conservativeResize(a_eq.rows() + 1, num_vars());
  a_eq.row(a_eq.rows() - 1) = row.transpose();
  b_eq.conservativeResize(b_eq.size() + 1);
  b_eq[b_eq.size() - 1] = rhs;
}

namespace {

class Tableau {
 public:
  Tableau(Mat t, std::vector<Eigen::Index> basis, Eigen::Index num_cols,
          Eigen::Index first_artificial, const SimplexOptions& options)
      : t_(std::move(t)),
        basis_(std::move(basis)),
        num_cols_(num_cols),
        first_artificial_(first_artificial),
        options_(options) {}

  // Rows 0..m-1 hold B^-1 [A | b]; row m holds reduced costs and -z.
  Eigen::Index rows() const { return static_cast<Eigen::Index>(basis_.size()); }
  Eigen::Index rhs_col() const { return num_cols_; }

  void set_costs(const Vec& costs) {
    const Eigen::Index m = rows();
    t_.row(m).setZero();
    t_.row(m).head(num_cols_) = costs.transpose();
    for (Eigen::Index i = 0; i < m; ++i) {
      const double cb = costs[basis_[i]];
      if (cb != 0.0) t_.row(m) -= cb * t_.row(i);
    }
  }

  // Returns false when the objective is unbounded below.
  bool optimize(bool allow_artificial, int& pivots) {
    const Eigen::Index m = rows();
    const Eigen::Index limit = allow_artificial ? num_cols_ : first_artificial_;
    while (true) {
      Eigen::Index entering = -1;
      for (Eigen::Index j = 0; j < limit; ++j) {
        if (t_(m, j) < -options_.pivot_tol) {
          entering = j;
          break;
        }
      }
      if (entering < 0) return true;

      Eigen::Index leaving = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m; ++i) {
        const double a = t_(i, entering);
        if (a <= options_.pivot_tol) continue;
        const double ratio = t_(i, rhs_col()) / a;
        const bool better = leaving < 0 || ratio < best_ratio - 1e-12;
        const bool tie_smaller_index = leaving >= 0 &&
                                       ratio <= best_ratio + 1e-12 &&
                                       basis_[i] < basis_[leaving];
        if (better || tie_smaller_index) {
          best_ratio = std::min(best_ratio, ratio);
          leaving = i;
        }
      }
      if (leaving < 0) return false;
      pivot(leaving, entering);
      if (++pivots > options_.max_pivots) {
        throw Error(ErrorCode::kUnsupported, "simplex pivot limit exceeded");
      }
    }
  }

  void pivot(Eigen::Index row, Eigen::Index col) {
    t_.row(row) /= t_(row, col);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i == row) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(row);
    }
    basis_[row] = col;
  }

  // Pivots zero-level artificials out of the basis; drops redundant rows.
  void expel_artificials() {
    for (Eigen::Index i = 0; i < rows();) {
      if (basis_[i] < first_artificial_) {
        ++i;
        continue;
      }
      Eigen::Index col = -1;
      for (Eigen::Index j = 0; j < first_artificial_; ++j) {
        if (std::abs(t_(i, j)) > options_.pivot_tol) {
          col = j;
          break;
        }
      }
      if (col >= 0) {
        pivot(i, col);
        ++i;
      } else {
        remove_row(i);
      }
    }
  }

  double objective_value() const { return -t_(rows(), rhs_col()); }

  Vec primal() const {
    Vec x = Vec::Zero(num_cols_);
    for (Eigen::Index i = 0; i < rows(); ++i) x[basis_[i]] = t_(i, rhs_col());
    return x;
  }

 private:
  void remove_row(Eigen::Index i) {
    const Eigen::Index n = t_.rows();
    Mat next(n - 1, t_.cols());
    next.topRows(i) = t_.topRows(i);
    next.bottomRows(n - 1 - i) = t_.bottomRows(n - 1 - i);
    t_ = std::move(next);
    basis_.erase(basis_.begin() + i);
  }

  Mat t_;
  std::vector<Eigen::Index> basis_;
  Eigen::Index num_cols_;
  Eigen::Index first_artificial_;
  SimplexOptions options_;
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, const SimplexOptions& options) {
  const Eigen::Index n = lp.num_vars();
  if (n > kMaxLpVariables) {
    throw Error(ErrorCode::kDimensionCapExceeded,
                "LP with " + std::to_string(n) + " variables exceeds cap " +
                    std::to_string(kMaxLpVariables));
  }
  require_dim(lp.a_ub.cols(), n, "solve_lp: A_ub");
  require_dim(lp.a_eq.cols(), n, "solve_lp: A_eq");
  require_dim(lp.b_ub.size(), lp.a_ub.rows(), "solve_lp: b_ub");
  require_dim(lp.b_eq.size(), lp.a_eq.rows(), "solve_lp: b_eq");
  if (!lp.nonneg.empty()) {
    require_dim(static_cast<Eigen::Index>(lp.nonneg.size()), n,
                "solve_lp: nonneg");
  }

  // Structural columns: free variables split into (plus, minus).
  std::vector<Eigen::Index> plus_col(n), minus_col(n, -1);
  Eigen::Index s = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    plus_col[j] = s++;
    const bool nonneg = !lp.nonneg.empty() && lp.nonneg[j];
    if (!nonneg) minus_col[j] = s++;
  }
  const Eigen::Index num_struct = s;
  const Eigen::Index m_ub = lp.a_ub.rows();
  const Eigen::Index m_eq = lp.a_eq.rows();
  const Eigen::Index m = m_ub + m_eq;

  auto expand = [&](const Eigen::RowVectorXd& row) {
    Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(num_struct);
    for (Eigen::Index j = 0; j < n; ++j) {
      out[plus_col[j]] = row[j];
      if (minus_col[j] >= 0) out[minus_col[j]] = -row[j];
    }
    return out;
  };

  // Slack per inequality; artificial per equality and per negative-rhs
  // inequality.
  std::vector<bool> needs_art(m, false);
  Eigen::Index num_art = 0;
  for (Eigen::Index i = 0; i < m_ub; ++i) {
    if (lp.b_ub[i] < 0.0) {
      needs_art[i] = true;
      ++num_art;
    }
  }
  for (Eigen::Index i = 0; i < m_eq; ++i) {
    needs_art[m_ub + i] = true;
    ++num_art;
  }
  const Eigen::Index first_slack = num_struct;
  const Eigen::Index first_art = num_struct + m_ub;
  const Eigen::Index num_cols = first_art + num_art;

  Mat t = Mat::Zero(m + 1, num_cols + 1);
  std::vector<Eigen::Index> basis(m);
  Eigen::Index art = first_art;
  double b_scale = 1.0;
  for (Eigen::Index i = 0; i < m_ub; ++i) {
    const double sign = lp.b_ub[i] < 0.0 ? -1.0 : 1.0;
    t.row(i).head(num_struct) = sign * expand(lp.a_ub.row(i));
    t(i, first_slack + i) = sign;
    t(i, num_cols) = sign * lp.b_ub[i];
    b_scale = std::max(b_scale, std::abs(lp.b_ub[i]));
    if (needs_art[i]) {
      t(i, art) = 1.0;
      basis[i] = art++;
    } else {
      basis[i] = first_slack + i;
    }
  }
  for (Eigen::Index i = 0; i < m_eq; ++i) {
    const Eigen::Index r = m_ub + i;
    const double sign = lp.b_eq[i] < 0.0 ? -1.0 : 1.0;
    t.row(r).head(num_struct) = sign * expand(lp.a_eq.row(i));
    t(r, num_cols) = sign * lp.b_eq[i];
    b_scale = std::max(b_scale, std::abs(lp.b_eq[i]));
    t(r, art) = 1.0;
    basis[r] = art++;
  }

  Tableau tab(std::move(t), std::move(basis), num_cols, first_art, options);
  int pivots = 0;

  if (num_art > 0) {
    Vec phase1 = Vec::Zero(num_cols);
    phase1.tail(num_art).setOnes();
    tab.set_costs(phase1);
    tab.optimize(true, pivots);
    if (tab.objective_value() > options.feasibility_tol * b_scale) {
      return LpResult{LpStatus::kInfeasible, Vec(), 0.0};
    }
    tab.expel_artificials();
  }

  Vec costs = Vec::Zero(num_cols);
  costs.head(num_struct) = expand(lp.objective.transpose()).transpose();
  tab.set_costs(costs);
  if (!tab.optimize(false, pivots)) {
    return LpResult{LpStatus::kUnbounded, Vec(), 0.0};
  }

  const Vec y = tab.primal();
  Vec x(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    x[j] = y[plus_col[j]] - (minus_col[j] >= 0 ? y[minus_col[j]] : 0.0);
  }
  return LpResult{LpStatus::kOptimal, x, lp.objective.dot(x)};
}

LpResult solve_lp_lexmin(const LinearProgram& lp, double face_tol) {
  LpResult best = solve_lp(lp);
  if (!best.optimal()) return best;
  LinearProgram face = lp;
  face.add_le(lp.objective, best.value + face_tol);
  for (Eigen::Index j = 0; j < lp.num_vars(); ++j) {
    face.objective = Vec::Unit(lp.num_vars(), j);
    const LpResult step = solve_lp(face);
    if (!step.optimal()) break;
    face.add_le(Vec::Unit(lp.num_vars(), j), step.x[j] + face_tol);
    best.x = step.x;
  }
  best.value = lp.objective.dot(best.x);
  return best;
}

}  // namespace nonsmooth
