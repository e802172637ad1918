#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nonsmooth/lspar.hpp"
#include "nonsmooth/solvers.hpp"

namespace nonsmooth {

// ---------------------------------------------------------------------------
// Robust recovery problems. Sign(0) resolves to 0 in every oracle.

enum class RobustKind { kMatrixRecovery, kSignRetrieval, kAmplitudeRetrieval, kBlindDeconv, kLogSumLS };

const char* to_string(RobustKind kind);
RobustKind robust_kind_from_string(const std::string& name);

/// Measurement data for one robust problem. Points are laid out as
///   MatrixRecovery:  vec(U), U n x r row-major;
///   BlindDeconv:     (w; x) with w in R^n, x in R^n2;
///   otherwise:       x in R^n.
struct RobustInstance {
  RobustKind kind = RobustKind::kSignRetrieval;
  Eigen::Index n = 0;
  Eigen::Index n2 = 0;    // BlindDeconv
  Eigen::Index rank = 0;  // MatrixRecovery
  Mat a;                  // m x n measurement vectors a_i as rows
  Mat c;                  // m x n2, BlindDeconv
  std::vector<Mat> sensing;  // m Gaussian n x n matrices, MatrixRecovery
  Vec b;
  double lambda = 0.0;  // LogSumLS
  double theta = 1.0;   // LogSumLS
  Vec planted;
  std::vector<bool> outlier;
  std::uint64_t seed = 0;

  Eigen::Index measurements() const { return b.size(); }
  Eigen::Index dim() const;
};

/// Planted signal with standard Gaussian entries; a_i (and c_i, sensing
/// entries) standard Gaussian. round(outlier_frac m) measurements chosen
/// uniformly are replaced by |N(0, 10^2)| draws; the rest follow the model
/// exactly.
RobustInstance gen_sign_retrieval(Eigen::Index n, Eigen::Index m, double outlier_frac, std::uint64_t seed);
RobustInstance gen_amplitude_retrieval(Eigen::Index n, Eigen::Index m, double outlier_frac, std::uint64_t seed);
RobustInstance gen_blind_deconv(Eigen::Index n, Eigen::Index n2, Eigen::Index m, double outlier_frac,
                                std::uint64_t seed);
RobustInstance gen_matrix_recovery(Eigen::Index n, Eigen::Index r, Eigen::Index m, double outlier_frac,
                                   std::uint64_t seed);
/// b = A x* + 0.1 N(0, I); no outliers.
RobustInstance gen_logsum_ls(Eigen::Index n, Eigen::Index m, double lambda, double theta, std::uint64_t seed);

double robust_objective(const RobustInstance& inst, const Vec& point);

/// The closed-form subgradient of each kind; LogSumLS adds the
/// least-squares gradient to lambda Sign(x_i) / (|x_i| + theta).
Vec robust_subgrad_oracle(const RobustInstance& inst, const Vec& point);

SubgradOracle robust_oracle(const RobustInstance& inst);

/// Distance to the symmetry orbit of the planted signal: min over +-x* for
/// retrieval, over (t w*, x*/t) for blind deconvolution, over U* R with R
/// orthogonal for matrix recovery, plain distance for LogSumLS.
double orbit_distance(const RobustInstance& inst, const Vec& point);

// ---------------------------------------------------------------------------
// Configuration files: one key=value per line, '#' starts a comment.

using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::string& path);

// ---------------------------------------------------------------------------
// LSPAR trials.

struct LsparConfig {
  std::vector<Eigen::Index> n_list{10, 50, 100};
  int trials = 500;
  std::uint64_t seed = 0;
  double noise_sigma = 0.1;
  std::vector<std::string> methods{"mm", "subgrad"};
  /// Absent: Diminishing(c) with c chosen from {0.1, 1, 10} per N by the
  /// mean final objective over `tuning_trials` held-out trials.
  std::optional<StepSchedule> schedule;
  int tuning_trials = 5;
  int subgrad_iters = 2000;
  MmParams mm;
  int threads = 0;       // 0: hardware concurrency
  std::string out_dir;   // empty: no files

  /// Keys: n_list, trials, seed, sigma, methods, schedule ("tuned" or
  /// kind:params), tuning_trials, subgrad_iters, mm_max_outer, threads,
  /// out_dir. Unknown keys throw kInvalidArgument.
  static LsparConfig from_key_values(const KeyValues& kv);
};

struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  Eigen::Index n = 0;
  std::string method;
  double final_f = 0.0;
  double best_f = 0.0;
  int iters = 0;
  std::optional<bool> cert;  // absent when the check hit its tie cap
  double wall_ms = 0.0;
  Mat w;  // final weights
};

struct MethodSummary {
  Eigen::Index n = 0;
  std::string method;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, mean = 0.0;
  int minimum_count = 0;  // trials this method won outright
  int certified = 0;
};

struct LsparSummary {
  std::vector<TrialRecord> records;  // ordered by (N, trial, method)
  std::vector<MethodSummary> methods;
  std::map<Eigen::Index, int> ties;  // trials with no outright winner
  std::map<Eigen::Index, double> step_c;  // Diminishing constant used per N

  const MethodSummary& summary(Eigen::Index n, const std::string& method) const;
  /// Fraction of trials at N with final_f(a) <= final_f(b) - margin.
  double fraction_better(Eigen::Index n, const std::string& a, const std::string& b, double margin) const;
};

/// Objectives within this relative gap of the trial minimum tie.
inline constexpr double kMinimumTieTol = 1e-8;

/// Each trial t derives its stream from (seed, t); data and W0 come from
/// per-N splits of it, and every method starts from the same W0. Writes
/// trials.csv, summary.csv, fig5.svg and fig6.svg when out_dir is set.
LsparSummary run_lspar_experiment(const LsparConfig& config);

/// trial,seed,N,method,final_f,best_f,iters,cert,wall_ms; the wall_ms
/// column is left out when include_wall is false.
std::string trials_csv(const std::vector<TrialRecord>& records, bool include_wall = true);
std::string summary_csv(const LsparSummary& summary);

// ---------------------------------------------------------------------------
// Recovery convergence study.

struct RecoveryConfig {
  RobustKind kind = RobustKind::kSignRetrieval;
  Eigen::Index n = 10;
  Eigen::Index n2 = 0;  // BlindDeconv; 0 means n
  Eigen::Index rank = 1;
  Eigen::Index m = 80;
  double outlier_frac = 0.1;
  StepSchedule schedule = StepSchedule::geometric(0.1, 0.98);
  int iters = 2000;
  std::uint64_t seed = 0;
  double init_noise = 0.1;  // x0 = x* + init_noise N(0, I)
  double lambda = 0.01;     // LogSumLS
  double theta = 1.0;
  std::string out_dir;

  /// Keys: kind, n, n2, rank, m, outlier_frac, schedule, iters, seed,
  /// init_noise, lambda, theta, out_dir.
  static RecoveryConfig from_key_values(const KeyValues& kv);
};

struct RecoverySummary {
  RobustInstance instance;
  SolverTrace trace;               // dist_ref holds the orbit distance
  std::vector<double> best_dist;   // best-so-far orbit distance
  double final_dist = 0.0;
  double slope = 0.0;  // least-squares slope of log best_dist per iteration
  double r2 = 0.0;

  /// iter,f,step,dist,best_dist
  std::string to_csv() const;
};

/// Requires m >= 4n for the retrieval kinds. Writes recovery.csv when
/// out_dir is set.
RecoverySummary run_recovery_experiment(const RecoveryConfig& config);

/// Slope and R^2 of the least-squares line through (k, log v_k) over the
/// positive entries.
std::pair<double, double> log_linear_fit(const std::vector<double>& v);

}  // namespace nonsmooth
