#include "nonsmooth/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "nonsmooth/plots.hpp"
#include "nonsmooth/rng.hpp"
#include "nonsmooth/stationarity.hpp"

namespace nonsmooth {

namespace {

using Clock = std::chrono::steady_clock;

double sign(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Replaces round(frac m) entries of b, chosen by a partial Fisher-Yates
// shuffle, with |N(0, 10^2)| draws.
std::vector<bool> corrupt(Vec& b, double frac, CounterRng& rng) {
  if (!(frac >= 0.0 && frac <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "outlier_frac must lie in [0, 1]");
  const auto m = static_cast<std::size_t>(b.size());
  const auto k = static_cast<std::size_t>(std::lround(frac * static_cast<double>(m)));
  std::vector<std::size_t> idx(m);
  for (std::size_t i = 0; i < m; ++i) idx[i] = i;
  std::vector<bool> mask(m, false);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(m - i));
    std::swap(idx[i], idx[j]);
    mask[idx[i]] = true;
    b[static_cast<Eigen::Index>(idx[i])] = std::abs(10.0 * rng.normal());
  }
  return mask;
}

Mat gaussian(CounterRng& rng, Eigen::Index rows, Eigen::Index cols) {
  Mat a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = rng.normal();
  return a;
}

void require_measurements(Eigen::Index n, Eigen::Index m) {
  if (n < 1 || m < 1) throw Error(ErrorCode::kInvalidArgument, "robust instance: n and m must be positive");
}

Mat as_u(const RobustInstance& inst, const Vec& point) {
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      point.data(), inst.n, inst.rank);
}

// <A_i, U U^T> for every i.
Vec sensed(const RobustInstance& inst, const Mat& u) {
  const Mat x = u * u.transpose();
  Vec out(static_cast<Eigen::Index>(inst.sensing.size()));
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out[i] = inst.sensing[static_cast<std::size_t>(i)].cwiseProduct(x).sum();
  }
  return out;
}

}  // namespace

const char* to_string(RobustKind kind) {
  switch (kind) {
    case RobustKind::kMatrixRecovery: return "matrix";
    case RobustKind::kSignRetrieval: return "sign";
    case RobustKind::kAmplitudeRetrieval: return "amplitude";
    case RobustKind::kBlindDeconv: return "blind";
    case RobustKind::kLogSumLS: return "logsum";
  }
  return "?";
}

RobustKind robust_kind_from_string(const std::string& name) {
  for (RobustKind k : {RobustKind::kMatrixRecovery, RobustKind::kSignRetrieval, RobustKind::kAmplitudeRetrieval,
                       RobustKind::kBlindDeconv, RobustKind::kLogSumLS}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown robust kind '" + name + "'");
}

Eigen::Index RobustInstance::dim() const {
  switch (kind) {
    case RobustKind::kMatrixRecovery: return n * rank;
    case RobustKind::kBlindDeconv: return n + n2;
    default: return n;
  }
}

RobustInstance gen_sign_retrieval(Eigen::Index n, Eigen::Index m, double outlier_frac, std::uint64_t seed) {
  require_measurements(n, m);
  CounterRng rng(seed);
  RobustInstance inst;
  inst.kind = RobustKind::kSignRetrieval;
  inst.n = n;
  inst.seed = seed;
  inst.planted = rng.normal_vec(n);
  inst.a = gaussian(rng, m, n);
  inst.b = (inst.a * inst.planted).array().square().matrix();
  inst.outlier = corrupt(inst.b, outlier_frac, rng);
  return inst;
}

RobustInstance gen_amplitude_retrieval(Eigen::Index n, Eigen::Index m, double outlier_frac, std::uint64_t seed) {
  RobustInstance inst = gen_sign_retrieval(n, m, 0.0, seed);
  inst.kind = RobustKind::kAmplitudeRetrieval;
  inst.b = (inst.a * inst.planted).cwiseAbs();
  CounterRng rng(CounterRng(seed).split(1));
  inst.outlier = corrupt(inst.b, outlier_frac, rng);
  return inst;
}

RobustInstance gen_blind_deconv(Eigen::Index n, Eigen::Index n2, Eigen::Index m, double outlier_frac,
                                std::uint64_t seed) {
  require_measurements(n, m);
  require_measurements(n2, m);
  CounterRng rng(seed);
  RobustInstance inst;
  inst.kind = RobustKind::kBlindDeconv;
  inst.n = n;
  inst.n2 = n2;
  inst.seed = seed;
  inst.planted = rng.normal_vec(n + n2);
  inst.a = gaussian(rng, m, n);
  inst.c = gaussian(rng, m, n2);
  inst.b = (inst.a * inst.planted.head(n)).cwiseProduct(inst.c * inst.planted.tail(n2));
  inst.outlier = corrupt(inst.b, outlier_frac, rng);
  return inst;
}

RobustInstance gen_matrix_recovery(Eigen::Index n, Eigen::Index r, Eigen::Index m, double outlier_frac,
                                   std::uint64_t seed) {
  require_measurements(n, m);
  if (r < 1 || r > n) throw Error(ErrorCode::kInvalidArgument, "matrix recovery: rank must lie in [1, n]");
  CounterRng rng(seed);
  RobustInstance inst;
  inst.kind = RobustKind::kMatrixRecovery;
  inst.n = n;
  inst.rank = r;
  inst.seed = seed;
  inst.planted = rng.normal_vec(n * r);
  for (Eigen::Index i = 0; i < m; ++i) inst.sensing.push_back(gaussian(rng, n, n));
  inst.b = sensed(inst, as_u(inst, inst.planted));
  inst.outlier = corrupt(inst.b, outlier_frac, rng);
  return inst;
}

RobustInstance gen_logsum_ls(Eigen::Index n, Eigen::Index m, double lambda, double theta, std::uint64_t seed) {
  require_measurements(n, m);
  if (lambda < 0.0 || theta <= 0.0) throw Error(ErrorCode::kInvalidArgument, "logsum: need lambda >= 0, theta > 0");
  CounterRng rng(seed);
  RobustInstance inst;
  inst.kind = RobustKind::kLogSumLS;
  inst.n = n;
  inst.seed = seed;
  inst.lambda = lambda;
  inst.theta = theta;
  inst.planted = rng.normal_vec(n);
  inst.a = gaussian(rng, m, n);
  inst.b = inst.a * inst.planted + 0.1 * rng.normal_vec(m);
  inst.outlier.assign(static_cast<std::size_t>(m), false);
  return inst;
}

double robust_objective(const RobustInstance& inst, const Vec& p) {
  require_dim(p.size(), inst.dim(), "robust_objective");
  const double m = static_cast<double>(inst.measurements());
  switch (inst.kind) {
    case RobustKind::kSignRetrieval:
      return ((inst.a * p).array().square() - inst.b.array()).abs().sum() / m;
    case RobustKind::kAmplitudeRetrieval:
      return ((inst.a * p).array().abs() - inst.b.array()).abs().sum() / m;
    case RobustKind::kBlindDeconv:
      return ((inst.a * p.head(inst.n)).cwiseProduct(inst.c * p.tail(inst.n2)) - inst.b).cwiseAbs().sum() / m;
    case RobustKind::kMatrixRecovery:
      return (inst.b - sensed(inst, as_u(inst, p))).cwiseAbs().sum() / m;
    case RobustKind::kLogSumLS: {
      const double ls = (inst.b - inst.a * p).squaredNorm() / (2.0 * m);
      return ls + inst.lambda * (p.array().abs() + inst.theta).log().sum();
    }
  }
  return 0.0;
}

Vec robust_subgrad_oracle(const RobustInstance& inst, const Vec& p) {
  require_dim(p.size(), inst.dim(), "robust_subgrad_oracle");
  const double m = static_cast<double>(inst.measurements());
  switch (inst.kind) {
    case RobustKind::kSignRetrieval: {
      const Vec ax = inst.a * p;
      Vec w(ax.size());
      for (Eigen::Index i = 0; i < ax.size(); ++i) w[i] = ax[i] * sign(ax[i] * ax[i] - inst.b[i]);
      return (2.0 / m) * inst.a.transpose() * w;
    }
    case RobustKind::kAmplitudeRetrieval: {
      const Vec ax = inst.a * p;
      Vec w(ax.size());
      for (Eigen::Index i = 0; i < ax.size(); ++i) w[i] = sign(std::abs(ax[i]) - inst.b[i]) * sign(ax[i]);
      return inst.a.transpose() * w / m;
    }
    case RobustKind::kBlindDeconv: {
      const Vec aw = inst.a * p.head(inst.n), cx = inst.c * p.tail(inst.n2);
      Vec s(aw.size());
      for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = sign(aw[i] * cx[i] - inst.b[i]);
      Vec g(inst.dim());
      g.head(inst.n) = inst.a.transpose() * s.cwiseProduct(cx) / m;
      g.tail(inst.n2) = inst.c.transpose() * s.cwiseProduct(aw) / m;
      return g;
    }
    case RobustKind::kMatrixRecovery: {
      const Mat u = as_u(inst, p);
      const Vec r = sensed(inst, u) - inst.b;
      Mat adj = Mat::Zero(inst.n, inst.n);
      for (Eigen::Index i = 0; i < r.size(); ++i) adj += sign(r[i]) * inst.sensing[static_cast<std::size_t>(i)];
      const Mat g = (adj.transpose() * u + adj * u) / m;
      Vec out(inst.dim());
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(out.data(), inst.n,
                                                                                         inst.rank) = g;
      return out;
    }
    case RobustKind::kLogSumLS: {
      Vec g = inst.a.transpose() * (inst.a * p - inst.b) / m;
      for (Eigen::Index i = 0; i < p.size(); ++i) g[i] += inst.lambda * sign(p[i]) / (std::abs(p[i]) + inst.theta);
      return g;
    }
  }
  return Vec();
}

SubgradOracle robust_oracle(const RobustInstance& inst) {
  return SubgradOracle{[inst](const Vec& x) { return robust_objective(inst, x); },
                       [inst](const Vec& x) { return robust_subgrad_oracle(inst, x); }};
}

double orbit_distance(const RobustInstance& inst, const Vec& p) {
  require_dim(p.size(), inst.dim(), "orbit_distance");
  const Vec& s = inst.planted;
  switch (inst.kind) {
    case RobustKind::kSignRetrieval:
    case RobustKind::kAmplitudeRetrieval:
      return std::min((p - s).norm(), (p + s).norm());
    case RobustKind::kLogSumLS:
      return (p - s).norm();
    case RobustKind::kMatrixRecovery: {
      // Orthogonal Procrustes: R = P Q^T from the SVD of U*^T U.
      const Mat u = as_u(inst, p), us = as_u(inst, s);
      Eigen::JacobiSVD<Mat> svd(us.transpose() * u, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const Mat r = svd.matrixU() * svd.matrixV().transpose();
      return (u - us * r).norm();
    }
    case RobustKind::kBlindDeconv: {
      // h(t) = |w - t w*|^2 + |x - x*/t|^2; stationary points solve
      // |w*|^2 t^4 - (w.w*) t^3 + (x.x*) t - |x*|^2 = 0.
      const Vec w = p.head(inst.n), x = p.tail(inst.n2);
      const Vec ws = s.head(inst.n), xs = s.tail(inst.n2);
      auto h = [&](double t) { return (w - t * ws).squaredNorm() + (x - xs / t).squaredNorm(); };
      const double c4 = ws.squaredNorm(), c3 = -w.dot(ws), c1 = x.dot(xs), c0 = -xs.squaredNorm();
      Mat comp = Mat::Zero(4, 4);
      comp(0, 3) = -c0 / c4;
      comp(1, 3) = -c1 / c4;
      comp(2, 3) = 0.0;
      comp(3, 3) = -c3 / c4;
      comp(1, 0) = comp(2, 1) = comp(3, 2) = 1.0;
      const Eigen::VectorXcd roots = Eigen::EigenSolver<Mat>(comp, false).eigenvalues();
      double best = HUGE_VAL;
      for (Eigen::Index i = 0; i < roots.size(); ++i) {
        const double t = roots[i].real();
        if (t != 0.0 && std::abs(roots[i].imag()) <= 1e-8 * (1.0 + std::abs(t))) best = std::min(best, h(t));
      }
      return std::sqrt(best);
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || trim(line.substr(0, eq)).empty()) {
      throw ParseError(lineno, 1, "expected key=value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kInvalidArgument, "config key '" + key + "': not a number: '" + v + "'");
}

long long to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d)) throw Error(ErrorCode::kInvalidArgument, "config key '" + key + "': not an integer");
  return static_cast<long long>(d);
}

}  // namespace

LsparConfig LsparConfig::from_key_values(const KeyValues& kv) {
  LsparConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "n_list") {
      c.n_list.clear();
      for (const auto& s : split_list(v)) c.n_list.push_back(static_cast<Eigen::Index>(to_int(k, s)));
    } else if (k == "trials") {
      c.trials = static_cast<int>(to_int(k, v));
    } else if (k == "seed") {
      c.seed = static_cast<std::uint64_t>(to_int(k, v));
    } else if (k == "sigma") {
      c.noise_sigma = to_double(k, v);
    } else if (k == "methods") {
      c.methods = split_list(v);
    } else if (k == "schedule") {
      if (v == "tuned") {
        c.schedule.reset();
      } else {
        c.schedule = StepSchedule::parse(v);
      }
    } else if (k == "tuning_trials") {
      c.tuning_trials = static_cast<int>(to_int(k, v));
    } else if (k == "subgrad_iters") {
      c.subgrad_iters = static_cast<int>(to_int(k, v));
    } else if (k == "mm_max_outer") {
      c.mm.max_outer = static_cast<int>(to_int(k, v));
    } else if (k == "threads") {
      c.threads = static_cast<int>(to_int(k, v));
    } else if (k == "out_dir") {
      c.out_dir = v;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown lspar config key '" + k + "'");
    }
  }
  return c;
}

RecoveryConfig RecoveryConfig::from_key_values(const KeyValues& kv) {
  RecoveryConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "kind") {
      c.kind = robust_kind_from_string(v);
    } else if (k == "n") {
      c.n = static_cast<Eigen::Index>(to_int(k, v));
    } else if (k == "n2") {
      c.n2 = static_cast<Eigen::Index>(to_int(k, v));
    } else if (k == "rank") {
      c.rank = static_cast<Eigen::Index>(to_int(k, v));
    } else if (k == "m") {
      c.m = static_cast<Eigen::Index>(to_int(k, v));
    } else if (k == "outlier_frac") {
      c.outlier_frac = to_double(k, v);
    } else if (k == "schedule") {
      c.schedule = StepSchedule::parse(v);
    } else if (k == "iters") {
      c.iters = static_cast<int>(to_int(k, v));
    } else if (k == "seed") {
      c.seed = static_cast<std::uint64_t>(to_int(k, v));
    } else if (k == "init_noise") {
      c.init_noise = to_double(k, v);
    } else if (k == "lambda") {
      c.lambda = to_double(k, v);
    } else if (k == "theta") {
      c.theta = to_double(k, v);
    } else if (k == "out_dir") {
      c.out_dir = v;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown recovery config key '" + k + "'");
    }
  }
  return c;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kHeldOutStream = 0xFFFFFFFFull;

struct TrialInput {
  LsparDataset data;
  Mat w0;
  std::uint64_t seed;
};

TrialInput trial_input(const CounterRng& trial_rng, Eigen::Index n, double sigma) {
  const CounterRng per_n = trial_rng.split(static_cast<std::uint64_t>(n));
  CounterRng init = per_n.split(2);
  TrialInput in{gen_lspar_data(n, sigma, per_n.key()), gaussian(init, 4, 2), trial_rng.key()};
  return in;
}

TrialRecord run_method(const std::string& method, const TrialInput& in, const StepSchedule& schedule,
                       const LsparConfig& config) {
  TrialRecord rec;
  rec.seed = in.seed;
  rec.n = in.data.size();
  rec.method = method;
  const auto t0 = Clock::now();
  if (method == "mm") {
    const MmResult r = mm_lspar(in.data, in.w0, config.mm);
    rec.final_f = r.trace.final_objective();
    rec.best_f = r.trace.best_objective;
    rec.iters = r.trace.iterations();
    if (r.check) rec.cert = r.certificate;
    rec.w = r.w;
  } else if (method == "subgrad") {
    const SolverTrace t = pseudo_subgradient_lspar(in.data, in.w0, schedule, config.subgrad_iters);
    rec.final_f = t.final_objective();
    rec.best_f = t.best_objective;
    rec.iters = t.iterations();
    rec.w = unflatten(t.iterates.back(), in.w0.rows(), in.w0.cols());
    try {
      rec.cert = lspar_d_stationarity_check(in.data, rec.w).stationary;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTooManyTies) throw;
    }
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown lspar method '" + method + "'");
  }
  rec.wall_ms = ms_since(t0);
  return rec;
}

double tune_step(const LsparConfig& config, Eigen::Index n) {
  const CounterRng held_out = CounterRng(config.seed).split(kHeldOutStream);
  double best_c = 1.0, best_mean = HUGE_VAL;
  for (double c : {0.1, 1.0, 10.0}) {
    double total = 0.0;
    for (int t = 0; t < config.tuning_trials; ++t) {
      const TrialInput in = trial_input(held_out.split(static_cast<std::uint64_t>(t)), n, config.noise_sigma);
      total += pseudo_subgradient_lspar(in.data, in.w0, StepSchedule::diminishing(c), config.subgrad_iters)
                   .final_objective();
    }
    if (total < best_mean) {
      best_mean = total;
      best_c = c;
    }
  }
  return best_c;
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create directory '" + dir + "': " + ec.message());
}

}  // namespace

const MethodSummary& LsparSummary::summary(Eigen::Index n, const std::string& method) const {
  for (const auto& m : methods) {
    if (m.n == n && m.method == method) return m;
  }
  throw Error(ErrorCode::kInvalidArgument, "no summary for method '" + method + "' at N=" + std::to_string(n));
}

double LsparSummary::fraction_better(Eigen::Index n, const std::string& a, const std::string& b,
                                     double margin) const {
  std::map<int, double> fa, fb;
  for (const auto& r : records) {
    if (r.n != n) continue;
    if (r.method == a) fa[r.trial] = r.final_f;
    if (r.method == b) fb[r.trial] = r.final_f;
  }
  int wins = 0, total = 0;
  for (const auto& [t, va] : fa) {
    const auto it = fb.find(t);
    if (it == fb.end()) continue;
    ++total;
    if (va <= it->second - margin) ++wins;
  }
  return total > 0 ? static_cast<double>(wins) / total : 0.0;
}

LsparSummary run_lspar_experiment(const LsparConfig& config) {
  if (config.trials < 1 || config.n_list.empty() || config.methods.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "lspar experiment: need trials >= 1, N values and methods");
  }
  for (const auto& m : config.methods) {
    if (m != "mm" && m != "subgrad") throw Error(ErrorCode::kInvalidArgument, "unknown lspar method '" + m + "'");
  }
  LsparSummary out;
  std::map<Eigen::Index, StepSchedule> schedules;
  const bool uses_subgrad = std::find(config.methods.begin(), config.methods.end(), "subgrad") != config.methods.end();
  for (Eigen::Index n : config.n_list) {
    if (config.schedule) {
      schedules[n] = *config.schedule;
    } else {
      const double c = uses_subgrad ? tune_step(config, n) : 1.0;
      schedules[n] = StepSchedule::diminishing(c);
    }
    if (schedules[n].kind == StepKind::kDiminishing) out.step_c[n] = schedules[n].p1;
  }

  // One task per (N, trial); results land in fixed slots.
  const std::size_t n_methods = config.methods.size();
  const std::size_t tasks = config.n_list.size() * static_cast<std::size_t>(config.trials);
  std::vector<TrialRecord> slots(tasks * n_methods);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const CounterRng root(config.seed);
  auto worker = [&]() {
    for (std::size_t task = next++; task < tasks; task = next++) {
      try {
        const Eigen::Index n = config.n_list[task / static_cast<std::size_t>(config.trials)];
        const int trial = static_cast<int>(task % static_cast<std::size_t>(config.trials));
        const TrialInput in = trial_input(root.split(static_cast<std::uint64_t>(trial)), n, config.noise_sigma);
        for (std::size_t j = 0; j < n_methods; ++j) {
          TrialRecord rec = run_method(config.methods[j], in, schedules.at(n), config);
          rec.trial = trial;
          slots[task * n_methods + j] = std::move(rec);
        }
      } catch (...) {
        const std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t threads =
      std::min<std::size_t>(tasks, config.threads > 0 ? static_cast<std::size_t>(config.threads) : hw);
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  out.records = std::move(slots);

  for (Eigen::Index n : config.n_list) {
    std::map<std::string, std::vector<double>> finals;
    std::map<std::string, int> wins, certified;
    std::map<int, std::vector<const TrialRecord*>> by_trial;
    for (const auto& r : out.records) {
      if (r.n != n) continue;
      finals[r.method].push_back(r.final_f);
      if (r.cert.value_or(false)) ++certified[r.method];
      by_trial[r.trial].push_back(&r);
    }
    int ties = 0;
    for (const auto& [_, rs] : by_trial) {
      double lo = HUGE_VAL;
      for (const auto* r : rs) lo = std::min(lo, r->final_f);
      const TrialRecord* winner = nullptr;
      int at_min = 0;
      for (const auto* r : rs) {
        if (r->final_f <= lo + kMinimumTieTol * (1.0 + std::abs(lo))) {
          ++at_min;
          winner = r;
        }
      }
      if (at_min == 1) {
        ++wins[winner->method];
      } else {
        ++ties;
      }
    }
    out.ties[n] = ties;
    for (const auto& method : config.methods) {
      std::vector<double> v = finals[method];
      std::sort(v.begin(), v.end());
      MethodSummary s;
      s.n = n;
      s.method = method;
      s.min = v.front();
      s.q1 = quantile(v, 0.25);
      s.median = quantile(v, 0.5);
      s.q3 = quantile(v, 0.75);
      s.max = v.back();
      double total = 0.0;
      for (double x : v) total += x;
      s.mean = total / static_cast<double>(v.size());
      s.minimum_count = wins[method];
      s.certified = certified[method];
      out.methods.push_back(s);
    }
  }

  if (!config.out_dir.empty()) {
    make_dir(config.out_dir);
    const std::filesystem::path dir(config.out_dir);
    write_file(dir / "trials.csv", trials_csv(out.records));
    write_file(dir / "summary.csv", summary_csv(out));
    std::vector<BoxGroup> boxes;
    std::vector<BarGroup> bars;
    for (Eigen::Index n : config.n_list) {
      BoxGroup bg{"N=" + std::to_string(n), {}};
      BarGroup cg{"N=" + std::to_string(n), {}};
      for (const auto& method : config.methods) {
        const MethodSummary& s = out.summary(n, method);
        bg.boxes.push_back({method, BoxStats{s.min, s.q1, s.median, s.q3, s.max}});
        cg.bars.push_back({method, static_cast<double>(s.minimum_count)});
      }
      cg.bars.push_back({"tie", static_cast<double>(out.ties.at(n))});
      boxes.push_back(bg);
      bars.push_back(cg);
    }
    write_file(dir / "fig5.svg", box_plot_svg("Final objective per trial", "log10 final objective", boxes, true));
    write_file(dir / "fig6.svg", bar_chart_svg("Initial points reaching the smallest objective", "trials", bars));
  }
  return out;
}

std::string trials_csv(const std::vector<TrialRecord>& records, bool include_wall) {
  std::ostringstream os;
  os.precision(17);
  os << "trial,seed,N,method,final_f,best_f,iters,cert" << (include_wall ? ",wall_ms" : "") << '\n';
  for (const auto& r : records) {
    os << r.trial << ',' << r.seed << ',' << r.n << ',' << r.method << ',' << r.final_f << ',' << r.best_f << ','
       << r.iters << ',' << (r.cert ? (*r.cert ? "1" : "0") : "NA");
    if (include_wall) os << ',' << r.wall_ms;
    os << '\n';
  }
  return os.str();
}

std::string summary_csv(const LsparSummary& summary) {
  std::ostringstream os;
  os.precision(17);
  os << "N,method,min,q1,median,q3,max,mean,minimum_count,certified,ties,step_c\n";
  for (const auto& s : summary.methods) {
    const auto c = summary.step_c.find(s.n);
    os << s.n << ',' << s.method << ',' << s.min << ',' << s.q1 << ',' << s.median << ',' << s.q3 << ',' << s.max
       << ',' << s.mean << ',' << s.minimum_count << ',' << s.certified << ',' << summary.ties.at(s.n) << ','
       << (c != summary.step_c.end() ? std::to_string(c->second) : std::string("NA")) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------

std::pair<double, double> log_linear_fit(const std::vector<double>& v) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k] > 0.0 && std::isfinite(v[k])) pts.emplace_back(static_cast<double>(k), std::log(v[k]));
  }
  if (pts.size() < 2) return {0.0, 0.0};
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  const double slope = sxy / sxx;
  const double r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return {slope, r2};
}

std::string RecoverySummary::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "iter,f,step,dist,best_dist\n";
  for (std::size_t k = 0; k < trace.objective.size(); ++k) {
    os << k << ',' << trace.objective[k] << ',' << trace.steps[k] << ',' << trace.dist_ref[k] << ','
       << best_dist[k] << '\n';
  }
  return os.str();
}

RecoverySummary run_recovery_experiment(const RecoveryConfig& config) {
  const bool retrieval =
      config.kind == RobustKind::kSignRetrieval || config.kind == RobustKind::kAmplitudeRetrieval;
  if (retrieval && config.m < 4 * config.n) {
    throw Error(ErrorCode::kInvalidArgument, "recovery: retrieval kinds need m >= 4n");
  }
  if (config.iters < 0 || config.init_noise < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "recovery: need iters >= 0 and init_noise >= 0");
  }
  RecoverySummary out;
  switch (config.kind) {
    case RobustKind::kSignRetrieval:
      out.instance = gen_sign_retrieval(config.n, config.m, config.outlier_frac, config.seed);
      break;
    case RobustKind::kAmplitudeRetrieval:
      out.instance = gen_amplitude_retrieval(config.n, config.m, config.outlier_frac, config.seed);
      break;
    case RobustKind::kBlindDeconv:
      out.instance = gen_blind_deconv(config.n, config.n2 > 0 ? config.n2 : config.n, config.m, config.outlier_frac,
                                      config.seed);
      break;
    case RobustKind::kMatrixRecovery:
      out.instance = gen_matrix_recovery(config.n, config.rank, config.m, config.outlier_frac, config.seed);
      break;
    case RobustKind::kLogSumLS:
      out.instance = gen_logsum_ls(config.n, config.m, config.lambda, config.theta, config.seed);
      break;
  }
  const RobustInstance& inst = out.instance;
  CounterRng init(CounterRng(config.seed).split(7));
  const Vec x0 = inst.planted + config.init_noise * init.normal_vec(inst.dim());

  SolverOptions opts;
  opts.max_iter = config.iters;
  opts.thin = std::max(1, config.iters);
  opts.seed = config.seed;
  opts.distance = [&inst](const Vec& x) { return orbit_distance(inst, x); };
  out.trace = subgradient_method(robust_oracle(inst), x0, config.schedule, opts);

  double best = HUGE_VAL;
  for (double d : out.trace.dist_ref) {
    best = std::min(best, d);
    out.best_dist.push_back(best);
  }
  out.final_dist = out.trace.dist_ref.back();
  std::tie(out.slope, out.r2) = log_linear_fit(out.best_dist);

  if (!config.out_dir.empty()) {
    make_dir(config.out_dir);
    write_file(std::filesystem::path(config.out_dir) / "recovery.csv", out.to_csv());
  }
  return out;
}

}  // namespace nonsmooth
