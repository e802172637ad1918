#include "nonsmooth/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

namespace nonsmooth {

namespace {

[[noreturn]] void bad_schedule(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, "step schedule: " + what);
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) bad_schedule(std::string(name) + " must be positive");
}

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

StepSchedule StepSchedule::constant(double alpha) {
  require_positive(alpha, "alpha");
  return {StepKind::kConstant, alpha, 0.0};
}

StepSchedule StepSchedule::diminishing(double c) {
  require_positive(c, "c");
  return {StepKind::kDiminishing, c, 0.0};
}

StepSchedule StepSchedule::geometric(double alpha0, double q) {
  require_positive(alpha0, "alpha0");
  if (!(q > 0.0 && q < 1.0)) bad_schedule("q must lie in (0, 1)");
  return {StepKind::kGeometric, alpha0, q};
}

StepSchedule StepSchedule::polyak(double f_star, double margin) {
  if (!std::isfinite(f_star)) bad_schedule("f* must be finite");
  if (!(margin >= 0.0)) bad_schedule("margin must be non-negative");
  return {StepKind::kPolyak, f_star, margin};
}

StepSchedule StepSchedule::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) bad_schedule("expected kind:params in '" + text + "'");
  const std::string kind = text.substr(0, colon);
  std::vector<double> params;
  std::stringstream ss(text.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      params.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      bad_schedule("bad number '" + item + "'");
    }
  }
  auto want = [&](std::size_t lo, std::size_t hi) {
    if (params.size() < lo || params.size() > hi) bad_schedule("wrong parameter count for " + kind);
  };
  if (kind == "constant") {
    want(1, 1);
    return constant(params[0]);
  }
  if (kind == "diminishing") {
    want(1, 1);
    return diminishing(params[0]);
  }
  if (kind == "geometric") {
    want(2, 2);
    return geometric(params[0], params[1]);
  }
  if (kind == "polyak") {
    want(1, 2);
    return polyak(params[0], params.size() == 2 ? params[1] : 0.0);
  }
  bad_schedule("unknown kind '" + kind + "'");
}

std::string StepSchedule::to_string() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case StepKind::kConstant: os << "constant:" << p1; break;
    case StepKind::kDiminishing: os << "diminishing:" << p1; break;
    case StepKind::kGeometric: os << "geometric:" << p1 << "," << p2; break;
    case StepKind::kPolyak: os << "polyak:" << p1 << "," << p2; break;
  }
  return os.str();
}

double StepSchedule::step(int k, double f, const Vec& s) const {
  switch (kind) {
    case StepKind::kConstant: return p1;
    case StepKind::kDiminishing: return p1 / std::sqrt(static_cast<double>(k) + 1.0);
    case StepKind::kGeometric: return p1 * std::pow(p2, k);
    case StepKind::kPolyak: {
      const double n2 = s.squaredNorm();
      return n2 > 0.0 ? std::max(0.0, f - p1 + p2) / n2 : 0.0;
    }
  }
  return 0.0;
}

SubgradOracle oracle_from_expr(const Expr& e) {
  return SubgradOracle{[e](const Vec& x) { return eval(e, x); },
                       [e](const Vec& x) { return selection_gradient(e, x); }};
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::kMaxIter: return "MAX_ITER";
    case Termination::kTarget: return "TARGET";
    case Termination::kZeroSubgradient: return "ZERO_SUBGRADIENT";
    case Termination::kStationary: return "STATIONARY";
  }
  return "?";
}

std::string SolverTrace::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "iter,f,step,dist_ref,wall_ms\n";
  for (std::size_t k = 0; k < objective.size(); ++k) {
    os << k << ',' << objective[k] << ',' << steps[k] << ',';
    if (k < dist_ref.size()) os << dist_ref[k];
    os << ',' << wall_ms[k] << '\n';
  }
  return os.str();
}

namespace {

// Shared loop of the two subgradient methods; `proj` is identity when null.
SolverTrace run_subgradient(const SubgradOracle& oracle, Vec x, const StepSchedule& schedule,
                            const SolverOptions& options, const std::function<Vec(const Vec&)>& proj) {
  if (options.max_iter < 0) throw Error(ErrorCode::kInvalidArgument, "subgradient: max_iter must be >= 0");
  const auto t0 = Clock::now();
  const int thin = std::max(1, options.thin);
  SolverTrace tr;
  tr.seed = options.seed;
  tr.best_objective = std::numeric_limits<double>::infinity();
  for (int k = 0;; ++k) {
    const double f = oracle.value(x);
    tr.objective.push_back(f);
    if (options.distance) tr.dist_ref.push_back(options.distance(x));
    tr.wall_ms.push_back(ms_since(t0));
    if (f < tr.best_objective) {
      tr.best_objective = f;
      tr.best_point = x;
    }
    auto keep = [&] {
      tr.iterates.push_back(x);
      tr.iterate_index.push_back(k);
    };
    auto finish = [&](Termination why) {
      tr.steps.push_back(0.0);
      if (tr.iterate_index.empty() || tr.iterate_index.back() != k) keep();
      tr.termination = why;
      return tr;
    };
    if (k % thin == 0) keep();
    if (options.target && f <= *options.target) return finish(Termination::kTarget);
    if (k == options.max_iter) return finish(Termination::kMaxIter);
    const Vec s = oracle.subgradient(x);
    require_dim(s.size(), x.size(), "subgradient oracle");
    if (s.norm() <= options.grad_tol) return finish(Termination::kZeroSubgradient);
    const double alpha = schedule.step(k, f, s);
    tr.steps.push_back(alpha);
    x -= alpha * s;
    if (proj) x = proj(x);
  }
}

bool axis_aligned(const HPolyhedron& h) {
  for (const auto& hs : h.halfspaces) {
    Eigen::Index nz = 0;
    for (Eigen::Index i = 0; i < hs.normal.size(); ++i) nz += hs.normal[i] != 0.0;
    if (nz > 1) return false;
  }
  return true;
}

Vec project_box(const HPolyhedron& h, const Vec& x) {
  Vec lo = Vec::Constant(h.dim, -std::numeric_limits<double>::infinity());
  Vec hi = Vec::Constant(h.dim, std::numeric_limits<double>::infinity());
  for (const auto& hs : h.halfspaces) {
    for (Eigen::Index i = 0; i < h.dim; ++i) {
      const double a = hs.normal[i];
      if (a > 0.0) hi[i] = std::min(hi[i], hs.offset / a);
      if (a < 0.0) lo[i] = std::max(lo[i], hs.offset / a);
    }
    if (hs.normal.isZero() && hs.offset < 0.0) throw Error(ErrorCode::kEmptySet, "project: empty polyhedron");
  }
  if ((lo.array() > hi.array()).any()) throw Error(ErrorCode::kEmptySet, "project: empty box");
  return x.cwiseMax(lo).cwiseMin(hi);
}

Vec project_halfspace(const Halfspace& h, const Vec& x) {
  const double excess = h.normal.dot(x) - h.offset;
  if (excess <= 0.0) return x;
  return x - (excess / h.normal.squaredNorm()) * h.normal;
}

Vec dykstra(const HPolyhedron& h, const Vec& x0, int max_iter, double tol) {
  const std::size_t m = h.halfspaces.size();
  std::vector<Vec> corr(m, Vec::Zero(x0.size()));
  Vec x = x0;
  for (int it = 0; it < max_iter; ++it) {
    double moved = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const Vec y = project_halfspace(h.halfspaces[i], x + corr[i]);
      corr[i] = x + corr[i] - y;
      moved = std::max(moved, (y - x).lpNorm<Eigen::Infinity>());
      x = y;
    }
    if (moved <= tol && contains(h, x, 1e-9)) return x;
  }
  throw Error(ErrorCode::kProjectionNotConverged,
              "project: alternating projections did not converge in " + std::to_string(max_iter) + " sweeps");
}

}  // namespace

Vec project(const ConvexSetSpec& c, const Vec& x, int max_iter, double tol) {
  require_dim(x.size(), spec_dim(c), "project");
  if (const auto* b = std::get_if<Ball>(&c)) {
    const Vec d = x - b->center;
    const double n = d.norm();
    return n <= b->radius ? x : Vec(b->center + d * (b->radius / n));
  }
  const auto& h = std::get<HPolyhedron>(c);
  if (axis_aligned(h)) return project_box(h, x);
  return dykstra(h, x, max_iter, tol);
}

SolverTrace subgradient_method(const SubgradOracle& oracle, const Vec& x0, const StepSchedule& schedule,
                               const SolverOptions& options) {
  return run_subgradient(oracle, x0, schedule, options, nullptr);
}

SolverTrace projected_subgradient(const SubgradOracle& oracle, const ConvexSetSpec& c, const Vec& x0,
                                  const StepSchedule& schedule, const SolverOptions& options) {
  auto proj = [&c](const Vec& x) { return project(c, x); };
  return run_subgradient(oracle, proj(x0), schedule, options, proj);
}

Vec ridge_ls_solve(const Mat& x, const Vec& y, double c, const Vec& anchor, double n_normalizer) {
  require_dim(y.size(), x.rows(), "ridge_ls_solve");
  require_dim(anchor.size(), x.cols(), "ridge_ls_solve");
  if (!(c > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ridge_ls_solve: c must be positive");
  const double n = n_normalizer > 0.0 ? n_normalizer : static_cast<double>(std::max<Eigen::Index>(1, x.rows()));
  Mat lhs = x.transpose() * x / n;
  lhs.diagonal().array() += c;
  const Vec rhs = x.transpose() * y / n + c * anchor;
  return lhs.llt().solve(rhs);
}

// ---------------------------------------------------------------------------

Vec flatten(const Mat& w) {
  Vec v(w.size());
  for (Eigen::Index i = 0; i < w.rows(); ++i) v.segment(i * w.cols(), w.cols()) = w.row(i).transpose();
  return v;
}

Mat unflatten(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
  require_dim(v.size(), rows * cols, "unflatten");
  Mat w(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) w.row(i) = v.segment(i * cols, cols).transpose();
  return w;
}

std::vector<std::vector<int>> mm_selections(const LsparDataset& data, const Mat& w, double eps, std::size_t cap) {
  const Mat scores = data.x * w.transpose();
  const Eigen::Index n = data.size();
  std::vector<int> base(static_cast<std::size_t>(n));
  // Candidate pieces of ambiguous samples, sorted by margin.
  std::vector<Eigen::Index> ambiguous;
  std::vector<std::vector<std::pair<double, int>>> options;
  for (Eigen::Index s = 0; s < n; ++s) {
    Eigen::Index arg = 0;
    const double best = scores.row(s).maxCoeff(&arg);
    base[s] = static_cast<int>(arg);
    std::vector<std::pair<double, int>> opts;
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      const double gap = best - scores(s, i);
      if (gap <= eps) opts.emplace_back(gap, static_cast<int>(i));
    }
    std::stable_sort(opts.begin(), opts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    if (opts.size() > 1) {
      ambiguous.push_back(s);
      options.push_back(std::move(opts));
    }
  }
  std::vector<std::vector<int>> out;
  if (cap == 0) return out;
  // Best-first over index vectors into `options`, keyed by total margin.
  using State = std::pair<double, std::vector<std::size_t>>;
  auto cmp = [](const State& a, const State& b) { return a.first != b.first ? a.first > b.first : a.second > b.second; };
  std::priority_queue<State, std::vector<State>, decltype(cmp)> queue(cmp);
  std::set<std::vector<std::size_t>> seen;
  const std::vector<std::size_t> start(ambiguous.size(), 0);
  queue.push({0.0, start});
  seen.insert(start);
  while (!queue.empty() && out.size() < cap) {
    const State cur = queue.top();
    queue.pop();
    std::vector<int> sel = base;
    for (std::size_t a = 0; a < ambiguous.size(); ++a) sel[ambiguous[a]] = options[a][cur.second[a]].second;
    out.push_back(std::move(sel));
    for (std::size_t a = 0; a < ambiguous.size(); ++a) {
      if (cur.second[a] + 1 >= options[a].size()) continue;
      std::vector<std::size_t> next = cur.second;
      ++next[a];
      if (!seen.insert(next).second) continue;
      const double cost = cur.first - options[a][cur.second[a]].first + options[a][next[a]].first;
      queue.push({cost, std::move(next)});
    }
  }
  return out;
}

namespace {

// Per-piece sufficient statistics of a selection, solved as k ridge problems.
Mat solve_selection(const LsparDataset& data, const Mat& w, const std::vector<int>& sel, double c) {
  const Eigen::Index k = w.rows(), n = w.cols();
  const double inv_n = 1.0 / static_cast<double>(data.size());
  std::vector<Mat> gram(static_cast<std::size_t>(k), Mat::Zero(n, n));
  std::vector<Vec> xty(static_cast<std::size_t>(k), Vec::Zero(n));
  for (Eigen::Index s = 0; s < data.size(); ++s) {
    const auto i = static_cast<std::size_t>(sel[s]);
    gram[i].noalias() += data.x.row(s).transpose() * data.x.row(s);
    xty[i] += data.y[s] * data.x.row(s).transpose();
  }
  Mat out(k, n);
  for (Eigen::Index i = 0; i < k; ++i) {
    // Same normal equations as ridge_ls_solve on the samples assigned to i.
    Mat lhs = gram[i] * inv_n;
    lhs.diagonal().array() += c;
    const Vec rhs = xty[i] * inv_n + c * w.row(i).transpose();
    out.row(i) = lhs.llt().solve(rhs).transpose();
  }
  return out;
}

// min 1/2 v^T H v - b^T v subject to a_r^T v >= 0 for the rows of `a`, by
// enumerating active sets; few rows only.
Vec small_qp(const Mat& h, const Vec& b, const Mat& a) {
  const Eigen::Index nv = h.rows(), m = a.rows();
  Vec fallback;
  double fallback_val = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::vector<Eigen::Index> act;
    for (Eigen::Index r = 0; r < m; ++r) {
      if (mask & (1u << r)) act.push_back(r);
    }
    const Eigen::Index na = static_cast<Eigen::Index>(act.size());
    Mat kkt = Mat::Zero(nv + na, nv + na);
    kkt.topLeftCorner(nv, nv) = h;
    Vec rhs = Vec::Zero(nv + na);
    rhs.head(nv) = b;
    for (Eigen::Index q = 0; q < na; ++q) {
      kkt.block(0, nv + q, nv, 1) = -a.row(act[q]).transpose();
      kkt.block(nv + q, 0, 1, nv) = a.row(act[q]);
    }
    const Vec sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    const Vec v = sol.head(nv);
    if (!v.allFinite() || (m > 0 && (a * v).minCoeff() < -1e-12)) continue;
    const double val = 0.5 * v.dot(h * v) - b.dot(v);
    if (na == 0 || sol.tail(na).minCoeff() >= -1e-12) return v;  // KKT point
    if (val < fallback_val) {
      fallback_val = val;
      fallback = v;
    }
  }
  return fallback;
}

// Candidates for samples with positive residual sitting near a kink between
// their two leading pieces: for each owner assignment, the ridge objective
// restricted to the region where the owner stays on top. Lets iterates land
// on kinks and leave them on the descending side.
std::vector<Mat> region_candidates(const LsparDataset& data, const Mat& w, const std::vector<int>& sel, double c,
                                   double eps, int max_ties) {
  const Eigen::Index k = w.rows(), n = w.cols(), nv = k * n;
  const Mat scores = data.x * w.transpose();
  struct Tie {
    double gap;
    Eigen::Index s, i, j;
  };
  std::vector<Tie> ties;
  for (Eigen::Index s = 0; s < data.size(); ++s) {
    Eigen::Index i = 0;
    const double best = scores.row(s).maxCoeff(&i);
    if (best - data.y[s] <= 0.0) continue;
    Eigen::Index j = -1;
    for (Eigen::Index l = 0; l < k; ++l) {
      if (l != i && best - scores(s, l) <= eps && (j < 0 || scores(s, l) > scores(s, j))) j = l;
    }
    if (j >= 0) ties.push_back({best - scores(s, j), s, i, j});
  }
  if (ties.empty()) return {};
  std::stable_sort(ties.begin(), ties.end(), [](const Tie& x, const Tie& y) { return x.gap < y.gap; });
  if (static_cast<int>(ties.size()) > max_ties) ties.resize(static_cast<std::size_t>(max_ties));
  const Eigen::Index m = static_cast<Eigen::Index>(ties.size());
  const double inv_n = 1.0 / static_cast<double>(data.size());

  std::vector<Mat> out;
  for (std::uint32_t owners = 0; owners < (1u << m); ++owners) {
    std::vector<int> assign = sel;
    Mat a = Mat::Zero(m, nv);
    for (Eigen::Index t = 0; t < m; ++t) {
      const bool flip = owners & (1u << t);
      const Eigen::Index top = flip ? ties[t].j : ties[t].i, other = flip ? ties[t].i : ties[t].j;
      assign[ties[t].s] = static_cast<int>(top);
      a.row(t).segment(top * n, n) = data.x.row(ties[t].s);
      a.row(t).segment(other * n, n) = -data.x.row(ties[t].s);
    }
    Mat h = Mat::Zero(nv, nv);
    Vec b = c * flatten(w);
    for (Eigen::Index s = 0; s < data.size(); ++s) {
      const Eigen::Index i = assign[s];
      h.block(i * n, i * n, n, n).noalias() += inv_n * data.x.row(s).transpose() * data.x.row(s);
      b.segment(i * n, n) += inv_n * data.y[s] * data.x.row(s).transpose();
    }
    h.diagonal().array() += c;
    const Vec v = small_qp(h, b, a);
    if (v.size() == nv) out.push_back(unflatten(v, k, n));
  }
  return out;
}

}  // namespace

MmResult mm_lspar(const LsparDataset& data, const Mat& w0, const MmParams& params) {
  require_dim(w0.cols(), data.features(), "mm_lspar");
  if (w0.size() > 16) throw Error(ErrorCode::kDimensionCapExceeded, "mm_lspar: k n must be at most 16");
  if (!(params.c0 > 0.0) || !(params.shrink > 0.0 && params.shrink < 1.0) || params.max_outer < 0) {
    throw Error(ErrorCode::kInvalidArgument, "mm_lspar: invalid parameters");
  }
  const auto t0 = Clock::now();
  MmResult res;
  Mat w = w0;
  double eps = params.eps0 >= 0.0 ? params.eps0 : 0.1 * data.y.cwiseAbs().mean();
  double c = params.c0;
  double f = lspar_objective(data, w);
  SolverTrace& tr = res.trace;
  tr.seed = data.seed;
  tr.best_objective = f;
  tr.best_point = flatten(w);
  auto record = [&](double step) {
    tr.objective.push_back(f);
    tr.steps.push_back(step);
    tr.wall_ms.push_back(ms_since(t0));
    tr.iterates.push_back(flatten(w));
    tr.iterate_index.push_back(static_cast<int>(tr.objective.size()) - 1);
    if (f < tr.best_objective) {
      tr.best_objective = f;
      tr.best_point = flatten(w);
    }
  };
  auto run_check = [&]() {
    try {
      res.check = lspar_d_stationarity_check(data, w, params.check_tol, params.activity_tol);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTooManyTies) throw;
      res.check.reset();
    }
    return res.check && res.check->stationary;
  };

  record(0.0);
  tr.termination = Termination::kMaxIter;
  bool done = false;
  for (int outer = 0; outer < params.max_outer && !done; ++outer) {
    MmStep step;
    step.f_before = f;
    step.eps = eps;
    step.c = c;
    const auto sels = mm_selections(data, w, eps, params.selection_cap);
    step.candidates = sels.size();
    Mat best_w = w;
    double best_f = std::numeric_limits<double>::infinity();
    for (const auto& sel : sels) {
      const Mat cand = solve_selection(data, w, sel, c);
      const double fc = lspar_objective(data, cand);
      if (fc < best_f) {
        best_f = fc;
        best_w = cand;
      }
    }
    if (!sels.empty()) {
      for (const Mat& cand : region_candidates(data, w, sels.front(), c, std::max(eps, params.tie_tol),
                                               params.max_region_ties)) {
        ++step.candidates;
        const double fc = lspar_objective(data, cand);
        if (fc < best_f) {
          best_f = fc;
          best_w = cand;
        }
      }
    }
    step.f_after = best_f;
    step.step_sq = (best_w - w).squaredNorm();
    step.accepted = std::sqrt(step.step_sq) > params.min_step && f - best_f >= params.eta * step.step_sq;
    res.steps.push_back(step);
    if (step.accepted) {
      w = best_w;
      f = best_f;
      c = std::max(params.c_min, params.shrink * c);
      tr.steps.back() = std::sqrt(step.step_sq);
      record(0.0);
      continue;
    }
    if (run_check()) {
      tr.termination = Termination::kStationary;
      res.certificate = true;
      done = true;
      break;
    }
    eps *= params.shrink;
    c /= params.shrink;
  }
  if (!res.certificate) res.certificate = run_check();
  res.w = w;
  return res;
}

SolverTrace pseudo_subgradient_lspar(const LsparDataset& data, const Mat& w0, const StepSchedule& schedule,
                                     int max_iter) {
  const Eigen::Index k = w0.rows(), n = w0.cols();
  SubgradOracle oracle{[&](const Vec& v) { return lspar_objective(data, unflatten(v, k, n)); },
                       [&](const Vec& v) { return flatten(lspar_pseudo_subgradient(data, unflatten(v, k, n))); }};
  SolverOptions opts;
  opts.max_iter = max_iter;
  opts.thin = std::max(1, max_iter);
  opts.seed = data.seed;
  return subgradient_method(oracle, flatten(w0), schedule, opts);
}

}  // namespace nonsmooth
