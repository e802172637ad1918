#include <doctest.h>

#include <cmath>

#include "nonsmooth/rng.hpp"
#include "nonsmooth/solvers.hpp"
#include "support/sets.hpp"

using namespace nonsmooth;
using namespace nonsmooth::testing;

namespace {

// Least-squares slope of log(d_k) against k; -inf once d reaches 0.
double log_slope(const std::vector<double>& d) {
  if (std::find(d.begin(), d.end(), 0.0) != d.end()) return -HUGE_VAL;
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double x = static_cast<double>(k), y = std::log(d[k]);
    n += 1;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

SubgradOracle euclidean_norm() {
  return SubgradOracle{[](const Vec& x) { return x.norm(); },
                       [](const Vec& x) {
                         const double n = x.norm();
                         return n > 0.0 ? Vec(x / n) : Vec(Vec::Zero(x.size()));
                       }};
}

}  // namespace

TEST_CASE("step schedules") {
  CHECK(StepSchedule::constant(0.5).step(7, 0, Vec()) == 0.5);
  CHECK(StepSchedule::diminishing(2.0).step(3, 0, Vec()) == doctest::Approx(1.0));
  CHECK(StepSchedule::geometric(1.0, 0.5).step(3, 0, Vec()) == doctest::Approx(0.125));
  CHECK(StepSchedule::polyak(1.0).step(0, 3.0, p2(1, 1)) == doctest::Approx(1.0));
  CHECK(StepSchedule::polyak(1.0, 0.5).step(0, 3.0, p2(1, 1)) == doctest::Approx(1.25));

  const StepSchedule g = StepSchedule::parse("geometric:0.1,0.98");
  CHECK(g.kind == StepKind::kGeometric);
  CHECK(g.p2 == 0.98);
  CHECK(StepSchedule::parse(g.to_string()).p1 == g.p1);
  CHECK(StepSchedule::parse("polyak:0").p2 == 0.0);
  for (const char* bad : {"geometric:1,1.5", "constant:-1", "diminishing", "fancy:1", "constant:1,2", "constant:x"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(StepSchedule::parse(bad), Error);
  }
}

TEST_CASE("a subgradient step need not descend") {
  const Expr f = abs(var(0, 2)) + 2.0 * abs(var(1, 2));
  // s = (1, 2) is a subgradient at (1, 0).
  CHECK(clarke(f, p2(1, 0)).contains(p2(1, 2)));
  SubgradOracle oracle = oracle_from_expr(f);
  oracle.subgradient = [](const Vec&) { return p2(1, 2); };
  SolverOptions opts;
  opts.max_iter = 1;
  const SolverTrace t = subgradient_method(oracle, p2(1, 0), StepSchedule::constant(0.1), opts);
  REQUIRE(t.iterates.size() == 2);
  CHECK((t.iterates[1] - p2(0.9, -0.2)).norm() < 1e-15);
  CHECK(t.objective[0] == 1.0);
  CHECK(t.objective[1] == doctest::Approx(1.3));
  CHECK(t.best_objective == 1.0);
  CHECK(t.termination == Termination::kMaxIter);
}

TEST_CASE("subgradient method examples") {
  SolverOptions opts;
  opts.max_iter = 10000;
  opts.thin = 100;
  const SolverTrace a = subgradient_method(oracle_from_expr(abs(var(0))), p1(1), StepSchedule::diminishing(1.0), opts);
  CHECK(a.best_objective <= 1e-2);
  CHECK(a.objective.size() == a.steps.size());
  CHECK(a.iterate_index.back() == a.iterations());

  opts.max_iter = 60;
  const SolverTrace b = subgradient_method(oracle_from_expr(sq(var(0))), p1(1), StepSchedule::constant(0.25), opts);
  CHECK(std::abs(b.iterates.back()[0]) <= 1e-6);

  // target and zero-subgradient stops
  opts.target = 1e-3;
  const SolverTrace c = subgradient_method(oracle_from_expr(sq(var(0))), p1(1), StepSchedule::constant(0.25), opts);
  CHECK(c.termination == Termination::kTarget);
  CHECK(c.iterations() == 5);
  opts.target.reset();
  opts.grad_tol = 1e-12;
  const SolverTrace d = subgradient_method(oracle_from_expr(abs(var(0))), p1(0), StepSchedule::constant(1), opts);
  CHECK(d.termination == Termination::kZeroSubgradient);
  CHECK(d.iterations() == 0);
}

TEST_CASE("trace CSV") {
  SolverOptions opts;
  opts.max_iter = 2;
  opts.distance = [](const Vec& x) { return std::abs(x[0]); };
  const SolverTrace t = subgradient_method(oracle_from_expr(abs(var(0))), p1(1), StepSchedule::constant(0.25), opts);
  const std::string csv = t.to_csv();
  CHECK(csv.rfind("iter,f,step,dist_ref,wall_ms\n0,1,0.25,1,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("projections") {
  const HPolyhedron unit_box = HPolyhedron::box(Vec::Zero(2), Vec::Ones(2));
  CHECK(project(unit_box, p2(2, -3)) == p2(1, 0));
  const Ball ball{p2(1, 1), 2.0};
  CHECK((project(ball, p2(1, 5)) - p2(1, 3)).norm() < 1e-15);
  CHECK(project(ball, p2(1, 2)) == p2(1, 2));

  // Triangle x >= 0, y >= 0, x + y <= 1: compare with the exact projection.
  HPolyhedron tri(2);
  tri.add(p2(-1, 0), 0);
  tri.add(p2(0, -1), 0);
  tri.add(p2(1, 1), 1);
  auto exact = [](const Vec& z) {
    const std::vector<std::pair<Vec, Vec>> edges{{p2(0, 0), p2(1, 0)}, {p2(1, 0), p2(0, 1)}, {p2(0, 1), p2(0, 0)}};
    if (z[0] >= 0 && z[1] >= 0 && z[0] + z[1] <= 1) return Vec(z);
    Vec best;
    double bd = 1e300;
    for (const auto& [a, b] : edges) {
      const double t = std::clamp((z - a).dot(b - a) / (b - a).squaredNorm(), 0.0, 1.0);
      const Vec p = a + t * (b - a);
      if ((z - p).norm() < bd) {
        bd = (z - p).norm();
        best = p;
      }
    }
    return best;
  };
  CounterRng rng(12);
  for (int k = 0; k < 200; ++k) {
    const Vec z = rng.uniform_vec(2, -3, 3);
    const Vec p = project(tri, z);
    CHECK(contains(tri, p, 1e-9));
    CHECK((p - exact(z)).norm() <= 1e-8);
  }
  CHECK_THROWS_AS(project(tri, p2(5, 7), 1), Error);
}

TEST_CASE("projected subgradient") {
  SolverOptions opts;
  opts.max_iter = 500;
  const HPolyhedron unit = HPolyhedron::box(Vec::Zero(1), Vec::Ones(1));
  const SolverTrace a = projected_subgradient(oracle_from_expr(var(0)), unit, p1(0.7), StepSchedule::diminishing(1), opts);
  CHECK(a.best_objective == 0.0);
  CHECK(a.best_point[0] == 0.0);

  const Ball ball{Vec::Zero(2), 1.0};
  const SolverTrace b = projected_subgradient(oracle_from_expr(abs(var(0, 2)) + abs(var(1, 2))), ball, p2(1, 0),
                                              StepSchedule::diminishing(1), opts);
  CHECK(b.best_objective <= 1e-2);

  // Every iterate is feasible, here for a polyhedron that needs Dykstra.
  HPolyhedron tri(2);
  tri.add(p2(-1, 0), 0);
  tri.add(p2(0, -1), 0);
  tri.add(p2(1, 1), 1);
  const Expr f = abs(var(0, 2) - constant(2, 2)) + abs(var(1, 2) + constant(1, 2));
  const SolverTrace c = projected_subgradient(oracle_from_expr(f), tri, p2(3, 3), StepSchedule::diminishing(0.5), opts);
  for (const auto& x : c.iterates) CHECK(contains(tri, x, 1e-9));
  CHECK(c.best_objective == doctest::Approx(2.0).epsilon(1e-2));
}

TEST_CASE("geometric steps converge linearly on a sharp function") {
  SolverOptions opts;
  opts.max_iter = 200;
  opts.distance = [](const Vec& x) { return x.norm(); };
  const Vec x0 = Vec::Constant(3, 1.0 / std::sqrt(3.0));
  const SolverTrace t = subgradient_method(euclidean_norm(), x0, StepSchedule::geometric(1.0, 0.9), opts);
  CHECK(log_slope(t.dist_ref) <= std::log(0.95));
  // From a start the first step does not hit exactly.
  const SolverTrace u = subgradient_method(euclidean_norm(), 1.7 * x0, StepSchedule::geometric(1.0, 0.9), opts);
  CHECK(u.iterations() == 200);
  CHECK(log_slope(u.dist_ref) <= std::log(0.95));
}

TEST_CASE("ridge least squares") {
  const Vec a = ridge_ls_solve(Mat::Identity(2, 2), p2(1, 1), 1e-9, Vec::Zero(2));
  CHECK((a - p2(1, 1)).norm() < 1e-8);
  CHECK(ridge_ls_solve(Mat::Zero(3, 2), Vec::Constant(3, 4.0), 1.0, p2(0.3, -2)) == p2(0.3, -2));
  CHECK_THROWS_AS(ridge_ls_solve(Mat::Identity(2, 2), p2(1, 1), 0.0, Vec::Zero(2)), Error);

  CounterRng rng(5);
  const Mat x = Mat::NullaryExpr(2, 2, [&]() { return rng.normal(); });
  const Vec y = rng.normal_vec(2);
  const Vec anchor = rng.normal_vec(2);
  const double c = 0.5;
  const Vec w = ridge_ls_solve(x, y, c, anchor);
  auto obj = [&](const Vec& v) { return 0.25 * (y - x * v).squaredNorm() + 0.5 * c * (v - anchor).squaredNorm(); };
  // residual of the normal equations
  CHECK((x.transpose() * (x * w - y) / 2.0 + c * (w - anchor)).norm() <= 1e-10);
  // grid search, refined three times
  Vec best = Vec::Zero(2);
  double h = 1.0;
  for (int level = 0; level < 5; ++level) {
    Vec center = best;
    double bv = obj(best);
    for (int i = -40; i <= 40; ++i) {
      for (int j = -40; j <= 40; ++j) {
        const Vec v = center + h * 0.1 * p2(i, j);
        if (obj(v) < bv) {
          bv = obj(v);
          best = v;
        }
      }
    }
    h *= 0.05;
  }
  CHECK((best - w).lpNorm<Eigen::Infinity>() <= 1e-4);
}

// ---------------------------------------------------------------------------

TEST_CASE("pseudo-subgradient is the gradient at smooth points") {
  const LsparDataset data = gen_lspar_data(12, 0.1, 9);
  CounterRng rng(3);
  const Mat w = Mat::NullaryExpr(4, 2, [&]() { return rng.normal(); });
  const Mat g = lspar_pseudo_subgradient(data, w);
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      Mat e = Mat::Zero(4, 2);
      e(i, j) = 1e-6;
      const double fd = (lspar_objective(data, w + e) - lspar_objective(data, w - e)) / 2e-6;
      CHECK(g(i, j) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
  // Ties go to the smallest index.
  LsparDataset one;
  one.x = p2(1, 1).transpose();
  one.y = Vec::Constant(1, 0.0);
  const Mat tie = Mat::Ones(4, 2);
  const Mat gt = lspar_pseudo_subgradient(one, tie);
  CHECK(gt.row(0).norm() > 0.0);
  CHECK(gt.bottomRows(3).norm() == 0.0);
}

TEST_CASE("MM selections are enumerated best-first") {
  const LsparDataset data = gen_lspar_data(30, 0.1, 2);
  CounterRng rng(6);
  const Mat w = Mat::NullaryExpr(4, 2, [&]() { return rng.normal(); });
  const auto sels = mm_selections(data, w, 0.5, 64);
  REQUIRE(!sels.empty());
  CHECK(sels.size() <= 64);
  const Mat scores = data.x * w.transpose();
  auto cost = [&](const std::vector<int>& sel) {
    double total = 0.0;
    for (Eigen::Index s = 0; s < data.size(); ++s) total += scores.row(s).maxCoeff() - scores(s, sel[s]);
    return total;
  };
  CHECK(cost(sels[0]) == 0.0);
  for (std::size_t i = 1; i < sels.size(); ++i) {
    CHECK(cost(sels[i]) >= cost(sels[i - 1]) - 1e-12);
    CHECK(sels[i] != sels[i - 1]);
  }
  CHECK(mm_selections(data, w, 0.0, 64).size() == 1);
}

TEST_CASE("MM on noiseless data starting at the truth") {
  const LsparDataset data = gen_lspar_data(10, 0.0, 1);
  const MmResult r = mm_lspar(data, lspar_true_weights());
  CHECK(r.certificate);
  CHECK(r.trace.termination == Termination::kStationary);
  CHECK(r.steps.size() == 1);
  CHECK(r.trace.final_objective() == 0.0);
  CHECK(r.w == lspar_true_weights());
}

TEST_CASE("MM with a single piece is proximal least squares") {
  const LsparDataset data = gen_lspar_data(15, 0.2, 8);
  const Mat w0 = Mat::Zero(1, 2);
  const MmResult r = mm_lspar(data, w0);
  for (const auto& s : r.steps) CHECK(s.candidates == 1);
  const Vec ls = (data.x.transpose() * data.x).ldlt().solve(data.x.transpose() * data.y);
  CHECK((r.w.row(0).transpose() - ls).norm() <= 1e-6);
  // The fixed point of the ridge step is the least-squares solution.
  CHECK((ridge_ls_solve(data.x, data.y, 1.0, ls) - ls).norm() <= 1e-10);
  CHECK(r.certificate);
}

TEST_CASE("MM beats the pseudo-subgradient method on a seeded instance") {
  const LsparDataset data = gen_lspar_data(10, 0.1, 42);
  CounterRng rng(CounterRng(42).split(7));
  const Mat w0 = Mat::NullaryExpr(4, 2, [&]() { return rng.normal(); });
  const MmResult mm = mm_lspar(data, w0);
  const SolverTrace sg = pseudo_subgradient_lspar(data, w0, StepSchedule::diminishing(1.0), 2000);
  CHECK(mm.trace.final_objective() <= sg.final_objective());
}

TEST_CASE("MM certificates and sufficient decrease across seeds") {
  const MmParams params;
  int certified = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const LsparDataset data = gen_lspar_data(seed % 2 ? 10 : 50, 0.1, seed);
    CounterRng rng(CounterRng(seed).split(99));
    const Mat w0 = Mat::NullaryExpr(4, 2, [&]() { return rng.normal(); });
    const MmResult r = mm_lspar(data, w0, params);
    // Trace objectives match the recorded iterates.
    REQUIRE(r.trace.iterates.size() == r.trace.objective.size());
    for (std::size_t k = 0; k < r.trace.iterates.size(); ++k) {
      CHECK(lspar_objective(data, unflatten(r.trace.iterates[k], 4, 2)) == r.trace.objective[k]);
    }
    for (const auto& s : r.steps) {
      if (s.accepted) CHECK(s.f_before - s.f_after >= params.eta * s.step_sq);
    }
    if (r.certificate) {
      ++certified;
      CHECK(lspar_d_stationarity_check(data, r.w).stationary);
    }
    CHECK(r.trace.final_objective() <= r.trace.objective.front());
  }
  CHECK(certified >= 36);
}
