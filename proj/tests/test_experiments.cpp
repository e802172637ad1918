#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nonsmooth/experiments.hpp"
#include "nonsmooth/rng.hpp"
#include "support/sets.hpp"

using namespace nonsmooth;
using namespace nonsmooth::testing;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("nonsmooth_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

double central_dd(const RobustInstance& inst, const Vec& x, const Vec& d, double h = 1e-6) {
  return (robust_objective(inst, x + h * d) - robust_objective(inst, x - h * d)) / (2.0 * h);
}

// Smallest |residual| of the kinks of each kind; large means x is far from
// every kink and central differences are valid.
double kink_margin(const RobustInstance& inst, const Vec& x) {
  switch (inst.kind) {
    case RobustKind::kSignRetrieval:
      return ((inst.a * x).array().square() - inst.b.array()).abs().minCoeff();
    case RobustKind::kAmplitudeRetrieval:
      return std::min(((inst.a * x).array().abs() - inst.b.array()).abs().minCoeff(),
                      (inst.a * x).cwiseAbs().minCoeff());
    case RobustKind::kBlindDeconv:
      return ((inst.a * x.head(inst.n)).cwiseProduct(inst.c * x.tail(inst.n2)) - inst.b).cwiseAbs().minCoeff();
    case RobustKind::kLogSumLS:
      return x.cwiseAbs().minCoeff();
    case RobustKind::kMatrixRecovery: {
      const Mat u = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          x.data(), inst.n, inst.rank);
      double lo = HUGE_VAL;
      for (Eigen::Index i = 0; i < inst.measurements(); ++i) {
        lo = std::min(lo, std::abs(inst.sensing[static_cast<std::size_t>(i)].cwiseProduct(u * u.transpose()).sum() -
                                   inst.b[i]));
      }
      return lo;
    }
  }
  return 0.0;
}

}  // namespace

TEST_CASE("LSPAR data generator") {
  const LsparDataset clean = gen_lspar_data(10, 0.0, 1);
  CHECK((lspar_predict(clean, lspar_true_weights()) - clean.y).cwiseAbs().maxCoeff() == 0.0);
  CHECK(clean.x.cwiseAbs().maxCoeff() <= 1.0);

  const LsparDataset a = gen_lspar_data(10, 0.1, 42), b = gen_lspar_data(10, 0.1, 42);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(gen_lspar_data(10, 0.1, 43).y != a.y);

  const LsparDataset big = gen_lspar_data(100, 0.1, 7);
  const Vec r = big.y - lspar_predict(big, lspar_true_weights());
  const double mean = r.mean();
  const double sd = std::sqrt((r.array() - mean).square().sum() / 99.0);
  CHECK(sd >= 0.07);
  CHECK(sd <= 0.13);
  CHECK_THROWS_AS(gen_lspar_data(0, 0.1, 1), Error);
}

TEST_CASE("robust oracle examples") {
  RobustInstance sr;
  sr.kind = RobustKind::kSignRetrieval;
  sr.n = 1;
  sr.a = Mat::Ones(1, 1);
  sr.b = Vec::Ones(1);
  CHECK(robust_subgrad_oracle(sr, p1(2))[0] == 4.0);
  // f(x) = |x^2 - 1| is smooth at 2
  CHECK(central_dd(sr, p1(2), p1(1)) == doctest::Approx(4.0).epsilon(1e-8));
  CHECK_THROWS_AS(robust_subgrad_oracle(sr, p2(1, 1)), Error);

  const RobustInstance mr = gen_matrix_recovery(3, 2, 12, 0.0, 5);
  CHECK(robust_objective(mr, mr.planted) == 0.0);
  CHECK(robust_subgrad_oracle(mr, mr.planted).norm() == 0.0);

  RobustInstance bd;
  bd.kind = RobustKind::kBlindDeconv;
  bd.n = bd.n2 = 1;
  bd.a = bd.c = Mat::Ones(1, 1);
  bd.b = Vec::Zero(1);
  CHECK(robust_subgrad_oracle(bd, p2(1, 1)) == p2(1, 1));
  CHECK(central_dd(bd, p2(1, 1), p2(1, 0)) == doctest::Approx(1.0));
  CHECK(central_dd(bd, p2(1, 1), p2(0, 1)) == doctest::Approx(1.0));

  // Sign(0) = 0 at an exact kink of the amplitude model.
  RobustInstance am;
  am.kind = RobustKind::kAmplitudeRetrieval;
  am.n = 1;
  am.a = Mat::Ones(1, 1);
  am.b = Vec::Ones(1);
  CHECK(robust_subgrad_oracle(am, p1(0))[0] == 0.0);
  CHECK(robust_subgrad_oracle(am, p1(1))[0] == 0.0);
}

TEST_CASE("generated instances follow the model off the outliers") {
  const RobustInstance sr = gen_sign_retrieval(5, 40, 0.1, 3);
  int outliers = 0;
  for (Eigen::Index i = 0; i < 40; ++i) {
    if (sr.outlier[static_cast<std::size_t>(i)]) {
      ++outliers;
    } else {
      CHECK(sr.b[i] == std::pow(sr.a.row(i).dot(sr.planted), 2));
    }
  }
  CHECK(outliers == 4);
  const RobustInstance bd = gen_blind_deconv(3, 4, 30, 0.2, 3);
  CHECK(std::count(bd.outlier.begin(), bd.outlier.end(), true) == 6);
  CHECK(bd.dim() == 7);
  CHECK(gen_matrix_recovery(4, 2, 20, 0.0, 1).dim() == 8);
}

TEST_CASE("oracle lies in the exact Clarke set for one-dimensional sign retrieval") {
  const RobustInstance inst = gen_sign_retrieval(1, 6, 0.2, 11);
  std::vector<Expr> terms;
  for (Eigen::Index i = 0; i < inst.measurements(); ++i) {
    terms.push_back(abs(sq(inst.a(i, 0) * var(0)) - constant(inst.b[i])));
  }
  const Expr f = (1.0 / 6.0) * sum(terms);
  CounterRng rng(2);
  for (int k = 0; k < 100; ++k) {
    const Point x = p1(rng.uniform(-3, 3));
    CHECK(eval(f, x) == doctest::Approx(robust_objective(inst, x)));
    const SubdiffSet c = clarke(f, x);
    CHECK(c.contains(robust_subgrad_oracle(inst, x), 1e-9));
  }
  // also at the kinks, where Sign(0) = 0 picks an interior point
  for (Eigen::Index i = 0; i < inst.measurements(); ++i) {
    const Point x = p1(std::sqrt(inst.b[i]) / std::abs(inst.a(i, 0)));
    CHECK(clarke(f, x).contains(robust_subgrad_oracle(inst, x), 1e-9));
  }
}

TEST_CASE("oracle matches finite differences for every kind") {
  const std::vector<RobustInstance> insts{gen_sign_retrieval(4, 20, 0.1, 1), gen_amplitude_retrieval(4, 20, 0.1, 2),
                                          gen_blind_deconv(3, 2, 20, 0.1, 3), gen_matrix_recovery(3, 2, 15, 0.1, 4),
                                          gen_logsum_ls(4, 20, 0.3, 0.5, 5)};
  CounterRng rng(8);
  for (const auto& inst : insts) {
    CAPTURE(to_string(inst.kind));
    int checked = 0;
    for (int k = 0; k < 100; ++k) {
      const Vec x = inst.planted + rng.normal_vec(inst.dim());
      if (kink_margin(inst, x) < 1e-3) continue;
      ++checked;
      const Vec s = robust_subgrad_oracle(inst, x);
      const Vec d = s.norm() > 0.0 ? Vec(s / s.norm()) : Vec(Vec::Ones(inst.dim()));
      CHECK(std::abs(central_dd(inst, x, d) - s.dot(d)) <= 1e-5 * (1.0 + std::abs(s.dot(d))));
      const Vec e = rng.normal_vec(inst.dim()).normalized();
      CHECK(std::abs(central_dd(inst, x, e) - s.dot(e)) <= 1e-5 * (1.0 + std::abs(s.dot(e))));
    }
    CHECK(checked >= 50);
  }
}

TEST_CASE("orbit distances") {
  const RobustInstance sr = gen_sign_retrieval(4, 16, 0.0, 1);
  CHECK(orbit_distance(sr, -sr.planted) == 0.0);
  CHECK(orbit_distance(sr, sr.planted + p2(0, 0).replicate(2, 1)) == 0.0);

  const RobustInstance bd = gen_blind_deconv(3, 2, 12, 0.0, 2);
  for (double t : {2.0, -0.5, 3.0}) {
    Vec p(5);
    p << t * bd.planted.head(3), bd.planted.tail(2) / t;
    CHECK(orbit_distance(bd, p) <= 1e-9);
    CHECK(robust_objective(bd, p) <= 1e-12);
  }
  // against a brute-force scan over t
  CounterRng rng(4);
  for (int k = 0; k < 20; ++k) {
    const Vec p = bd.planted + 0.5 * rng.normal_vec(5);
    double best = HUGE_VAL;
    for (double t = -5.0; t <= 5.0; t += 1e-4) {
      if (std::abs(t) < 1e-3) continue;
      best = std::min(best, (p.head(3) - t * bd.planted.head(3)).squaredNorm() +
                                (p.tail(2) - bd.planted.tail(2) / t).squaredNorm());
    }
    CHECK(orbit_distance(bd, p) <= std::sqrt(best) + 1e-12);
    CHECK(orbit_distance(bd, p) >= std::sqrt(best) - 1e-4);
  }

  const RobustInstance mr = gen_matrix_recovery(3, 2, 10, 0.0, 3);
  const double th = 0.7;
  Mat r(2, 2);
  r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  const Mat us = Eigen::Map<const Eigen::Matrix<double, 3, 2, Eigen::RowMajor>>(mr.planted.data());
  const Eigen::Matrix<double, 3, 2, Eigen::RowMajor> rotated = us * r;
  const Vec p = Eigen::Map<const Vec>(rotated.data(), 6);
  CHECK(orbit_distance(mr, p) <= 1e-12);
  CHECK(robust_objective(mr, p) <= 1e-12);
}

TEST_CASE("log-linear fit") {
  std::vector<double> v;
  for (int k = 0; k < 50; ++k) v.push_back(3.0 * std::pow(0.9, k));
  const auto [slope, r2] = log_linear_fit(v);
  CHECK(slope == doctest::Approx(std::log(0.9)));
  CHECK(r2 == doctest::Approx(1.0));
  CHECK(log_linear_fit({1.0}).first == 0.0);
}

TEST_CASE("recovery experiment") {
  RecoveryConfig c;  // sign retrieval, n = 10, m = 80, 10% outliers, Geometric(0.1, 0.98)
  c.seed = 3;
  const RecoverySummary r = run_recovery_experiment(c);
  CHECK(r.final_dist <= 1e-3);
  CHECK(r.slope < 0.0);
  CHECK(r.best_dist.size() == r.trace.objective.size());

  c.outlier_frac = 0.0;
  c.init_noise = 0.0;
  const RecoverySummary exact = run_recovery_experiment(c);
  for (double d : exact.trace.dist_ref) CHECK(d <= 1e-12);

  RecoveryConfig bd;
  bd.kind = RobustKind::kBlindDeconv;
  bd.n = 5;
  bd.m = 60;
  bd.seed = 4;
  const RecoverySummary rb = run_recovery_experiment(bd);
  for (std::size_t k = 1; k < rb.best_dist.size(); ++k) CHECK(rb.best_dist[k] <= rb.best_dist[k - 1]);
  CHECK(rb.best_dist.back() < 1e-3 * rb.best_dist.front());

  RecoveryConfig small;
  small.m = 39;
  CHECK_THROWS_AS(run_recovery_experiment(small), Error);
  CHECK(run_recovery_experiment(c).to_csv() == exact.to_csv());
}

TEST_CASE("key=value configs") {
  const KeyValues kv = parse_key_values("# lspar\ntrials = 3\n\nn_list=10, 20 # two sizes\nmethods=mm\n");
  CHECK(kv.at("trials") == "3");
  CHECK(kv.at("n_list") == "10, 20");
  const LsparConfig c = LsparConfig::from_key_values(kv);
  CHECK(c.trials == 3);
  CHECK(c.n_list == std::vector<Eigen::Index>{10, 20});
  CHECK(c.methods == std::vector<std::string>{"mm"});
  CHECK_FALSE(c.schedule);
  CHECK(LsparConfig::from_key_values({{"schedule", "constant:0.5"}}).schedule->p1 == 0.5);
  CHECK_THROWS_AS(parse_key_values("no equals sign"), ParseError);
  CHECK_THROWS_AS(LsparConfig::from_key_values({{"trails", "3"}}), Error);
  CHECK_THROWS_AS(LsparConfig::from_key_values({{"trials", "3.5"}}), Error);
  const RecoveryConfig r = RecoveryConfig::from_key_values({{"kind", "blind"}, {"schedule", "geometric:0.2,0.9"}});
  CHECK(r.kind == RobustKind::kBlindDeconv);
  CHECK(r.schedule.p2 == 0.9);
  CHECK_THROWS_AS(RecoveryConfig::from_key_values({{"kind", "phase"}}), Error);
}

// MM is a local method: from a Gaussian W0 a noiseless trial can stop at a
// certified stationary point with f > 0 (one piece fitting several samples
// by least squares). Interpolation is reached from starts in the basin.
TEST_CASE("LSPAR experiment on noiseless data") {
  int interpolated = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    LsparConfig c;
    c.trials = 1;
    c.n_list = {10};
    c.noise_sigma = 0.0;
    c.seed = seed;
    c.methods = {"mm"};
    const LsparSummary s = run_lspar_experiment(c);
    REQUIRE(s.records.size() == 1);
    const TrialRecord& r = s.records[0];
    if (r.final_f <= 1e-8) {
      ++interpolated;
    } else {
      CHECK(r.cert.value_or(false));
    }
  }
  CHECK(interpolated >= 10);

  int warm = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const LsparDataset data = gen_lspar_data(10, 0.0, seed);
    CounterRng rng(seed + 1000);
    const Mat w0 = lspar_true_weights() + 0.1 * Mat::NullaryExpr(4, 2, [&]() { return rng.normal(); });
    if (mm_lspar(data, w0).trace.final_objective() <= 1e-8) ++warm;
  }
  CHECK(warm >= 45);
}

TEST_CASE("LSPAR experiment bookkeeping and files") {
  LsparConfig c;
  c.trials = 4;
  c.n_list = {10, 20};
  c.tuning_trials = 2;
  c.subgrad_iters = 300;
  c.threads = 1;
  const auto dir = scratch_dir("lspar");
  c.out_dir = dir.string();
  const LsparSummary s = run_lspar_experiment(c);
  CHECK(s.records.size() == 4 * 2 * 2);
  for (Eigen::Index n : c.n_list) {
    int total = s.ties.at(n);
    for (const auto& m : c.methods) total += s.summary(n, m).minimum_count;
    CHECK(total == c.trials);
    CHECK(s.step_c.count(n) == 1);
  }
  // Both methods see the same data and start point.
  for (std::size_t i = 0; i < s.records.size(); i += 2) {
    CHECK(s.records[i].trial == s.records[i + 1].trial);
    CHECK(s.records[i].seed == s.records[i + 1].seed);
    CHECK(s.records[i].final_f == s.records[i].best_f);  // MM is monotone
  }
  const std::string trials = slurp(dir / "trials.csv");
  CHECK(trials.rfind("trial,seed,N,method,final_f,best_f,iters,cert,wall_ms\n", 0) == 0);
  CHECK(std::count(trials.begin(), trials.end(), '\n') == 17);
  CHECK(slurp(dir / "summary.csv").rfind("N,method,min,q1,median,q3,max,mean", 0) == 0);
  CHECK(slurp(dir / "fig5.svg").rfind("<svg", 0) == 0);
  CHECK(slurp(dir / "fig6.svg").find("</svg>") != std::string::npos);

  // Payload is independent of the thread count.
  c.out_dir.clear();
  c.threads = 3;
  const LsparSummary t = run_lspar_experiment(c);
  CHECK(trials_csv(t.records, false) == trials_csv(s.records, false));
  CHECK(summary_csv(t) == summary_csv(s));
  std::filesystem::remove_all(dir);

  c.methods = {"mm", "newton"};
  CHECK_THROWS_AS(run_lspar_experiment(c), Error);
}

TEST_CASE("LSPAR experiment surfaces I/O errors with the path") {
  LsparConfig c;
  c.trials = 1;
  c.n_list = {5};
  c.schedule = StepSchedule::diminishing(1.0);
  c.out_dir = "/proc/nonsmooth_cannot_write_here";
  try {
    run_lspar_experiment(c);
    FAIL("expected an I/O error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
    CHECK(std::string(e.what()).find("/proc/nonsmooth_cannot_write_here") != std::string::npos);
  }
}
