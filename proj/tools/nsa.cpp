// nsa: command-line front end for the nonsmooth library.
//
// Exit codes: 2 for usage and input errors, 1 when a gallery example
// fails, 0 otherwise.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nonsmooth/experiments.hpp"
#include "nonsmooth/gallery.hpp"
#include "nonsmooth/rng.hpp"
#include "nonsmooth/solvers.hpp"
#include "nonsmooth/stationarity.hpp"

using namespace nonsmooth;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out || !(out << text)) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
}

// "0.5" or "1,0"
Point parse_point(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      v.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "bad point coordinate '" + item + "'");
    }
  }
  if (v.empty()) throw Error(ErrorCode::kInvalidArgument, "empty point");
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Expr load_expr(const std::string& path, Eigen::Index dim) { return parse_expr(read_file(path), dim); }

json trace_summary(const SolverTrace& t) {
  return json{{"termination", to_string(t.termination)},
              {"iterations", t.iterations()},
              {"final_f", t.final_objective()},
              {"best_f", t.best_objective},
              {"best_point", vec_to_json(t.best_point)}};
}

struct SolveArgs {
  std::string method = "subgrad";
  std::string expr_path;
  std::string problem_path;
  std::string schedule = "diminishing:1";
  int iters = 1000;
  std::uint64_t seed = 0;
  std::string trace_path;
  std::string x0;
  std::string box;   // "lo,hi" applied to every coordinate
  double ball = 0.0;  // radius of a ball around 0
};

int run_solve(const SolveArgs& a) {
  const StepSchedule schedule = StepSchedule::parse(a.schedule);
  SolverTrace trace;
  json out;
  if (!a.expr_path.empty()) {
    if (a.x0.empty()) throw Error(ErrorCode::kInvalidArgument, "solve --expr needs --x0");
    const Point x0 = parse_point(a.x0);
    const Expr e = load_expr(a.expr_path, x0.size());
    SolverOptions opts;
    opts.max_iter = a.iters;
    opts.seed = a.seed;
    if (a.method == "subgrad") {
      trace = subgradient_method(oracle_from_expr(e), x0, schedule, opts);
    } else if (a.method == "proj-subgrad") {
      ConvexSetSpec c;
      if (!a.box.empty()) {
        const Point lh = parse_point(a.box);
        if (lh.size() != 2) throw Error(ErrorCode::kInvalidArgument, "--box expects lo,hi");
        c = HPolyhedron::box(Vec::Constant(x0.size(), lh[0]), Vec::Constant(x0.size(), lh[1]));
      } else if (a.ball > 0.0) {
        c = Ball{Vec::Zero(x0.size()), a.ball};
      } else {
        throw Error(ErrorCode::kInvalidArgument, "proj-subgrad needs --box or --ball");
      }
      trace = projected_subgradient(oracle_from_expr(e), c, x0, schedule, opts);
    } else {
      throw Error(ErrorCode::kInvalidArgument, "method '" + a.method + "' does not take --expr");
    }
    out = trace_summary(trace);
  } else {
    const KeyValues kv = read_key_values(a.problem_path);
    const std::string kind = kv.count("problem") ? kv.at("problem") : "";
    auto get = [&](const char* key, double fallback) {
      return kv.count(key) ? std::stod(kv.at(key)) : fallback;
    };
    if (kind == "lspar") {
      const LsparDataset data = gen_lspar_data(static_cast<Eigen::Index>(get("N", 10)), get("sigma", 0.1),
                                               static_cast<std::uint64_t>(get("seed", 0)));
      CounterRng rng(CounterRng(a.seed).split(2));
      const Mat w0 = Mat::NullaryExpr(4, 2, [&]() { return rng.normal(); });
      if (a.method == "mm") {
        MmParams p;
        p.max_outer = a.iters;
        const MmResult r = mm_lspar(data, w0, p);
        trace = r.trace;
        out = trace_summary(trace);
        out["certificate"] = r.certificate;
      } else if (a.method == "subgrad") {
        trace = pseudo_subgradient_lspar(data, w0, schedule, a.iters);
        out = trace_summary(trace);
      } else {
        throw Error(ErrorCode::kInvalidArgument, "lspar problems take --method mm or subgrad");
      }
    } else if (kind == "robust") {
      if (a.method != "subgrad") throw Error(ErrorCode::kInvalidArgument, "robust problems take --method subgrad");
      KeyValues rest = kv;
      rest.erase("problem");
      RecoveryConfig rc = RecoveryConfig::from_key_values(rest);
      rc.schedule = schedule;
      rc.iters = a.iters;
      const RecoverySummary r = run_recovery_experiment(rc);
      trace = r.trace;
      out = trace_summary(trace);
      out["final_dist"] = r.final_dist;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "problem file needs problem=lspar or problem=robust");
    }
  }
  if (!a.trace_path.empty()) write_file(a.trace_path, trace.to_csv());
  std::cout << out.dump(2) << '\n';
  return 0;
}

int run_gallery_table() {
  const std::vector<GalleryEntry> entries = run_gallery();
  int passed = 0;
  for (const auto& e : entries) {
    std::printf("%-4s %s\n", e.pass ? "PASS" : "FAIL", e.name.c_str());
    std::printf("     expected: %s\n", e.expected.c_str());
    std::printf("     observed: %s\n", e.observed.c_str());
    if (!e.note.empty()) std::printf("     note: %s\n", e.note.c_str());
    passed += e.pass ? 1 : 0;
  }
  std::printf("%d/%zu examples passing\n", passed, entries.size());
  return passed == static_cast<int>(entries.size()) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonsmooth analysis toolkit"};
  app.require_subcommand(1);

  std::string expr_path, point_text, which = "clarke", config_path, out_dir;
  double tol = 1e-8;

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate an expression");
  eval_cmd->add_option("--expr", expr_path, "S-expression file")->required();
  eval_cmd->add_option("--point", point_text, "Comma-separated point")->required();

  auto* subdiff_cmd = app.add_subcommand("subdiff", "Exact subdifferential as JSON");
  subdiff_cmd->add_option("--expr", expr_path)->required();
  subdiff_cmd->add_option("--point", point_text)->required();
  subdiff_cmd->add_option("--which", which)
      ->check(CLI::IsMember({"frechet", "limiting", "clarke", "bouligand"}));

  auto* classify_cmd = app.add_subcommand("classify", "Stationarity report as JSON");
  classify_cmd->add_option("--expr", expr_path)->required();
  classify_cmd->add_option("--point", point_text)->required();
  classify_cmd->add_option("--tol", tol);

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Run a solver");
  solve_cmd->add_option("--method", solve.method)->check(CLI::IsMember({"subgrad", "proj-subgrad", "mm"}));
  auto* expr_opt = solve_cmd->add_option("--expr", solve.expr_path, "S-expression objective");
  auto* problem_opt = solve_cmd->add_option("--problem", solve.problem_path, "key=value problem file");
  expr_opt->excludes(problem_opt);
  solve_cmd->add_option("--schedule", solve.schedule, "kind:params");
  solve_cmd->add_option("--iters", solve.iters)->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--seed", solve.seed);
  solve_cmd->add_option("--trace", solve.trace_path, "Trace CSV output");
  solve_cmd->add_option("--x0", solve.x0, "Start point for --expr");
  solve_cmd->add_option("--box", solve.box, "lo,hi box for proj-subgrad");
  solve_cmd->add_option("--ball", solve.ball, "Ball radius for proj-subgrad");

  auto* exp_cmd = app.add_subcommand("experiment", "Run an experiment");
  exp_cmd->require_subcommand(1);
  auto* lspar_cmd = exp_cmd->add_subcommand("lspar", "MM vs pseudo-subgradient trials");
  auto* recovery_cmd = exp_cmd->add_subcommand("recovery", "Subgradient recovery study");
  for (auto* c : {lspar_cmd, recovery_cmd}) {
    c->add_option("--config", config_path, "key=value config file");
    c->add_option("--out", out_dir, "Output directory (overrides out_dir)");
  }

  auto* gallery_cmd = app.add_subcommand("gallery", "Check the worked examples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*eval_cmd) {
      const Point x = parse_point(point_text);
      std::printf("%.17g\n", eval(load_expr(expr_path, x.size()), x));
    } else if (*subdiff_cmd) {
      const Point x = parse_point(point_text);
      const Expr e = load_expr(expr_path, x.size());
      SubdiffSet s;
      if (which == "frechet") {
        s = frechet(e, x);
      } else if (which == "limiting") {
        s = limiting(e, x);
      } else if (which == "bouligand") {
        s = bouligand(e, x);
      } else {
        s = clarke(e, x);
      }
      std::cout << to_json(s).dump(2) << '\n';
    } else if (*classify_cmd) {
      const Point x = parse_point(point_text);
      std::cout << to_json(classify(load_expr(expr_path, x.size()), x, tol)).dump(2) << '\n';
    } else if (*solve_cmd) {
      if (solve.expr_path.empty() == solve.problem_path.empty()) {
        std::cerr << "solve: give exactly one of --expr or --problem\n";
        return 2;
      }
      return run_solve(solve);
    } else if (*lspar_cmd) {
      LsparConfig c = config_path.empty() ? LsparConfig{} : LsparConfig::from_key_values(read_key_values(config_path));
      if (!out_dir.empty()) c.out_dir = out_dir;
      const LsparSummary s = run_lspar_experiment(c);
      std::cout << summary_csv(s);
    } else if (*recovery_cmd) {
      RecoveryConfig c =
          config_path.empty() ? RecoveryConfig{} : RecoveryConfig::from_key_values(read_key_values(config_path));
      if (!out_dir.empty()) c.out_dir = out_dir;
      const RecoverySummary r = run_recovery_experiment(c);
      std::cout << json{{"kind", to_string(c.kind)},
                        {"iterations", r.trace.iterations()},
                        {"final_dist", r.final_dist},
                        {"best_dist", r.best_dist.back()},
                        {"slope", r.slope},
                        {"r2", r.r2}}
                       .dump(2)
                << '\n';
    } else if (*gallery_cmd) {
      return run_gallery_table();
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
