#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "nonsmooth/rng.hpp"
#include "nonsmooth/subdiff.hpp"
#include "support/random_expr.hpp"
#include "support/sets.hpp"

using namespace nonsmooth;
using namespace nonsmooth::testing;

namespace {

Expr fixture(const std::string& name) {
  std::ifstream in(std::string(NONSMOOTH_FIXTURES) + "/" + name);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_expr(ss.str());
}

const Vec kPlus = Vec::Constant(1, 1.0);
const Vec kMinus = Vec::Constant(1, -1.0);

// Forward difference with a step small enough that PA trees are affine on
// the segment.
double fd_quotient(const Expr& e, const Point& x, const Vec& d, double t = 1e-7) {
  return (eval(e, x + t * d) - eval(e, x)) / t;
}

}  // namespace

TEST_CASE("directional derivative examples") {
  const Expr neg_abs = fixture("neg_abs.sexp");
  CHECK(dir_deriv(neg_abs, p1(0), kPlus).value == -1.0);
  CHECK(dir_deriv(neg_abs, p1(0), kMinus).value == -1.0);
  CHECK(dir_deriv(fixture("l1_weighted.sexp"), p2(1, 0), p2(-1, -2)).value == doctest::Approx(3.0));
  CHECK(dir_deriv(fixture("f2.sexp"), p1(0), kMinus).value == 0.0);
}

TEST_CASE("Clarke directional derivative examples") {
  CHECK(clarke_dir_deriv(fixture("neg_abs.sexp"), p1(0), kPlus).value == 1.0);
  CHECK(clarke_dir_deriv(fixture("abs.sexp"), p1(0), kPlus).value == 1.0);
  const Expr relu = fixture("relu_loss.sexp");
  CHECK(clarke_dir_deriv(relu, p1(0), kPlus).value == 0.0);
  CHECK(dir_deriv(relu, p1(0), kPlus).value == -1.0);
}

TEST_CASE("Bouligand and Clarke examples") {
  const Expr neg_abs = fixture("neg_abs.sexp");
  CHECK(same_intervals(intervals(bouligand(neg_abs, p1(0))), {{-1, -1}, {1, 1}}));
  CHECK(same_intervals(intervals(bouligand(fixture("sum_rule.sexp"), p1(0))), {{1, 1}}));
  CHECK(same_intervals(intervals(bouligand(fixture("abs.sexp"), p1(3))), {{1, 1}}));

  CHECK(same_intervals(intervals(clarke(neg_abs, p1(0))), {{-1, 1}}));
  CHECK(same_intervals(intervals(clarke(fixture("f1.sexp"), p1(0))), {{-1, 1}}));
  CHECK(same_intervals(intervals(clarke(fixture("sum_rule.sexp"), p1(0))), {{1, 1}}));
}

TEST_CASE("Frechet and limiting examples") {
  const Expr neg_abs = fixture("neg_abs.sexp");
  const Expr f2 = fixture("f2.sexp");
  const Expr abs1 = fixture("abs.sexp");
  CHECK(frechet(neg_abs, p1(0)).empty());
  CHECK(frechet(f2, p1(0)).empty());
  CHECK(same_intervals(intervals(frechet(abs1, p1(0))), {{-1, 1}}));

  CHECK(same_intervals(intervals(limiting(neg_abs, p1(0))), {{-1, -1}, {1, 1}}));
  CHECK(same_intervals(intervals(limiting(f2, p1(0))), {{-1, -1}, {0, 0}}));
  CHECK(same_intervals(intervals(limiting(abs1, p1(0))), {{-1, 1}}));
  CHECK(same_intervals(intervals(limiting(fixture("f1.sexp"), p1(0))), {{-1, -1}, {1, 1}}));
}

TEST_CASE("two-dimensional exact sets") {
  const Expr l1w = fixture("l1_weighted.sexp");
  // |x1| + 2|x2| at (1, 0): {1} x [-2, 2]
  const SubdiffSet c = clarke(l1w, p2(1, 0));
  CHECK(c.contains(p2(1, 2)));
  CHECK(c.contains(p2(1, -2)));
  CHECK_FALSE(c.contains(p2(1, 2.1)));
  CHECK(set_distance(frechet(l1w, p2(1, 0)).set, c.set) <= 1e-12);
  CHECK(set_distance(limiting(l1w, p2(1, 0)).set, c.set) <= 1e-12);

  // -|x1| - |x2| at 0: Frechet empty, limiting the four corners.
  const Expr concave = scale(-1.0, abs(var(0, 2)) + abs(var(1, 2)));
  CHECK(frechet(concave, p2(0, 0)).empty());
  const SubdiffSet lim = limiting(concave, p2(0, 0));
  CHECK(lim.contains(p2(1, 1)));
  CHECK(lim.contains(p2(-1, 1)));
  CHECK_FALSE(lim.contains(p2(0, 0)));
  CHECK(clarke(concave, p2(0, 0)).contains(p2(0, 0)));
}

TEST_CASE("one-dimensional germ engine") {
  const Germ1D g = germ_1d(fixture("xsqsin.sexp"), 0.0);
  CHECK(g.dini_pos == Interval::point(1.0));
  CHECK(g.dini_neg == Interval::point(-1.0));
  CHECK(g.cluster_right == (Interval{0.0, 2.0}));
  CHECK(g.cluster_left == Interval::point(1.0));

  const Expr xsqsin = fixture("xsqsin.sexp");
  CHECK(same_intervals(intervals(clarke(xsqsin, p1(0))), {{0, 2}}));
  CHECK(same_intervals(intervals(frechet(xsqsin, p1(0))), {{1, 1}}));
  CHECK(dir_deriv(xsqsin, p1(0), kPlus).value == 1.0);
  CHECK(dir_deriv(xsqsin, p1(0), kMinus).value == -1.0);

  const Expr xsinlog = fixture("xsinlog.sexp");
  CHECK_THROWS_AS(dir_deriv(xsinlog, p1(0), kPlus), Error);
  // liminf of the right quotients is -1: Frechet = [0, -1] is empty.
  CHECK(frechet(xsinlog, p1(0)).empty());
  CHECK(same_intervals(intervals(clarke(xsinlog, p1(0))), {{-std::sqrt(2.0), std::sqrt(2.0)}}));

  const Expr relu = fixture("relu_loss.sexp");
  CHECK(dir_deriv_1d(relu, 0.0, 1.0).value == -1.0);
  CHECK(clarke_dir_deriv_1d(relu, 0.0, 1.0).value == 0.0);
  CHECK(same_intervals(intervals(bouligand_1d(relu, 0.0)), {{-1, -1}, {0, 0}}));
  CHECK(frechet_1d(relu, 0.0).empty());

  // Oscillating branches that the rules cannot separate are refused.
  CHECK_THROWS_AS(germ_1d(max_of({xsqsin, var(0)}), 0.0), Error);
}

TEST_CASE("convex catalog examples") {
  const SubdiffSet l1 = convex_catalog_subdiff(*l1_norm(2), p2(1, 0));
  CHECK(l1.contains(p2(1, 1)));
  CHECK(l1.contains(p2(1, -1)));
  CHECK_FALSE(l1.contains(p2(0.9, 0)));

  const SubdiffSet l2 = convex_catalog_subdiff(*l2_norm(2), p2(0, 0));
  REQUIRE(std::holds_alternative<Ball>(l2.set.components[0]));
  CHECK(std::get<Ball>(l2.set.components[0]).radius == 1.0);
  CHECK(l2.contains(p2(0.6, 0.8)));
  CHECK_FALSE(l2.contains(p2(0.8, 0.8)));

  const SubdiffSet c = convex_catalog_subdiff(*affine_compose(Mat::Constant(1, 1, 2.0), Vec::Zero(1), l1_norm(1)), p1(0));
  CHECK(same_intervals(intervals(c), {{-2, 2}}));

  const SubdiffSet s = convex_catalog_subdiff(*scaled_sum(1.0, l1_norm(1), 2.0, l1_norm(1)), p1(0));
  CHECK(same_intervals(intervals(s), {{-3, 3}}));

  const Mat a = (Mat(2, 2) << 1, 0, -1, 0).finished();
  const SubdiffSet m = convex_catalog_subdiff(*max_of_affine(a, Vec::Zero(2)), p2(0, 5));
  CHECK(same_intervals(intervals(SetUnion::of(linear_image(Mat::Identity(1, 2), to_vpolytope(m.set.components[0])))),
                       {{-1, 1}}));
}

TEST_CASE("largest eigenvalue") {
  const EigmaxSubdiff a = eigmax_subdiff((Mat(2, 2) << 2, 0, 0, 1).finished());
  CHECK(a.lambda_max == doctest::Approx(2.0));
  REQUIRE(a.multiplicity() == 1);
  const Mat e11 = (Mat(2, 2) << 1, 0, 0, 0).finished();
  CHECK((a.extreme_points()[0] - e11).norm() < 1e-12);

  const EigmaxSubdiff b = eigmax_subdiff(Mat::Identity(2, 2));
  CHECK(b.multiplicity() == 2);
  CHECK(b.contains(0.5 * Mat::Identity(2, 2)));
  CHECK(b.contains(e11));
  CHECK_FALSE(b.contains(Mat::Identity(2, 2)));
  // e1 e1^T is extreme: it is rank one, so not a proper mix of two others.
  for (const auto& z : b.extreme_points(16)) CHECK(b.contains(z));

  const EigmaxSubdiff c = eigmax_subdiff(Mat::Zero(1, 1));
  CHECK(c.extreme_points()[0](0, 0) == doctest::Approx(1.0));

  CHECK_THROWS_AS(eigmax_subdiff((Mat(2, 2) << 1, 2, 0, 1).finished()), Error);
}

TEST_CASE("normal cones") {
  CounterRng rng(7);
  const HPolyhedron box = HPolyhedron::box(Vec::Zero(2), Vec::Ones(2));
  const Cone n = normal_cone(box, p2(0, 0));
  CHECK(cone_contains(n, p2(-1, 0)));
  CHECK(cone_contains(n, p2(-1, -3)));
  CHECK_FALSE(cone_contains(n, p2(1, 0)));
  // Every generator s satisfies s^T (y - x) <= 0 on sampled y in C.
  for (const auto& s : *n.generators) {
    for (int k = 0; k < 200; ++k) CHECK(s.dot(rng.uniform_vec(2, 0, 1)) <= 1e-12);
  }

  const Ball ball{Vec::Zero(2), 1.0};
  const Cone nb = normal_cone(ball, p2(1, 0));
  REQUIRE(nb.generators->size() == 1);
  CHECK(((*nb.generators)[0] - p2(1, 0)).norm() < 1e-12);
  for (int k = 0; k < 200; ++k) CHECK(p2(1, 0).dot(rng.ball(2, 1.0) - p2(1, 0)) <= 1e-12);

  CHECK(normal_cone(box, p2(0.5, 0.5)).generators->empty());
  CHECK_THROWS_AS(normal_cone(box, p2(2, 0)), Error);
}

TEST_CASE("weakly convex subdifferential") {
  // f = -x^2, h = 0
  SubdiffSet h0;
  h0.kind = SubdiffKind::kConvex;
  h0.at = p1(3);
  h0.set = SetUnion::of(VPolytope::point(Vec::Zero(1)));
  CHECK(same_intervals(intervals(weakly_convex_subdiff(h0, 2.0, p1(3))), {{-6, -6}}));

  // f = |x| - x^2, h = |x|
  const SubdiffSet h1 = convex_catalog_subdiff(*l1_norm(1), p1(0));
  const SubdiffSet w = weakly_convex_subdiff(h1, 2.0, p1(0));
  const Expr f = abs(var(0)) - sq(var(0));
  CHECK(same_intervals(intervals(w), intervals(clarke(f, p1(0)))));

  // phi(t) = |t| - t^2/2 near t = 0.5 with rho = 1
  const Expr phi = abs(var(0)) - 0.5 * sq(var(0));
  const SubdiffSet hp = convex_catalog_subdiff(*l1_norm(1), p1(0.5));
  CHECK(same_intervals(intervals(weakly_convex_subdiff(hp, 1.0, p1(0.5))), intervals(clarke_1d(phi, 0.5))));
  CHECK_THROWS_AS(weakly_convex_subdiff(h1, -1.0, p1(0)), Error);
}

TEST_CASE("finite-difference directional derivative") {
  const DirDerivValue a = fd_dir_deriv(evaluator(fixture("abs.sexp")), p1(0), kPlus);
  CHECK(a.convergent);
  CHECK(a.value == doctest::Approx(1.0).epsilon(1e-9));

  const DirDerivValue b = fd_dir_deriv(evaluator(fixture("xsinlog.sexp")), p1(0), kPlus);
  CHECK_FALSE(b.convergent);
  CHECK(b.amplitude >= 1.8);
  CHECK(b.amplitude <= 2.0);

  const Evaluator xsqsin = evaluator(fixture("xsqsin.sexp"));
  const DirDerivValue c = fd_dir_deriv(xsqsin, p1(0), kPlus);
  CHECK(c.convergent);
  CHECK(c.value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fd_dir_deriv(xsqsin, p1(0), kMinus).value == doctest::Approx(-1.0));
}

TEST_CASE("sampled Clarke directional derivative") {
  CHECK(std::abs(sampled_clarke_dd(evaluator(fixture("neg_abs.sexp")), p1(0), kPlus).value - 1.0) <= 0.02);
  CHECK(std::abs(sampled_clarke_dd(evaluator(fixture("xsqsin.sexp")), p1(0), kPlus).value - 2.0) <= 0.05);
  CHECK(std::abs(sampled_clarke_dd(evaluator(sq(var(0))), p1(1), kPlus).value - 2.0) <= 0.01);
  const DirDerivValue r = sampled_clarke_dd(evaluator(fixture("xsqsin.sexp")), p1(0), kPlus);
  CHECK(r.trace.size() == 5);
}

TEST_CASE("gradient sampling") {
  const SampledSubdiff a = gradient_sampling(gradient_fn(fixture("xsqsin.sexp")), p1(0));
  CHECK(set_distance(a.set.set, SetUnion::of(VPolytope::interval(0, 2))) <= 0.05);
  CHECK(a.trace.size() == 4);
  const SampledSubdiff b = gradient_sampling(gradient_fn(fixture("neg_abs.sexp")), p1(0));
  CHECK(set_distance(b.set.set, SetUnion::of(VPolytope::interval(-1, 1))) <= 0.02);
  const SampledSubdiff c = gradient_sampling(gradient_fn(sq(var(0))), p1(0));
  CHECK(set_distance(c.set.set, SetUnion::of(VPolytope::point(Vec::Zero(1)))) <= 0.02);
  // same seed, same set
  const SampledSubdiff a2 = gradient_sampling(gradient_fn(fixture("xsqsin.sexp")), p1(0));
  CHECK(intervals(a.set)[0] == intervals(a2.set)[0]);
}

TEST_CASE("fragments without exact rules") {
  const Expr g = builtin("xsqsin", var(0, 2));
  CHECK_THROWS_AS(clarke(g, p2(0, 0)), Error);
  CHECK_THROWS_AS(dir_deriv(g, p2(0, 0), p2(1, 0)), Error);
  const Expr plq2 = sq(abs(var(0, 2))) + abs(var(1, 2));
  CHECK_NOTHROW(clarke(plq2, p2(0, 0)));
  CHECK_THROWS_AS(frechet(plq2, p2(0, 0)), Error);
}

// ---------------------------------------------------------------------------
// Properties over random PA trees.

TEST_CASE("inclusion chain, conv identity and support identity") {
  CounterRng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index dim = 1 + static_cast<Eigen::Index>(rng.below(3));
    RandomPa gen(rng, dim);
    const Expr e = gen.expression(6);
    const Point x = gen.point();
    CAPTURE(to_string(e));
    CAPTURE(x.transpose());
    const SubdiffSet fr = frechet(e, x);
    const SubdiffSet lim = limiting(e, x);
    const SubdiffSet cl = clarke(e, x);
    for (const auto& s : probe(fr.set)) CHECK(lim.contains(s, 1e-8));
    for (const auto& s : probe(lim.set)) CHECK(cl.contains(s, 1e-8));
    std::vector<Vec> verts;
    for (const auto& c : lim.set.components) {
      for (const auto& v : to_vpolytope(c).vertices) verts.push_back(v);
    }
    CHECK(set_distance(SetUnion::of(conv_hull(verts, dim)), cl.set) <= 1e-8);
    for (int k = 0; k < 5; ++k) {
      const Vec d = rng.normal_vec(dim);
      const double fo = clarke_dir_deriv(e, x, d).value;
      CHECK(fo == doctest::Approx(support_value(cl.set, d)).epsilon(1e-12));
      const double fp = dir_deriv(e, x, d).value;
      CHECK(fp <= fo + 1e-8);
      CHECK(fp == doctest::Approx(fd_quotient(e, x, d)).epsilon(1e-5));
    }
  }
}

TEST_CASE("Frechet set against the directional derivative") {
  // s is a Frechet subgradient iff s^T d <= f'(x, d) for all d; checked on a
  // fine circle of directions in dimension 2.
  CounterRng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    RandomPa gen(rng, 2);
    const Expr e = gen.expression(5);
    const Point x = gen.point();
    CAPTURE(to_string(e));
    const SubdiffSet fr = frechet(e, x);
    const SubdiffSet cl = clarke(e, x);
    std::vector<Vec> dirs;
    for (int k = 0; k < 720; ++k) {
      const double t = 2.0 * 3.141592653589793 * k / 720;
      dirs.push_back(p2(std::cos(t), std::sin(t)));
    }
    std::vector<double> fp;
    for (const auto& d : dirs) fp.push_back(dir_deriv(e, x, d).value);
    for (const auto& s : probe(cl.set)) {
      double worst = 1e300;
      for (std::size_t k = 0; k < dirs.size(); ++k) worst = std::min(worst, fp[k] - s.dot(dirs[k]));
      if (fr.contains(s, 1e-9)) {
        CHECK(worst >= -1e-9);
      } else if (distance(fr.set, s) > 0.05 || fr.empty()) {
        CHECK(worst < 0.0);
      }
    }
  }
}

TEST_CASE("sublinearity of the Clarke directional derivative") {
  CounterRng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index dim = 1 + static_cast<Eigen::Index>(rng.below(3));
    RandomPa gen(rng, dim);
    const Expr e = gen.expression(6);
    const Point x = gen.point();
    const Vec d1 = rng.normal_vec(dim), d2 = rng.normal_vec(dim);
    const double a = clarke_dir_deriv(e, x, d1).value;
    const double b = clarke_dir_deriv(e, x, d2).value;
    CHECK(clarke_dir_deriv(e, x, d1 + d2).value <= a + b + 1e-8);
    CHECK(clarke_dir_deriv(e, x, 3.0 * d1).value == doctest::Approx(3.0 * a).epsilon(1e-12));
  }
}

TEST_CASE("regular functions: all subdifferentials coincide") {
  const std::vector<std::pair<Expr, Point>> cases{
      {fixture("abs.sexp"), p1(0)},
      {fixture("l1.sexp"), p2(0, 0)},
      {fixture("l1.sexp"), p2(1, 0)},
      {fixture("pl_model.sexp"), p2(0, 0)},
      {fixture("pl_model.sexp"), p2(0, 1)},
  };
  for (const auto& [e, x] : cases) {
    const SubdiffSet cl = clarke(e, x);
    CHECK(set_distance(frechet(e, x).set, cl.set) <= 1e-12);
    CHECK(set_distance(limiting(e, x).set, cl.set) <= 1e-12);
  }
}

TEST_CASE("weak sum rule and affine chain rule") {
  CounterRng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index dim = 1 + static_cast<Eigen::Index>(rng.below(2));
    RandomPa gen(rng, dim);
    const Expr f = gen.expression(4), g = gen.expression(4);
    const Point x = gen.point();
    const VPolytope cf = to_vpolytope(clarke(f, x).set.components[0]);
    const VPolytope cg = to_vpolytope(clarke(g, x).set.components[0]);
    const SetUnion mink = SetUnion::of(minkowski_sum(cf, cg));
    for (const auto& s : probe(clarke(f + g, x).set)) CHECK(contains(mink, s, 1e-8));

    // Chain rule through x -> A x + b.
    const Mat a = Mat::NullaryExpr(dim, dim, [&]() { return static_cast<double>(rng.below(5)) - 2.0; });
    const Vec b = rng.uniform_vec(dim, -1, 1);
    const Point z = gen.point();
    const Expr comp = compose_affine(f, a, b);
    const VPolytope inner = to_vpolytope(clarke(f, a * z + b).set.components[0]);
    if (a.fullPivLu().rank() == dim) {
      CHECK(set_distance(clarke(comp, z).set, SetUnion::of(linear_image(a.transpose(), inner))) <= 1e-8);
    } else {
      for (const auto& s : probe(clarke(comp, z).set)) {
        CHECK(contains(SetUnion::of(linear_image(a.transpose(), inner)), s, 1e-8));
      }
    }
  }
  // Equality for convex pairs.
  const Expr f = abs(var(0, 2)), g = max_of({var(0, 2), var(1, 2)});
  const VPolytope cf = to_vpolytope(clarke(f, p2(0, 0)).set.components[0]);
  const VPolytope cg = to_vpolytope(clarke(g, p2(0, 0)).set.components[0]);
  CHECK(set_distance(clarke(f + g, p2(0, 0)).set, SetUnion::of(minkowski_sum(cf, cg))) <= 1e-12);
  // Failure for max{x,0} + min{x,0}: {1} strictly inside [0, 2].
  const VPolytope c1 = to_vpolytope(clarke(max_of({var(0), constant(0)}), p1(0)).set.components[0]);
  const VPolytope c2 = to_vpolytope(clarke(min_of({var(0), constant(0)}), p1(0)).set.components[0]);
  CHECK(same_intervals(intervals(SetUnion::of(minkowski_sum(c1, c2))), {{0, 2}}));
}

TEST_CASE("smooth points: Clarke set is the gradient") {
  CounterRng rng(3);
  int smooth = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index dim = 1 + static_cast<Eigen::Index>(rng.below(3));
    RandomPa gen(rng, dim);
    const Expr e = gen.expression(6);
    const Point x = rng.uniform_vec(dim, -1, 1);
    if (!active_pattern(e, x, 1e-6).smooth()) continue;
    ++smooth;
    Vec fd(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      const Vec h = 1e-7 * Vec::Unit(dim, i);
      fd[i] = (eval(e, x + h) - eval(e, x - h)) / 2e-7;
    }
    const SubdiffSet cl = clarke(e, x);
    REQUIRE(cl.set.components.size() == 1);
    const VPolytope v = to_vpolytope(cl.set.components[0]);
    REQUIRE(v.vertices.size() == 1);
    CHECK((v.vertices[0] - fd).norm() <= 1e-6 * (1.0 + fd.norm()));
  }
  CHECK(smooth > 50);
}

TEST_CASE("germ engine agrees with the local model on random 1-D PA") {
  CounterRng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    RandomPa gen(rng, 1);
    const Expr e = gen.expression(6);
    const double x = gen.point()[0];
    CAPTURE(to_string(e));
    CAPTURE(x);
    CHECK(same_intervals(intervals(clarke_1d(e, x)), intervals(clarke(e, p1(x)))));
    CHECK(same_intervals(intervals(bouligand_1d(e, x)), intervals(bouligand(e, p1(x)))));
    CHECK(same_intervals(intervals(frechet_1d(e, x)), intervals(frechet(e, p1(x)))));
    CHECK(same_intervals(intervals(limiting_1d(e, x)), intervals(limiting(e, p1(x)))));
    CHECK(dir_deriv_1d(e, x, 1.0).value == doctest::Approx(dir_deriv(e, p1(x), kPlus).value));
    CHECK(dir_deriv_1d(e, x, -1.0).value == doctest::Approx(dir_deriv(e, p1(x), kMinus).value));
  }
}

TEST_CASE("sampled and exact Clarke sets agree on the 1-D gallery") {
  for (const char* name : {"neg_abs.sexp", "abs.sexp", "f1.sexp", "f2.sexp", "sum_rule.sexp", "xsqsin.sexp",
                           "relu_loss.sexp"}) {
    CAPTURE(name);
    const Expr e = fixture(name);
    const SampledSubdiff s = gradient_sampling(gradient_fn(e), p1(0));
    CHECK(set_distance(s.set.set, clarke(e, p1(0)).set) <= 0.05);
  }
}

TEST_CASE("JSON of a subdifferential") {
  const nlohmann::json j = to_json(frechet(fixture("neg_abs.sexp"), p1(0)));
  CHECK(j["kind"] == "frechet");
  CHECK(j["empty"] == true);
  CHECK(j["set"]["components"].empty());
}
