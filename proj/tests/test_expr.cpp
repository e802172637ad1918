#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "nonsmooth/expr.hpp"
#include "support/random_expr.hpp"

using namespace nonsmooth;

namespace {

Point p1(double a) { return Point::Constant(1, a); }
Point p2(double a, double b) { return (Point(2) << a, b).finished(); }

std::string read_fixture(const std::string& name) {
  std::ifstream in(std::string(NONSMOOTH_FIXTURES) + "/" + name);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const NodeActivity& entry_for(const ActivePattern& p, int node) {
  for (const auto& e : p.entries) {
    if (e.node == node) return e;
  }
  FAIL("no activity entry for node " << node);
  return p.entries.front();
}

}  // namespace

TEST_CASE("eval examples") {
  CHECK(eval(abs(var(0)), p1(-3)) == 3.0);
  const Expr model = parse_expr(read_fixture("pl_model.sexp"));
  CHECK(model.dim() == 2);
  // max{2, 0, -1, -3}
  CHECK(eval(model, p2(1, 1)) == 2.0);
  CHECK(eval(builtin("xsqsin", var(0)), p1(0)) == 0.0);
  CHECK(eval(builtin("xsqsin", var(0)), p1(-2)) == -2.0);
}

TEST_CASE("eval rejects the wrong dimension") {
  CHECK_THROWS_AS(eval(abs(var(1)), p1(0)), Error);
}

TEST_CASE("builders check dimensions") {
  CHECK_THROWS_AS(affine(p1(1), 0) + var(1), Error);
  CHECK_NOTHROW(affine(p2(1, 1), 0) + var(1));
  CHECK(var(0).with_dim(3).dim() == 3);
  CHECK_THROWS_AS(var(2).with_dim(2), Error);
  CHECK_THROWS_AS(max_of({var(0)}), Error);
}

TEST_CASE("classify_fragment examples") {
  CHECK(classify_fragment(max_of({affine(p1(1), 0), affine(p1(-1), 0)})) == FragmentClass::kPA);
  CHECK(classify_fragment(sum({sq(max_of({var(0), constant(0)})), constant(3)})) ==
        FragmentClass::kPLQ);
  CHECK(classify_fragment(builtin("xsinlog", var(0))) == FragmentClass::kSmooth1D);
  CHECK(classify_fragment(builtin("xsinlog", var(1))) == FragmentClass::kGeneral);
  CHECK(classify_fragment(max_of({sq(var(0)), constant(0)})) == FragmentClass::kGeneral);
  CHECK(classify_fragment(sq(sq(var(0)))) == FragmentClass::kGeneral);
}

TEST_CASE("classification never drops to PA after adding a square") {
  CounterRng rng(5);
  testing::RandomPa gen(rng, 2);
  for (int k = 0; k < 100; ++k) {
    const Expr e = gen.expression();
    REQUIRE(classify_fragment(e) == FragmentClass::kPA);
    CHECK(classify_fragment(sq(e)) != FragmentClass::kPA);
    CHECK(classify_fragment(sum({sq(e), e})) != FragmentClass::kPA);
    CHECK(classify_fragment(max_of({sq(e), e})) != FragmentClass::kPA);
  }
}

TEST_CASE("active_pattern examples") {
  // Preorder ids: 0 max, 1 affine, 2 min, 3 affine, 4 const.
  const Expr f2 = parse_expr(read_fixture("f2.sexp"));
  const ActivePattern p = active_pattern(f2, p1(0));
  CHECK(entry_for(p, 0).active == std::vector<int>{1});
  CHECK(entry_for(p, 2).active == std::vector<int>{0, 1});
  CHECK_FALSE(p.smooth());

  const ActivePattern q = active_pattern(abs(var(0)), p1(5));
  REQUIRE(q.entries.size() == 1);
  CHECK(q.entries[0].sign == 1);
  CHECK(q.smooth());

  // Preorder ids: 0 max, 1 scale, 2 abs, 3 var, 4 affine.
  const Expr f1 = parse_expr(read_fixture("f1.sexp"));
  const ActivePattern r = active_pattern(f1, p1(0.5));
  CHECK(entry_for(r, 0).active == std::vector<int>{0, 1});
  CHECK(entry_for(r, 2).sign == 1);
}

TEST_CASE("active_pattern with a tolerance widens the active sets") {
  const Expr e = max_of({var(0), constant(0)});
  CHECK(active_pattern(e, p1(1e-3), 0.0).entries[0].active.size() == 1);
  CHECK(active_pattern(e, p1(1e-3), 1e-2).entries[0].active.size() == 2);
  CHECK(active_pattern(abs(var(0)), p1(1e-3), 1e-2).entries[0].sign == 0);
}

TEST_CASE("parse examples") {
  const Expr a = parse_expr("(abs (var 0))");
  CHECK(a.root().kind == NodeKind::kAbs);
  CHECK(a.root().children[0]->kind == NodeKind::kVar);

  const Expr m = parse_expr(
      "(max (affine (1 1) 0) (affine (1 -1) 0) (affine (-2 1) 0) (affine (-2 -1) 0))");
  CHECK(m.root().kind == NodeKind::kMax);
  CHECK(m.root().children.size() == 4);
  CHECK(m.root().children[2]->coeffs == p2(-2, 1));

  const Expr s = parse_expr("(scale 2 (abs (var 1)))", 2);
  CHECK(s.dim() == 2);
  CHECK(s.root().scalar == 2.0);
  CHECK(s.root().children[0]->children[0]->index == 1);
}

TEST_CASE("parse errors carry positions") {
  auto position = [](const std::string& text) {
    try {
      parse_expr(text);
    } catch (const ParseError& e) {
      return std::make_pair(e.line(), e.column());
    }
    return std::make_pair(std::size_t{0}, std::size_t{0});
  };
  CHECK(position("(abs (var 0)") == std::make_pair(std::size_t{1}, std::size_t{1}));
  CHECK(position("(abs\n  (foo 1))") == std::make_pair(std::size_t{2}, std::size_t{4}));
  CHECK(position("(builtin nope (var 0))") == std::make_pair(std::size_t{1}, std::size_t{10}));
  CHECK(position("(max (var 0))") == std::make_pair(std::size_t{1}, std::size_t{2}));
  CHECK(position("(abs (var 0) (var 1))") == std::make_pair(std::size_t{1}, std::size_t{2}));
  CHECK(position("(const x)") == std::make_pair(std::size_t{1}, std::size_t{8}));
  CHECK(position("(var 0) (var 1)") == std::make_pair(std::size_t{1}, std::size_t{9}));
  CHECK(position("(sum (affine (1 2) 0) (affine (1) 0))") ==
        std::make_pair(std::size_t{1}, std::size_t{24}));
  CHECK_THROWS_AS(parse_expr(""), ParseError);
}

TEST_CASE("round trip over a corpus") {
  std::vector<std::string> corpus = {
      "(const 3)",
      "(const -0.125)",
      "(var 0)",
      "(var 3)",
      "(affine (1 2.5 -3) 0.1)",
      "(sum (var 0) (var 1))",
      "(sum (var 0))",
      "(scale -1 (abs (var 0)))",
      "(max (var 0) (const 0))",
      "(min (var 0) (const 0) (affine (2) 1))",
      "(sq (affine (1e-3) -7))",
      "(builtin xsinlog (var 0))",
      "(builtin xsqsin (scale 3 (var 0)))",
      "(max (sq (var 0)) (abs (var 1)))",
      "(abs (abs (abs (var 0))))",
      "(scale 0.1 (sum (affine (0.1 0.2) 0.3) (const 1e300)))",
      "(min (max (var 0) (var 1)) (max (var 1) (var 2)))",
  };
  for (const char* f : {"neg_abs.sexp", "abs.sexp", "f1.sexp", "f2.sexp", "sum_rule.sexp",
                        "l1.sexp", "l1_weighted.sexp", "pl_model.sexp", "xsqsin.sexp",
                        "xsinlog.sexp", "relu_loss.sexp"}) {
    corpus.push_back(read_fixture(f));
  }
  CHECK(corpus.size() >= 20);
  for (const auto& text : corpus) {
    const Expr e = parse_expr(text);
    const std::string printed = to_string(e);
    const Expr back = parse_expr(printed);
    CHECK_MESSAGE(same_tree(e.root(), back.root()), text);
    CHECK(to_string(back) == printed);
  }
  CounterRng rng(9);
  testing::RandomPa gen(rng, 3);
  for (int k = 0; k < 50; ++k) {
    const Expr e = gen.expression();
    CHECK(same_tree(parse_expr(to_string(e)).root(), e.root()));
  }
}

TEST_CASE("compose_affine substitutes the inner map") {
  CounterRng rng(21);
  testing::RandomPa gen(rng, 2);
  for (int k = 0; k < 50; ++k) {
    const Expr g = gen.expression();
    Mat a0(2, 3);
    for (Eigen::Index i = 0; i < a0.size(); ++i) a0.data()[i] = rng.normal();
    const Vec b = rng.normal_vec(2);
    const Expr f = compose_affine(g, a0, b);
    CHECK(f.dim() == 3);
    const Point x = rng.normal_vec(3);
    CHECK(eval(f, x) == doctest::Approx(eval(g, a0 * x + b)).epsilon(1e-12));
  }
}

TEST_CASE("property: abs agrees with max of the expression and its negation") {
  CounterRng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    testing::RandomPa gen(rng, 1 + static_cast<Eigen::Index>(rng.below(3)));
    const Expr e = gen.expression();
    const Expr lhs = abs(e);
    const Expr rhs = max_of({e, scale(-1.0, e)});
    for (int k = 0; k < 100; ++k) {
      const Point x = rng.uniform_vec(e.dim(), -10, 10);
      CHECK(eval(lhs, x) == eval(rhs, x));
    }
  }
}

TEST_CASE("property: singleton patterns give the finite-difference gradient") {
  CounterRng rng(2);
  int smooth_points = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(3));
    testing::RandomPa gen(rng, n);
    Expr e = gen.expression();
    if (rng.uniform() < 0.3) e = sum({sq(e), e});
    const Point x = rng.uniform_vec(n, -1, 1);
    if (!active_pattern(e, x).smooth()) continue;
    ++smooth_points;
    const Vec g = selection_gradient(e, x);
    const double h = 1e-7;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec ei = Vec::Unit(n, i);
      const double fd = (eval(e, x + h * ei) - eval(e, x - h * ei)) / (2 * h);
      CHECK(std::abs(fd - g[i]) <= 1e-6 * std::max(1.0, std::abs(g[i])));
    }
  }
  CHECK(smooth_points > 200);
}
