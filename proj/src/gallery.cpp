#include "nonsmooth/gallery.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "nonsmooth/stationarity.hpp"
#include "nonsmooth/subdiff.hpp"

namespace nonsmooth {

namespace {

constexpr double kEndpointTol = 1e-9;

const char* const kNegAbs = "(scale -1 (abs (var 0)))";
const char* const kAbs = "(abs (var 0))";
const char* const kF1 = "(max (scale -1 (abs (var 0))) (affine (1) -1))";
const char* const kF2 = "(max (affine (-1) -1) (min (affine (-1) 0) (const 0)))";
const char* const kSumRule = "(sum (max (var 0) (const 0)) (min (var 0) (const 0)))";
const char* const kL1 = "(sum (abs (var 0)) (abs (var 1)))";
const char* const kXsqsin = "(builtin xsqsin (var 0))";
const char* const kXsinlog = "(builtin xsinlog (var 0))";
const char* const kReluLoss = "(scale 0.5 (sq (sum (max (var 0) (const 0)) (const -1))))";

using Intervals = std::vector<Interval>;

Intervals intervals_of(const SetUnion& s) {
  Intervals out;
  for (const auto& c : s.components) {
    const VPolytope v = to_vpolytope(c);
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    for (const auto& p : v.vertices) {
      lo = std::min(lo, p[0]);
      hi = std::max(hi, p[0]);
    }
    out.push_back(Interval{lo, hi});
  }
  std::sort(out.begin(), out.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  return out;
}

bool same(const Intervals& a, const Intervals& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i].lo - b[i].lo) > kEndpointTol || std::abs(a[i].hi - b[i].hi) > kEndpointTol) return false;
  }
  return true;
}

std::string show(const Intervals& v) {
  if (v.empty()) return "empty";
  // + 0.0 prints -0 as 0
  std::ostringstream os;
  os.precision(10);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << " u ";
    if (v[i].lo == v[i].hi) {
      os << '{' << v[i].lo + 0.0 << '}';
    } else {
      os << '[' << v[i].lo + 0.0 << ", " << v[i].hi + 0.0 << ']';
    }
  }
  return os.str();
}

std::string show(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v + 0.0;
  return os.str();
}

// Accumulates the checks of one entry.
struct Checker {
  GalleryEntry entry;

  void add(const std::string& label, const std::string& want, const std::string& got, bool ok) {
    auto append = [](std::string& s, const std::string& part) { s += (s.empty() ? "" : "; ") + part; };
    append(entry.expected, label + " = " + want);
    append(entry.observed, label + " = " + got);
    if (!ok) entry.pass = false;
  }
  void set(const std::string& label, const SetUnion& s, const Intervals& want) {
    const Intervals got = intervals_of(s);
    add(label, show(want), show(got), same(got, want));
  }
  void value(const std::string& label, double got, double want) {
    add(label, show(want), show(got), std::abs(got - want) <= kEndpointTol);
  }
  void flag(const std::string& label, bool got, bool want) {
    add(label, want ? "true" : "false", got ? "true" : "false", got == want);
  }
};

std::string flags(const StationarityReport& r) {
  return std::string(r.is_d ? "d" : "-") + (r.is_l ? "l" : "-") + (r.is_C ? "C" : "-");
}

GalleryEntry run_entry(const std::string& name, const std::function<void(Checker&)>& body) {
  Checker c;
  c.entry.name = name;
  c.entry.pass = true;
  try {
    body(c);
  } catch (const std::exception& e) {
    c.entry.pass = false;
    c.entry.observed += std::string(c.entry.observed.empty() ? "" : "; ") + "error: " + e.what();
  }
  return c.entry;
}

Point pt(double a) { return Point::Constant(1, a); }

}  // namespace

std::vector<GalleryEntry> run_gallery() {
  std::vector<GalleryEntry> out;
  const Vec plus = Vec::Ones(1);

  out.push_back(run_entry("-|x| at 0", [](Checker& c) {
    const Expr f = parse_expr(kNegAbs);
    c.set("frechet", frechet(f, pt(0)).set, {});
    c.set("limiting", limiting(f, pt(0)).set, {{-1, -1}, {1, 1}});
    c.set("clarke", clarke(f, pt(0)).set, {{-1, 1}});
  }));

  out.push_back(run_entry("f1 = max{-|x|, x-1} at 0", [](Checker& c) {
    const Expr f = parse_expr(kF1);
    c.set("clarke", clarke(f, pt(0)).set, {{-1, 1}});
    c.set("limiting", limiting(f, pt(0)).set, {{-1, -1}, {1, 1}});
    const StationarityReport r = classify(f, pt(0));
    c.add("classify", "--C", flags(r), !r.is_d && !r.is_l && r.is_C);
  }));

  out.push_back(run_entry("f1 at 0.5", [](Checker& c) {
    const StationarityReport r = classify(parse_expr(kF1), pt(0.5));
    c.add("classify", "dlC", flags(r), r.is_d && r.is_l && r.is_C);
  }));

  out.push_back(run_entry("f2 = max{-x-1, min{-x, 0}} at 0", [](Checker& c) {
    const Expr f = parse_expr(kF2);
    c.set("limiting", limiting(f, pt(0)).set, {{-1, -1}, {0, 0}});
    c.set("frechet", frechet(f, pt(0)).set, {});
  }));

  out.push_back(run_entry("f2 at -1", [](Checker& c) {
    const StationarityReport r = classify(parse_expr(kF2), pt(-1));
    c.add("classify", "dlC", flags(r), r.is_d && r.is_l && r.is_C);
  }));

  out.push_back(run_entry("max{x,0} + min{x,0} at 0", [](Checker& c) {
    c.set("clarke(sum)", clarke(parse_expr(kSumRule), pt(0)).set, {{1, 1}});
    const SubdiffSet a = clarke(parse_expr("(max (var 0) (const 0))"), pt(0));
    const SubdiffSet b = clarke(parse_expr("(min (var 0) (const 0))"), pt(0));
    const VPolytope sum = minkowski_sum(to_vpolytope(a.set.components.at(0)), to_vpolytope(b.set.components.at(0)));
    c.set("clarke(max) + clarke(min)", SetUnion::of(sum), {{0, 2}});
  }));

  out.push_back(run_entry("|x1| + |x2| at (1, 0)", [](Checker& c) {
    const Point x = (Point(2) << 1.0, 0.0).finished();
    const SubdiffSet s = convex_catalog_subdiff(*l1_norm(2), x);
    const SubdiffSet e = clarke(parse_expr(kL1), x);
    for (const auto* set : {&s, &e}) {
      const std::string label = set == &s ? "catalog" : "clarke";
      bool ok = set->set.components.size() == 1;
      std::string got = "?";
      if (ok) {
        const VPolytope v = to_vpolytope(set->set.components[0]);
        double x_lo = HUGE_VAL, x_hi = -HUGE_VAL, y_lo = HUGE_VAL, y_hi = -HUGE_VAL;
        for (const auto& p : v.vertices) {
          x_lo = std::min(x_lo, p[0]);
          x_hi = std::max(x_hi, p[0]);
          y_lo = std::min(y_lo, p[1]);
          y_hi = std::max(y_hi, p[1]);
        }
        ok = std::abs(x_lo - 1) <= kEndpointTol && std::abs(x_hi - 1) <= kEndpointTol &&
             std::abs(y_lo + 1) <= kEndpointTol && std::abs(y_hi - 1) <= kEndpointTol && v.vertices.size() == 2;
        got = show({Interval{x_lo, x_hi}}) + " x " + show({Interval{y_lo, y_hi}});
      }
      c.add(label, "{1} x [-1, 1]", got, ok);
    }
  }));

  out.push_back(run_entry("|x|_2 at 0", [](Checker& c) {
    const SubdiffSet s = convex_catalog_subdiff(*l2_norm(2), Point::Zero(2));
    const Ball* ball = s.set.components.size() == 1 ? std::get_if<Ball>(&s.set.components[0]) : nullptr;
    const bool ok = ball && ball->radius == 1.0 && ball->center.norm() == 0.0;
    c.add("catalog", "unit ball", ok ? "unit ball" : to_json(s).dump(), ok);
  }));

  out.push_back(run_entry("x + x^2 sin(1/x) at 0", [&plus](Checker& c) {
    const Expr f = parse_expr(kXsqsin);
    c.set("clarke", clarke(f, pt(0)).set, {{0, 2}});
    c.set("frechet", frechet(f, pt(0)).set, {{1, 1}});
    c.value("f'(0, 1)", dir_deriv(f, pt(0), plus).value, 1.0);
    c.value("f'(0, -1)", dir_deriv(f, pt(0), -plus).value, -1.0);
  }));

  out.push_back(run_entry("x sin(log(1/x)) at 0", [&plus](Checker& c) {
    const Expr f = parse_expr(kXsinlog);
    bool exists = true;
    try {
      dir_deriv(f, pt(0), plus);
    } catch (const Error&) {
      exists = false;
    }
    c.flag("f'(0, 1) exists", exists, false);
    const DirDerivValue fd = fd_dir_deriv(evaluator(f), pt(0), plus);
    c.add("fd quotients", "NON_CONVERGENT, amplitude >= 1.8",
          std::string(fd.convergent ? "CONVERGENT" : "NON_CONVERGENT") + ", amplitude " + show(fd.amplitude),
          !fd.convergent && fd.amplitude >= 1.8);
    c.set("clarke", clarke(f, pt(0)).set, {{-std::sqrt(2.0), std::sqrt(2.0)}});
  }));

  {
    GalleryEntry e = run_entry("(max{w,0} - 1)^2 / 2 at 0", [&plus](Checker& c) {
      const Expr f = parse_expr(kReluLoss);
      const double dd = dir_deriv_1d(f, 0.0, 1.0).value;
      const double cd = clarke_dir_deriv_1d(f, 0.0, 1.0).value;
      c.value("f'(0, 1)", dd, -1.0);
      c.value("f°(0, 1)", cd, 0.0);
      c.add("regular", "false (f' != f°)", dd != cd ? "false" : "true", dd != cd);
      c.value("f°(0, 1) via the piece model", clarke_dir_deriv(f, pt(0), plus).value, 0.0);
    });
    e.note = "f°(0, 1) is 0, not strictly positive: the left piece is constant. f' < f° still shows irregularity.";
    out.push_back(e);
  }

  out.push_back(run_entry("|x| at 0", [](Checker& c) {
    const Expr f = parse_expr(kAbs);
    c.set("frechet", frechet(f, pt(0)).set, {{-1, 1}});
    c.set("limiting", limiting(f, pt(0)).set, {{-1, 1}});
    c.set("clarke", clarke(f, pt(0)).set, {{-1, 1}});
  }));

  return out;
}

}  // namespace nonsmooth
