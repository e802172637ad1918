#include <cmath>

#include "nonsmooth/expr.hpp"

namespace nonsmooth {

namespace {

// x sin(log(1/x)) for x > 0, else 0.
BuiltinFn make_xsinlog() {
  BuiltinFn b;
  b.name = "xsinlog";
  b.value = [](double x) { return x > 0.0 ? x * std::sin(std::log(1.0 / x)) : 0.0; };
  b.derivative = [](double x) {
    if (x <= 0.0) return 0.0;
    const double l = std::log(1.0 / x);
    return std::sin(l) - std::cos(l);
  };
  const double r2 = std::sqrt(2.0);
  b.kinks.push_back(BuiltinKink{0.0, Interval{-1.0, 1.0}, Interval::point(0.0),
                                Interval{-r2, r2}, Interval::point(0.0)});
  return b;
}

// x + x^2 sin(1/x) for x > 0, else x.
BuiltinFn make_xsqsin() {
  BuiltinFn b;
  b.name = "xsqsin";
  b.value = [](double x) { return x > 0.0 ? x + x * x * std::sin(1.0 / x) : x; };
  b.derivative = [](double x) {
    if (x <= 0.0) return 1.0;
    return 1.0 + 2.0 * x * std::sin(1.0 / x) - std::cos(1.0 / x);
  };
  b.kinks.push_back(BuiltinKink{0.0, Interval::point(1.0), Interval::point(-1.0),
                                Interval{0.0, 2.0}, Interval::point(1.0)});
  return b;
}

const std::vector<BuiltinFn>& registry() {
  static const std::vector<BuiltinFn> r{make_xsinlog(), make_xsqsin()};
  return r;
}

}  // namespace

const BuiltinFn& find_builtin(std::string_view name) {
  for (const auto& b : registry()) {
    if (b.name == name) return b;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown builtin '" + std::string(name) + "'");
}

bool has_builtin(std::string_view name) {
  for (const auto& b : registry()) {
    if (b.name == name) return true;
  }
  return false;
}

std::vector<std::string> builtin_names() {
  std::vector<std::string> out;
  for (const auto& b : registry()) out.push_back(b.name);
  return out;
}

}  // namespace nonsmooth
