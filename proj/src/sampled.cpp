#include <algorithm>
#include <cmath>
#include <limits>

#include "nonsmooth/rng.hpp"
#include "nonsmooth/subdiff.hpp"

namespace nonsmooth {

Evaluator evaluator(const Expr& e) {
  return [e](const Vec& x) { return eval(e, x); };
}

GradientFn gradient_fn(const Expr& e) {
  return [e](const Vec& x) { return selection_gradient(e, x); };
}

DirDerivValue fd_dir_deriv(const Evaluator& f, const Point& x, const Vec& d, const FdOptions& options) {
  require_dim(d.size(), x.size(), "fd_dir_deriv");
  if (options.k_first > options.k_last || options.window < 1) {
    throw Error(ErrorCode::kInvalidArgument, "fd_dir_deriv: empty schedule");
  }
  DirDerivValue r;
  r.exactness = Exactness::kSampled;
  const double f0 = f(x);
  for (int k = options.k_first; k <= options.k_last; ++k) {
    const double t = std::ldexp(1.0, -k);
    r.trace.push_back((f(x + t * d) - f0) / t);
  }
  const auto [lo, hi] = std::minmax_element(r.trace.begin(), r.trace.end());
  r.amplitude = *hi - *lo;
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(options.window), r.trace.size());
  const auto tail = r.trace.end() - static_cast<std::ptrdiff_t>(w);
  const auto [tlo, thi] = std::minmax_element(tail, r.trace.end());
  r.oscillation = *thi - *tlo;
  r.convergent = r.oscillation <= options.tol;
  r.value = r.trace.back();
  return r;
}

DirDerivValue sampled_clarke_dd(const Evaluator& f, const Point& x, const Vec& d, const SampleOptions& options) {
  require_dim(d.size(), x.size(), "sampled_clarke_dd");
  if (!(options.radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sampled_clarke_dd: radius must be positive");
  CounterRng rng(options.seed);
  DirDerivValue r;
  r.kind = DerivKind::kClarke;
  r.exactness = Exactness::kSampled;
  for (int k = 0; k < options.rungs; ++k) {
    const double radius = std::ldexp(options.radius, -k);
    double best = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < options.samples; ++s) {
      const Vec y = x + rng.ball(x.size(), radius);
      // log-uniform step over eight decades below the radius
      const double t = radius * std::pow(10.0, -8.0 * rng.uniform());
      best = std::max(best, (f(y + t * d) - f(y)) / t);
    }
    r.trace.push_back(best);
  }
  r.value = r.trace.back();
  const auto [lo, hi] = std::minmax_element(r.trace.begin(), r.trace.end());
  r.amplitude = *hi - *lo;
  return r;
}

SampledSubdiff gradient_sampling(const GradientFn& g, const Point& x, const SampleOptions& options) {
  if (!(options.radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "gradient_sampling: radius must be positive");
  const Eigen::Index n = x.size();
  CounterRng rng(options.seed);
  SampledSubdiff out;
  SetUnion prev;
  for (int k = 0; k < options.rungs; ++k) {
    const double radius = std::ldexp(options.radius, -k);
    std::vector<Vec> cloud;
    for (int s = 0; s < options.samples; ++s) cloud.push_back(g(x + rng.ball(n, radius)));
    SetUnion cur = SetUnion::of(conv_hull(cloud, n));
    if (k > 0) out.trace.push_back(set_distance(prev, cur));
    prev = std::move(cur);
  }
  out.set.kind = SubdiffKind::kClarke;
  out.set.at = x;
  out.set.exactness = Exactness::kSampled;
  out.set.tolerance = std::ldexp(options.radius, -(options.rungs - 1));
  out.set.set = std::move(prev);
  return out;
}

}  // namespace nonsmooth
