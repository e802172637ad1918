#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "nonsmooth/common.hpp"

namespace nonsmooth {

/// Counter-based 64-bit generator: output k of stream `key` is
/// mix64(key + (k + 1) * 0x9E3779B97F4A7C15), with mix64 the SplitMix64
/// finalizer. Streams are addressable, so per-trial and per-batch
/// sub-streams derive deterministically from a root seed via `split`.
///
/// Normal and uniform variates are produced by the member functions below
/// rather than <random> distributions, whose algorithms are
/// implementation-defined; results are bit-identical across platforms.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key = 42) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  result_type operator()() {
    ++counter_;
    return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  /// Independent stream keyed by (this key, id).
  CounterRng split(std::uint64_t id) const {
    return CounterRng(mix64(key_ ^ mix64(id + 0x632BE59BD9B4E019ULL)));
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  Vec normal_vec(Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Vec uniform_vec(Eigen::Index n, double lo, double hi) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

  /// Uniform on the closed ball of radius r around the origin.
  Vec ball(Eigen::Index n, double r) {
    Vec g = normal_vec(n);
    const double norm = g.norm();
    if (norm == 0.0) return Vec::Zero(n);
    const double scale = r * std::pow(uniform(), 1.0 / static_cast<double>(n));
    return g * (scale / norm);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : (*this)() % n; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nonsmooth
