#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nonsmooth {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A point of R^n. Entries are expected to be finite.
using Point = Vec;

enum class ErrorCode {
  kDimensionMismatch,
  kDimensionCapExceeded,
  kUseSampled,
  kEmptySet,
  kUnsupported,
  kInfeasiblePoint,
  kTooManyTies,
  kProjectionNotConverged,
  kParse,
  kInvalidArgument,
  kNonSymmetric,
  kIo,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the expression parser; carries a 1-based source position.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : Error(ErrorCode::kParse, std::to_string(line) + ":" +
                                     std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": expected dimension " +
                    std::to_string(want) + ", got " + std::to_string(got));
  }
}

/// Closed interval [lo, hi] of the real line; lo > hi is never stored.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  static Interval point(double v) { return Interval{v, v}; }
  bool degenerate(double tol = 0.0) const { return hi - lo <= tol; }
  double width() const { return hi - lo; }
  bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
  Interval scaled(double c) const {
    return c >= 0.0 ? Interval{c * lo, c * hi} : Interval{c * hi, c * lo};
  }
  Interval operator+(const Interval& o) const { return Interval{lo + o.lo, hi + o.hi}; }
  bool operator==(const Interval& o) const { return lo == o.lo && hi == o.hi; }
};

/// Sign with Sign(0) resolved to 0.
inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace nonsmooth
