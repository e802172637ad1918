#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "nonsmooth/common.hpp"

namespace nonsmooth {

enum class NodeKind { kConst, kVar, kAffine, kSum, kScale, kMax, kMin, kAbs, kSq, kBuiltin };

const char* to_string(NodeKind kind);

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// One node of an expression tree. Nodes are immutable and may be shared.
struct Node {
  NodeKind kind = NodeKind::kConst;
  double scalar = 0.0;     // Const value, Scale factor, Affine offset
  Eigen::Index index = 0;  // Var
  Vec coeffs;              // Affine
  std::string name;        // Builtin
  std::vector<NodePtr> children;
};

/// A function R^dim -> R given by a finite expression tree. Every Affine
/// node has exactly `dim` coefficients and every Var index is below `dim`.
class Expr {
 public:
  Expr(NodePtr root, Eigen::Index dim);

  const Node& root() const { return *root_; }
  const NodePtr& node() const { return root_; }
  Eigen::Index dim() const { return dim_; }

  /// The same tree read as a function on R^n; throws on conflicts.
  Expr with_dim(Eigen::Index n) const;

 private:
  NodePtr root_;
  Eigen::Index dim_;
};

// Builders. Leaves carry the smallest dimension they make sense in; inner
// nodes take the maximum over their children.
Expr constant(double c, Eigen::Index dim = 0);
Expr var(Eigen::Index i, Eigen::Index dim = -1);
Expr affine(Vec a, double b);
Expr sum(std::vector<Expr> terms);
Expr scale(double c, const Expr& e);
Expr max_of(std::vector<Expr> terms);
Expr min_of(std::vector<Expr> terms);
Expr abs(const Expr& e);
Expr sq(const Expr& e);
Expr builtin(const std::string& name, const Expr& e);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator*(double c, const Expr& e);

/// x -> g(A0 x + b).
Expr compose_affine(const Expr& g, const Mat& a0, const Vec& b);

double eval(const Expr& e, const Point& x);

// ---------------------------------------------------------------------------
// Named one-dimensional pieces.

/// Behaviour of a builtin at one of its non-differentiability points k.
/// Dini intervals bound the quotients (phi(k + t d) - phi(k)) / t as t -> 0+
/// for d = +1 (right) and d = -1 (left); cluster intervals are the limit
/// sets of phi'(y) as y -> k from that side.
struct BuiltinKink {
  double at = 0.0;
  Interval dini_right;
  Interval dini_left;
  Interval cluster_right;
  Interval cluster_left;
};

struct BuiltinFn {
  std::string name;
  std::function<double(double)> value;
  /// Derivative away from kinks; at a kink returns an arbitrary element of
  /// the cluster set (used only by a.e. gradient samplers).
  std::function<double(double)> derivative;
  std::vector<BuiltinKink> kinks;
};

/// Throws kInvalidArgument for unknown names.
const BuiltinFn& find_builtin(std::string_view name);
bool has_builtin(std::string_view name);
std::vector<std::string> builtin_names();

// ---------------------------------------------------------------------------
// Fragments and activity.

enum class FragmentClass { kPA, kPLQ, kSmooth1D, kGeneral };

const char* to_string(FragmentClass c);

FragmentClass classify_fragment(const Expr& e);

/// Activity of one Max/Min/Abs node; `node` is the preorder index of the
/// node in the tree and child indices are 0-based.
struct NodeActivity {
  int node = 0;
  NodeKind kind = NodeKind::kMax;
  std::vector<int> active;  // Max/Min
  int sign = 0;             // Abs: +1, -1, or 0 within tol
  double value = 0.0;
};

struct ActivePattern {
  std::vector<NodeActivity> entries;

  /// Every Max/Min has one active child and no Abs child is zero.
  bool smooth() const;
};

ActivePattern active_pattern(const Expr& e, const Point& x, double tol = 0.0);

/// Gradient of the active smooth selection at x, breaking ties by the
/// smallest child index and Sign(0) = 0. Equals the gradient wherever the
/// function is differentiable and the pattern is singleton.
Vec selection_gradient(const Expr& e, const Point& x);

// ---------------------------------------------------------------------------
// Text format:
//   expr := (const R) | (var N) | (affine (R+) R) | (sum expr+)
//         | (scale R expr) | (max expr expr+) | (min expr expr+)
//         | (abs expr) | (sq expr) | (builtin NAME expr)
// ';' starts a comment that runs to the end of the line.

/// Parses an expression. dim < 0 infers the dimension (at least 1).
Expr parse_expr(std::string_view text, Eigen::Index dim = -1);

/// Prints with shortest round-trip doubles; parse_expr inverts it.
std::string to_string(const Expr& e);

bool same_tree(const Node& a, const Node& b);

}  // namespace nonsmooth
