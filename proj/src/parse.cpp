#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>

#include "nonsmooth/expr.hpp"

namespace nonsmooth {

namespace {

struct Token {
  enum Kind { kOpen, kClose, kAtom, kEnd } kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

class Lexer {
 public:
  explicit Lexer(std::string_view s) : s_(s) {}

  Token next() {
    skip();
    if (pos_ >= s_.size()) return Token{Token::kEnd, "", line_, col_};
    const std::size_t l = line_, c = col_;
    const char ch = s_[pos_];
    if (ch == '(' || ch == ')') {
      advance();
      return Token{ch == '(' ? Token::kOpen : Token::kClose, std::string(1, ch), l, c};
    }
    std::string text;
    while (pos_ < s_.size() && !is_space(s_[pos_]) && s_[pos_] != '(' && s_[pos_] != ')' &&
           s_[pos_] != ';') {
      text.push_back(s_[pos_]);
      advance();
    }
    return Token{Token::kAtom, text, l, c};
  }

 private:
  static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

  void advance() {
    if (s_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip() {
    while (pos_ < s_.size()) {
      if (is_space(s_[pos_])) {
        advance();
      } else if (s_[pos_] == ';') {
        while (pos_ < s_.size() && s_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lex_(text) { tok_ = lex_.next(); }

  NodePtr parse_top() {
    NodePtr root = parse_node();
    if (tok_.kind != Token::kEnd) fail(tok_, "unexpected trailing input '" + tok_.text + "'");
    return root;
  }

  Eigen::Index inferred_dim() const { return std::max<Eigen::Index>(1, dim_); }

 private:
  [[noreturn]] static void fail(const Token& t, const std::string& what) {
    throw ParseError(t.line, t.column, what);
  }

  Token take() {
    Token t = tok_;
    tok_ = lex_.next();
    return t;
  }

  void expect(Token::Kind kind, const char* what) {
    if (tok_.kind != kind) {
      fail(tok_, std::string("expected ") + what +
                     (tok_.kind == Token::kEnd ? ", found end of input" : ", found '" + tok_.text + "'"));
    }
    take();
  }

  double number() {
    if (tok_.kind != Token::kAtom) fail(tok_, "expected a number");
    const Token t = take();
    double v = 0.0;
    const char* b = t.text.data();
    const char* e = b + t.text.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || !std::isfinite(v)) fail(t, "invalid number '" + t.text + "'");
    return v;
  }

  Eigen::Index index() {
    if (tok_.kind != Token::kAtom) fail(tok_, "expected an index");
    const Token t = take();
    std::int64_t v = 0;
    const char* b = t.text.data();
    const char* e = b + t.text.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || v < 0) fail(t, "invalid index '" + t.text + "'");
    return static_cast<Eigen::Index>(v);
  }

  NodePtr parse_node() {
    const Token open = tok_;
    expect(Token::kOpen, "'('");
    if (tok_.kind != Token::kAtom) fail(tok_, "expected an operator name");
    const Token op = take();
    Node n;
    if (op.text == "const") {
      n.kind = NodeKind::kConst;
      n.scalar = number();
    } else if (op.text == "var") {
      n.kind = NodeKind::kVar;
      n.index = index();
      dim_ = std::max(dim_, n.index + 1);
    } else if (op.text == "affine") {
      n.kind = NodeKind::kAffine;
      expect(Token::kOpen, "'(' before affine coefficients");
      std::vector<double> a;
      while (tok_.kind == Token::kAtom) a.push_back(number());
      if (a.empty()) fail(tok_, "affine needs at least one coefficient");
      expect(Token::kClose, "')' after affine coefficients");
      n.coeffs = Eigen::Map<Vec>(a.data(), static_cast<Eigen::Index>(a.size()));
      n.scalar = number();
      const Eigen::Index len = n.coeffs.size();
      if (affine_len_ && *affine_len_ != len) {
        fail(op, "affine has " + std::to_string(len) + " coefficients, earlier affine had " +
                     std::to_string(*affine_len_));
      }
      affine_len_ = len;
      dim_ = std::max(dim_, len);
    } else if (op.text == "scale") {
      n.kind = NodeKind::kScale;
      n.scalar = number();
      n.children.push_back(parse_node());
    } else if (op.text == "builtin") {
      n.kind = NodeKind::kBuiltin;
      if (tok_.kind != Token::kAtom) fail(tok_, "expected a builtin name");
      const Token name = take();
      if (!has_builtin(name.text)) fail(name, "unknown builtin '" + name.text + "'");
      n.name = name.text;
      n.children.push_back(parse_node());
    } else if (op.text == "sum" || op.text == "max" || op.text == "min" || op.text == "abs" ||
               op.text == "sq") {
      n.kind = op.text == "sum"   ? NodeKind::kSum
               : op.text == "max" ? NodeKind::kMax
               : op.text == "min" ? NodeKind::kMin
               : op.text == "abs" ? NodeKind::kAbs
                                  : NodeKind::kSq;
      while (tok_.kind == Token::kOpen) n.children.push_back(parse_node());
      const std::size_t k = n.children.size();
      const bool unary = n.kind == NodeKind::kAbs || n.kind == NodeKind::kSq;
      const std::size_t min_arity = n.kind == NodeKind::kSum ? 1 : (unary ? 1 : 2);
      if (k < min_arity || (unary && k > 1)) {
        fail(op, "'" + op.text + "' " +
                     (unary ? std::string("takes exactly one argument")
                            : "needs at least " + std::to_string(min_arity) + " argument(s)") +
                     ", got " + std::to_string(k));
      }
    } else {
      fail(op, "unknown operator '" + op.text + "'");
    }
    if (tok_.kind != Token::kClose) {
      fail(tok_.kind == Token::kEnd ? open : tok_,
           tok_.kind == Token::kEnd ? "unclosed '('"
                                    : "unexpected '" + tok_.text + "' in '" + op.text + "'");
    }
    take();
    return std::make_shared<const Node>(std::move(n));
  }

  Lexer lex_;
  Token tok_;
  Eigen::Index dim_ = 0;
  std::optional<Eigen::Index> affine_len_;
};

void append_double(std::string& out, double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, p);
}

void print(const Node& n, std::string& out) {
  out += '(';
  out += to_string(n.kind);
  switch (n.kind) {
    case NodeKind::kConst:
      out += ' ';
      append_double(out, n.scalar);
      break;
    case NodeKind::kVar:
      out += ' ';
      out += std::to_string(n.index);
      break;
    case NodeKind::kAffine:
      out += " (";
      for (Eigen::Index i = 0; i < n.coeffs.size(); ++i) {
        if (i) out += ' ';
        append_double(out, n.coeffs[i]);
      }
      out += ") ";
      append_double(out, n.scalar);
      break;
    case NodeKind::kScale:
      out += ' ';
      append_double(out, n.scalar);
      break;
    case NodeKind::kBuiltin:
      out += ' ';
      out += n.name;
      break;
    default:
      break;
  }
  for (const auto& c : n.children) {
    out += ' ';
    print(*c, out);
  }
  out += ')';
}

}  // namespace

Expr parse_expr(std::string_view text, Eigen::Index dim) {
  Parser p(text);
  NodePtr root = p.parse_top();
  return Expr(root, dim < 0 ? p.inferred_dim() : dim);
}

std::string to_string(const Expr& e) {
  std::string out;
  print(e.root(), out);
  return out;
}

}  // namespace nonsmooth
