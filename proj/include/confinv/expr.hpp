#pragma once

// Closed-form scalar expressions in the chart coordinates x1..x6.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | '+' unary | power
//   power   := atom ('^' ['-'] integer)?
//   atom    := number | 'pi' | 'x'digit | func '(' expr ')' | '(' expr ')'
//   func    := 'sin' | 'cos' | 'exp'
//
// Numeric literals are parsed exactly; an integer literal divided by an
// integer literal folds into one rational constant, so printing and
// reparsing is the identity on parsed trees.

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "confinv/error.hpp"
#include "confinv/jet.hpp"
#include "confinv/rational.hpp"

namespace confinv {

class Expr {
 public:
  enum class Kind { constant, pi, var, neg, add, sub, mul, div, pow, sin, cos, exp };

  Expr() : Expr(constant(Rational(0))) {}

  static Expr constant(const Rational& q) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::constant;
    n->value = q;
    return Expr(std::move(n));
  }
  static Expr pi() { return leaf(Kind::pi); }
  /// Coordinate x_{index+1}.
  static Expr var(int index) {
    if (index < 0 || index >= 6) throw DomainError("coordinate index must be in 0..5");
    Expr e = leaf(Kind::var);
    std::const_pointer_cast<Node>(e.node_)->index = index;
    return e;
  }
  static Expr unary(Kind k, Expr a) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->args = {std::move(a)};
    return Expr(std::move(n));
  }
  static Expr binary(Kind k, Expr a, Expr b) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->args = {std::move(a), std::move(b)};
    return Expr(std::move(n));
  }
  static Expr power(Expr base, int exponent) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::pow;
    n->index = exponent;
    n->args = {std::move(base)};
    return Expr(std::move(n));
  }

  Kind kind() const { return node_->kind; }
  const Rational& value() const { return node_->value; }
  /// Variable index for var, exponent for pow.
  int index() const { return node_->index; }
  const std::vector<Expr>& args() const { return node_->args; }

  /// Bit i set when x_{i+1} occurs.
  unsigned free_variables() const {
    if (kind() == Kind::var) return 1u << index();
    unsigned m = 0;
    for (const auto& a : args()) m |= a.free_variables();
    return m;
  }

  friend bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return true;
    if (a.kind() != b.kind() || a.index() != b.index()) return false;
    if (a.kind() == Kind::constant && a.value() != b.value()) return false;
    if (a.args().size() != b.args().size()) return false;
    for (std::size_t i = 0; i < a.args().size(); ++i)
      if (!(a.args()[i] == b.args()[i])) return false;
    return true;
  }

  friend Expr operator+(Expr a, Expr b) { return binary(Kind::add, std::move(a), std::move(b)); }
  friend Expr operator-(Expr a, Expr b) { return binary(Kind::sub, std::move(a), std::move(b)); }
  friend Expr operator*(Expr a, Expr b) { return binary(Kind::mul, std::move(a), std::move(b)); }
  friend Expr operator/(Expr a, Expr b) { return binary(Kind::div, std::move(a), std::move(b)); }
  friend Expr operator-(Expr a) { return unary(Kind::neg, std::move(a)); }

 private:
  struct Node {
    Kind kind = Kind::constant;
    Rational value;
    int index = 0;
    std::vector<Expr> args;
  };
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  static Expr leaf(Kind k) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    return Expr(std::move(n));
  }

  std::shared_ptr<const Node> node_;
};

namespace detail {

inline int precedence(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::add:
    case Expr::Kind::sub: return 1;
    case Expr::Kind::mul:
    case Expr::Kind::div: return 2;
    case Expr::Kind::neg: return 3;
    case Expr::Kind::pow: return 4;
    case Expr::Kind::constant:
      if (e.value() < 0) return 3;
      return e.value().get_den() == 1 ? 5 : 2;
    default: return 5;
  }
}

inline void print(const Expr& e, std::string& out);

inline void print_wrapped(const Expr& e, bool wrap, std::string& out) {
  if (wrap) out += '(';
  print(e, out);
  if (wrap) out += ')';
}

inline void print(const Expr& e, std::string& out) {
  using K = Expr::Kind;
  const auto& a = e.args();
  switch (e.kind()) {
    case K::constant: {
      const Rational& q = e.value();
      if (q < 0) {
        out += '-';
        Rational m = -q;
        // a negative fraction reads as -(p/q) so it reparses to one constant
        if (m.get_den() != 1) out += "(" + m.get_str() + ")";
        else out += m.get_str();
      } else {
        out += q.get_str();
      }
      return;
    }
    case K::pi: out += "pi"; return;
    case K::var: out += "x" + std::to_string(e.index() + 1); return;
    case K::neg:
      out += '-';
      print_wrapped(a[0], precedence(a[0]) < 3, out);
      return;
    case K::add:
    case K::sub:
      print_wrapped(a[0], precedence(a[0]) < 1, out);
      out += e.kind() == K::add ? " + " : " - ";
      print_wrapped(a[1], precedence(a[1]) <= 1 || (precedence(a[1]) == 3), out);
      return;
    case K::mul:
    case K::div:
      print_wrapped(a[0], precedence(a[0]) < 2 || precedence(a[0]) == 3, out);
      out += e.kind() == K::mul ? "*" : "/";
      {
        // keep "(2)/3"-style trees from folding into a literal on reparse
        bool literal_pair = e.kind() == K::div && a[0].kind() == K::constant &&
                            a[0].value() >= 0 && a[0].value().get_den() == 1 &&
                            a[1].kind() == K::constant;
        print_wrapped(a[1], precedence(a[1]) <= 3 || literal_pair, out);
      }
      return;
    case K::pow:
      print_wrapped(a[0], precedence(a[0]) < 5, out);
      out += "^" + std::to_string(e.index());
      return;
    case K::sin:
    case K::cos:
    case K::exp:
      out += e.kind() == K::sin ? "sin(" : e.kind() == K::cos ? "cos(" : "exp(";
      print(a[0], out);
      out += ')';
      return;
  }
}

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : s_(text) {}

  Expr parse() {
    Expr e = expr();
    skip_space();
    if (pos_ < s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  struct Parsed {
    Expr e;
    bool integer_literal = false;
  };

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      skip_space();
      if (accept('+')) lhs = lhs + term();
      else if (accept('-')) lhs = lhs - term();
      else return lhs;
    }
  }

  Expr term() {
    Parsed lhs = unary();
    for (;;) {
      skip_space();
      if (accept('*')) {
        lhs = {lhs.e * unary().e, false};
      } else if (accept('/')) {
        Parsed rhs = unary();
        if (lhs.integer_literal && rhs.integer_literal) {
          if (rhs.e.value() == 0) fail_at(rhs_pos_, "division by zero literal");
          lhs = {Expr::constant(Rational(lhs.e.value() / rhs.e.value())), false};
        } else {
          lhs = {lhs.e / rhs.e, false};
        }
      } else {
        return lhs.e;
      }
    }
  }

  Parsed unary() {
    skip_space();
    if (accept('-')) {
      Parsed inner = unary();
      // fold negated constants so "-3" and "-(1/2)" are single literals
      if (inner.e.kind() == Expr::Kind::constant)
        return {Expr::constant(Rational(-inner.e.value())), false};
      return {-inner.e, false};
    }
    if (accept('+')) return unary();
    return power();
  }

  Parsed power() {
    Parsed base = atom();
    skip_space();
    if (accept('^')) {
      skip_space();
      bool neg = accept('-');
      skip_space();
      std::size_t start = pos_;
      long n = 0;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        n = n * 10 + (s_[pos_] - '0');
        if (n > 64) fail_at(start, "exponent too large");
        ++pos_;
      }
      if (pos_ == start) fail("expected an integer exponent");
      skip_space();
      if (pos_ < s_.size() && s_[pos_] == '^') fail("chained exponents are not supported");
      return {Expr::power(base.e, static_cast<int>(neg ? -n : n)), false};
    }
    return base;
  }

  Parsed atom() {
    skip_space();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char ch = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') return number();
    if (accept('(')) {
      Expr e = expr();
      skip_space();
      if (!accept(')')) fail("expected ')'");
      return {e, false};
    }
    if (std::isalpha(static_cast<unsigned char>(ch))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      std::string_view word = s_.substr(start, pos_ - start);
      if (word == "pi") return {Expr::pi(), false};
      if (word.size() == 2 && word[0] == 'x' && word[1] >= '1' && word[1] <= '6')
        return {Expr::var(word[1] - '1'), false};
      Expr::Kind k;
      if (word == "sin") k = Expr::Kind::sin;
      else if (word == "cos") k = Expr::Kind::cos;
      else if (word == "exp") k = Expr::Kind::exp;
      else fail_at(start, "unknown identifier '" + std::string(word) + "'");
      skip_space();
      if (!accept('(')) fail("expected '(' after function name");
      Expr arg = expr();
      skip_space();
      if (!accept(')')) fail("expected ')'");
      return {Expr::unary(k, arg), false};
    }
    fail("unexpected '" + std::string(1, ch) + "'");
  }

  Parsed number() {
    std::size_t start = pos_;
    bool integral = true;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      integral = false;
      ++pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        integral = false;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      } else {
        pos_ = save;
      }
    }
    std::string_view lit = s_.substr(start, pos_ - start);
    rhs_pos_ = start;
    try {
      return {Expr::constant(parse_rational(lit)), integral};
    } catch (const DomainError&) {
      fail_at(start, "malformed number '" + std::string(lit) + "'");
    }
  }

  void skip_space() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const { fail_at(pos_, what); }
  [[noreturn]] void fail_at(std::size_t at, const std::string& what) const {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < at && i < s_.size(); ++i) {
      if (s_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(what, line, col);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t rhs_pos_ = 0;
};

}  // namespace detail

inline Expr parse_expr(std::string_view text) { return detail::ExprParser(text).parse(); }

inline std::string to_string(const Expr& e) {
  std::string out;
  detail::print(e, out);
  return out;
}

/// Value at a point of R^6 (coordinates not used by e may be anything).
inline double eval(const Expr& e, std::span<const double> x) {
  using K = Expr::Kind;
  const auto& a = e.args();
  switch (e.kind()) {
    case K::constant: return e.value().get_d();
    case K::pi: return std::numbers::pi;
    case K::var:
      if (static_cast<std::size_t>(e.index()) >= x.size())
        throw DimensionError("expression uses x" + std::to_string(e.index() + 1) +
                             " beyond the point dimension");
      return x[e.index()];
    case K::neg: return -eval(a[0], x);
    case K::add: return eval(a[0], x) + eval(a[1], x);
    case K::sub: return eval(a[0], x) - eval(a[1], x);
    case K::mul: return eval(a[0], x) * eval(a[1], x);
    case K::div: {
      double d = eval(a[1], x);
      if (d == 0.0) throw SingularEvaluation("division by zero in " + to_string(e));
      return eval(a[0], x) / d;
    }
    case K::pow: {
      double b = eval(a[0], x);
      if (b == 0.0 && e.index() < 0) throw SingularEvaluation("negative power of zero in " + to_string(e));
      return std::pow(b, e.index());
    }
    case K::sin: return std::sin(eval(a[0], x));
    case K::cos: return std::cos(eval(a[0], x));
    case K::exp: return std::exp(eval(a[0], x));
  }
  return 0.0;
}

/// Taylor expansion of e at `point` to order K. Coordinate i is expanded in
/// jet variable var_of_coord[i]; coordinates mapped to -1 are held fixed.
inline Jet jet_eval(const Expr& e, std::span<const double> point, int order, int nvars,
                    std::span<const int> var_of_coord) {
  using K = Expr::Kind;
  const auto& a = e.args();
  auto rec = [&](const Expr& s) { return jet_eval(s, point, order, nvars, var_of_coord); };
  switch (e.kind()) {
    case K::constant: return Jet::constant(nvars, order, e.value().get_d());
    case K::pi: return Jet::constant(nvars, order, std::numbers::pi);
    case K::var: {
      const auto i = static_cast<std::size_t>(e.index());
      if (i >= point.size())
        throw DimensionError("expression uses x" + std::to_string(i + 1) +
                             " beyond the point dimension");
      int v = i < var_of_coord.size() ? var_of_coord[i] : -1;
      if (v < 0) return Jet::constant(nvars, order, point[i]);
      return Jet::variable(nvars, order, v, point[i]);
    }
    case K::neg: return -rec(a[0]);
    case K::add: return rec(a[0]) + rec(a[1]);
    case K::sub: return rec(a[0]) - rec(a[1]);
    case K::mul: return rec(a[0]) * rec(a[1]);
    case K::div: {
      Jet d = rec(a[1]);
      if (d.value() == 0.0) throw SingularEvaluation("division by zero in " + to_string(e));
      return rec(a[0]) * d.reciprocal();
    }
    case K::pow: {
      Jet b = rec(a[0]);
      if (b.value() == 0.0 && e.index() < 0)
        throw SingularEvaluation("negative power of zero in " + to_string(e));
      return pow(b, e.index());
    }
    case K::sin: return sin(rec(a[0]));
    case K::cos: return cos(rec(a[0]));
    case K::exp: return exp(rec(a[0]));
  }
  return Jet::constant(nvars, order, 0.0);
}

/// Expansion in all coordinates of the point (variable i is x_{i+1}).
inline Jet jet_eval(const Expr& e, std::span<const double> point, int order) {
  std::vector<int> map(point.size());
  for (std::size_t i = 0; i < map.size(); ++i) map[i] = static_cast<int>(i);
  return jet_eval(e, point, order, static_cast<int>(point.size()), map);
}

}  // namespace confinv
