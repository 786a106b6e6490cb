#pragma once

#include <cctype>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <string_view>

#include "confinv/error.hpp"
#include "confinv/rational.hpp"

namespace confinv {

/// Exact value sum_k q_k pi^k with rational q_k and k >= 0.
///
/// Zero coefficients are never stored, so structural equality is value
/// equality (pi is transcendental).
class PiScaled {
 public:
  PiScaled() = default;
  PiScaled(const Rational& q) { add_term(0, q); }  // NOLINT(implicit)
  PiScaled(long n) : PiScaled(Rational(n)) {}       // NOLINT(implicit)

  static PiScaled term(int power, const Rational& coeff) {
    if (power < 0) throw DomainError("negative power of pi is not representable");
    PiScaled v;
    v.add_term(power, coeff);
    return v;
  }
  static PiScaled pi_power(int power) { return term(power, Rational(1)); }

  const std::map<int, Rational>& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }

  Rational coefficient(int power) const {
    auto it = terms_.find(power);
    return it == terms_.end() ? Rational(0) : it->second;
  }

  /// True when the value is q * pi^k for a single k (or zero).
  bool is_monomial() const noexcept { return terms_.size() <= 1; }

  double to_double() const {
    double sum = 0.0;
    for (const auto& [k, q] : terms_) sum += q.get_d() * std::pow(std::numbers::pi, k);
    return sum;
  }

  /// Sign of the value; exact for monomials, otherwise decided in floating
  /// point after ruling out zero.
  int sign() const {
    if (terms_.empty()) return 0;
    if (terms_.size() == 1) return sgn(terms_.begin()->second);
    double v = to_double();
    return v > 0 ? 1 : (v < 0 ? -1 : 0);
  }

  PiScaled& operator+=(const PiScaled& rhs) {
    for (const auto& [k, q] : rhs.terms_) add_term(k, q);
    return *this;
  }
  PiScaled& operator-=(const PiScaled& rhs) {
    for (const auto& [k, q] : rhs.terms_) add_term(k, Rational(-q));
    return *this;
  }
  PiScaled& operator*=(const PiScaled& rhs) {
    PiScaled out;
    for (const auto& [ka, qa] : terms_)
      for (const auto& [kb, qb] : rhs.terms_) out.add_term(ka + kb, Rational(qa * qb));
    *this = std::move(out);
    return *this;
  }
  PiScaled& operator*=(const Rational& s) {
    if (s == 0) {
      terms_.clear();
      return *this;
    }
    for (auto& [k, q] : terms_) q *= s;
    return *this;
  }

  friend PiScaled operator+(PiScaled a, const PiScaled& b) { return a += b; }
  friend PiScaled operator-(PiScaled a, const PiScaled& b) { return a -= b; }
  friend PiScaled operator*(PiScaled a, const PiScaled& b) { return a *= b; }
  friend PiScaled operator*(PiScaled a, const Rational& s) { return a *= s; }
  friend PiScaled operator*(const Rational& s, PiScaled a) { return a *= s; }
  friend PiScaled operator-(PiScaled a) { return a *= Rational(-1); }
  friend bool operator==(const PiScaled& a, const PiScaled& b) { return a.terms_ == b.terms_; }

  /// Division by a monomial value q*pi^k, which must divide every term.
  PiScaled divided_by(const PiScaled& divisor) const {
    if (divisor.terms_.size() != 1)
      throw RepresentationError("division by a non-monomial pi-scaled value");
    const auto& [kd, qd] = *divisor.terms_.begin();
    PiScaled out;
    for (const auto& [k, q] : terms_) {
      if (k < kd) throw RepresentationError("division leaves a negative power of pi");
      out.add_term(k - kd, Rational(q / qd));
    }
    return out;
  }

  /// Canonical text: terms in decreasing power of pi, e.g.
  /// "-528/25*pi^2", "64*pi^3 - 1/3*pi", "0".
  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::string out;
    bool first = true;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      const auto& [k, q] = *it;
      Rational mag = abs(q);
      if (first) {
        if (q < 0) out += "-";
      } else {
        out += q < 0 ? " - " : " + ";
      }
      first = false;
      if (k == 0) {
        out += mag.get_str();
        continue;
      }
      if (mag != 1) out += mag.get_str() + "*";
      out += "pi";
      if (k > 1) out += "^" + std::to_string(k);
    }
    return out;
  }

  /// Inverse of to_string(); also accepts "p/q*pi^k" with q = 1, "pi^k*p/q"
  /// is not supported. Whitespace is ignored.
  static PiScaled parse(std::string_view text) {
    std::string s;
    for (char c : text)
      if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    auto fail = [&](const std::string& why) {
      return DomainError("invalid pi-scaled value '" + std::string(text) + "': " + why);
    };
    if (s.empty()) throw fail("empty");
    PiScaled out;
    std::size_t pos = 0;
    while (pos < s.size()) {
      int sign = 1;
      if (s[pos] == '+' || s[pos] == '-') {
        sign = s[pos] == '-' ? -1 : 1;
        ++pos;
      } else if (pos != 0) {
        throw fail("expected '+' or '-' between terms");
      }
      std::size_t end = pos;
      while (end < s.size() && s[end] != '+' && s[end] != '-') {
        // exponent signs inside decimal literals ("1e-3") are part of the term
        if ((s[end] == 'e' || s[end] == 'E') && end + 1 < s.size() &&
            (s[end + 1] == '+' || s[end + 1] == '-') && end > pos &&
            std::isdigit(static_cast<unsigned char>(s[end - 1]))) {
          end += 2;
          continue;
        }
        ++end;
      }
      std::string_view body(s.data() + pos, end - pos);
      if (body.empty()) throw fail("empty term");
      Rational coeff = 1;
      int power = 0;
      std::size_t pi_at = body.find("pi");
      if (pi_at == std::string_view::npos) {
        coeff = parse_rational(body);
      } else {
        std::string_view head = body.substr(0, pi_at);
        std::string_view tail = body.substr(pi_at + 2);
        if (!head.empty()) {
          if (head.back() != '*') throw fail("expected '*' before pi");
          head.remove_suffix(1);
          coeff = parse_rational(head);
        }
        power = 1;
        if (!tail.empty()) {
          if (tail.front() != '^') throw fail("unexpected text after pi");
          tail.remove_prefix(1);
          auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), power);
          if (ec != std::errc() || ptr != tail.data() + tail.size() || power < 0)
            throw fail("bad power of pi");
        }
      }
      out.add_term(power, Rational(sign * coeff));
      pos = end;
    }
    return out;
  }

 private:
  void add_term(int power, const Rational& q) {
    if (q == 0) return;
    auto [it, inserted] = terms_.try_emplace(power, q);
    if (!inserted) {
      it->second += q;
      if (it->second == 0) terms_.erase(it);
    }
  }

  std::map<int, Rational> terms_;
};

inline std::string to_string(const PiScaled& v) { return v.to_string(); }

}  // namespace confinv
