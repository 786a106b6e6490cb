#pragma once

#include <gmpxx.h>

#include <charconv>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <system_error>

#include "confinv/error.hpp"

namespace confinv {

/// Arbitrary-precision rational, always kept in canonical form.
using Rational = mpq_class;

inline Rational make_rational(long num, long den = 1) {
  if (den == 0) throw DomainError("rational with zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

inline std::string to_string(const Rational& q) { return q.get_str(); }

inline double to_double(const Rational& q) { return q.get_d(); }

/// Parses "p", "p/q", or a decimal literal such as "-0.125" or "2.5e-3".
inline Rational parse_rational(std::string_view text) {
  auto fail = [&] {
    return DomainError("not a rational literal: '" + std::string(text) + "'");
  };
  if (text.empty()) throw fail();
  if (text.find('/') != std::string_view::npos) {
    Rational q;
    if (q.set_str(std::string(text), 10) != 0) throw fail();
    if (q.get_den() == 0) throw DomainError("rational with zero denominator");
    q.canonicalize();
    return q;
  }
  std::string_view body = text;
  bool negative = false;
  if (body.front() == '+' || body.front() == '-') {
    negative = body.front() == '-';
    body.remove_prefix(1);
  }
  long exponent = 0;
  if (auto e = body.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view exp_text = body.substr(e + 1);
    if (!exp_text.empty() && exp_text.front() == '+') exp_text.remove_prefix(1);
    auto [ptr, ec] =
        std::from_chars(exp_text.data(), exp_text.data() + exp_text.size(), exponent);
    if (ec != std::errc() || ptr != exp_text.data() + exp_text.size()) throw fail();
    body = body.substr(0, e);
  }
  std::string digits;
  bool seen_point = false;
  for (char ch : body) {
    if (ch == '.' && !seen_point) {
      seen_point = true;
    } else if (ch >= '0' && ch <= '9') {
      digits.push_back(ch);
      if (seen_point) --exponent;
    } else {
      throw fail();
    }
  }
  if (digits.empty()) throw fail();
  mpz_class num(digits, 10);
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(exponent < 0 ? -exponent : exponent));
  Rational q = exponent < 0 ? Rational(num, scale) : Rational(num * scale);
  q.canonicalize();
  return negative ? Rational(-q) : q;
}

/// Exact rational equal to the shortest decimal that round-trips `x`.
inline Rational rational_from_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw DomainError("cannot convert floating value to rational");
  return parse_rational(std::string_view(buf, static_cast<std::size_t>(ptr - buf)));
}

inline Rational pow(const Rational& base, int exponent) {
  if (exponent < 0) {
    if (base == 0) throw DomainError("zero raised to a negative power");
    Rational inv = 1 / base;
    return pow(inv, -exponent);
  }
  Rational result = 1;
  for (int i = 0; i < exponent; ++i) result *= base;
  return result;
}

/// Rational square root when both numerator and denominator are squares.
inline std::optional<Rational> exact_sqrt(const Rational& q) {
  if (q < 0) return std::nullopt;
  const mpz_class& num = q.get_num();
  const mpz_class& den = q.get_den();
  if (!mpz_perfect_square_p(num.get_mpz_t()) || !mpz_perfect_square_p(den.get_mpz_t()))
    return std::nullopt;
  mpz_class rn, rd;
  mpz_sqrt(rn.get_mpz_t(), num.get_mpz_t());
  mpz_sqrt(rd.get_mpz_t(), den.get_mpz_t());
  Rational r(rn, rd);
  r.canonicalize();
  return r;
}

/// Uniform random rational p/q with |p| <= max_num and 1 <= q <= max_den.
template <class Rng>
Rational random_rational(Rng& rng, long max_num, long max_den, bool positive = false) {
  std::uniform_int_distribution<long> num(positive ? 1 : -max_num, max_num);
  std::uniform_int_distribution<long> den(1, max_den);
  return make_rational(num(rng), den(rng));
}

}  // namespace confinv
