#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "confinv/pi_exact.hpp"
#include "confinv/rational.hpp"

using namespace confinv;

TEST_CASE("rational literals parse exactly") {
  CHECK(parse_rational("3") == Rational(3));
  CHECK(parse_rational("-7/21") == Rational(-1, 3));
  CHECK(parse_rational("0.125") == Rational(1, 8));
  CHECK(parse_rational("2.5e-3") == Rational(1, 400));
  CHECK(parse_rational("-1E2") == Rational(-100));
  CHECK_THROWS_AS(parse_rational("1/0"), DomainError);
  CHECK_THROWS_AS(parse_rational("abc"), DomainError);
  CHECK_THROWS_AS(parse_rational(""), DomainError);
}

TEST_CASE("shortest decimal of a double") {
  CHECK(rational_from_double(0.1) == Rational(1, 10));
  CHECK(rational_from_double(-2.75) == Rational(-11, 4));
}

TEST_CASE("integer powers and square roots") {
  CHECK(pow(Rational(2, 3), 3) == Rational(8, 27));
  CHECK(pow(Rational(2, 3), -2) == Rational(9, 4));
  CHECK_THROWS_AS(pow(Rational(0), -1), DomainError);
  CHECK(exact_sqrt(Rational(9, 49)).value() == Rational(3, 7));
  CHECK_FALSE(exact_sqrt(Rational(2)).has_value());
}

TEST_CASE("pi-graded values print and parse") {
  PiScaled a = PiScaled::term(2, Rational(-96));
  CHECK(a.to_string() == "-96*pi^2");
  CHECK(PiScaled::parse("-96/1*pi^2") == a);
  CHECK(PiScaled::parse("-528/25*pi^2") == PiScaled::term(2, Rational(-528, 25)));
  PiScaled mixed = PiScaled(Rational(1, 2)) + PiScaled::term(1, Rational(-3)) + PiScaled::term(3, Rational(7, 5));
  CHECK(PiScaled::parse(mixed.to_string()) == mixed);
  CHECK(PiScaled::parse("pi") == PiScaled::pi_power(1));
  CHECK(PiScaled(0).to_string() == "0");
  CHECK(PiScaled::parse("0").is_zero());
  CHECK_THROWS_AS(PiScaled::parse("2*pix"), DomainError);
  CHECK_THROWS_AS(PiScaled::parse("pi^-1"), DomainError);
}

TEST_CASE("pi-graded arithmetic") {
  PiScaled v = PiScaled::term(1, Rational(4)) * PiScaled::term(2, Rational(8, 3));
  CHECK(v == PiScaled::term(3, Rational(32, 3)));
  CHECK(v.is_monomial());
  CHECK(v.sign() > 0);
  CHECK((v - v).is_zero());
  CHECK(v.to_double() == Catch::Approx(32.0 / 3 * M_PI * M_PI * M_PI).epsilon(1e-15));
  CHECK((-v).sign() < 0);
}

TEST_CASE("printed pi-graded values round-trip on random inputs") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pw(0, 4);
  for (int k = 0; k < 200; ++k) {
    PiScaled v;
    for (int t = 0; t < 3; ++t) v += PiScaled::term(pw(rng), random_rational(rng, 1000, 97));
    CHECK(PiScaled::parse(v.to_string()) == v);
  }
}
