#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "confinv/expr.hpp"
#include "oracles.hpp"

using namespace confinv;

namespace {

double at(const std::string& s, std::initializer_list<double> x) {
  std::vector<double> p(x);
  p.resize(6, 0.0);
  return eval(parse_expr(s), p);
}

int error_column(const std::string& s) {
  try {
    parse_expr(s);
  } catch (const ParseError& e) {
    return e.column();
  }
  return -1;
}

}  // namespace

TEST_CASE("operator precedence and associativity") {
  CHECK(at("1 + 2*3", {}) == 7);
  CHECK(at("2*3^2", {}) == 18);
  CHECK(at("-x1^2", {3}) == -9);
  CHECK(at("8/4/2", {}) == 1);
  CHECK(at("x1 - x2 - x3", {1, 2, 3}) == -4);
  CHECK(at("(x1 - x2) * -x3", {1, 2, 3}) == 3);
  CHECK(at("x1^-1", {4}) == 0.25);
  CHECK(at("sin(pi/2) + cos(0) + exp(0)", {}) == Catch::Approx(3.0));
  CHECK(at("0.1*sin(x3)", {0, 0, 0.5}) == Catch::Approx(0.1 * std::sin(0.5)));
  CHECK(at("1.5e2", {}) == 150);
}

TEST_CASE("integer literal quotients fold to exact constants") {
  Expr e = parse_expr("2/6");
  REQUIRE(e.kind() == Expr::Kind::constant);
  CHECK(e.value() == make_rational(1, 3));
  Expr n = parse_expr("-(3/4)");
  REQUIRE(n.kind() == Expr::Kind::constant);
  CHECK(n.value() == make_rational(-3, 4));
  CHECK(parse_expr("x1/2").kind() == Expr::Kind::div);
}

TEST_CASE("free variables") {
  CHECK(parse_expr("x1*sin(x3) + x6").free_variables() == 0b100101u);
  CHECK(parse_expr("pi^2").free_variables() == 0u);
}

TEST_CASE("printing round-trips through the parser") {
  for (const char* s : {"0.3*sin(x1)*cos(x2)", "-x1^2 + 1/3", "exp(-(x1 - x2)^2)", "x1/(2 + cos(x4))",
                        "-(x1*x2)^3", "x5 - (x6 - x1)", "2^-3*x2", "pi*x1/7"}) {
    Expr e = parse_expr(s);
    INFO(s << " -> " << to_string(e));
    CHECK(parse_expr(to_string(e)) == e);
  }
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 200; ++t) {
    Expr tree = testutil::random_expr(rng, 4, 6);
    Expr e1 = parse_expr(to_string(tree));
    Expr e2 = parse_expr(to_string(e1));
    INFO(to_string(tree));
    CHECK(e1 == e2);
    CHECK(to_string(e1) == to_string(e2));
    double p[6];
    long double pl[6];
    for (int i = 0; i < 6; ++i) pl[i] = p[i] = u(rng);
    double ref = static_cast<double>(testutil::eval_ld(tree, pl));
    CHECK(eval(e1, p) == Catch::Approx(ref).epsilon(1e-12).margin(1e-12));
  }
}

TEST_CASE("syntax errors carry line and column") {
  CHECK(error_column("sin(") == 5);
  CHECK(error_column("1 + * 2") == 5);
  CHECK(error_column("foo(x1)") == 1);
  CHECK(error_column("x1 + x7") == 6);
  CHECK(error_column("(x1 + 2") == 8);
  CHECK(error_column("x1 ^ x2") == 6);
  CHECK(error_column("x1^2^3") == 5);
  CHECK(error_column("3/0") == 3);
  CHECK(error_column("x1 x2") == 4);
  CHECK(error_column("") == 1);
  try {
    parse_expr("x1 +\n  $");
    FAIL("expected a syntax error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 3);
  }
}
