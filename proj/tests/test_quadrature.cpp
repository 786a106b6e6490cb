#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "confinv/quadrature.hpp"

using namespace confinv;

namespace {

constexpr double pi = std::numbers::pi;

ManifoldSpec make(std::vector<FactorSpec> f, std::optional<std::string> u = {}) {
  ManifoldSpec s;
  s.factors = std::move(f);
  if (u) s.conformal_u = parse_expr(*u);
  return s;
}

FactorSpec torus(int d, double period_over_pi = 2) {
  return FactorSpec::torus(d, PiScaled::term(1, rational_from_double(period_over_pi)));
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

bool has(const InvariantReport& r, VerdictKind k) {
  for (const auto& v : r.verdicts)
    if (v.kind == k) return true;
  return false;
}

}  // namespace

TEST_CASE("axis rules integrate polynomials and trigonometric sums") {
  auto gl = gauss_legendre(8, -1.0, 2.0);
  double s = 0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) s += gl.weights[i] * std::pow(gl.nodes[i], 15);
  CHECK(s == Catch::Approx((std::pow(2.0, 16) - 1) / 16).epsilon(1e-13));
  auto odd = gauss_legendre(7, 0.0, 1.0);
  CHECK(odd.nodes.size() == 7);
  CHECK(odd.nodes[3] == Catch::Approx(0.5));
  auto tr = trapezoid(10, 0.0, 2 * pi);
  double c = 0;
  for (std::size_t i = 0; i < tr.nodes.size(); ++i) c += tr.weights[i] * std::pow(std::cos(tr.nodes[i]), 8);
  CHECK(c == Catch::Approx(2 * pi * 35.0 / 128.0).epsilon(1e-14));
  CHECK_THROWS_AS(gauss_legendre(0, 0, 1), DomainError);
}

TEST_CASE("latitude rules absorb the cosine weight") {
  // int cos^m sin^(2k) over (-pi/2, pi/2) = B(k + 1/2, (m + 1)/2)
  auto beta = [](double x, double y) { return std::exp(std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y)); };
  for (int m : {0, 1, 2, 3, 4}) {
    auto r = latitude_rule(6, m);
    for (int k = 0; k <= 5; ++k) {
      double s = 0;
      for (std::size_t i = 0; i < r.nodes.size(); ++i)
        s += r.weights[i] * std::pow(std::cos(r.nodes[i]), m) * std::pow(std::sin(r.nodes[i]), 2 * k);
      INFO("m = " << m << ", k = " << k);
      CHECK(rel(s, beta(k + 0.5, 0.5 * (m + 1))) <= 1e-13);
    }
  }
  // nodes stay O(1/N) from the poles
  auto r = latitude_rule(32, 3);
  CHECK(pi / 2 - r.nodes.back() > 0.05);
  CHECK_THROWS_AS(gauss_jacobi_symmetric(4, -1.0), DomainError);
}

TEST_CASE("volumes") {
  auto one = [](const std::vector<double>&) { return 1.0; };
  CHECK(rel(integrate_function(make({torus(6)}), 8, one), std::pow(2 * pi, 6)) <= 1e-13);
  CHECK(rel(integrate_function(make({FactorSpec::sphere(4, Rational(1))}), 16, one), 8 * pi * pi / 3) <= 1e-12);
  CHECK(rel(integrate_function(make({FactorSpec::sphere(2, Rational(1)), FactorSpec::sphere(4, Rational(1))}), 16, one),
            32 * std::pow(pi, 3) / 3) <= 1e-12);
  CHECK(rel(integrate_function(make({FactorSpec::sphere(3, Rational(4))}), 16, one), pi * pi / 4) <= 1e-12);
  // the conformal factor rescales the volume form by e^{6u}
  auto t6u = make({torus(6)}, "0.1");
  CHECK(rel(integrate_function(t6u, 8, one), std::exp(0.6) * std::pow(2 * pi, 6)) <= 1e-13);
  CHECK_THROWS_AS(build_rule(make({torus(6)}), 2), DomainError);
}

TEST_CASE("only the coordinates the integrand depends on are refined") {
  auto spec = make({torus(2), FactorSpec::sphere(4, Rational(1))}, "0.1*sin(x2)");
  auto rule = build_rule(spec, 8);
  CHECK(rule.node_count() == 8u * 8 * 8 * 8);
  auto plain = build_rule(make({torus(6)}), 16);
  CHECK(plain.node_count() == 1u);
}

TEST_CASE("T2 x S4 and S2 x T4 match the exact pipeline") {
  auto t2s4 = make({FactorSpec::torus(2, PiScaled(Rational(1))), FactorSpec::sphere(4, Rational(1))});
  auto rep = integrate_invariants(t2s4, 16);
  CHECK(rel(rep.L1.value, -96 * pi * pi) <= 1e-6);
  REQUIRE(rep.L1.exact);
  CHECK(rep.L1.exact->to_string() == "-96*pi^2");
  CHECK(rep.L1.error <= 1e-6 * 96 * pi * pi);
  for (auto k : {Invariant::Q, Invariant::L2, Invariant::L3})
    CHECK(std::abs(rep[k].value - rep[k].exact->to_double()) <= 1e-6 * std::max(1.0, std::abs(rep[k].value)));

  auto s2t4 = make({FactorSpec::sphere(2, Rational(1)), torus(4, 1)});
  auto r2 = integrate_invariants(s2t4, 16);
  CHECK(rel(r2.Q.value, r2.Q.exact->to_double()) <= 1e-6);
}

TEST_CASE("conformally rescaled flat torus has vanishing invariants") {
  auto spec = make({torus(6)}, "0.3*sin(x1)*cos(x2)");
  auto rep = integrate_invariants(spec, 16);
  for (auto k : {Invariant::Q, Invariant::L1, Invariant::L2, Invariant::L3}) {
    INFO(to_string(k) << " = " << rep[k].value);
    CHECK(std::abs(rep[k].value) <= 1e-6);
  }
}

TEST_CASE("densities and integrands integrate to the same values") {
  auto spec = make({torus(6)}, "0.2*sin(x1) + 0.1*cos(x1 + x2)");
  IntegrationOptions dens;
  dens.path = IntegrandPath::density;
  auto a = integrate_raw(spec, 24);
  auto b = integrate_raw(spec, 24, dens);
  for (int k = 0; k < 4; ++k) {
    INFO("k = " << k << ": " << a.value[k] << " vs " << b.value[k]);
    CHECK(std::abs(a.value[k] - b.value[k]) <= 1e-5);
  }
  // on a locally symmetric product the two agree pointwise
  auto t2s4 = make({FactorSpec::torus(2, PiScaled(Rational(1))), FactorSpec::sphere(4, Rational(1))});
  auto c = integrate_raw(t2s4, 16);
  auto d = integrate_raw(t2s4, 16, dens);
  for (int k = 0; k < 4; ++k) CHECK(c.value[k] == Catch::Approx(d.value[k]).epsilon(1e-6).margin(1e-8));
}

TEST_CASE("refinement reduces the error") {
  auto spec = make({torus(6)}, "0.3*sin(x1)*cos(x2)");
  auto r8 = integrate_raw(spec, 8), r16 = integrate_raw(spec, 16), r32 = integrate_raw(spec, 32);
  // exact values are zero
  for (int k = 0; k < 3; ++k) {
    INFO("k = " << k << ": " << r8.value[k] << ", " << r16.value[k] << ", " << r32.value[k]);
    CHECK(std::abs(r16.value[k]) * 4 <= std::abs(r8.value[k]) + 1e-9);
    CHECK(std::abs(r32.value[k]) * 4 <= std::abs(r16.value[k]) + 1e-9);
  }
}

TEST_CASE("node evaluation order does not depend on the thread count") {
  auto spec = make({FactorSpec::torus(2, PiScaled(Rational(1))), FactorSpec::sphere(4, Rational(1))},
                   "0.1*sin(x1)");
  IntegrationOptions one, many;
  one.threads = 1;
  many.threads = 3;
  auto a = integrate_raw(spec, 8, one), b = integrate_raw(spec, 8, many);
  for (int k = 0; k < 4; ++k) CHECK(a.value[k] == b.value[k]);
}

TEST_CASE("verdicts") {
  auto t2s4 = make({FactorSpec::torus(2, PiScaled(Rational(1))), FactorSpec::sphere(4, Rational(1))});
  auto rep = exact_report(t2s4);
  CHECK(has(rep, VerdictKind::not_conformally_einstein));
  CHECK(has(rep, VerdictKind::no_nonpositive_einstein_in_class));
  t2s4.pi1_infinite = true;
  rep = exact_report(t2s4);
  CHECK(has(rep, VerdictKind::no_einstein_in_class));
  CHECK_FALSE(has(rep, VerdictKind::no_nonpositive_einstein_in_class));

  // Einstein product: L1 = 0, the other invariants negative
  auto e = make({FactorSpec::sphere(2, Rational(3)), FactorSpec::sphere(4, Rational(1))});
  auto re = exact_report(e);
  CHECK_FALSE(has(re, VerdictKind::not_conformally_einstein));

  // flat: everything vanishes, only the equality case is flagged
  auto flat = exact_report(make({torus(6)}));
  CHECK(has(flat, VerdictKind::undetermined));
  CHECK(has(flat, VerdictKind::inconclusive));

  // error bands keep near-zero estimates from producing verdicts
  InvariantReport noisy;
  noisy.L1.value = -1e-3;
  noisy.L1.error = 1e-3;
  noisy.Q.value = noisy.L2.value = 1;
  auto v = verdicts(noisy, t2s4);
  CHECK(v.size() == 1);
  CHECK(v[0].kind == VerdictKind::inconclusive);
}

TEST_CASE("Gauss-Bonnet-Chern residual of a numeric report") {
  auto spec = make({FactorSpec::sphere(2, Rational(1)), FactorSpec::sphere(4, Rational(1))});
  spec.euler_char = 4;
  auto rep = integrate_invariants(spec, 8);
  REQUIRE(rep.gbc_residual);
  CHECK(std::abs(*rep.gbc_residual) <= 1e-6 * 64 * std::pow(pi, 3) * 4);
}

TEST_CASE("conformal drift on a rescaled product") {
  auto spec = make({FactorSpec::torus(2, PiScaled(Rational(1))), FactorSpec::sphere(4, Rational(1))});
  auto d = conformal_drift(spec, parse_expr("0.1*sin(2*pi*x2)"), 16);
  CHECK(d.max_drift() <= 1e-6);
}

TEST_CASE("singular conformal factors are reported") {
  auto spec = make({torus(6)}, "1/x1");
  CHECK_THROWS_AS(integrate_invariants(spec, 8), SingularEvaluation);
  CHECK_THROWS_AS(integrate_invariants(make({torus(6)}), 4), DomainError);
}
