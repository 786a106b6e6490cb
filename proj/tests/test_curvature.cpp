#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "confinv/curvature.hpp"
#include "confinv/expr.hpp"
#include "confinv/manifold.hpp"
#include "confinv/spaceform.hpp"
#include "confinv/verification.hpp"

using namespace confinv;

namespace {

ManifoldSpec s2xs4(const Rational& k2, const Rational& k4) {
  ManifoldSpec s;
  s.factors = {FactorSpec::sphere(2, k2), FactorSpec::sphere(4, k4)};
  return s;
}

CurvatureBundle product_bundle(const ManifoldSpec& spec, const std::vector<double>& pt, int order) {
  auto map = variable_map(spec.active_coordinates());
  return curvature(product_metric_jet(spec, pt, order, map), true);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("round spheres have constant positive sectional curvature") {
  auto spec = s2xs4(Rational(3), make_rational(1, 2));
  const std::vector<double> pt = {0.4, 1.0, -0.3, 0.7, 1.2, 2.0};
  auto cb = product_bundle(spec, pt, 2);
  const auto& g = cb.metric.g();
  // block metrics
  Sym2<double> ga(6), gb(6);
  for (int i = 0; i < 2; ++i) ga.set(i, i, g(i, i));
  for (int i = 2; i < 6; ++i) gb.set(i, i, g(i, i));
  Alg2<double> expect = kn_product(ga, ga) * 1.5 + kn_product(gb, gb) * 0.25;
  double worst = 0;
  for (std::size_t k = 0; k < expect.components().size(); ++k)
    worst = std::max(worst, std::abs(expect.components()[k] - cb.riemann.components()[k]));
  CHECK(worst <= 1e-12);
  CHECK(cb.riemann(0, 1, 0, 1) > 0);
  // sectional curvature of the S2 plane
  CHECK(cb.riemann(0, 1, 0, 1) / (g(0, 0) * g(1, 1)) == Catch::Approx(3.0).epsilon(1e-13));
  // scalar curvature 2*3 + 12*(1/2)
  CHECK(cb.scalar == Catch::Approx(12.0).epsilon(1e-13));
  CHECK(cb.J == Catch::Approx(12.0 / 10.0).epsilon(1e-13));
}

TEST_CASE("S2 x S4 densities match the exact polynomials at random points") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> lat(-1.2, 1.2), lon(0, 6.2);
  const Rational k2 = make_rational(2), k4 = make_rational(3, 4);
  auto spec = s2xs4(k2, k4);
  auto exact = closed_form_densities(2, k2, 4, k4);
  for (int t = 0; t < 4; ++t) {
    std::vector<double> pt = {lat(rng), lon(rng), lat(rng), lat(rng), lat(rng), lon(rng)};
    auto cb = product_bundle(spec, pt, 4);
    auto in = integrands(cb);
    auto de = densities(cb);
    CHECK(rel(in.Q, exact.Q.get_d()) <= 1e-10);
    CHECK(rel(in.L1, exact.L1.get_d()) <= 1e-10);
    CHECK(rel(in.L2, exact.L2.get_d()) <= 1e-10);
    CHECK(rel(in.L3, exact.L3.get_d()) <= 1e-10);
    // parallel curvature: divergence terms vanish pointwise
    CHECK(rel(de.l1(), in.L1) <= 1e-9);
    CHECK(rel(de.l2(), in.L2) <= 1e-9);
    CHECK(std::abs(point_scalars(cb).grad_weyl_norm2) <= 1e-9);
    CHECK(std::abs(point_scalars(cb).cotton_norm2) <= 1e-9);
    CHECK_THROWS_AS(de.q6(), InsufficientOrder);
  }
}

TEST_CASE("sixth-order Q density on a product of spheres") {
  const Rational k2 = make_rational(1), k4 = make_rational(2);
  auto spec = s2xs4(k2, k4);
  auto cb = product_bundle(spec, {0.3, 0.0, -0.2, 0.5, 0.1, 0.0}, 6);
  CHECK(rel(densities(cb).q6(), closed_form_densities(2, k2, 4, k4).Q.get_d()) <= 1e-8);
}

TEST_CASE("conformally flat metrics: closed-form Schouten, vanishing Weyl and Cotton") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> x(0, 6.28);
  for (const char* us : {"0.2*sin(x1)*cos(x2)", "0.1*cos(x3 + x5) - 0.15*sin(2*x6)", "0.3*sin(x1)*sin(x4)^2"}) {
    Expr u = parse_expr(us);
    std::vector<Expr> comps(36, Expr::constant(0));
    Expr e2u = Expr::unary(Expr::Kind::exp, Expr::constant(2) * u);
    for (int i = 0; i < 6; ++i) comps[i * 6 + i] = e2u;
    std::vector<double> pt(6);
    for (auto& v : pt) v = x(rng);
    auto cb = curvature(expr_metric_jet(6, comps, pt, 4), true);
    Jet uj = jet_eval(u, pt, 2);
    double du[6], ddu[6][6], grad2 = 0;
    for (int i = 0; i < 6; ++i) {
      Exponent e{};
      e[i] = 1;
      du[i] = uj.partial(e);
      grad2 += du[i] * du[i];
      for (int j = 0; j < 6; ++j) {
        Exponent f{};
        f[i] += 1;
        f[j] += 1;
        ddu[i][j] = uj.partial(f);
      }
    }
    double worst = 0;
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        double expect = -ddu[i][j] + du[i] * du[j] - (i == j ? 0.5 * grad2 : 0.0);
        worst = std::max(worst, std::abs(cb.schouten(i, j) - expect));
      }
    INFO(us);
    CHECK(worst <= 1e-12);
    CHECK(cb.weyl.max_abs() <= 1e-12);
    CHECK(cb.cotton->max_abs() <= 1e-11);
    auto in = integrands(cb);
    CHECK(std::abs(in.L1) <= 1e-12);
    CHECK(std::abs(in.L2) <= 1e-12);
    CHECK(std::abs(in.L3) <= 1e-12);
  }
}

TEST_CASE("Weyl tensor is conformally covariant") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> x(0, 6.28);
  for (int t = 0; t < 3; ++t) {
    auto g = random_trig_metric(rng);
    std::vector<double> pt(6);
    for (auto& v : pt) v = x(rng);
    auto mj = expr_metric_jet(6, g, pt, 2);
    Expr u = parse_expr("0.2*sin(x1 + x2) + 0.1*cos(x5)");
    Jet uj = jet_eval(u, pt, 2);
    auto a = curvature(mj, false);
    auto b = curvature(conformal_metric_jet(mj, uj), false);
    const double s = std::exp(2 * uj.value());
    double worst = 0;
    for (std::size_t k = 0; k < a.weyl.components().size(); ++k)
      worst = std::max(worst, std::abs(b.weyl.components()[k] - s * a.weyl.components()[k]));
    CHECK(worst <= 1e-12 * std::max(1.0, s * a.weyl.max_abs()));
    CHECK(a.weyl.max_abs() > 1e-4);  // the test metric is not conformally flat
  }
}

TEST_CASE("identities hold on perturbed flat tori") {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> x(0, 6.28);
  for (int t = 0; t < 3; ++t) {
    auto g = random_trig_metric(rng);
    std::vector<double> pt(6);
    for (auto& v : pt) v = x(rng);
    auto cb = curvature(expr_metric_jet(6, g, pt, 4), true);
    auto r = identity_residuals(cb);
    CHECK(r.algebraic_max() <= 1e-10);
    CHECK(r.cotton_bianchi <= 1e-8);
    CHECK(r.weyl_laplacian <= 1e-8);
    // density and integrand differ by exactly the divergence terms
    auto d = densities(cb);
    auto in = integrands(cb);
    auto div = detail::weyl_divergence_terms(*cb.jets);
    CHECK(d.l1() - in.L1 == Catch::Approx(2 * div.lap_weyl_norm2 - 48 * div.div_v).margin(1e-10));
    CHECK(d.l2() - in.L2 == Catch::Approx(0.5 * div.lap_weyl_norm2 - 8 * div.div_v).margin(1e-10));
  }
}

TEST_CASE("metric jet validation") {
  std::vector<Jet> comps(4, Jet::constant(1, 2, 0.0));
  comps[0] = comps[3] = Jet::constant(1, 2, 1.0);
  comps[1] = Jet::variable(1, 2, 0, 0.0);
  CHECK_THROWS_AS(MetricJet::from_components(2, comps, {0, -1}, {}), DomainError);
  CHECK_THROWS_AS(MetricJet::from_components(2, {Jet::constant(1, 2, 1.0)}, {}, {}), DimensionError);
  CHECK_THROWS_AS(MetricJet::from_components(2, std::vector<Jet>(4, Jet::constant(1, 2, 1.0)), {0, 1}, {}),
                  DimensionError);
  auto flat = curvature(MetricJet::flat(3, 2), false);
  CHECK(flat.riemann.max_abs() == 0);
  auto low = curvature(MetricJet::flat(6, 2), false);
  CHECK_THROWS_AS(integrands(low), InsufficientOrder);
}
