#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "confinv/spaceform.hpp"

using namespace confinv;
using Q = Rational;

namespace {

Q r(long p, long q = 1) { return make_rational(p, q); }

// Dense oracle: curvature of M^m(mu) x N^n(nu) at a point in orthonormal
// coordinates, decomposed and contracted index by index.
DensityTable dense_densities(int m, const Q& mu, int n, const Q& nu) {
  const int d = m + n;
  Sym2<Q> g(d), h(d);
  for (int i = 0; i < m; ++i) g.set(i, i, 1);
  for (int i = m; i < d; ++i) h.set(i, i, 1);
  auto metric = MetricAtPoint<Q>::euclidean(d);
  Alg2<Q> rm = kn_product(g, g) * Q(mu / 2) + kn_product(h, h) * Q(nu / 2);
  REQUIRE(rm.bianchi_residual() == 0);
  Sym2<Q> ric = partial_trace(rm, metric);
  Q scal = trace(ric, metric);
  Q J = scal / (2 * (d - 1));
  auto id = Sym2<Q>::identity(d);
  Sym2<Q> P = (ric - id * J) * Q(Q(1) / (d - 2));
  Sym2<Q> E = P - id * Q(J / d);
  Alg2<Q> W = rm - kn_product(P, id);

  // Weyl is totally trace free
  CHECK(partial_trace(W, metric) == Sym2<Q>(d));

  Q e2 = 0, e3 = 0, wee = 0, w2 = 0, eww = 0, i3 = 0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      e2 += E(i, j) * E(i, j);
      for (int k = 0; k < d; ++k) e3 += E(i, j) * E(j, k) * E(k, i);
    }
  for (int i = 0; i < d; ++i) for (int j = 0; j < d; ++j) for (int k = 0; k < d; ++k) for (int l = 0; l < d; ++l) {
    wee += W(i, j, k, l) * E(i, k) * E(j, l);
    w2 += W(i, j, k, l) * W(i, j, k, l);
    for (int s = 0; s < d; ++s) eww += E(s, i) * W(i, j, k, l) * W(s, j, k, l);
  }
  for (int i = 0; i < d; ++i) for (int j = 0; j < d; ++j) for (int k = 0; k < d; ++k) for (int l = 0; l < d; ++l)
    for (int s = 0; s < d; ++s) for (int t = 0; t < d; ++t) i3 += W(i, j, k, l) * W(k, l, s, t) * W(s, t, i, j);

  DensityTable out;
  out.Q = r(-40, 9) * J * J * J + 16 * J * e2 - 16 * e3 - 8 * wee;
  out.L1 = 48 * eww;
  out.L2 = 8 * eww - r(2, 3) * J * w2;
  out.L3 = i3;
  return out;
}

void check_equal(const DensityTable& a, const DensityTable& b) {
  CHECK(a.Q == b.Q);
  CHECK(a.L1 == b.L1);
  CHECK(a.L2 == b.L2);
  CHECK(a.L3 == b.L3);
}

}  // namespace

TEST_CASE("basis algebra matches dense tensors on random products") {
  std::mt19937_64 rng(11);
  const std::pair<int, int> splits[] = {{2, 4}, {4, 2}, {3, 3}, {1, 5}, {5, 1}};
  for (auto [m, n] : splits)
    for (int t = 0; t < 4; ++t) {
      Q mu = random_rational(rng, 9, 4), nu = random_rational(rng, 9, 4);
      INFO("m=" << m << " mu=" << mu << " nu=" << nu);
      check_equal(densities6(m, mu, n, nu), dense_densities(m, mu, n, nu));
    }
}

TEST_CASE("closed-form polynomials agree with the basis algebra") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 100; ++t) {
    Q mu = random_rational(rng, 20, 9), nu = random_rational(rng, 20, 9);
    check_equal(closed_form_densities(3, mu, 3, nu), densities6(3, mu, 3, nu));
    check_equal(closed_form_densities(2, mu, 4, nu), densities6(2, mu, 4, nu));
    check_equal(closed_form_densities(4, nu, 2, mu), densities6(2, mu, 4, nu));
  }
  CHECK_THROWS_AS(closed_form_densities(1, r(1), 5, r(1)), DomainError);
}

TEST_CASE("S3 x S3 with equal curvatures") {
  for (long p : {1, 2, -3, 5}) {
    Q la = r(p, 7);
    auto d = densities6(3, la, 3, la);
    CHECK(d.Q == r(-192, 25) * la * la * la);
    CHECK(d.L1 == 0);
  }
}

TEST_CASE("Einstein products") {
  for (long p : {1, 3, -2}) {
    Q k = r(p, 5);
    auto s6 = densities6(6, k, 0, Q(0));
    CHECK(s6.Q == einstein_q_density(k));
    CHECK(s6.L1 == 0);
    CHECK(s6.L2 == 0);
    CHECK(s6.L3 == 0);
    // (m-1) mu = (n-1) nu: Einstein with vanishing L1
    CHECK(densities6(2, Q(3 * k), 4, k).L1 == 0);
    CHECK(densities6(3, k, 3, k).L1 == 0);
  }
  CHECK(einstein_q_density(r(1)) == -120);
  ProductSpaceform e{{SpaceformFactor::sphere(2, r(3)), SpaceformFactor::sphere(4, r(1))}};
  ProductSpaceform ne{{SpaceformFactor::sphere(2, r(1)), SpaceformFactor::sphere(4, r(1))}};
  CHECK(is_einstein(e));
  CHECK_FALSE(is_einstein(ne));
}

TEST_CASE("sphere volumes") {
  CHECK(sphere_volume(4, r(1)) == PiScaled::term(2, r(8, 3)));
  CHECK(sphere_volume(4, r(1, 4)) == PiScaled::term(2, r(128, 3)));
  CHECK(sphere_volume(2, r(3)) == PiScaled::term(1, r(4, 3)));
  CHECK(sphere_volume(3, r(4)) == PiScaled::term(2, r(1, 4)));
  CHECK(sphere_volume(5, r(9, 4)) == PiScaled::term(3, r(32, 243)));
  CHECK_THROWS_AS(sphere_volume(3, r(2)), RepresentationError);
  CHECK_THROWS_AS(sphere_volume(4, r(0)), DomainError);
  CHECK_THROWS_AS(unit_sphere_volume(7), DimensionError);
  // double check against Gamma: 2 pi^((k+1)/2) / Gamma((k+1)/2)
  for (int k = 1; k <= 6; ++k) {
    double expect = 2 * std::pow(M_PI, (k + 1) / 2.0) / std::tgamma((k + 1) / 2.0);
    CHECK(unit_sphere_volume(k).to_double() == Catch::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("Gauss-Bonnet-Chern residual vanishes on closed products") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 20; ++t) {
    Q a = random_rational(rng, 9, 5, true), b = random_rational(rng, 9, 5, true);
    ProductSpaceform s2s4{{SpaceformFactor::sphere(2, a), SpaceformFactor::sphere(4, b)}};
    CHECK(gbc_residual(s2s4, 4).sign() == 0);
    ProductSpaceform s3s3{{SpaceformFactor::sphere(3, a * a), SpaceformFactor::sphere(3, b * b)}};
    CHECK(gbc_residual(s3s3, 0).sign() == 0);
    ProductSpaceform t2s4{{SpaceformFactor::torus(2, PiScaled(a)), SpaceformFactor::sphere(4, b)}};
    CHECK(gbc_residual(t2s4, 0).sign() == 0);
    ProductSpaceform s6{{SpaceformFactor::sphere(6, a)}};
    CHECK(gbc_residual(s6, 2).sign() == 0);
    CHECK(gbc_residual(s6, 0).sign() != 0);
  }
}

TEST_CASE("flat factors give vanishing invariants") {
  ProductSpaceform t6{{SpaceformFactor::torus(6, PiScaled::term(6, r(64)))}};
  auto inv = integrated_invariants(t6);
  CHECK(inv.Q.sign() == 0);
  CHECK(inv.L1.sign() == 0);
  CHECK(inv.L2.sign() == 0);
  CHECK(inv.L3.sign() == 0);
}

TEST_CASE("T2 x S4 invariants") {
  // round S4(1) times a flat torus of area A: Q = A * 8pi^2/3 * density
  ProductSpaceform m{{SpaceformFactor::torus(2, PiScaled(r(1))), SpaceformFactor::sphere(4, r(1))}};
  auto inv = integrated_invariants(m);
  auto d = closed_form_densities(2, r(0), 4, r(1));
  CHECK(inv.L1 == PiScaled::term(2, r(8, 3) * d.L1));
  CHECK(inv.L1 == PiScaled::term(2, r(-96)));
  CHECK(inv.L1.sign() < 0);
}

TEST_CASE("S2 x S4 scaling family") {
  CHECK(integrated_invariants(s2xs4_scaling(r(2))).L1 == PiScaled::term(3, r(3136)));
  CHECK(integrated_invariants(s2xs4_scaling(r(1, 2))).L1 == PiScaled::term(3, r(-800)));
  CHECK(integrated_invariants(s2xs4_scaling(r(1))).L1.sign() == 0);
  std::mt19937_64 rng(14);
  for (int t = 0; t < 30; ++t) {
    Q c = random_rational(rng, 30, 7, true);
    CHECK(integrated_invariants(s2xs4_scaling(c)).L1 == s2xs4_l1_closed_form(c));
    // d/dc 128 (3c+1)^2 (c-1) / c by the quotient rule
    Q g = (3 * c + 1) * (3 * c + 1) * (c - 1);
    Q gp = 6 * (3 * c + 1) * (c - 1) + (3 * c + 1) * (3 * c + 1);
    Q fp = 128 * (gp * c - g) / (c * c);
    CHECK(s2xs4_l1_derivative(c) == PiScaled::term(3, fp));
  }
  auto rows = family_scan(s2xs4_scaling, {r(1, 3), r(1), r(3)});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].invariants.L1.sign() < 0);
  CHECK(rows[2].invariants.L1.sign() > 0);
  CHECK_THROWS_AS(s2xs4_scaling(r(0)), DomainError);
}

TEST_CASE("dual numbers differentiate rational expressions") {
  using D = Dual<Q>;
  D x(r(3, 2), r(1));
  D y = x * x * x / (x + D(1));
  // d/dx x^3/(x+1) = (2x^3 + 3x^2)/(x+1)^2
  Q xv = r(3, 2);
  CHECK(y.d == (2 * xv * xv * xv + 3 * xv * xv) / ((xv + 1) * (xv + 1)));
  CHECK_THROWS_AS(x / D(0), DomainError);
}

TEST_CASE("unsupported shapes are rejected") {
  CHECK_THROWS_AS(densities6(2, r(1), 3, r(1)), DimensionError);
  ProductSpaceform three{{SpaceformFactor::sphere(2, r(1)), SpaceformFactor::sphere(2, r(1)),
                          SpaceformFactor::sphere(2, r(1))}};
  CHECK_THROWS_AS(integrated_invariants(three), DomainError);
  CHECK_THROWS_AS(SpaceformFactor::torus(2, PiScaled(r(-1))), DomainError);
}
