#pragma once

// Exact curvature and invariants of Riemannian products of (at most two)
// spaceforms.
//
// On M^m x N^n with sectional curvatures mu, nu, the trace-free Schouten
// tensor and the Weyl tensor lie in the span of the block metrics g, h:
//
//   E = alpha (n g - m h),   W = a g^g + b g^h + c h^h,
//
// and every contraction entering the six-dimensional densities reduces to a
// polynomial in (J, alpha, a, b, c) via the composition and trace rules of
// Kulkarni-Nomizu products of commuting projections. The dense cross-check
// lives in the tests (see test_spaceform.cpp).

#include <string>
#include <vector>

#include "confinv/error.hpp"
#include "confinv/pi_exact.hpp"
#include "confinv/rational.hpp"
#include "confinv/tensor_algebra.hpp"

namespace confinv {

/// First-order dual number, used to differentiate the exact formulas.
template <class T>
struct Dual {
  T v{0};
  T d{0};

  Dual() = default;
  Dual(const T& value, const T& deriv = T(0)) : v(value), d(deriv) {}  // NOLINT(implicit)
  Dual(int value) : v(value), d(0) {}                                  // NOLINT(implicit)

  friend Dual operator+(const Dual& a, const Dual& b) { return {T(a.v + b.v), T(a.d + b.d)}; }
  friend Dual operator-(const Dual& a, const Dual& b) { return {T(a.v - b.v), T(a.d - b.d)}; }
  friend Dual operator-(const Dual& a) { return {T(-a.v), T(-a.d)}; }
  friend Dual operator*(const Dual& a, const Dual& b) {
    return {T(a.v * b.v), T(a.d * b.v + a.v * b.d)};
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    if (b.v == 0) throw DomainError("dual division by zero");
    return {T(a.v / b.v), T((a.d * b.v - a.v * b.d) / (b.v * b.v))};
  }
  friend bool operator==(const Dual& a, const Dual& b) { return a.v == b.v && a.d == b.d; }
};

/// Curvature of a product of two spaceforms in the (alpha; a, b, c) basis.
/// For a single spaceform (n = 0) E and W vanish.
template <class F>
struct CurvatureDecompositionT {
  int m = 0;
  int n = 0;
  F J{0};
  F alpha{0};  ///< E = alpha (n g - m h)
  F a{0};      ///< W = a g^g + b g^h + c h^h
  F b{0};
  F c{0};
};
using CurvatureDecomposition = CurvatureDecompositionT<Rational>;

template <class F>
CurvatureDecompositionT<F> decompose_curvature(int m, const F& mu, int n, const F& nu) {
  if (m < 1 || n < 0) throw DimensionError("decompose_curvature: factor dimensions must be positive");
  const int d = m + n;
  if (d < 3) throw DimensionError("decompose_curvature: total dimension must be at least 3");
  CurvatureDecompositionT<F> out;
  out.m = m;
  out.n = n;
  out.J = (F(m * (m - 1)) * mu + F(n * (n - 1)) * nu) / F(2 * (d - 1));
  if (n == 0) return out;
  out.alpha = (F(m - 1) * mu - F(n - 1) * nu) / F(d * (d - 2));
  F s = (mu + nu) / F(2 * (d - 1) * (d - 2));
  out.a = s * F(n * (n - 1));
  out.b = s * F(-2 * (n - 1) * (m - 1));
  out.c = s * F(m * (m - 1));
  return out;
}

/// Contractions of (E, W) computed on the basis.
template <class F>
struct BasisContractions {
  F e_norm2{0};
  F tr_e3{0};
  F wee{0};  ///< W_ijkl E^ik E^jl
  F e_dot_tr_w2{0};
  F tr2_w2{0};
  F tr2_w3{0};
  F weyl_norm2{0};
};

template <class F>
BasisContractions<F> basis_contractions(const CurvatureDecompositionT<F>& dc) {
  const F m(dc.m), n(dc.n);
  const F& al = dc.alpha;
  BasisContractions<F> out;
  const F mn = m * n;
  out.e_norm2 = al * al * mn * (m + n);
  out.tr_e3 = al * al * al * mn * (n * n - m * m);
  out.wee = F(2) * al * al * mn *
            (dc.a * n * (m - F(1)) - dc.b * m * n + dc.c * m * (n - F(1)));
  // W^2 = (2a^2, b^2, 2c^2), W^3 = (4a^3, b^3, 4c^3) on (g^g, g^h, h^h);
  // tr(x g^g + y g^h + z h^h) = (2(m-1)x + n y) g + (m y + 2(n-1) z) h.
  const F a2 = dc.a * dc.a, b2 = dc.b * dc.b, c2 = dc.c * dc.c;
  const F p2 = F(4) * (m - F(1)) * a2 + n * b2;
  const F q2 = m * b2 + F(4) * (n - F(1)) * c2;
  const F p3 = F(8) * (m - F(1)) * a2 * dc.a + n * b2 * dc.b;
  const F q3 = m * b2 * dc.b + F(8) * (n - F(1)) * c2 * dc.c;
  out.e_dot_tr_w2 = al * mn * (p2 - q2);
  out.tr2_w2 = m * p2 + n * q2;
  out.tr2_w3 = m * p3 + n * q3;
  out.weyl_norm2 = F(2) * out.tr2_w2;
  return out;
}

/// Constant pointwise densities of a locally symmetric six-manifold.
template <class F>
struct DensityTableT {
  F Q{0};
  F L1{0};
  F L2{0};
  F L3{0};
};
using DensityTable = DensityTableT<Rational>;

template <class F>
DensityTableT<F> densities_from_decomposition(const CurvatureDecompositionT<F>& dc) {
  if (dc.m + dc.n != 6) throw DimensionError("densities6: total dimension must be 6");
  const BasisContractions<F> k = basis_contractions(dc);
  const F& J = dc.J;
  DensityTableT<F> out;
  out.Q = F(-40) / F(9) * J * J * J + F(16) * J * k.e_norm2 - F(16) * k.tr_e3 - F(8) * k.wee;
  out.L1 = F(96) * k.e_dot_tr_w2;
  out.L2 = F(16) * k.e_dot_tr_w2 - F(4) / F(3) * J * k.tr2_w2;
  out.L3 = F(4) * k.tr2_w3;
  return out;
}

template <class F>
DensityTableT<F> densities6(int m, const F& mu, int n, const F& nu) {
  if (m + n != 6) throw DimensionError("densities6: total dimension must be 6");
  return densities_from_decomposition(decompose_curvature(m, mu, n, nu));
}

/// Closed-form polynomial densities for the (3,3) and (2,4) splits, written
/// out directly rather than through the basis algebra.
inline DensityTable closed_form_densities(int m, const Rational& mu, int n, const Rational& nu) {
  DensityTable out;
  if (m == 3 && n == 3) {
    Rational s3 = pow(Rational(mu + nu), 3);
    out.Q = Rational(-24, 25) * s3;
    out.L1 = 0;
    out.L2 = Rational(-36, 25) * s3;
    out.L3 = Rational(18, 25) * s3;
    return out;
  }
  if ((m == 2 && n == 4) || (m == 4 && n == 2)) {
    const Rational& x = m == 2 ? mu : nu;  // surface curvature
    const Rational& y = m == 2 ? nu : mu;  // four-manifold curvature
    Rational s2 = pow(Rational(x + y), 2);
    out.Q = Rational(-12, 25) * (x * x * x - 7 * y * x * x + 33 * y * y * x - 9 * y * y * y);
    out.L1 = 12 * s2 * (x - 3 * y);
    out.L2 = Rational(6, 25) * s2 * (7 * x - 33 * y);
    out.L3 = Rational(39, 25) * s2 * (x + y);
    return out;
  }
  throw DomainError("closed-form densities exist only for the (3,3) and (2,4) splits");
}

/// Q density of an Einstein six-manifold with P = (lambda/2) g.
inline Rational einstein_q_density(const Rational& lambda) { return -120 * pow(lambda, 3); }

/// Volume of the round unit sphere S^k.
inline PiScaled unit_sphere_volume(int k) {
  switch (k) {
    case 1: return PiScaled::term(1, Rational(2));
    case 2: return PiScaled::term(1, Rational(4));
    case 3: return PiScaled::term(2, Rational(2));
    case 4: return PiScaled::term(2, Rational(8, 3));
    case 5: return PiScaled::term(3, Rational(1));
    case 6: return PiScaled::term(3, Rational(16, 15));
    default: throw DimensionError("sphere volume available for dimensions 1..6");
  }
}

/// Volume of the round S^k of sectional curvature kappa, omega_k kappa^(-k/2).
inline PiScaled sphere_volume(int k, const Rational& kappa) {
  if (kappa <= 0) throw DomainError("sphere curvature must be positive");
  PiScaled base = unit_sphere_volume(k);
  if (k % 2 == 0) return base * pow(kappa, -k / 2);
  auto root = exact_sqrt(kappa);
  if (!root)
    throw RepresentationError("volume of S^" + std::to_string(k) + " with curvature " +
                              to_string(kappa) +
                              " is not a rational multiple of a power of pi; use the numeric "
                              "pipeline");
  return base * pow(*root, -k);
}

enum class FactorKind { sphere, torus, quotient };

inline std::string to_string(FactorKind k) {
  switch (k) {
    case FactorKind::sphere: return "sphere";
    case FactorKind::torus: return "torus";
    case FactorKind::quotient: return "quotient";
  }
  return "?";
}

/// A closed constant-curvature factor. Spheres compute their volume; tori
/// and other quotients take it as input.
struct SpaceformFactor {
  FactorKind kind = FactorKind::torus;
  int dim = 1;
  Rational curvature;
  PiScaled volume;

  static SpaceformFactor sphere(int dim, const Rational& curvature) {
    return {FactorKind::sphere, dim, curvature, sphere_volume(dim, curvature)};
  }
  static SpaceformFactor torus(int dim, const PiScaled& volume) {
    if (dim < 1) throw DimensionError("torus dimension must be positive");
    if (volume.sign() <= 0) throw DomainError("torus volume must be positive");
    return {FactorKind::torus, dim, Rational(0), volume};
  }
  static SpaceformFactor quotient(int dim, const Rational& curvature, const PiScaled& volume) {
    if (dim < 1) throw DimensionError("factor dimension must be positive");
    if (volume.sign() <= 0) throw DomainError("factor volume must be positive");
    return {FactorKind::quotient, dim, curvature, volume};
  }
};

struct ProductSpaceform {
  std::vector<SpaceformFactor> factors;

  int dim() const {
    int d = 0;
    for (const auto& f : factors) d += f.dim;
    return d;
  }
  PiScaled volume() const {
    PiScaled v(1);
    for (const auto& f : factors) v *= f.volume;
    return v;
  }
};

inline CurvatureDecomposition decompose(const ProductSpaceform& spec) {
  if (spec.factors.size() == 1) {
    const auto& f = spec.factors[0];
    return decompose_curvature(f.dim, f.curvature, 0, Rational(0));
  }
  if (spec.factors.size() == 2) {
    const auto& f = spec.factors[0];
    const auto& g = spec.factors[1];
    return decompose_curvature(f.dim, f.curvature, g.dim, g.curvature);
  }
  throw DomainError("products of one or two spaceforms are supported");
}

inline DensityTable densities(const ProductSpaceform& spec) {
  if (spec.dim() != 6) throw DimensionError("invariants require total dimension 6");
  return densities_from_decomposition(decompose(spec));
}

/// The four global invariants Q, L1, L2, L3.
template <class V>
struct InvariantQuad {
  V Q{};
  V L1{};
  V L2{};
  V L3{};
};
using ExactInvariants = InvariantQuad<PiScaled>;

inline ExactInvariants integrated_invariants(const ProductSpaceform& spec) {
  DensityTable d = densities(spec);
  PiScaled vol = spec.volume();
  return {vol * d.Q, vol * d.L1, vol * d.L2, vol * d.L3};
}

/// 64 pi^3 chi + Q + L1/3 - 7 L2/6 - L3; vanishes by Gauss-Bonnet-Chern.
inline PiScaled gbc_residual(const ExactInvariants& inv, long euler_char) {
  PiScaled r = PiScaled::term(3, Rational(64 * euler_char));
  r += inv.Q;
  r += inv.L1 * Rational(1, 3);
  r -= inv.L2 * Rational(7, 6);
  r -= inv.L3;
  return r;
}

inline PiScaled gbc_residual(const ProductSpaceform& spec, long euler_char) {
  return gbc_residual(integrated_invariants(spec), euler_char);
}

/// Einstein iff (m-1) mu = (n-1) nu; a single spaceform always is.
inline bool is_einstein(const ProductSpaceform& spec) {
  if (spec.factors.size() == 1) return true;
  if (spec.factors.size() != 2) throw DomainError("products of one or two spaceforms are supported");
  const auto& f = spec.factors[0];
  const auto& g = spec.factors[1];
  return (f.dim - 1) * f.curvature == (g.dim - 1) * g.curvature;
}

/// Euler characteristic of a product of spheres and flat/other factors whose
/// Euler characteristic is supplied for non-spheres (tori: 0).
inline long sphere_euler_characteristic(int dim) { return dim % 2 == 0 ? 2 : 0; }

struct FamilyRow {
  Rational parameter;
  ExactInvariants invariants;
};

/// Exact invariant table along a one-parameter family of products.
template <class Family>
std::vector<FamilyRow> family_scan(Family&& family, const std::vector<Rational>& params) {
  std::vector<FamilyRow> rows;
  rows.reserve(params.size());
  for (const auto& p : params) rows.push_back({p, integrated_invariants(family(p))});
  return rows;
}

/// S^2 of curvature 3 times S^4 of curvature 1/c (the metric g + c h with h
/// of curvature one).
inline ProductSpaceform s2xs4_scaling(const Rational& c) {
  if (c <= 0) throw DomainError("scaling parameter must be positive");
  return {{SpaceformFactor::sphere(2, Rational(3)), SpaceformFactor::sphere(4, Rational(1 / c))}};
}

/// 128 pi^3 c^-1 (3c + 1)^2 (c - 1).
inline PiScaled s2xs4_l1_closed_form(const Rational& c) {
  Rational q = 128 / c * pow(Rational(3 * c + 1), 2) * (c - 1);
  return PiScaled::term(3, q);
}

/// d/dc of L1 along s2xs4_scaling, exact.
inline PiScaled s2xs4_l1_derivative(const Rational& c) {
  using D = Dual<Rational>;
  D cd(c, Rational(1));
  D nu = D(1) / cd;
  D l1 = densities6<D>(2, D(3), 4, nu).L1;
  // Vol(S^4(1/c)) = (8 pi^2 / 3) c^2, Vol(S^2(3)) = 4 pi / 3.
  D scaled = l1 * cd * cd;
  PiScaled vol_unit = sphere_volume(2, Rational(3)) * unit_sphere_volume(4);
  return vol_unit * scaled.d;
}

}  // namespace confinv
