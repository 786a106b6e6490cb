#pragma once

// Product manifolds of flat tori and round spheres in explicit charts, with
// an optional conformal factor.
//
// Coordinates are the concatenation of the factors' coordinates. A torus of
// dimension k uses x in [0, L_1) x ... x [0, L_k). A sphere S^k of curvature
// kappa uses latitudes psi_1..psi_{k-1} in (-pi/2, pi/2) and an azimuth phi:
//
//   kappa g = dpsi_1^2 + cos^2 psi_1 (dpsi_2^2 + cos^2 psi_2 (... + cos^2 psi_{k-1} dphi^2)),
//
// so sin(psi_1) is the smooth height function.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "confinv/curvature.hpp"
#include "confinv/error.hpp"
#include "confinv/expr.hpp"
#include "confinv/pi_exact.hpp"
#include "confinv/spaceform.hpp"

namespace confinv {

struct FactorSpec {
  FactorKind kind = FactorKind::torus;
  int dim = 1;
  Rational curvature;            ///< spheres only
  std::vector<PiScaled> periods;  ///< tori only, one per dimension

  static FactorSpec sphere(int dim, const Rational& curvature) {
    if (dim < 2 || dim > 6) throw DimensionError("sphere factors have dimension 2..6");
    if (curvature <= 0) throw DomainError("sphere curvature must be positive");
    return {FactorKind::sphere, dim, curvature, {}};
  }
  static FactorSpec torus(std::vector<PiScaled> periods) {
    if (periods.empty() || periods.size() > 6) throw DimensionError("torus dimension must be 1..6");
    for (const auto& p : periods)
      if (p.sign() <= 0) throw DomainError("torus periods must be positive");
    return {FactorKind::torus, static_cast<int>(periods.size()), Rational(0), std::move(periods)};
  }
  static FactorSpec torus(int dim, const PiScaled& period) {
    return torus(std::vector<PiScaled>(static_cast<std::size_t>(dim), period));
  }

  PiScaled volume() const {
    if (kind == FactorKind::sphere) return sphere_volume(dim, curvature);
    PiScaled v(1);
    for (const auto& p : periods) v *= p;
    return v;
  }
};

enum class CoordKind { periodic, latitude };

struct CoordInfo {
  int factor = 0;
  CoordKind kind = CoordKind::periodic;
  double lo = 0;
  double hi = 0;
  int cos_power = 0;  ///< latitudes: exponent of cos in sqrt(det g)
};

struct ManifoldSpec {
  std::vector<FactorSpec> factors;
  std::optional<Expr> conformal_u;
  std::optional<long> euler_char;
  bool pi1_infinite = false;
  std::optional<int> resolution;

  int dim() const {
    int d = 0;
    for (const auto& f : factors) d += f.dim;
    return d;
  }

  void validate() const {
    if (factors.empty()) throw DimensionError("manifold needs at least one factor");
    if (dim() > 6) throw DimensionError("total dimension exceeds 6");
    if (conformal_u) {
      unsigned used = conformal_u->free_variables();
      if (used >> dim()) throw DimensionError("conformal factor uses coordinates beyond the dimension");
    }
  }

  std::vector<CoordInfo> coordinates() const {
    std::vector<CoordInfo> out;
    for (std::size_t f = 0; f < factors.size(); ++f) {
      const auto& fs = factors[f];
      if (fs.kind == FactorKind::sphere) {
        for (int q = 0; q + 1 < fs.dim; ++q)
          out.push_back({static_cast<int>(f), CoordKind::latitude, -std::numbers::pi / 2,
                         std::numbers::pi / 2, fs.dim - 1 - q});
        out.push_back({static_cast<int>(f), CoordKind::periodic, 0.0, 2 * std::numbers::pi});
      } else {
        for (const auto& p : fs.periods)
          out.push_back({static_cast<int>(f), CoordKind::periodic, 0.0, p.to_double()});
      }
    }
    return out;
  }

  /// Coordinates on which the metric or the conformal factor depends.
  std::vector<bool> active_coordinates() const {
    auto coords = coordinates();
    std::vector<bool> act(coords.size(), false);
    for (std::size_t i = 0; i < coords.size(); ++i) act[i] = coords[i].kind == CoordKind::latitude;
    if (conformal_u) {
      unsigned used = conformal_u->free_variables();
      for (std::size_t i = 0; i < coords.size(); ++i)
        if (used & (1u << i)) act[i] = true;
    }
    return act;
  }

  /// Exact product-of-spaceforms view (ignores the conformal factor).
  ProductSpaceform exact_form() const {
    ProductSpaceform ps;
    for (const auto& f : factors) {
      if (f.kind == FactorKind::sphere) ps.factors.push_back(SpaceformFactor::sphere(f.dim, f.curvature));
      else ps.factors.push_back(SpaceformFactor::torus(f.dim, f.volume()));
    }
    return ps;
  }

  PiScaled volume() const {
    PiScaled v(1);
    for (const auto& f : factors) v *= f.volume();
    return v;
  }

  /// Euler characteristic of the product when every factor's is known.
  long product_euler_characteristic() const {
    long chi = 1;
    for (const auto& f : factors) chi *= f.kind == FactorKind::sphere ? (f.dim % 2 ? 0 : 2) : 0;
    return chi;
  }
};

/// Variable map for the active coordinates (in coordinate order).
inline std::vector<int> variable_map(const std::vector<bool>& active) {
  std::vector<int> map(active.size(), -1);
  int v = 0;
  for (std::size_t i = 0; i < active.size(); ++i)
    if (active[i]) map[i] = v++;
  return map;
}

namespace detail {
// cos^2 x = (1 + cos 2x) / 2 expanded at x0
inline Jet cos_squared(int nvars, int order, int var, double x0) {
  const double c0 = std::cos(x0);
  if (var < 0) return Jet::constant(nvars, order, c0 * c0);
  std::vector<double> t(static_cast<std::size_t>(order) + 1);
  const double s2 = std::sin(2 * x0), c2 = std::cos(2 * x0);
  const double cyc[4] = {c2, -s2, -c2, s2};
  double f = 0.5;
  t[0] = c0 * c0;
  for (int k = 1; k <= order; ++k) {
    f *= 2.0 / k;
    t[k] = cyc[k % 4] * f;
  }
  return Jet::variable(nvars, order, var, x0).compose(t);
}
}  // namespace detail

/// Jets of the (unscaled) product metric at a chart point.
inline MetricJet product_metric_jet(const ManifoldSpec& spec, std::span<const double> point, int order,
                                    const std::vector<int>& var_of_coord) {
  const int n = spec.dim();
  int nvars = 0;
  for (int v : var_of_coord) nvars = std::max(nvars, v + 1);
  std::vector<Jet> comps(static_cast<std::size_t>(n * n), Jet::constant(nvars, order, 0.0));
  int offset = 0;
  for (const auto& f : spec.factors) {
    if (f.kind == FactorKind::torus) {
      for (int q = 0; q < f.dim; ++q) comps[(offset + q) * n + offset + q] = Jet::constant(nvars, order, 1.0);
    } else {
      const double inv_k = 1.0 / f.curvature.get_d();
      Jet running = Jet::constant(nvars, order, inv_k);
      for (int q = 0; q < f.dim; ++q) {
        const int c = offset + q;
        comps[c * n + c] = running;
        if (q + 1 < f.dim) {
          running = running * detail::cos_squared(nvars, order, var_of_coord[c], point[c]);
        }
      }
    }
    offset += f.dim;
  }
  return MetricJet::from_components(n, std::move(comps), var_of_coord,
                                    std::vector<double>(point.begin(), point.end()));
}

/// sqrt(det g) of the product metric at a chart point.
inline double product_volume_density(const ManifoldSpec& spec, std::span<const double> point) {
  double v = 1.0;
  int offset = 0;
  for (const auto& f : spec.factors) {
    if (f.kind == FactorKind::sphere) {
      v *= std::pow(f.curvature.get_d(), -0.5 * f.dim);
      for (int q = 0; q + 1 < f.dim; ++q) v *= std::pow(std::cos(point[offset + q]), f.dim - 1 - q);
    }
    offset += f.dim;
  }
  return v;
}

/// Metric jet from closed-form components g_ij (row-major, n x n, read as
/// symmetric from the upper triangle), expanded in every coordinate.
inline MetricJet expr_metric_jet(int n, const std::vector<Expr>& comps, std::span<const double> point,
                                 int order) {
  if (static_cast<int>(comps.size()) != n * n) throw DimensionError("need n*n metric components");
  if (static_cast<int>(point.size()) != n) throw DimensionError("point dimension mismatch");
  std::vector<int> map(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) map[i] = i;
  std::vector<Jet> jets(static_cast<std::size_t>(n * n), Jet::constant(n, order, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      jets[i * n + j] = jet_eval(comps[i * n + j], point, order, n, map);
      jets[j * n + i] = jets[i * n + j];
    }
  return MetricJet::from_components(n, std::move(jets), map, std::vector<double>(point.begin(), point.end()));
}

}  // namespace confinv
