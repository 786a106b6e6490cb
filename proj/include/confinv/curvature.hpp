#pragma once

// Pointwise curvature from metric jets.
//
// Conventions: R_ijkl = d_i G_k,jl - d_j G_k,il - G_m,ik G^m_jl + G_m,jk G^m_il
// with G_k,ij the Christoffel symbols of the first kind, so R_ijij is the
// sectional curvature (positive on round spheres). Ric_jl = R^i_jil,
// J = R / (2(n-1)), P = (Ric - J g)/(n-2), W = Rm - P ^ g,
// C_ijk = D_i P_jk - D_j P_ik, B_ij = D^s C_sij + W_isjt P^st.
//
// Jets are taken only in the "active" coordinates listed by the metric's
// var_of_coord map; derivatives along the other coordinates vanish.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "confinv/error.hpp"
#include "confinv/jet.hpp"
#include "confinv/tensor_algebra.hpp"

namespace confinv {

struct MetricJet {
  int dim = 0;
  int order = 0;
  int nvars = 0;
  std::vector<int> var_of_coord;  ///< coordinate -> jet variable, -1 if inactive
  std::vector<double> point;
  std::vector<Jet> components;  ///< dim*dim, symmetric

  const Jet& operator()(int i, int j) const { return components[i * dim + j]; }

  /// Validates shape, symmetry and common order/variable count.
  static MetricJet from_components(int dim, std::vector<Jet> comps, std::vector<int> var_of_coord,
                                   std::vector<double> point) {
    if (dim < 1) throw DimensionError("metric dimension must be positive");
    if (comps.size() != static_cast<std::size_t>(dim * dim))
      throw DimensionError("metric needs dim*dim component jets");
    if (var_of_coord.empty()) var_of_coord.assign(dim, -1);
    if (var_of_coord.size() != static_cast<std::size_t>(dim))
      throw DimensionError("variable map must have one entry per coordinate");
    if (point.empty()) point.assign(dim, 0.0);
    MetricJet mj;
    mj.dim = dim;
    mj.order = comps[0].order();
    mj.nvars = comps[0].nvars();
    for (int c = 0; c < dim; ++c)
      if (var_of_coord[c] >= mj.nvars) throw DimensionError("variable map exceeds jet variables");
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        const Jet& a = comps[i * dim + j];
        if (a.order() != mj.order || a.nvars() != mj.nvars)
          throw DimensionError("metric component jets must share order and variables");
        const Jet& b = comps[j * dim + i];
        for (std::size_t k = 0; k < a.coeffs().size(); ++k)
          if (a[k] != b[k]) throw DomainError("metric jets are not symmetric");
      }
    mj.var_of_coord = std::move(var_of_coord);
    mj.point = std::move(point);
    mj.components = std::move(comps);
    return mj;
  }

  /// Euclidean metric with all coordinates active.
  static MetricJet flat(int dim, int order) {
    std::vector<Jet> comps(dim * dim, Jet::constant(dim, order, 0.0));
    std::vector<int> map(dim);
    for (int i = 0; i < dim; ++i) {
      comps[i * dim + i] = Jet::constant(dim, order, 1.0);
      map[i] = i;
    }
    return from_components(dim, std::move(comps), map, std::vector<double>(dim, 0.0));
  }
};

/// Component jets of e^{2u} g; u must live on the same variables with order
/// at least the metric's.
inline MetricJet conformal_metric_jet(const MetricJet& mj, const Jet& u) {
  if (u.nvars() != mj.nvars) throw DimensionError("conformal factor uses different jet variables");
  if (u.order() < mj.order) throw InsufficientOrder("conformal factor jet order below metric order");
  Jet e2u = exp(u.truncated(mj.order) * 2.0);
  MetricJet out = mj;
  for (auto& c : out.components) c = c * e2u;
  return out;
}

namespace detail {

/// Flat array of same-order jets with per-component nonzero flags. Storage of
/// a component is only initialized once it becomes nonzero, which keeps the
/// mostly empty rank-4 arrays cheap.
struct JetArray {
  const JetSpace* sp = nullptr;
  int order = -1;
  std::size_t stride = 0;
  std::unique_ptr<double[]> data;
  std::vector<char> nz;

  JetArray() = default;
  JetArray(const JetSpace& s, int ord, std::size_t ncomp)
      : sp(&s), order(ord), stride(s.size(ord)), data(new double[ncomp * stride]), nz(ncomp, 0) {}
  JetArray(const JetArray& o) : sp(o.sp), order(o.order), stride(o.stride), nz(o.nz) {
    if (!o.data) return;
    data.reset(new double[nz.size() * stride]);
    for (std::size_t c = 0; c < nz.size(); ++c)
      if (nz[c]) std::copy(o.at(c), o.at(c) + stride, at(c));
  }
  JetArray(JetArray&&) noexcept = default;
  JetArray& operator=(const JetArray& o) {
    if (this != &o) *this = JetArray(o);
    return *this;
  }
  JetArray& operator=(JetArray&&) noexcept = default;

  double* at(std::size_t c) { return data.get() + c * stride; }
  const double* at(std::size_t c) const { return data.get() + c * stride; }
  /// Writable component, zero-filled on first touch.
  double* touch(std::size_t c) {
    double* o = at(c);
    if (!nz[c]) {
      std::fill(o, o + stride, 0.0);
      nz[c] = 1;
    }
    return o;
  }
  double value(std::size_t c) const { return nz[c] ? data[c * stride] : 0.0; }
  bool valid() const { return order >= 0; }
};

/// out[oc] += s * a[ac] * b[bc], truncated at out.order.
inline void mac(JetArray& out, std::size_t oc, const JetArray& a, std::size_t ac,
                const JetArray& b, std::size_t bc, double s = 1.0) {
  if (!a.nz[ac] || !b.nz[bc] || s == 0.0) return;
  jetops::mul_acc(*out.sp, out.order, a.at(ac), b.at(bc), out.touch(oc), s);
}

/// out[oc] += s * a[ac].
inline void axpy(JetArray& out, std::size_t oc, const JetArray& a, std::size_t ac, double s = 1.0) {
  if (!a.nz[ac] || s == 0.0) return;
  const std::size_t m = out.stride;
  double* o = out.touch(oc);
  const double* x = a.at(ac);
  for (std::size_t k = 0; k < m; ++k) o[k] += s * x[k];
}

/// out[oc] += s * d/dx_var a[ac] (var < 0 means an inactive coordinate).
inline void add_deriv(JetArray& out, std::size_t oc, const JetArray& a, std::size_t ac, int var,
                      double s = 1.0) {
  if (var < 0 || !a.nz[ac]) return;
  double* o = out.touch(oc);
  const double* x = a.at(ac);
  for (const auto& d : out.sp->derivative(var, out.order)) o[d.dst] += s * d.factor * x[d.src];
}

/// Value of d/dx_var of component c (first-order coefficient).
inline double first_deriv(const JetArray& a, std::size_t c, int var) {
  if (var < 0 || !a.nz[c] || a.order < 1) return 0.0;
  return a.at(c)[1 + var];
}

class CurvaturePipeline {
 public:
  CurvaturePipeline(const MetricJet& mj, bool density_jets) : n(mj.dim), K(mj.order) {
    if (n < 3) throw DimensionError("curvature pipeline needs dimension >= 3");
    if (K < 2) throw InsufficientOrder("curvature needs metric jets of order >= 2");
    sp = &JetSpace::get(mj.nvars);
    var = mj.var_of_coord;
    r = K - 2;
    w = std::min(r, density_jets ? 2 : 1);
    c = K >= 3 ? std::min(r - 1, 1) : -1;

    g = JetArray(*sp, K, n * n);
    for (int i = 0; i < n * n; ++i) {
      const auto co = mj.components[i].coeffs();
      if (std::any_of(co.begin(), co.end(), [](double v) { return v != 0.0; }))
        std::copy(co.begin(), co.end(), g.touch(i));
    }
    build_inverse();
    build_christoffel();
    build_riemann();
    build_schouten();
    build_weyl();
    if (c >= 0) build_cotton();
  }

  int n, K, r, w, c;
  const JetSpace* sp;
  std::vector<int> var;
  JetArray g, ginv, gam1, gam2, riem, ric, scal, jay, p, weyl, cot;

  std::size_t i2(int a, int b) const { return static_cast<std::size_t>(a * n + b); }
  std::size_t i3(int a, int b, int d) const { return i2(a, b) * n + d; }
  std::size_t i4(int a, int b, int d, int e) const { return i3(a, b, d) * n + e; }

  /// Raise every slot of a rank-`rank` array with ginv, at the array's order.
  JetArray raise_all(const JetArray& t, int rank) const {
    JetArray cur = t;
    for (int slot = 0; slot < rank; ++slot) {
      JetArray nxt(*sp, t.order, cur.nz.size());
      std::size_t inner = 1;
      for (int q = slot + 1; q < rank; ++q) inner *= n;
      const std::size_t outer = cur.nz.size() / (inner * n);
      for (std::size_t o = 0; o < outer; ++o)
        for (int a = 0; a < n; ++a)
          for (std::size_t in = 0; in < inner; ++in) {
            std::size_t src = (o * n + a) * inner + in;
            if (!cur.nz[src]) continue;
            for (int u = 0; u < n; ++u) mac(nxt, (o * n + u) * inner + in, ginv, i2(a, u), cur, src);
          }
      cur = std::move(nxt);
    }
    return cur;
  }

  /// Full contraction <a, b> of two rank-`rank` arrays as a jet of order t.
  JetArray dot_all(const JetArray& a, const JetArray& b_up, int t) const {
    JetArray out(*sp, t, 1);
    for (std::size_t k = 0; k < a.nz.size(); ++k) mac(out, 0, a, k, b_up, k);
    return out;
  }

  /// Laplacian g^ij (d_i d_j f - G^k_ij d_k f) of a scalar jet, at order t.
  JetArray laplacian(const JetArray& f, int t) const {
    if (f.order < t + 2 || ginv.order < t || gam2.order < t)
      throw InsufficientOrder("laplacian needs two more orders than its result");
    JetArray out(*sp, t, 1);
    JetArray df(*sp, f.order - 1, n);
    for (int k = 0; k < n; ++k) add_deriv(df, k, f, 0, var[k]);
    JetArray ddf(*sp, t, n * n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) add_deriv(ddf, i2(i, j), df, j, var[i]);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        std::size_t sym = i <= j ? i2(i, j) : i2(j, i);
        mac(out, 0, ginv, i2(i, j), ddf, sym);
      }
    // h^k = g^ij G^k_ij
    JetArray h(*sp, t, n);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) mac(h, k, ginv, i2(i, j), gam2, i3(k, i, j));
    for (int k = 0; k < n; ++k) mac(out, 0, h, k, df, k, -1.0);
    return out;
  }

  /// Divergence g^ia (d_a w_i - G^m_ai w_m) of a covector jet, value only.
  double divergence(const JetArray& wv) const {
    if (wv.order < 1) throw InsufficientOrder("divergence needs a first-order jet");
    double s = 0;
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < n; ++a) {
        double gia = ginv.value(i2(i, a));
        if (gia == 0.0) continue;
        double v = first_deriv(wv, i, var[a]);
        for (int m = 0; m < n; ++m) v -= gam2.value(i3(m, a, i)) * wv.value(m);
        s += gia * v;
      }
    return s;
  }

 private:
  // Copies component (i, j, k, l) to the other three sign-related slots.
  void fill_antisymmetric(JetArray& t, int i, int j, int k, int l) const {
    const std::size_t o = i4(i, j, k, l);
    axpy(t, i4(j, i, k, l), t, o, -1.0);
    axpy(t, i4(i, j, l, k), t, o, -1.0);
    axpy(t, i4(j, i, l, k), t, o);
  }

  void build_inverse() {
    std::vector<double> g0(n * n), a(n * n);
    for (int k = 0; k < n * n; ++k) g0[k] = g.value(k);
    // Cholesky doubles as the positive-definiteness check.
    std::vector<double> l(n * n, 0.0);
    for (int j = 0; j < n; ++j) {
      double d = g0[i2(j, j)];
      for (int k = 0; k < j; ++k) d -= l[i2(j, k)] * l[i2(j, k)];
      if (!(d > 0.0)) throw DomainError("metric is not positive definite at the base point");
      l[i2(j, j)] = std::sqrt(d);
      for (int i = j + 1; i < n; ++i) {
        double s = g0[i2(i, j)];
        for (int k = 0; k < j; ++k) s -= l[i2(i, k)] * l[i2(j, k)];
        l[i2(i, j)] = s / l[i2(j, j)];
      }
    }
    // inverse columns by forward/back substitution
    for (int col = 0; col < n; ++col) {
      std::vector<double> y(n, 0.0), x(n, 0.0);
      for (int i = 0; i < n; ++i) {
        double s = i == col ? 1.0 : 0.0;
        for (int k = 0; k < i; ++k) s -= l[i2(i, k)] * y[k];
        y[i] = s / l[i2(i, i)];
      }
      for (int i = n - 1; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k < n; ++k) s -= l[i2(k, i)] * x[k];
        x[i] = s / l[i2(i, i)];
      }
      for (int i = 0; i < n; ++i) a[i2(i, col)] = x[i];
    }
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        double s = 0.5 * (a[i2(i, j)] + a[i2(j, i)]);
        a[i2(i, j)] = a[i2(j, i)] = s;
      }

    // g^-1 = sum_s (-1)^s A (N A)^s with N the nilpotent part of g.
    JetArray aj(*sp, r, n * n), nil(*sp, r, n * n);
    for (int k = 0; k < n * n; ++k) {
      if (a[k] != 0.0) aj.touch(k)[0] = a[k];
      if (g.nz[k] && r > 0 && std::any_of(g.at(k) + 1, g.at(k) + nil.stride, [](double v) { return v != 0.0; })) {
        double* o = nil.touch(k);
        std::copy(g.at(k) + 1, g.at(k) + nil.stride, o + 1);
      }
    }
    ginv = aj;
    JetArray term = aj;
    for (int s = 1; s <= r; ++s) {
      JetArray tn(*sp, r, n * n);
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
          if (!term.nz[i2(i, k)]) continue;
          for (int l2 = 0; l2 < n; ++l2) mac(tn, i2(i, l2), term, i2(i, k), nil, i2(k, l2));
        }
      JetArray next(*sp, r, n * n);
      for (int i = 0; i < n; ++i)
        for (int l2 = 0; l2 < n; ++l2) {
          if (!tn.nz[i2(i, l2)]) continue;
          for (int j = 0; j < n; ++j) axpy(next, i2(i, j), tn, i2(i, l2), -a[i2(l2, j)]);
        }
      bool any = false;
      for (int k = 0; k < n * n; ++k) {
        axpy(ginv, k, next, k);
        any = any || next.nz[k];
      }
      if (!any) break;
      term = std::move(next);
    }
  }

  void build_christoffel() {
    JetArray dg(*sp, K - 1, n * n * n);  // (c, i, j): d_c g_ij
    for (int cc = 0; cc < n; ++cc) {
      if (var[cc] < 0) continue;
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          add_deriv(dg, i3(cc, i, j), g, i2(i, j), var[cc]);
          if (j != i) axpy(dg, i3(cc, j, i), dg, i3(cc, i, j));
        }
    }
    gam1 = JetArray(*sp, K - 1, n * n * n);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          std::size_t o = i3(k, i, j);
          axpy(gam1, o, dg, i3(i, k, j), 0.5);
          axpy(gam1, o, dg, i3(j, k, i), 0.5);
          axpy(gam1, o, dg, i3(k, i, j), -0.5);
          if (j != i) axpy(gam1, i3(k, j, i), gam1, o);
        }
    gam2 = JetArray(*sp, r, n * n * n);
    for (int m = 0; m < n; ++m)
      for (int k = 0; k < n; ++k) {
        if (!ginv.nz[i2(m, k)]) continue;
        for (int i = 0; i < n; ++i)
          for (int j = i; j < n; ++j) mac(gam2, i3(m, i, j), ginv, i2(m, k), gam1, i3(k, i, j));
      }
    for (int m = 0; m < n; ++m)
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) axpy(gam2, i3(m, j, i), gam2, i3(m, i, j));
  }

  void build_riemann() {
    riem = JetArray(*sp, r, n * n * n * n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = k + 1; l < n; ++l) {
            std::size_t o = i4(i, j, k, l);
            add_deriv(riem, o, gam1, i3(k, j, l), var[i]);
            add_deriv(riem, o, gam1, i3(k, i, l), var[j], -1.0);
            for (int m = 0; m < n; ++m) {
              mac(riem, o, gam1, i3(m, i, k), gam2, i3(m, j, l), -1.0);
              mac(riem, o, gam1, i3(m, j, k), gam2, i3(m, i, l));
            }
            fill_antisymmetric(riem, i, j, k, l);
          }
  }

  void build_schouten() {
    ric = JetArray(*sp, r, n * n);
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l)
        for (int i = 0; i < n; ++i)
          for (int k = 0; k < n; ++k) mac(ric, i2(j, l), ginv, i2(i, k), riem, i4(i, j, k, l));
    scal = JetArray(*sp, r, 1);
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) mac(scal, 0, ginv, i2(j, l), ric, i2(j, l));
    jay = JetArray(*sp, r, 1);
    axpy(jay, 0, scal, 0, 1.0 / (2.0 * (n - 1)));
    p = JetArray(*sp, r, n * n);
    for (int k = 0; k < n * n; ++k) {
      axpy(p, k, ric, k, 1.0 / (n - 2));
      mac(p, k, jay, 0, g, k, -1.0 / (n - 2));
    }
  }

  void build_weyl() {
    weyl = JetArray(*sp, w, n * n * n * n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = k + 1; l < n; ++l) {
            std::size_t o = i4(i, j, k, l);
            axpy(weyl, o, riem, o);
            mac(weyl, o, p, i2(i, k), g, i2(j, l), -1.0);
            mac(weyl, o, p, i2(j, l), g, i2(i, k), -1.0);
            mac(weyl, o, p, i2(i, l), g, i2(j, k));
            mac(weyl, o, p, i2(j, k), g, i2(i, l));
            fill_antisymmetric(weyl, i, j, k, l);
          }
  }

  void build_cotton() {
    JetArray dp(*sp, c, n * n * n);  // D_a P_bc
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int d = 0; d < n; ++d) {
          std::size_t o = i3(a, b, d);
          add_deriv(dp, o, p, i2(b, d), var[a]);
          for (int m = 0; m < n; ++m) {
            mac(dp, o, gam2, i3(m, a, b), p, i2(m, d), -1.0);
            mac(dp, o, gam2, i3(m, a, d), p, i2(b, m), -1.0);
          }
        }
    cot = JetArray(*sp, c, n * n * n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int d = 0; d < n; ++d) {
          axpy(cot, i3(a, b, d), dp, i3(a, b, d));
          axpy(cot, i3(a, b, d), dp, i3(b, a, d), -1.0);
        }
  }
};

}  // namespace detail

/// Pointwise curvature at the base point of a metric jet. Higher tensors are
/// present when the jet order allows: Cotton and grad W from order 3, Bach
/// from order 4.
struct CurvatureBundle {
  int dim = 0;
  int order = 0;
  MetricAtPoint<double> metric{Sym2<double>::identity(1)};
  std::vector<double> christoffel;  ///< G^k_ij at (k, i, j)
  Alg2<double> riemann{1};
  Sym2<double> ricci{1};
  double ricci_asymmetry = 0;
  double scalar = 0;
  double J = 0;
  Sym2<double> schouten{1};
  Sym2<double> trace_free_schouten{1};
  Alg2<double> weyl{1};
  std::optional<Three1<double>> cotton;
  std::vector<double> grad_weyl;  ///< D_a W_bcde at (a, b, c, d, e)
  std::optional<Sym2<double>> bach;
  double bach_asymmetry = 0;

  std::shared_ptr<const detail::CurvaturePipeline> jets;
};

namespace detail {

inline std::vector<double> values_of(const JetArray& a) {
  std::vector<double> v(a.nz.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = a.value(k);
  return v;
}

inline Sym2<double> symmetrized(const std::vector<double>& m, int n, double* asym) {
  Sym2<double> out(n);
  double r = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      r = std::max(r, std::abs(m[i * n + j] - m[j * n + i]));
      out.set(i, j, 0.5 * (m[i * n + j] + m[j * n + i]));
    }
  if (asym) *asym = r;
  return out;
}

/// Covariant derivative (values) of a rank-`rank` value tensor t given its
/// first derivatives dt (a, comps...).
inline std::vector<double> covariant_values(std::vector<double> dt, const std::vector<double>& t,
                                            const std::vector<double>& gam, int n, int rank) {
  std::vector<double> out = std::move(dt);
  const std::size_t comps = t.size();
  // nonzero G^m_ab grouped by (a, b)
  std::vector<std::vector<std::pair<int, double>>> nzg(static_cast<std::size_t>(n * n));
  for (int m = 0; m < n; ++m)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double v = gam[(static_cast<std::size_t>(m) * n + a) * n + b];
        if (v != 0.0) nzg[a * n + b].push_back({m, v});
      }
  for (int q = 0; q < rank; ++q) {
    std::size_t inner = 1;
    for (int k = q + 1; k < rank; ++k) inner *= n;
    const std::size_t outer = comps / (inner * n);
    for (int a = 0; a < n; ++a) {
      double* oa = out.data() + a * comps;
      for (int b = 0; b < n; ++b) {
        const auto& list = nzg[a * n + b];
        if (list.empty()) continue;
        for (std::size_t o = 0; o < outer; ++o) {
          double* dst = oa + (o * n + b) * inner;
          for (const auto& [m, v] : list) {
            const double* src = t.data() + (o * n + m) * inner;
            for (std::size_t in = 0; in < inner; ++in) dst[in] -= v * src[in];
          }
        }
      }
    }
  }
  return out;
}

inline std::vector<double> first_derivs(const JetArray& a, const std::vector<int>& var, int n) {
  const std::size_t comps = a.nz.size();
  std::vector<double> d(comps * n, 0.0);
  for (int c = 0; c < n; ++c) {
    if (var[c] < 0) continue;
    for (std::size_t k = 0; k < comps; ++k) d[c * comps + k] = first_deriv(a, k, var[c]);
  }
  return d;
}

}  // namespace detail

/// Curvature tensors at the base point. `density_jets` keeps W to second
/// order so the density forms (with their divergence terms) are available.
inline CurvatureBundle curvature(const MetricJet& mj, bool density_jets = true) {
  auto pl = std::make_shared<detail::CurvaturePipeline>(mj, density_jets);
  const auto& P = *pl;
  const int n = P.n;
  CurvatureBundle cb;
  cb.dim = n;
  cb.order = P.K;
  {
    Sym2<double> g0(n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) g0.set(i, j, P.g.value(P.i2(i, j)));
    cb.metric = MetricAtPoint<double>(g0);
  }
  cb.christoffel = detail::values_of(P.gam2);
  cb.riemann = Alg2<double>::from_components(n, detail::values_of(P.riem));
  cb.ricci = detail::symmetrized(detail::values_of(P.ric), n, &cb.ricci_asymmetry);
  cb.scalar = P.scal.value(0);
  cb.J = P.jay.value(0);
  double pasym = 0;
  cb.schouten = detail::symmetrized(detail::values_of(P.p), n, &pasym);
  cb.trace_free_schouten = cb.schouten - cb.metric.g() * (cb.J / n);
  cb.weyl = Alg2<double>::from_components(n, detail::values_of(P.weyl));

  if (P.c >= 0) {
    Three1<double> c3(n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int d = 0; d < n; ++d) c3(a, b, d) = P.cot.value(P.i3(a, b, d));
    cb.cotton = c3;
    cb.grad_weyl = detail::covariant_values(detail::first_derivs(P.weyl, P.var, n),
                                            cb.weyl.components(), cb.christoffel, n, 4);
  }
  if (P.c >= 1) {
    std::vector<double> dc = detail::covariant_values(detail::first_derivs(P.cot, P.var, n),
                                                      cb.cotton->components(), cb.christoffel, n, 3);
    const auto& gi = cb.metric.g_inv();
    const auto& pp = cb.schouten;
    // P^st
    std::vector<double> pup(n * n, 0.0);
    for (int s = 0; s < n; ++s)
      for (int t = 0; t < n; ++t) {
        double v = 0;
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) v += gi(s, a) * pp(a, b) * gi(b, t);
        pup[s * n + t] = v;
      }
    std::vector<double> bm(n * n, 0.0);
    const std::size_t n3 = static_cast<std::size_t>(n) * n * n;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = 0;
        for (int s = 0; s < n; ++s)
          for (int a = 0; a < n; ++a) {
            double gsa = gi(s, a);
            if (gsa != 0.0) v += gsa * dc[a * n3 + (static_cast<std::size_t>(s) * n + i) * n + j];
          }
        for (int s = 0; s < n; ++s)
          for (int t = 0; t < n; ++t) v += cb.weyl(i, s, j, t) * pup[s * n + t];
        bm[i * n + j] = v;
      }
    cb.bach = detail::symmetrized(bm, n, &cb.bach_asymmetry);
  }
  cb.jets = std::move(pl);
  return cb;
}

/// Scalar contractions at a point, computed with sparse loops.
struct PointScalars {
  double weyl_norm2 = 0;
  double grad_weyl_norm2 = 0;
  double cotton_norm2 = 0;
  double e_norm2 = 0;
  double tr_e3 = 0;
  double p_norm2 = 0;
  double tr_p3 = 0;
  double eww = 0;  ///< E_s^t W_tijk W^sijk
  double pww = 0;  ///< P_s^t W_tijk W^sijk
  double i2 = 0;
  double i3 = 0;
  double b_dot_e = 0;
  double b_dot_p = 0;
};

namespace detail {

inline bool is_diagonal(const Sym2<double>& gi, int n) {
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (gi(i, j) != 0.0) return false;
  return true;
}

// Calls f(offset, weight) for every innermost run of n components, where
// weight[a] is the product of the diagonal factors of the slots above.
template <class F>
void diagonal_walk(int n, int rank, const Sym2<double>& gi, unsigned mask, F&& f) {
  double wl[8][8];
  for (int slot = 0; slot < rank; ++slot)
    for (int a = 0; a < n; ++a) wl[slot][a] = (mask & (1u << slot)) ? gi(a, a) : 1.0;
  auto rec = [&](auto&& self, int slot, std::size_t off, double w) -> void {
    if (slot == rank - 1) {
      double row[8];
      for (int a = 0; a < n; ++a) row[a] = w * wl[slot][a];
      f(off, row);
      return;
    }
    for (int a = 0; a < n; ++a) self(self, slot + 1, (off + a) * n, w * wl[slot][a]);
  };
  rec(rec, 0, 0, 1.0);
}

/// Raises the slots in `mask` (bit q = slot q); diagonal metrics just
/// rescale components.
inline std::vector<double> raise_values(std::vector<double> t, int n, int rank, const Sym2<double>& gi,
                                        unsigned mask = ~0u) {
  if (!is_diagonal(gi, n)) {
    for (int slot = 0; slot < rank; ++slot)
      if (mask & (1u << slot)) t = detail::raise_slot(t, n, rank, slot, gi);
    return t;
  }
  diagonal_walk(n, rank, gi, mask, [&](std::size_t off, const double* row) {
    for (int a = 0; a < n; ++a) t[off + a] *= row[a];
  });
  return t;
}

/// <t, t> with every slot raised.
inline double norm2_values(const std::vector<double>& t, int n, int rank, const Sym2<double>& gi) {
  if (!is_diagonal(gi, n)) {
    auto up = raise_values(t, n, rank, gi);
    double s = 0;
    for (std::size_t k = 0; k < t.size(); ++k) s += t[k] * up[k];
    return s;
  }
  double s = 0;
  diagonal_walk(n, rank, gi, ~0u, [&](std::size_t off, const double* row) {
    for (int a = 0; a < n; ++a) s += t[off + a] * t[off + a] * row[a];
  });
  return s;
}

inline std::vector<double> mixed(const Sym2<double>& s, const Sym2<double>& gi, int n) {
  std::vector<double> m(n * n, 0.0);  // S_i^j
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a) {
      double v = s(i, a);
      if (v == 0.0) continue;
      for (int j = 0; j < n; ++j) m[i * n + j] += v * gi(a, j);
    }
  return m;
}

}  // namespace detail

inline PointScalars point_scalars(const CurvatureBundle& cb) {
  const int n = cb.dim;
  const auto& gi = cb.metric.g_inv();
  PointScalars out;
  const auto& wc = cb.weyl.components();
  std::vector<double> wup = detail::raise_values(wc, n, 4, gi);
  for (std::size_t k = 0; k < wc.size(); ++k) out.weyl_norm2 += wc[k] * wup[k];

  const std::size_t n3 = static_cast<std::size_t>(n) * n * n;
  std::vector<double> x(n * n, 0.0);  // X_t^s = W_tijk W^sijk
  for (int t = 0; t < n; ++t)
    for (std::size_t q = 0; q < n3; ++q) {
      double v = wc[t * n3 + q];
      if (v == 0.0) continue;
      for (int s = 0; s < n; ++s) x[t * n + s] += v * wup[s * n3 + q];
    }
  std::vector<double> em = detail::mixed(cb.trace_free_schouten, gi, n);
  std::vector<double> pm = detail::mixed(cb.schouten, gi, n);
  for (int s = 0; s < n; ++s)
    for (int t = 0; t < n; ++t) {
      out.eww += em[s * n + t] * x[t * n + s];
      out.pww += pm[s * n + t] * x[t * n + s];
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      out.e_norm2 += em[i * n + j] * em[j * n + i];
      out.p_norm2 += pm[i * n + j] * pm[j * n + i];
      for (int k = 0; k < n; ++k) {
        out.tr_e3 += em[i * n + j] * em[j * n + k] * em[k * n + i];
        out.tr_p3 += pm[i * n + j] * pm[j * n + k] * pm[k * n + i];
      }
    }

  // I3 = tr(M^3), M_(ij),(kl) = W_ij^kl; I2 = tr(N^3), N_(ij),(kl) = W_i^k_j^l.
  const std::size_t d = static_cast<std::size_t>(n) * n;
  {
    std::vector<double> w34 = detail::raise_values(wc, n, 4, gi, 0b1100);
    out.i3 = detail::trace_cubed(w34, d);
    std::vector<double> w24 = detail::raise_values(wc, n, 4, gi, 0b1010);
    std::vector<double> nm(d * d, 0.0);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l)
            nm[(i * n + j) * d + (k * n + l)] = w24[((i * n + k) * n + j) * n + l];
    out.i2 = detail::trace_cubed(nm, d);
  }

  if (cb.cotton) {
    const auto& cc = cb.cotton->components();
    out.cotton_norm2 = detail::norm2_values(cc, n, 3, gi);
    out.grad_weyl_norm2 = detail::norm2_values(cb.grad_weyl, n, 5, gi);
  }
  if (cb.bach) {
    out.b_dot_e = inner(*cb.bach, cb.trace_free_schouten, cb.metric);
    out.b_dot_p = inner(*cb.bach, cb.schouten, cb.metric);
  }
  return out;
}

/// Pointwise densities including divergence terms; each is present when the
/// jet order allows (Q6 from order 6, L1/L2 from order 4 with density jets,
/// L3 always).
struct PointDensities {
  std::optional<double> Q6, L1, L2, L3;

  double q6() const { return get(Q6, "Q6 density needs metric jets of order 6"); }
  double l1() const { return get(L1, "L1 density needs metric jets of order 4"); }
  double l2() const { return get(L2, "L2 density needs metric jets of order 4"); }
  double l3() const { return get(L3, "L3 density unavailable"); }

 private:
  static double get(const std::optional<double>& v, const char* why) {
    if (!v) throw InsufficientOrder(why);
    return *v;
  }
};

namespace detail {

/// Delta |W|^2 and div(W_ijkl C^ijk) from the retained jets.
struct WeylDivergenceTerms {
  double lap_weyl_norm2 = 0;
  double div_v = 0;
};

inline WeylDivergenceTerms weyl_divergence_terms(const CurvaturePipeline& P) {
  if (P.w < 2 || P.c < 1)
    throw InsufficientOrder("Weyl divergence terms need order-4 density jets");
  const int n = P.n;
  WeylDivergenceTerms out;
  JetArray wup = P.raise_all(P.weyl, 4);
  JetArray wn2 = P.dot_all(P.weyl, wup, 2);
  out.lap_weyl_norm2 = P.laplacian(wn2, 0).value(0);
  // V_l = W_ijkl C^ijk at order 1
  JetArray cup = P.raise_all(P.cot, 3);
  JetArray v(*P.sp, 1, n);
  const std::size_t n3 = static_cast<std::size_t>(n) * n * n;
  for (std::size_t q = 0; q < n3; ++q) {
    if (!cup.nz[q]) continue;
    for (int l = 0; l < n; ++l) mac(v, l, P.weyl, q * n + l, cup, q);
  }
  out.div_v = P.divergence(v);
  return out;
}

}  // namespace detail

inline PointDensities densities(const CurvatureBundle& cb) {
  PointDensities out;
  PointScalars s = point_scalars(cb);
  out.L3 = s.i3;
  const auto& P = *cb.jets;
  const double J = cb.J;
  if (cb.order >= 4 && P.w >= 2 && P.c >= 1) {
    auto t = detail::weyl_divergence_terms(P);
    out.L1 = 2 * t.lap_weyl_norm2 - 48 * t.div_v + s.grad_weyl_norm2 + 48 * s.pww -
             8 * J * s.weyl_norm2 - 64 * s.cotton_norm2;
    out.L2 = 0.5 * t.lap_weyl_norm2 - 8 * t.div_v + 8 * s.pww - 2 * J * s.weyl_norm2 -
             8 * s.cotton_norm2;
  }
  if (cb.order >= 6) {
    const int n = P.n;
    using detail::JetArray;
    JetArray lapj = P.laplacian(P.jay, 2);
    double lap2j = P.laplacian(lapj, 0).value(0);
    JetArray j2(*P.sp, 2, 1);
    detail::mac(j2, 0, P.jay, 0, P.jay, 0);
    double lapj2 = P.laplacian(j2, 0).value(0);
    // w_i = P_ik g^kj d_j J at order 1
    JetArray dj(*P.sp, 1, n);
    for (int j = 0; j < n; ++j) detail::add_deriv(dj, j, P.jay, 0, P.var[j]);
    JetArray pm(*P.sp, 1, n * n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j) detail::mac(pm, P.i2(i, j), P.p, P.i2(i, k), P.ginv, P.i2(k, j));
    JetArray om(*P.sp, 1, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) detail::mac(om, i, pm, P.i2(i, j), dj, j);
    double div_om = P.divergence(om);
    JetArray p2 = P.dot_all(P.p, P.raise_all(P.p, 2), 2);
    double lapp2 = P.laplacian(p2, 0).value(0);
    out.Q6 = -lap2j + 4 * lapj2 - 8 * div_om + 4 * lapp2 - 8 * J * J * J + 24 * J * s.p_norm2 -
             16 * s.tr_p3 - 8 * s.b_dot_p;
  }
  return out;
}

/// Integrand forms without divergence terms (same integrals as the
/// densities on closed manifolds). L3 is the density itself.
struct PointIntegrands {
  double Q = 0;
  double L1 = 0;
  double L2 = 0;
  double L3 = 0;
};

inline PointIntegrands integrands(const CurvatureBundle& cb) {
  if (cb.order < 4 || !cb.bach) throw InsufficientOrder("integrands need metric jets of order 4");
  PointScalars s = point_scalars(cb);
  const double J = cb.J;
  PointIntegrands out;
  out.Q = -40.0 / 9.0 * J * J * J + 16 * J * s.e_norm2 - 16 * s.tr_e3 - 8 * s.b_dot_e;
  out.L1 = s.grad_weyl_norm2 + 48 * s.eww - 64 * s.cotton_norm2;
  out.L2 = 8 * s.eww - 2.0 / 3.0 * J * s.weyl_norm2 - 8 * s.cotton_norm2;
  out.L3 = s.i3;
  return out;
}

/// Max-norm residuals of the algebraic and differential identities.
/// Relative residuals divide by the scale of the terms involved.
struct IdentityResiduals {
  double weyl_antisymmetry = 0;
  double weyl_pair_symmetry = 0;
  double weyl_bianchi = 0;
  double weyl_trace = 0;
  double cotton_antisymmetry = 0;
  double cotton_cyclic = 0;
  double cotton_trace = 0;
  double schouten_symmetry = 0;
  double bach_symmetry = 0;
  double schouten_trace = 0;  ///< |tr P - J|
  double cotton_bianchi = 0;  ///< D_[a W_bc]de + 2 C_[ab|[d g_c]|e]
  double weyl_laplacian = 0;  ///< the Delta |W|^2 identity in dimension six
  double tensor_scale = 0;    ///< curvature scale used for the algebraic residuals

  /// Largest of the algebraic (symmetry and trace) residuals, relative.
  double algebraic_max() const {
    double m = std::max({weyl_antisymmetry, weyl_pair_symmetry, weyl_bianchi, weyl_trace,
                         cotton_antisymmetry, cotton_cyclic, cotton_trace, schouten_symmetry,
                         bach_symmetry, schouten_trace});
    return m;
  }
};

inline IdentityResiduals identity_residuals(const CurvatureBundle& cb) {
  if (cb.order < 4 || !cb.bach) throw InsufficientOrder("identity residuals need order-4 jets");
  const int n = cb.dim;
  const auto& gi = cb.metric.g_inv();
  const auto& g = cb.metric.g();
  IdentityResiduals r;
  // Algebraic residuals are measured against the curvature scale; the ones
  // involving covariant derivatives against that scale times max(1, |G|),
  // the size of the terms that cancel in them.
  double gmax = 0;
  for (double v : cb.christoffel) gmax = std::max(gmax, std::abs(v));
  double dwmax = 0;
  for (double v : cb.grad_weyl) dwmax = std::max(dwmax, std::abs(v));
  const double tiny = 1e-300;
  const double curv = std::max({cb.riemann.max_abs(), cb.schouten.max_abs(), cb.cotton->max_abs(),
                                dwmax, tiny});
  const double wscale = curv, cscale = curv * std::max(1.0, gmax);
  auto rel = [&](double v, double scale) { return v / std::max(scale, tiny); };
  r.tensor_scale = curv;

  r.weyl_antisymmetry = rel(cb.weyl.antisymmetry_residual(), wscale);
  r.weyl_pair_symmetry = rel(cb.weyl.pair_symmetry_residual(), wscale);
  r.weyl_bianchi = rel(cb.weyl.bianchi_residual(), wscale);
  {
    Sym2<double> tw = partial_trace(cb.weyl, cb.metric);
    r.weyl_trace = rel(tw.max_abs(), wscale);
  }
  r.cotton_antisymmetry = rel(cb.cotton->antisymmetry_residual(), cscale);
  r.cotton_cyclic = rel(cb.cotton->cyclic_residual(), cscale);
  r.cotton_trace = rel(cotton_trace_residual(*cb.cotton, cb.metric), cscale);
  r.schouten_symmetry = rel(cb.ricci_asymmetry, std::max(cb.ricci.max_abs(), tiny));
  r.bach_symmetry = rel(cb.bach_asymmetry, std::max(cb.bach->max_abs(), tiny));
  r.schouten_trace = rel(std::abs(trace(cb.schouten, cb.metric) - cb.J),
                         std::max({std::abs(cb.J), cb.schouten.max_abs(), tiny}));

  // sum over cyclic (abc) of D_a W_bcde + C_abd g_ce - C_abe g_cd
  {
    const auto& dw = cb.grad_weyl;
    const auto& c = *cb.cotton;
    auto DW = [&](int a, int b, int cc, int d, int e) {
      return dw[(((static_cast<std::size_t>(a) * n + b) * n + cc) * n + d) * n + e];
    };
    double worst = 0;
    const double scale = cscale * std::max(1.0, g.max_abs());
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int cc = 0; cc < n; ++cc)
          for (int d = 0; d < n; ++d)
            for (int e = 0; e < n; ++e) {
              double lhs = DW(a, b, cc, d, e) + DW(b, cc, a, d, e) + DW(cc, a, b, d, e);
              double rhs = -(c(a, b, d) * g(cc, e) - c(a, b, e) * g(cc, d) + c(b, cc, d) * g(a, e) -
                             c(b, cc, e) * g(a, d) + c(cc, a, d) * g(b, e) - c(cc, a, e) * g(b, d));
              worst = std::max(worst, std::abs(lhs - rhs));
            }
    r.cotton_bianchi = rel(worst, scale);
  }
  (void)gi;

  if (n == 6 && cb.jets->w >= 2) {
    auto t = detail::weyl_divergence_terms(*cb.jets);
    PointScalars s = point_scalars(cb);
    double lhs = 0.5 * t.lap_weyl_norm2;
    double terms[] = {s.grad_weyl_norm2, -8 * t.div_v, 2 * cb.J * s.weyl_norm2, 8 * s.pww,
                      -24 * s.cotton_norm2, -4 * s.i2, -s.i3};
    double rhs = 0, scale = std::abs(lhs);
    for (double v : terms) {
      rhs += v;
      scale += std::abs(v);
    }
    r.weyl_laplacian = rel(std::abs(lhs - rhs), scale);
  }
  return r;
}

}  // namespace confinv
