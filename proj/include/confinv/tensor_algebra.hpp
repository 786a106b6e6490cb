#pragma once

// Dense pointwise tensors with curvature-type index symmetries, and the
// bilinear algebra on them: Kulkarni-Nomizu products, compositions as
// endomorphisms, partial traces and complete contractions.
//
// Everything is generic over the scalar kind. Two instantiations are used:
// `Rational` (exact) and `double`. Storage is always dense; symmetries are
// produced by the constructing operations and checked by the residual
// functions, never assumed by storage.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "confinv/error.hpp"
#include "confinv/rational.hpp"

namespace confinv {

template <class S>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
  static constexpr bool exact = false;
  static bool is_zero(double x) { return x == 0.0; }
  static double magnitude(double x) { return std::abs(x); }
};

template <>
struct ScalarTraits<Rational> {
  static constexpr bool exact = true;
  static bool is_zero(const Rational& x) { return sgn(x) == 0; }
  static double magnitude(const Rational& x) { return std::abs(x.get_d()); }
};

namespace detail {

inline void require_dim(int a, int b, const char* op) {
  if (a != b)
    throw DimensionError(std::string(op) + ": dimension mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
}

inline void require_positive_dim(int dim) {
  if (dim < 1 || dim > 8) throw DimensionError("tensor dimension must be in 1..8");
}

}  // namespace detail

/// General (not necessarily symmetric) covariant 2-tensor.
template <class S>
class Mat2 {
 public:
  explicit Mat2(int dim) : dim_(dim), c_(static_cast<std::size_t>(dim * dim), S(0)) {
    detail::require_positive_dim(dim);
  }

  int dim() const noexcept { return dim_; }
  S& operator()(int i, int j) { return c_[i * dim_ + j]; }
  const S& operator()(int i, int j) const { return c_[i * dim_ + j]; }

  bool is_symmetric() const {
    for (int i = 0; i < dim_; ++i)
      for (int j = i + 1; j < dim_; ++j)
        if (!(c_[i * dim_ + j] == c_[j * dim_ + i])) return false;
    return true;
  }

  double asymmetry() const {
    double r = 0;
    for (int i = 0; i < dim_; ++i)
      for (int j = i + 1; j < dim_; ++j)
        r = std::max(r, ScalarTraits<S>::magnitude(S((*this)(i, j) - (*this)(j, i))));
    return r;
  }

 private:
  int dim_;
  std::vector<S> c_;
};

/// Symmetric covariant 2-tensor. Writes through set() keep comp(i,j) ==
/// comp(j,i).
template <class S>
class Sym2 {
 public:
  explicit Sym2(int dim) : dim_(dim), c_(static_cast<std::size_t>(dim * dim), S(0)) {
    detail::require_positive_dim(dim);
  }

  static Sym2 identity(int dim) {
    Sym2 out(dim);
    for (int i = 0; i < dim; ++i) out.set(i, i, S(1));
    return out;
  }

  static Sym2 diagonal(const std::vector<S>& d) {
    Sym2 out(static_cast<int>(d.size()));
    for (int i = 0; i < out.dim(); ++i) out.set(i, i, d[i]);
    return out;
  }

  /// Symmetric part check: exact equality for exact scalars, relative
  /// tolerance for floating ones.
  static Sym2 from_matrix(const Mat2<S>& m, double tol = 1e-12) {
    Sym2 out(m.dim());
    double scale = 0;
    for (int i = 0; i < m.dim(); ++i)
      for (int j = 0; j < m.dim(); ++j) scale = std::max(scale, ScalarTraits<S>::magnitude(m(i, j)));
    if constexpr (ScalarTraits<S>::exact) {
      if (!m.is_symmetric()) throw DomainError("2-tensor is not symmetric");
    } else {
      if (m.asymmetry() > tol * std::max(scale, 1.0))
        throw DomainError("2-tensor is not symmetric");
    }
    for (int i = 0; i < m.dim(); ++i)
      for (int j = i; j < m.dim(); ++j) out.set(i, j, m(i, j));
    return out;
  }

  int dim() const noexcept { return dim_; }
  const S& operator()(int i, int j) const { return c_[i * dim_ + j]; }
  void set(int i, int j, const S& v) {
    c_[i * dim_ + j] = v;
    c_[j * dim_ + i] = v;
  }

  Sym2& operator+=(const Sym2& o) {
    detail::require_dim(dim_, o.dim_, "Sym2 +");
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
    return *this;
  }
  Sym2& operator-=(const Sym2& o) {
    detail::require_dim(dim_, o.dim_, "Sym2 -");
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Sym2& operator*=(const S& s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  friend Sym2 operator+(Sym2 a, const Sym2& b) { return a += b; }
  friend Sym2 operator-(Sym2 a, const Sym2& b) { return a -= b; }
  friend Sym2 operator*(Sym2 a, const S& s) { return a *= s; }
  friend Sym2 operator*(const S& s, Sym2 a) { return a *= s; }
  friend bool operator==(const Sym2& a, const Sym2& b) { return a.dim_ == b.dim_ && a.c_ == b.c_; }

  double max_abs() const {
    double r = 0;
    for (const auto& v : c_) r = std::max(r, ScalarTraits<S>::magnitude(v));
    return r;
  }

 private:
  int dim_;
  std::vector<S> c_;
};

/// Algebraic curvature-type 4-tensor: antisymmetric in (ij) and (kl),
/// symmetric under (ij) <-> (kl). Elements of S^2(Lambda^2).
template <class S>
class Alg2 {
 public:
  explicit Alg2(int dim) : dim_(dim), c_(static_cast<std::size_t>(dim * dim * dim * dim), S(0)) {
    detail::require_positive_dim(dim);
  }

  static Alg2 from_components(int dim, std::vector<S> comp) {
    Alg2 out(dim);
    if (comp.size() != out.c_.size()) throw DimensionError("Alg2: wrong component count");
    out.c_ = std::move(comp);
    return out;
  }

  int dim() const noexcept { return dim_; }
  std::size_t index(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * dim_ + j) * dim_ + k) * dim_ + l;
  }
  const S& operator()(int i, int j, int k, int l) const { return c_[index(i, j, k, l)]; }
  /// Raw component access; symmetries are the writer's responsibility.
  S& operator()(int i, int j, int k, int l) { return c_[index(i, j, k, l)]; }
  const std::vector<S>& components() const noexcept { return c_; }

  Alg2& operator+=(const Alg2& o) {
    detail::require_dim(dim_, o.dim_, "Alg2 +");
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
    return *this;
  }
  Alg2& operator-=(const Alg2& o) {
    detail::require_dim(dim_, o.dim_, "Alg2 -");
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Alg2& operator*=(const S& s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  friend Alg2 operator+(Alg2 a, const Alg2& b) { return a += b; }
  friend Alg2 operator-(Alg2 a, const Alg2& b) { return a -= b; }
  friend Alg2 operator*(Alg2 a, const S& s) { return a *= s; }
  friend Alg2 operator*(const S& s, Alg2 a) { return a *= s; }
  friend bool operator==(const Alg2& a, const Alg2& b) { return a.dim_ == b.dim_ && a.c_ == b.c_; }

  double max_abs() const {
    double r = 0;
    for (const auto& v : c_) r = std::max(r, ScalarTraits<S>::magnitude(v));
    return r;
  }

  /// max |comp_ijkl + comp_jikl|, |comp_ijkl + comp_ijlk|.
  double antisymmetry_residual() const {
    double r = 0;
    for_each_index([&](int i, int j, int k, int l) {
      r = std::max(r, ScalarTraits<S>::magnitude(S((*this)(i, j, k, l) + (*this)(j, i, k, l))));
      r = std::max(r, ScalarTraits<S>::magnitude(S((*this)(i, j, k, l) + (*this)(i, j, l, k))));
    });
    return r;
  }

  /// max |comp_ijkl - comp_klij|.
  double pair_symmetry_residual() const {
    double r = 0;
    for_each_index([&](int i, int j, int k, int l) {
      r = std::max(r, ScalarTraits<S>::magnitude(S((*this)(i, j, k, l) - (*this)(k, l, i, j))));
    });
    return r;
  }

  /// max |comp_ijkl + comp_jkil + comp_kijl| (first Bianchi identity).
  double bianchi_residual() const {
    double r = 0;
    for_each_index([&](int i, int j, int k, int l) {
      S cyc = (*this)(i, j, k, l) + (*this)(j, k, i, l) + (*this)(k, i, j, l);
      r = std::max(r, ScalarTraits<S>::magnitude(cyc));
    });
    return r;
  }

  bool satisfies_bianchi() const {
    if constexpr (ScalarTraits<S>::exact) return bianchi_residual() == 0.0;
    else return bianchi_residual() <= 1e-12 * std::max(max_abs(), 1.0);
  }

 private:
  template <class F>
  void for_each_index(F&& f) const {
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j)
        for (int k = 0; k < dim_; ++k)
          for (int l = 0; l < dim_; ++l) f(i, j, k, l);
  }

  int dim_;
  std::vector<S> c_;
};

/// Cotton-type 3-tensor: antisymmetric in the first two slots, vanishing
/// cyclic sum, trace-free in the first and last slots.
template <class S>
class Three1 {
 public:
  explicit Three1(int dim) : dim_(dim), c_(static_cast<std::size_t>(dim * dim * dim), S(0)) {
    detail::require_positive_dim(dim);
  }

  int dim() const noexcept { return dim_; }
  const S& operator()(int i, int j, int k) const { return c_[(i * dim_ + j) * dim_ + k]; }
  S& operator()(int i, int j, int k) { return c_[(i * dim_ + j) * dim_ + k]; }
  const std::vector<S>& components() const noexcept { return c_; }

  double max_abs() const {
    double r = 0;
    for (const auto& v : c_) r = std::max(r, ScalarTraits<S>::magnitude(v));
    return r;
  }

  double antisymmetry_residual() const {
    double r = 0;
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j)
        for (int k = 0; k < dim_; ++k)
          r = std::max(r, ScalarTraits<S>::magnitude(S((*this)(i, j, k) + (*this)(j, i, k))));
    return r;
  }

  double cyclic_residual() const {
    double r = 0;
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j)
        for (int k = 0; k < dim_; ++k) {
          S cyc = (*this)(i, j, k) + (*this)(j, k, i) + (*this)(k, i, j);
          r = std::max(r, ScalarTraits<S>::magnitude(cyc));
        }
    return r;
  }

 private:
  int dim_;
  std::vector<S> c_;
};

/// Metric at a point together with its inverse.
template <class S>
class MetricAtPoint {
 public:
  explicit MetricAtPoint(Sym2<S> g) : g_(std::move(g)), g_inv_(g_.dim()) {
    const int n = g_.dim();
    // Gauss-Jordan on [g | I] with partial pivoting (exact for rationals).
    std::vector<S> a(static_cast<std::size_t>(n * 2 * n), S(0));
    auto at = [&](int r, int c) -> S& { return a[r * 2 * n + c]; };
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) at(i, j) = g_(i, j);
      at(i, n + i) = S(1);
    }
    for (int col = 0; col < n; ++col) {
      int piv = -1;
      double best = 0;
      for (int r = col; r < n; ++r) {
        double m = ScalarTraits<S>::magnitude(at(r, col));
        if (!ScalarTraits<S>::is_zero(at(r, col)) && m > best) {
          best = m;
          piv = r;
        }
      }
      if (piv < 0) throw DomainError("metric is singular");
      if (piv != col)
        for (int c = 0; c < 2 * n; ++c) std::swap(at(piv, c), at(col, c));
      S inv = S(1) / at(col, col);
      for (int c = 0; c < 2 * n; ++c) at(col, c) *= inv;
      for (int r = 0; r < n; ++r) {
        if (r == col || ScalarTraits<S>::is_zero(at(r, col))) continue;
        S f = at(r, col);
        for (int c = 0; c < 2 * n; ++c) at(r, c) -= f * at(col, c);
      }
    }
    Mat2<S> inv(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) inv(i, j) = at(i, n + j);
    if constexpr (ScalarTraits<S>::exact) {
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) g_inv_.set(i, j, inv(i, j));
    } else {
      g_inv_ = Sym2<S>::from_matrix(inv, 1e-8);
    }
    if (identity_residual() > (ScalarTraits<S>::exact ? 0.0 : 1e-9))
      throw DomainError("metric inverse failed to reproduce the identity");
  }

  static MetricAtPoint euclidean(int dim) { return MetricAtPoint(Sym2<S>::identity(dim)); }

  int dim() const noexcept { return g_.dim(); }
  const Sym2<S>& g() const noexcept { return g_; }
  const Sym2<S>& g_inv() const noexcept { return g_inv_; }

  /// max |(g g_inv - I)_ij|.
  double identity_residual() const {
    const int n = g_.dim();
    double r = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        S s(0);
        for (int k = 0; k < n; ++k) s += g_(i, k) * g_inv_(k, j);
        if (i == j) s -= S(1);
        r = std::max(r, ScalarTraits<S>::magnitude(s));
      }
    return r;
  }

 private:
  Sym2<S> g_;
  Sym2<S> g_inv_;
};

/// (S ^ T)_ijkl = S_ik T_jl + S_jl T_ik - S_il T_jk - S_jk T_il.
template <class S>
Alg2<S> kn_product(const Sym2<S>& s, const Sym2<S>& t) {
  detail::require_dim(s.dim(), t.dim(), "kn_product");
  const int n = s.dim();
  Alg2<S> out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          out(i, j, k, l) = s(i, k) * t(j, l) + s(j, l) * t(i, k) - s(i, l) * t(j, k) -
                            s(j, k) * t(i, l);
  return out;
}

/// (S o T)_ij = S_i^u T_uj, composition as endomorphisms of the tangent
/// space. The result is symmetric only when S and T commute.
template <class S>
Mat2<S> compose(const Sym2<S>& s, const Sym2<S>& t, const MetricAtPoint<S>& m) {
  detail::require_dim(s.dim(), t.dim(), "compose");
  detail::require_dim(s.dim(), m.dim(), "compose");
  const int n = s.dim();
  const auto& gi = m.g_inv();
  Mat2<S> raised(n);  // S_i^u
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a) {
      if (ScalarTraits<S>::is_zero(s(i, a))) continue;
      for (int u = 0; u < n; ++u) raised(i, u) += s(i, a) * gi(a, u);
    }
  Mat2<S> out(n);
  for (int i = 0; i < n; ++i)
    for (int u = 0; u < n; ++u) {
      if (ScalarTraits<S>::is_zero(raised(i, u))) continue;
      for (int j = 0; j < n; ++j) out(i, j) += raised(i, u) * t(u, j);
    }
  return out;
}

/// S o S, which is always symmetric.
template <class S>
Sym2<S> square(const Sym2<S>& s, const MetricAtPoint<S>& m) {
  return Sym2<S>::from_matrix(compose(s, s, m), 1e-10);
}

/// (S o T)_ijkl = 1/2 S_ij^uv T_uvkl, composition as endomorphisms of
/// Lambda^2.
template <class S>
Alg2<S> compose(const Alg2<S>& s, const Alg2<S>& t, const MetricAtPoint<S>& m) {
  detail::require_dim(s.dim(), t.dim(), "compose");
  detail::require_dim(s.dim(), m.dim(), "compose");
  const int n = s.dim();
  const auto& gi = m.g_inv();
  // raise the last two slots of s
  Alg2<S> half(n), raised(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const S& v = s(i, j, a, b);
          if (ScalarTraits<S>::is_zero(v)) continue;
          for (int u = 0; u < n; ++u)
            if (!ScalarTraits<S>::is_zero(gi(a, u))) half(i, j, u, b) += v * gi(a, u);
        }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int u = 0; u < n; ++u)
        for (int b = 0; b < n; ++b) {
          const S& v = half(i, j, u, b);
          if (ScalarTraits<S>::is_zero(v)) continue;
          for (int w = 0; w < n; ++w)
            if (!ScalarTraits<S>::is_zero(gi(b, w))) raised(i, j, u, w) += v * gi(b, w);
        }
  Alg2<S> out(n);
  const S one_half = S(1) / S(2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int u = 0; u < n; ++u)
        for (int w = 0; w < n; ++w) {
          const S& v = raised(i, j, u, w);
          if (ScalarTraits<S>::is_zero(v)) continue;
          S hv = v * one_half;
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) out(i, j, k, l) += hv * t(u, w, k, l);
        }
  return out;
}

/// (tr S)_ij = S_iuj^u.
template <class S>
Sym2<S> partial_trace(const Alg2<S>& s, const MetricAtPoint<S>& m) {
  detail::require_dim(s.dim(), m.dim(), "partial_trace");
  const int n = s.dim();
  const auto& gi = m.g_inv();
  Sym2<S> out(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      S sum(0);
      for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v)
          if (!ScalarTraits<S>::is_zero(gi(u, v))) sum += s(i, u, j, v) * gi(u, v);
      out.set(i, j, sum);
    }
  return out;
}

template <class S>
S trace(const Sym2<S>& s, const MetricAtPoint<S>& m) {
  detail::require_dim(s.dim(), m.dim(), "trace");
  S sum(0);
  for (int i = 0; i < s.dim(); ++i)
    for (int j = 0; j < s.dim(); ++j) sum += s(i, j) * m.g_inv()(i, j);
  return sum;
}

/// <S, T> = S_ij T^ij.
template <class S>
S inner(const Sym2<S>& s, const Sym2<S>& t, const MetricAtPoint<S>& m) {
  Mat2<S> st = compose(s, t, m);
  const int n = s.dim();
  S sum(0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) sum += st(i, j) * m.g_inv()(j, i);
  return sum;
}

/// Trace-free trace of a 3-tensor: max_i |C_si^s|.
template <class S>
double cotton_trace_residual(const Three1<S>& c, const MetricAtPoint<S>& m) {
  const int n = c.dim();
  double r = 0;
  for (int i = 0; i < n; ++i) {
    S sum(0);
    for (int s = 0; s < n; ++s)
      for (int t = 0; t < n; ++t) sum += c(s, i, t) * m.g_inv()(s, t);
    r = std::max(r, ScalarTraits<S>::magnitude(sum));
  }
  return r;
}

namespace detail {

/// Raises slot `slot` (0-based) of a rank-`rank` dense tensor.
template <class S>
std::vector<S> raise_slot(const std::vector<S>& t, int n, int rank, int slot, const Sym2<S>& gi) {
  std::vector<S> out(t.size(), S(0));
  std::size_t inner = 1;
  for (int r = slot + 1; r < rank; ++r) inner *= static_cast<std::size_t>(n);
  const std::size_t outer = t.size() / (inner * n);
  for (std::size_t o = 0; o < outer; ++o)
    for (int a = 0; a < n; ++a)
      for (std::size_t in = 0; in < inner; ++in) {
        const S& v = t[(o * n + a) * inner + in];
        if (ScalarTraits<S>::is_zero(v)) continue;
        for (int u = 0; u < n; ++u)
          if (!ScalarTraits<S>::is_zero(gi(a, u))) out[(o * n + u) * inner + in] += v * gi(a, u);
      }
  return out;
}

/// Trace of the cube of a square matrix stored row-major.
template <class S>
S trace_cubed(const std::vector<S>& m, std::size_t d) {
  // sparse rows: sum_ikj M_ik M_kj M_ji
  std::vector<std::vector<std::size_t>> rows(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k)
      if (!ScalarTraits<S>::is_zero(m[i * d + k])) rows[i].push_back(k);
  S sum(0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k : rows[i]) {
      const S& a = m[i * d + k];
      for (std::size_t j : rows[k]) {
        const S& c = m[j * d + i];
        if (!ScalarTraits<S>::is_zero(c)) sum += a * m[k * d + j] * c;
      }
    }
  return sum;
}

}  // namespace detail

/// Complete contractions of (W, E, C) used by the six-dimensional invariants.
template <class S>
struct Contractions {
  S weyl_norm2{0};    ///< |W|^2
  S cotton_norm2{0};  ///< |C|^2
  S e_norm2{0};       ///< |E|^2
  S tr_e3{0};         ///< tr E^3
  S e_dot_tr_w2{0};   ///< <E, tr W^2>
  S eww{0};           ///< E_s^t W_tijk W^sijk
  S i2{0};            ///< W_i^k_j^l W_k^s_l^t W_s^i_t^j
  S i3{0};            ///< W_ij^kl W_kl^st W_st^ij
  S tr2_w2{0};        ///< (tr W^2)_u^u
  S tr2_w3{0};        ///< (tr W^3)_u^u
};

template <class S>
Contractions<S> scalar_contractions(const Alg2<S>& w, const Sym2<S>& e, const Three1<S>& c,
                                    const MetricAtPoint<S>& m) {
  detail::require_dim(w.dim(), m.dim(), "scalar_contractions");
  detail::require_dim(e.dim(), m.dim(), "scalar_contractions");
  detail::require_dim(c.dim(), m.dim(), "scalar_contractions");
  const int n = m.dim();
  const auto& gi = m.g_inv();
  Contractions<S> out;

  // W with slots 3,4 raised (W_ij^kl), then all four raised.
  std::vector<S> w34 = detail::raise_slot(w.components(), n, 4, 2, gi);
  w34 = detail::raise_slot(w34, n, 4, 3, gi);
  std::vector<S> wup = detail::raise_slot(w34, n, 4, 0, gi);
  wup = detail::raise_slot(wup, n, 4, 1, gi);

  const auto& wc = w.components();
  for (std::size_t k = 0; k < wc.size(); ++k)
    if (!ScalarTraits<S>::is_zero(wc[k])) out.weyl_norm2 += wc[k] * wup[k];

  // EWW: X_t^s = W_tijk W^sijk, contracted with E_s^t.
  const std::size_t n3 = static_cast<std::size_t>(n * n * n);
  Mat2<S> x(n);
  for (int t = 0; t < n; ++t)
    for (std::size_t r = 0; r < n3; ++r) {
      const S& v = wc[t * n3 + r];
      if (ScalarTraits<S>::is_zero(v)) continue;
      for (int s = 0; s < n; ++s) x(t, s) += v * wup[s * n3 + r];
    }
  for (int s = 0; s < n; ++s)
    for (int t = 0; t < n; ++t) {
      S est(0);
      for (int a = 0; a < n; ++a) est += e(s, a) * gi(a, t);
      out.eww += est * x(t, s);
    }

  // |E|^2 and tr E^3 through the endomorphism E_i^j.
  Mat2<S> emix(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < n; ++a) emix(i, j) += e(i, a) * gi(a, j);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      out.e_norm2 += emix(i, j) * emix(j, i);
      for (int k = 0; k < n; ++k) out.tr_e3 += emix(i, j) * emix(j, k) * emix(k, i);
    }

  // |C|^2
  {
    std::vector<S> cup = detail::raise_slot(c.components(), n, 3, 0, gi);
    cup = detail::raise_slot(cup, n, 3, 1, gi);
    cup = detail::raise_slot(cup, n, 3, 2, gi);
    const auto& cc = c.components();
    for (std::size_t k = 0; k < cc.size(); ++k) out.cotton_norm2 += cc[k] * cup[k];
  }

  // I3 = tr(M^3) with M_(ij),(kl) = W_ij^kl.
  const std::size_t d = static_cast<std::size_t>(n * n);
  out.i3 = detail::trace_cubed(w34, d);

  // I2 = tr(N^3) with N_(ij),(kl) = W_i^k_j^l.
  {
    std::vector<S> w24 = detail::raise_slot(wc, n, 4, 1, gi);
    w24 = detail::raise_slot(w24, n, 4, 3, gi);
    std::vector<S> nmat(d * d, S(0));
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l)
            nmat[(i * n + j) * d + (k * n + l)] = w24[((i * n + k) * n + j) * n + l];
    out.i2 = detail::trace_cubed(nmat, d);
  }

  Alg2<S> w2 = compose(w, w, m);
  Sym2<S> tr_w2 = partial_trace(w2, m);
  out.e_dot_tr_w2 = inner(e, tr_w2, m);
  out.tr2_w2 = trace(tr_w2, m);
  out.tr2_w3 = trace(partial_trace(compose(w2, w, m), m), m);
  return out;
}

}  // namespace confinv
