#pragma once

// Truncated multivariate Taylor series ("jets") in up to six variables.
//
// Coefficients are stored densely in graded-lexicographic order, so a jet
// truncated at order t is simply the first size(t) coefficients of any
// higher-order jet at the same point. Products and derivatives are driven by
// precomputed index tables owned by a per-nvars JetSpace.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "confinv/error.hpp"

namespace confinv {

inline constexpr int kMaxJetVars = 6;
inline constexpr int kMaxJetOrder = 8;

using Exponent = std::array<std::uint8_t, kMaxJetVars>;

class JetSpace {
 public:
  struct Product {
    std::uint16_t a, b, out;
  };
  struct Deriv {
    std::uint16_t src, dst;
    double factor;
  };

  /// Shared table for `nvars` variables, valid for every order up to
  /// kMaxJetOrder.
  static const JetSpace& get(int nvars) {
    if (nvars < 0 || nvars > kMaxJetVars) throw DimensionError("jets support 0..6 variables");
    static std::array<std::unique_ptr<JetSpace>, kMaxJetVars + 1> spaces;
    static std::once_flag flags[kMaxJetVars + 1];
    std::call_once(flags[nvars], [&] { spaces[nvars].reset(new JetSpace(nvars)); });
    return *spaces[nvars];
  }

  int nvars() const noexcept { return nvars_; }

  /// Number of monomials of total degree <= t.
  std::size_t size(int t) const { return degree_begin_[check(t) + 1]; }
  /// Index of the first monomial of degree d.
  std::size_t degree_begin(int d) const { return degree_begin_[check(d)]; }
  int degree(std::size_t idx) const { return degree_of_[idx]; }
  const Exponent& exponent(std::size_t idx) const { return exps_[idx]; }

  /// Index of a monomial, or -1 when its degree exceeds kMaxJetOrder.
  long index(const Exponent& e) const {
    auto it = lookup_.find(pack(e));
    return it == lookup_.end() ? -1 : static_cast<long>(it->second);
  }

  /// Product terms (a, b, out) with deg(out) <= t.
  std::span<const Product> products(int t) const {
    return {products_.data(), product_end_[check(t)]};
  }

  /// d/dx_var terms whose destination has degree <= t.
  std::span<const Deriv> derivative(int var, int t) const {
    if (var < 0 || var >= nvars_) throw DimensionError("derivative variable out of range");
    return {derivs_[var].data(), deriv_end_[var][check(t)]};
  }

 private:
  explicit JetSpace(int nvars) : nvars_(nvars) {
    // graded-lex enumeration: by degree, then lexicographically descending
    // in the first variable.
    degree_begin_.push_back(0);
    for (int d = 0; d <= kMaxJetOrder; ++d) {
      Exponent e{};
      enumerate(d, 0, e);
      degree_begin_.push_back(exps_.size());
    }
    for (std::size_t i = 0; i < exps_.size(); ++i) {
      lookup_.emplace(pack(exps_[i]), static_cast<std::uint16_t>(i));
      int deg = 0;
      for (int v = 0; v < nvars_; ++v) deg += exps_[i][v];
      degree_of_.push_back(deg);
    }
    for (std::size_t a = 0; a < exps_.size(); ++a) {
      const int da = degree_of_[a];
      const std::size_t bend = degree_begin_[kMaxJetOrder - da + 1];
      for (std::size_t b = 0; b < bend; ++b) {
        Exponent s{};
        for (int v = 0; v < nvars_; ++v) s[v] = exps_[a][v] + exps_[b][v];
        products_.push_back({static_cast<std::uint16_t>(a), static_cast<std::uint16_t>(b),
                             static_cast<std::uint16_t>(lookup_.at(pack(s)))});
      }
    }
    std::stable_sort(products_.begin(), products_.end(),
                     [](const Product& x, const Product& y) { return x.out < y.out; });
    for (int t = 0; t <= kMaxJetOrder; ++t) {
      std::size_t limit = degree_begin_[t + 1];
      product_end_[t] = static_cast<std::size_t>(
          std::partition_point(products_.begin(), products_.end(),
                               [&](const Product& p) { return p.out < limit; }) -
          products_.begin());
    }
    derivs_.resize(nvars_);
    deriv_end_.resize(nvars_);
    for (int v = 0; v < nvars_; ++v) {
      for (std::size_t dst = 0; dst < exps_.size(); ++dst) {
        if (degree_of_[dst] >= kMaxJetOrder) break;
        Exponent e = exps_[dst];
        e[v] += 1;
        derivs_[v].push_back({static_cast<std::uint16_t>(lookup_.at(pack(e))),
                              static_cast<std::uint16_t>(dst), static_cast<double>(e[v])});
      }
      for (int t = 0; t <= kMaxJetOrder; ++t) {
        std::size_t limit = degree_begin_[t + 1];
        auto& list = derivs_[v];
        deriv_end_[v][t] = static_cast<std::size_t>(
            std::partition_point(list.begin(), list.end(),
                                 [&](const Deriv& d) { return d.dst < limit; }) -
            list.begin());
      }
    }
  }

  void enumerate(int remaining, int var, Exponent& e) {
    if (var == nvars_ - 1 || nvars_ == 0) {
      if (nvars_ == 0) {
        if (remaining == 0) exps_.push_back(e);
        return;
      }
      e[var] = static_cast<std::uint8_t>(remaining);
      exps_.push_back(e);
      e[var] = 0;
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      e[var] = static_cast<std::uint8_t>(k);
      enumerate(remaining - k, var + 1, e);
    }
    e[var] = 0;
  }

  static std::uint32_t pack(const Exponent& e) {
    std::uint32_t key = 0;
    for (int v = 0; v < kMaxJetVars; ++v) key = key * 16u + e[v];
    return key;
  }
  static int check(int t) {
    if (t < 0 || t > kMaxJetOrder) throw InsufficientOrder("jet order outside 0..8");
    return t;
  }

  int nvars_;
  std::vector<Exponent> exps_;
  std::vector<int> degree_of_;
  std::vector<std::size_t> degree_begin_;
  std::unordered_map<std::uint32_t, std::uint16_t> lookup_;
  std::vector<Product> products_;
  std::array<std::size_t, kMaxJetOrder + 1> product_end_{};
  std::vector<std::vector<Deriv>> derivs_;
  std::vector<std::array<std::size_t, kMaxJetOrder + 1>> deriv_end_;
};

namespace jetops {

// Raw kernels on coefficient arrays of a common space, truncated at order t.

inline void mul_acc(const JetSpace& s, int t, const double* a, const double* b, double* out,
                    double scale = 1.0) {
  for (const auto& p : s.products(t)) out[p.out] += scale * a[p.a] * b[p.b];
}

inline void derivative(const JetSpace& s, int var, int t, const double* a, double* out) {
  for (const auto& d : s.derivative(var, t)) out[d.dst] = d.factor * a[d.src];
}

}  // namespace jetops

class Jet {
 public:
  Jet() = default;
  Jet(int nvars, int order) : space_(&JetSpace::get(nvars)), order_(order) {
    if (order < 0 || order > kMaxJetOrder) throw InsufficientOrder("jet order outside 0..8");
    c_.assign(space_->size(order), 0.0);
  }

  static Jet constant(int nvars, int order, double value) {
    Jet j(nvars, order);
    j.c_[0] = value;
    return j;
  }
  /// The coordinate function x_var expanded at x_var = at.
  static Jet variable(int nvars, int order, int var, double at) {
    if (var < 0 || var >= nvars) throw DimensionError("jet variable out of range");
    Jet j = constant(nvars, order, at);
    if (order >= 1) {
      Exponent e{};
      e[var] = 1;
      j.c_[static_cast<std::size_t>(j.space_->index(e))] = 1.0;
    }
    return j;
  }

  int nvars() const { return space_ ? space_->nvars() : 0; }
  int order() const noexcept { return order_; }
  const JetSpace& space() const { return *space_; }
  std::span<const double> coeffs() const noexcept { return c_; }
  std::span<double> coeffs() noexcept { return c_; }
  double value() const { return c_.empty() ? 0.0 : c_[0]; }
  double operator[](std::size_t i) const { return c_[i]; }
  double& operator[](std::size_t i) { return c_[i]; }

  /// Coefficient of x^e (zero beyond the truncation order).
  double coeff(const Exponent& e) const {
    long idx = space_->index(e);
    if (idx < 0 || static_cast<std::size_t>(idx) >= c_.size()) return 0.0;
    return c_[static_cast<std::size_t>(idx)];
  }
  /// The partial derivative d^e f at the base point, i.e. coeff * e!.
  double partial(const Exponent& e) const {
    double f = 1;
    for (int v = 0; v < kMaxJetVars; ++v)
      for (int k = 2; k <= e[v]; ++k) f *= k;
    return coeff(e) * f;
  }

  Jet truncated(int t) const {
    if (t > order_) throw InsufficientOrder("cannot raise the order of a jet");
    Jet j = *this;
    j.order_ = t;
    j.c_.resize(space_->size(t));
    return j;
  }

  Jet derivative(int var) const {
    if (order_ < 1) throw InsufficientOrder("derivative of an order-0 jet");
    Jet out(nvars(), order_ - 1);
    jetops::derivative(*space_, var, order_ - 1, c_.data(), out.c_.data());
    return out;
  }

  Jet& operator+=(const Jet& o) { return combine(o, 1.0); }
  Jet& operator-=(const Jet& o) { return combine(o, -1.0); }
  Jet& operator+=(double s) {
    c_[0] += s;
    return *this;
  }
  Jet& operator-=(double s) {
    c_[0] -= s;
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator/=(const Jet& o) { return *this = *this * o.reciprocal(); }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator-(double s, const Jet& a) { return -a + s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator-(Jet a) { return a *= -1.0; }
  friend Jet operator*(const Jet& a, const Jet& b) {
    a.require_same(b);
    const int t = std::min(a.order_, b.order_);
    Jet out(a.nvars(), t);
    jetops::mul_acc(*a.space_, t, a.c_.data(), b.c_.data(), out.c_.data());
    return out;
  }
  friend Jet operator/(const Jet& a, const Jet& b) { return a * b.reciprocal(); }
  friend Jet operator/(double s, const Jet& b) { return b.reciprocal() * s; }
  friend Jet operator/(Jet a, double s) {
    if (s == 0.0) throw SingularEvaluation("division by zero constant");
    return a *= 1.0 / s;
  }

  /// f(this) for f given by its Taylor coefficients at this->value():
  /// sum_k taylor[k] h^k with h = this - value(). Needs order()+1 entries.
  Jet compose(std::span<const double> taylor) const {
    if (taylor.size() < static_cast<std::size_t>(order_) + 1)
      throw InsufficientOrder("too few Taylor coefficients for composition");
    Jet h = *this;
    h.c_[0] = 0.0;
    // h = s * x_v: the result is univariate, no products needed
    if (order_ >= 1) {
      int lin = -1, count = 0;
      for (std::size_t k = 1; k < h.c_.size(); ++k)
        if (h.c_[k] != 0.0) {
          ++count;
          lin = static_cast<int>(k);
        }
      if (count == 1 && lin <= nvars()) {
        const JetSpace& sp = *space_;
        Jet r = constant(nvars(), order_, taylor[0]);
        Exponent e{};
        double sk = 1.0;
        for (int k = 1; k <= order_; ++k) {
          sk *= h.c_[lin];
          e[lin - 1] = static_cast<std::uint8_t>(k);
          r.c_[static_cast<std::size_t>(sp.index(e))] = taylor[k] * sk;
        }
        return r;
      }
    }
    Jet r = constant(nvars(), order_, taylor[order_]);
    for (int k = order_ - 1; k >= 0; --k) {
      r = r * h;
      r.c_[0] += taylor[k];
    }
    return r;
  }

  Jet reciprocal() const {
    const double x0 = value();
    if (x0 == 0.0) throw SingularEvaluation("reciprocal of a jet with zero constant term");
    std::vector<double> t(order_ + 1);
    double p = 1.0 / x0;
    for (int k = 0; k <= order_; ++k, p *= -1.0 / x0) t[k] = p;
    return compose(t);
  }

  friend Jet sin(const Jet& a) {
    const double s = std::sin(a.value()), c = std::cos(a.value());
    std::vector<double> t(a.order_ + 1);
    const double cyc[4] = {s, c, -s, -c};
    double f = 1.0;
    for (int k = 0; k <= a.order_; ++k) {
      if (k > 1) f *= k;
      t[k] = cyc[k % 4] / f;
    }
    return a.compose(t);
  }
  friend Jet cos(const Jet& a) {
    const double s = std::sin(a.value()), c = std::cos(a.value());
    std::vector<double> t(a.order_ + 1);
    const double cyc[4] = {c, -s, -c, s};
    double f = 1.0;
    for (int k = 0; k <= a.order_; ++k) {
      if (k > 1) f *= k;
      t[k] = cyc[k % 4] / f;
    }
    return a.compose(t);
  }
  friend Jet exp(const Jet& a) {
    const double e = std::exp(a.value());
    std::vector<double> t(a.order_ + 1);
    double f = 1.0;
    for (int k = 0; k <= a.order_; ++k) {
      if (k > 1) f *= k;
      t[k] = e / f;
    }
    return a.compose(t);
  }
  /// Integer power; negative exponents need a nonzero constant term.
  friend Jet pow(const Jet& a, int n) {
    if (n < 0) return pow(a.reciprocal(), -n);
    if (n == 0) return constant(a.nvars(), a.order_, 1.0);
    const double x0 = a.value();
    std::vector<double> t(a.order_ + 1, 0.0);
    double binom = 1.0;
    for (int k = 0; k <= a.order_ && k <= n; ++k) {
      t[k] = binom * std::pow(x0, n - k);
      binom = binom * (n - k) / (k + 1);
    }
    return a.compose(t);
  }

  double max_abs() const {
    double r = 0;
    for (double v : c_) r = std::max(r, std::abs(v));
    return r;
  }

 private:
  void require_same(const Jet& o) const {
    if (space_ != o.space_) throw DimensionError("jets over different variable sets");
  }
  Jet& combine(const Jet& o, double sign) {
    require_same(o);
    if (o.order_ < order_) {
      order_ = o.order_;
      c_.resize(o.c_.size());
    }
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += sign * o.c_[i];
    return *this;
  }

  const JetSpace* space_ = nullptr;
  int order_ = 0;
  std::vector<double> c_;
};

}  // namespace confinv
