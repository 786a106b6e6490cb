#pragma once

// Random smooth expressions, a long double evaluator and a finite-difference
// reference for derivatives.

#include <array>
#include <cmath>
#include <limits>
#include <functional>
#include <random>

#include "confinv/expr.hpp"
#include "confinv/jet.hpp"

namespace testutil {

using confinv::Expr;

inline Expr random_expr(std::mt19937_64& rng, int depth, int nvars) {
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_int_distribution<int> var(0, nvars - 1);
  std::uniform_int_distribution<long> num(-5, 5), den(1, 4);
  auto leaf = [&]() -> Expr {
    if (pick(rng) < 6) return Expr::var(var(rng));
    return Expr::constant(confinv::make_rational(num(rng), den(rng)));
  };
  if (depth == 0) return leaf();
  auto sub = [&] { return random_expr(rng, depth - 1, nvars); };
  switch (pick(rng)) {
    case 0: return sub() + sub();
    case 1: return sub() - sub();
    case 2: return sub() * sub();
    case 3: return Expr::unary(Expr::Kind::sin, sub());
    case 4: return Expr::unary(Expr::Kind::cos, sub());
    case 5: return Expr::unary(Expr::Kind::exp, Expr::unary(Expr::Kind::sin, sub()));
    case 6:
      return sub() / (Expr::constant(2) + Expr::unary(Expr::Kind::cos, sub()));
    case 7: return Expr::power(sub(), 2 + pick(rng) % 2);
    case 8: return -sub();
    default: return leaf();
  }
}

inline long double eval_ld(const Expr& e, const long double* x) {
  using K = Expr::Kind;
  const auto& a = e.args();
  switch (e.kind()) {
    case K::constant: return static_cast<long double>(e.value().get_d());
    case K::pi: return 3.14159265358979323846264338327950288L;
    case K::var: return x[e.index()];
    case K::neg: return -eval_ld(a[0], x);
    case K::add: return eval_ld(a[0], x) + eval_ld(a[1], x);
    case K::sub: return eval_ld(a[0], x) - eval_ld(a[1], x);
    case K::mul: return eval_ld(a[0], x) * eval_ld(a[1], x);
    case K::div: return eval_ld(a[0], x) / eval_ld(a[1], x);
    case K::pow: return std::pow(eval_ld(a[0], x), static_cast<long double>(e.index()));
    case K::sin: return std::sin(eval_ld(a[0], x));
    case K::cos: return std::cos(eval_ld(a[0], x));
    case K::exp: return std::exp(eval_ld(a[0], x));
  }
  return 0;
}

using confinv::Exponent;
using confinv::kMaxJetVars;

using F = std::function<long double(const long double*)>;

// Central-difference weights for derivative orders 0..4 (offsets -2..2).
inline constexpr long double kStencil[5][5] = {
    {0, 0, 1, 0, 0},
    {0, -0.5L, 0, 0.5L, 0},
    {0, 1, -2, 1, 0},
    {-0.5L, 1, 0, -1, 0.5L},
    {1, -4, 6, -4, 1},
};

// Tensor-product stencil for the mixed partial d^e f at x with step h.
inline long double central(const F& f, const long double* x, const Exponent& e, int nvars, long double h) {
  long double sum = 0;
  std::array<int, kMaxJetVars> off{};
  std::function<void(int, long double)> rec = [&](int v, long double w) {
    if (v == nvars) {
      long double y[kMaxJetVars];
      for (int i = 0; i < nvars; ++i) y[i] = x[i] + off[i] * h;
      sum += w * f(y);
      return;
    }
    for (int k = -2; k <= 2; ++k) {
      long double c = kStencil[e[v]][k + 2];
      if (c == 0) continue;
      off[v] = k;
      rec(v + 1, w * c);
    }
    off[v] = 0;
  };
  rec(0, 1.0L);
  int total = 0;
  for (int v = 0; v < nvars; ++v) total += e[v];
  return sum / std::pow(h, static_cast<long double>(total));
}

// Ridders: Richardson tableau over halving steps, keeping the entry whose
// neighbours agree best (central differences have errors even in h).
inline long double fd_partial(const F& f, const long double* x, const Exponent& e, int nvars) {
  constexpr int kLevels = 8;
  long double t[kLevels][kLevels];
  long double h = 0.2L, best = 0, best_err = std::numeric_limits<long double>::infinity();
  for (int i = 0; i < kLevels; ++i, h /= 2) {
    t[i][0] = central(f, x, e, nvars, h);
    long double p = 4;
    for (int j = 1; j <= i; ++j, p *= 4) {
      t[i][j] = (p * t[i][j - 1] - t[i - 1][j - 1]) / (p - 1);
      const long double err = std::max(std::abs(t[i][j] - t[i][j - 1]), std::abs(t[i][j] - t[i - 1][j - 1]));
      if (err <= best_err) {
        best_err = err;
        best = t[i][j];
      }
    }
  }
  return best;
}

inline confinv::Jet random_jet(std::mt19937_64& rng, int nvars, int order) {
  std::uniform_real_distribution<double> u(-1, 1);
  confinv::Jet j(nvars, order);
  for (auto& c : j.coeffs()) c = u(rng);
  j[0] = 1.5 + 0.5 * u(rng);  // keep away from zero for reciprocals
  return j;
}

inline double max_diff(const confinv::Jet& a, const confinv::Jet& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.coeffs().size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testutil
