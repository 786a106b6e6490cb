#pragma once

// Named checks of the closed-form results, run by `confinv verify-paper`.

#include <chrono>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "confinv/curvature.hpp"
#include "confinv/manifold.hpp"
#include "confinv/quadrature.hpp"
#include "confinv/spaceform.hpp"
#include "confinv/tensor_algebra.hpp"

namespace confinv {

struct CheckResult {
  std::string anchor;
  std::string title;
  bool passed = true;
  std::string residual;
  std::string detail;  ///< first mismatch, expected vs actual
  double seconds = 0;
};

inline CheckResult started(std::string anchor, std::string title) {
  CheckResult r;
  r.anchor = std::move(anchor);
  r.title = std::move(title);
  return r;
}

struct BatteryOptions {
  std::string filter;         ///< run only checks with this anchor (empty: all)
  bool inject_fault = false;  ///< perturb one expected coefficient (negative test)
  std::uint64_t seed = 20240611;
  unsigned threads = 0;
};

inline std::string to_string(const Alg2<Rational>& a) {
  return "Alg2 with max |component| " + std::to_string(a.max_abs());
}
inline std::string to_string(const Sym2<Rational>& a) {
  return "Sym2 with max |component| " + std::to_string(a.max_abs());
}

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

// Expected-vs-actual comparison of exact quantities; records the first miss.
struct ExactTally {
  std::size_t cases = 0, misses = 0;
  std::string first;

  template <class T>
  void expect(const T& expected, const T& actual, const std::string& what) {
    ++cases;
    if (expected == actual) return;
    if (misses++ == 0) first = what + ": expected " + to_string(expected) + ", got " + to_string(actual);
  }
  void fill(CheckResult& r) const {
    r.passed = misses == 0;
    r.residual = std::to_string(misses) + "/" + std::to_string(cases) + " mismatches";
    r.detail = first;
  }
};

inline std::string pair_label(const Rational& a, const Rational& b) {
  return "(" + a.get_str() + ", " + b.get_str() + ")";
}

}  // namespace detail

/// g = delta + eps * sum of a few cos/sin modes, symmetric and positive
/// definite for the default amplitude.
template <class Rng>
std::vector<Expr> random_trig_metric(Rng& rng, int n = 6, int modes = 2, long amp_num = 1,
                                     long amp_den = 20) {
  std::uniform_int_distribution<int> coord(0, n - 1), freq(1, 2), kind(0, 1), num(-amp_num * 4, amp_num * 4);
  std::vector<Expr> g(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      Expr e = Expr::constant(Rational(i == j ? 1 : 0));
      for (int m = 0; m < modes; ++m) {
        Rational c = make_rational(num(rng), 4 * amp_den * (i == j ? 1 : n));
        if (c == 0) continue;
        Expr arg = Expr::constant(Rational(freq(rng))) * Expr::var(coord(rng));
        if (kind(rng)) arg = arg + Expr::var(coord(rng));
        Expr mode = Expr::unary(kind(rng) ? Expr::Kind::sin : Expr::Kind::cos, arg);
        e = e + Expr::constant(c) * mode;
      }
      g[i * n + j] = e;
      g[j * n + i] = e;
    }
  return g;
}

namespace detail {

inline CheckResult check_prop35(const BatteryOptions& o) {
  CheckResult r = started("Prop 3.5", "(3,3) split densities, 100 random curvature pairs");
  std::mt19937_64 rng(o.seed);
  const Rational qc = o.inject_fault ? Rational(-23, 25) : Rational(-24, 25);
  ExactTally t;
  for (int k = 0; k < 100; ++k) {
    Rational mu = random_rational(rng, 30, 7), la = random_rational(rng, 30, 7);
    auto d = densities6<Rational>(3, mu, 3, la);
    Rational s3 = pow(Rational(mu + la), 3);
    std::string at = " at (mu, lambda) = " + pair_label(mu, la);
    t.expect(Rational(qc * s3), d.Q, "Q" + at);
    t.expect(Rational(0), d.L1, "L1" + at);
    t.expect(Rational(Rational(-36, 25) * s3), d.L2, "L2" + at);
    t.expect(Rational(Rational(18, 25) * s3), d.L3, "L3" + at);
  }
  t.fill(r);
  return r;
}

inline CheckResult check_prop36(const BatteryOptions& o) {
  CheckResult r = started("Prop 3.6", "(2,4) split densities, 100 random curvature pairs");
  std::mt19937_64 rng(o.seed + 1);
  ExactTally t;
  for (int k = 0; k < 100; ++k) {
    Rational mu = random_rational(rng, 30, 7), la = random_rational(rng, 30, 7);
    auto d = densities6<Rational>(2, mu, 4, la);
    Rational s = mu + la;
    std::string at = " at (mu, lambda) = " + pair_label(mu, la);
    t.expect(Rational(Rational(-12, 25) * (mu * mu * mu - 7 * la * mu * mu + 33 * la * la * mu - 9 * la * la * la)),
             d.Q, "Q" + at);
    t.expect(Rational(12 * s * s * (mu - 3 * la)), d.L1, "L1" + at);
    t.expect(Rational(Rational(6, 25) * s * s * (7 * mu - 33 * la)), d.L2, "L2" + at);
    t.expect(Rational(Rational(39, 25) * s * s * s), d.L3, "L3" + at);
  }
  t.fill(r);
  return r;
}

// Random symmetric S, T supported on complementary coordinate blocks, so
// S o T = 0 for any block-diagonal metric.
template <class Rng>
std::pair<Sym2<Rational>, Sym2<Rational>> random_block_pair(Rng& rng, int n, int split) {
  Sym2<Rational> s(n), t(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      if (j < split) s.set(i, j, random_rational(rng, 9, 5));
      if (i >= split) t.set(i, j, random_rational(rng, 9, 5));
    }
  return {s, t};
}

inline CheckResult check_lemma31(const BatteryOptions& o, bool traces) {
  CheckResult r = started(traces ? "Lemma 3.2" : "Lemma 3.1",
                traces ? "trace identities, 200 random block pairs" : "composition identities, 200 random block pairs");
  std::mt19937_64 rng(o.seed + (traces ? 3 : 2));
  std::uniform_int_distribution<int> split(1, 5);
  ExactTally t;
  for (int k = 0; k < 200; ++k) {
    const int n = 6, sp = split(rng);
    auto [s, tt] = random_block_pair(rng, n, sp);
    std::vector<Rational> gd(n);
    for (auto& v : gd) v = random_rational(rng, 5, 3, true);
    MetricAtPoint<Rational> m(Sym2<Rational>::diagonal(gd));
    Sym2<Rational> s2 = square(s, m), t2 = square(tt, m);
    std::string at = " (case " + std::to_string(k) + ")";
    if (!traces) {
      Alg2<Rational> ss = kn_product(s, s), st = kn_product(s, tt), tt2 = kn_product(tt, tt);
      Alg2<Rational> zero(n);
      t.expect(kn_product(s2, s2) * Rational(2), compose(ss, ss, m), "(S^S)o(S^S)" + at);
      t.expect(zero, compose(ss, st, m), "(S^S)o(S^T)" + at);
      t.expect(zero, compose(ss, tt2, m), "(S^S)o(T^T)" + at);
      t.expect(kn_product(s2, t2), compose(st, st, m), "(S^T)o(S^T)" + at);
    } else {
      Rational trs = trace(s, m), trt = trace(tt, m);
      t.expect(s * Rational(2 * trs) - s2 * Rational(2), partial_trace(kn_product(s, s), m), "tr(S^S)" + at);
      t.expect(tt * trs + s * trt, partial_trace(kn_product(s, tt), m), "tr(S^T)" + at);
    }
  }
  t.fill(r);
  return r;
}

inline ProductSpaceform torus_times_sphere(int tdim, const PiScaled& vol, int sdim, const Rational& k) {
  return {{SpaceformFactor::torus(tdim, vol), SpaceformFactor::sphere(sdim, k)}};
}

inline CheckResult check_prop52_exact(const BatteryOptions& o) {
  CheckResult r = started("Prop 5.2", "exact T2xS4 and S2xT4 invariants");
  std::mt19937_64 rng(o.seed + 4);
  ExactTally t;
  std::vector<PiScaled> vols = {PiScaled(1), PiScaled::term(2, Rational(4))};
  for (int k = 0; k < 10; ++k) vols.push_back(PiScaled(random_rational(rng, 50, 9, true)));
  for (const auto& v : vols) {
    auto a = integrated_invariants(torus_times_sphere(2, v, 4, Rational(1)));
    auto b = integrated_invariants({{SpaceformFactor::sphere(2, Rational(1)), SpaceformFactor::torus(4, v)}});
    std::string at = " with torus volume " + v.to_string();
    t.expect(PiScaled::term(2, Rational(-96)) * v, a.L1, "L1(T2xS4)" + at);
    t.expect(PiScaled::term(2, Rational(-528, 25)) * v, a.L2, "L2(T2xS4)" + at);
    t.expect(PiScaled::term(1, Rational(-48, 25)) * v, b.Q, "Q(S2xT4)" + at);
  }
  t.fill(r);
  return r;
}

inline CheckResult check_prop52_numeric(const BatteryOptions& o) {
  CheckResult r = started("Prop 5.2", "numeric T2xS4 L1 at N = 24 against -96 pi^2");
  ManifoldSpec s;
  s.factors = {FactorSpec::torus(2, PiScaled(1)), FactorSpec::sphere(4, Rational(1))};
  IntegrationOptions opt;
  opt.threads = o.threads;
  auto rep = integrate_invariants(s, 24, opt);
  const double expected = -96 * std::numbers::pi * std::numbers::pi;
  double rel = std::abs(rep.L1.value - expected) / std::abs(expected);
  r.passed = rel <= 1e-6;
  r.residual = "relative " + fmt(rel);
  if (!r.passed) r.detail = "expected " + std::to_string(expected) + ", got " + std::to_string(rep.L1.value);
  return r;
}

inline CheckResult check_eq52(const BatteryOptions&) {
  CheckResult r = started("Eq. 5.2", "L1 along S2(3)xS4(1/c) and its c-derivative at c = 1");
  ExactTally t;
  std::vector<Rational> cs = {Rational(1, 2), Rational(1), Rational(2), Rational(3), Rational(7, 2)};
  for (const auto& row : family_scan(s2xs4_scaling, cs))
    t.expect(s2xs4_l1_closed_form(row.parameter), row.invariants.L1, "L1 at c = " + row.parameter.get_str());
  t.fill(r);
  PiScaled d = s2xs4_l1_derivative(Rational(1));
  if (d.is_zero()) {
    r.passed = false;
    r.detail = "dL1/dc vanishes at c = 1";
  }
  r.residual += ", dL1/dc(1) = " + d.to_string();
  return r;
}

inline CheckResult check_thm17(const BatteryOptions& o) {
  CheckResult r = started("Thm 1.7", "Gauss-Bonnet-Chern residual on six families, 20 random curvatures each");
  std::mt19937_64 rng(o.seed + 5);
  auto pos = [&] { return random_rational(rng, 12, 5, true); };
  auto square = [&] {
    Rational q = random_rational(rng, 6, 4, true);
    return Rational(q * q);
  };
  ExactTally t;
  for (int k = 0; k < 20; ++k) {
    Rational a = pos(), b = pos(), a2 = square(), b2 = square();
    PiScaled v(random_rational(rng, 40, 7, true));
    struct Case {
      std::string name;
      ProductSpaceform p;
      long chi;
    };
    std::vector<Case> cases = {
        {"S6", {{SpaceformFactor::sphere(6, a)}}, 2},
        {"S3xS3", {{SpaceformFactor::sphere(3, a2), SpaceformFactor::sphere(3, b2)}}, 0},
        {"S2xS4", {{SpaceformFactor::sphere(2, a), SpaceformFactor::sphere(4, b)}}, 4},
        {"T6", {{SpaceformFactor::torus(6, v)}}, 0},
        {"S2xT4", {{SpaceformFactor::sphere(2, a), SpaceformFactor::torus(4, v)}}, 0},
        {"T2xS4", {{SpaceformFactor::torus(2, v), SpaceformFactor::sphere(4, b)}}, 0},
    };
    for (const auto& c : cases)
      t.expect(PiScaled(0), gbc_residual(c.p, c.chi), c.name + " case " + std::to_string(k));
  }
  t.fill(r);
  return r;
}

inline CheckResult check_thm11(const BatteryOptions& o) {
  CheckResult r = started("Thm 1.1", "L1 vanishes on Einstein products; T2xS4 is not conformally Einstein");
  std::mt19937_64 rng(o.seed + 6);
  ExactTally t;
  for (int k = 0; k < 20; ++k) {
    Rational la = random_rational(rng, 12, 5, true);
    Rational sq = random_rational(rng, 6, 4, true);
    // (m-1) mu = (n-1) nu
    std::vector<ProductSpaceform> es = {
        {{SpaceformFactor::sphere(6, la)}},
        {{SpaceformFactor::sphere(3, Rational(sq * sq)), SpaceformFactor::sphere(3, Rational(sq * sq))}},
        {{SpaceformFactor::sphere(2, Rational(3 * la)), SpaceformFactor::sphere(4, la)}},
    };
    for (const auto& e : es) {
      t.expect(Rational(1), Rational(is_einstein(e) ? 1 : 0), "is_einstein case " + std::to_string(k));
      t.expect(PiScaled(0), integrated_invariants(e).L1, "L1 case " + std::to_string(k));
    }
  }
  t.fill(r);
  ManifoldSpec s;
  s.factors = {FactorSpec::torus(2, PiScaled(1)), FactorSpec::sphere(4, Rational(1))};
  bool found = false;
  for (const auto& v : verdicts(exact_report(s), s))
    found = found || v.kind == VerdictKind::not_conformally_einstein;
  if (!found) {
    r.passed = false;
    r.detail = "T2xS4 lacks the NOT_CONFORMALLY_EINSTEIN verdict";
  }
  return r;
}

inline CheckResult check_cor16(const BatteryOptions&) {
  CheckResult r = started("Cor 1.6", "S2xT4 with infinite fundamental group carries no Einstein metric in its class");
  ManifoldSpec s;
  s.factors = {FactorSpec::sphere(2, Rational(1)), FactorSpec::torus(4, PiScaled(1))};
  s.pi1_infinite = true;
  auto rep = exact_report(s);
  bool found = false;
  for (const auto& v : rep.verdicts) found = found || v.kind == VerdictKind::no_einstein_in_class;
  r.passed = found && rep.Q.value < 0;
  r.residual = "Q = " + rep.Q.exact->to_string();
  if (!r.passed) r.detail = "expected NO_EINSTEIN_IN_CLASS";
  return r;
}

inline CheckResult check_eq21(const BatteryOptions& o, int metrics = 3, int points = 4) {
  CheckResult r = started("Eq. 2.1", "Bianchi-type and Delta|W|^2 identities on perturbed flat T6 metrics");
  std::mt19937_64 rng(o.seed + 7);
  std::uniform_real_distribution<double> x(0.0, 2 * std::numbers::pi);
  double worst_diff = 0, worst_alg = 0;
  for (int m = 0; m < metrics; ++m) {
    auto g = random_trig_metric(rng);
    for (int p = 0; p < points; ++p) {
      std::vector<double> pt(6);
      for (auto& v : pt) v = x(rng);
      auto cb = curvature(expr_metric_jet(6, g, pt, 4), true);
      auto res = identity_residuals(cb);
      worst_diff = std::max({worst_diff, res.cotton_bianchi, res.weyl_laplacian});
      worst_alg = std::max(worst_alg, res.algebraic_max());
    }
  }
  r.passed = worst_diff <= 1e-8 && worst_alg <= 1e-10;
  r.residual = "differential " + fmt(worst_diff) + ", algebraic " + fmt(worst_alg);
  if (!r.passed) r.detail = "residual above 1e-8 (differential) or 1e-10 (algebraic)";
  return r;
}

inline CheckResult check_prop21(const BatteryOptions& o) {
  CheckResult r = started("Prop 2.1", "conformal invariance on T6 with u = 0.3 sin(x1) cos(x2), N = 16");
  ManifoldSpec s;
  s.factors = {FactorSpec::torus(6, PiScaled::term(1, Rational(2)))};
  IntegrationOptions opt;
  opt.threads = o.threads;
  auto d = conformal_drift(s, parse_expr("0.3*sin(x1)*cos(x2)"), 16, opt);
  double worst = std::max({std::abs(d.rescaled.Q.value), std::abs(d.rescaled.L1.value),
                           std::abs(d.rescaled.L2.value), std::abs(d.rescaled.L3.value)});
  r.passed = worst <= 1e-6;
  r.residual = "max |I| " + fmt(worst);
  if (!r.passed) r.detail = "conformally flat torus invariants differ from 0";
  return r;
}

}  // namespace detail

struct NamedCheck {
  std::string anchor;
  std::function<CheckResult(const BatteryOptions&)> run;
};

inline std::vector<NamedCheck> paper_checks() {
  using namespace detail;
  return {
      {"Prop 3.5", check_prop35},
      {"Prop 3.6", check_prop36},
      {"Lemma 3.1", [](const BatteryOptions& o) { return check_lemma31(o, false); }},
      {"Lemma 3.2", [](const BatteryOptions& o) { return check_lemma31(o, true); }},
      {"Prop 5.2", check_prop52_exact},
      {"Prop 5.2", check_prop52_numeric},
      {"Eq. 5.2", check_eq52},
      {"Thm 1.7", check_thm17},
      {"Thm 1.1", check_thm11},
      {"Cor 1.6", check_cor16},
      {"Eq. 2.1", [](const BatteryOptions& o) { return check_eq21(o); }},
      {"Prop 2.1", check_prop21},
  };
}

inline std::vector<std::string> paper_anchors() {
  std::vector<std::string> out;
  for (const auto& c : paper_checks())
    if (std::find(out.begin(), out.end(), c.anchor) == out.end()) out.push_back(c.anchor);
  return out;
}

/// Runs the checks matching the filter. Throws DomainError for a filter that
/// names no check.
inline std::vector<CheckResult> run_battery(const BatteryOptions& o = {}) {
  std::vector<CheckResult> out;
  for (const auto& c : paper_checks()) {
    if (!o.filter.empty() && c.anchor != o.filter) continue;
    auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = c.run(o);
    } catch (const std::exception& e) {
      r.anchor = c.anchor;
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(r));
  }
  if (out.empty()) throw DomainError("no check is named '" + o.filter + "'");
  return out;
}

}  // namespace confinv
