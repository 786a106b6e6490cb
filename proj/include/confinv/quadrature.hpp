#pragma once

// Tensor-product quadrature over product charts and the global invariants.
//
// Periodic coordinates use the trapezoid rule (nodes j*h), latitudes use
// Gauss-Jacobi in t = sin(theta). Coordinates the integrand does not
// depend on collapse to one node weighted by their length.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "confinv/curvature.hpp"
#include "confinv/error.hpp"
#include "confinv/expr.hpp"
#include "confinv/manifold.hpp"
#include "confinv/spaceform.hpp"

namespace confinv {

struct AxisRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// N-point Gauss-Jacobi rule for the weight (1 - t^2)^a on [-1, 1]
/// (Golub-Welsch on the symmetric Jacobi matrix).
inline AxisRule gauss_jacobi_symmetric(int n, double a) {
  if (n < 1) throw DomainError("Gauss-Jacobi needs at least one node");
  if (!(a > -1)) throw DomainError("Gauss-Jacobi exponent must exceed -1");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) {
    const double num = k * (k + 2 * a), den = 4 * (k + a) * (k + a) - 1;
    off[k - 1] = den == 0 ? std::sqrt(0.5) : std::sqrt(num / den);  // k = 1, a = -1/2
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw Error("Gauss-Jacobi eigensolver failed");
  const double mu0 = std::exp(0.5 * std::log(std::numbers::pi) + std::lgamma(a + 1) - std::lgamma(a + 1.5));
  AxisRule r;
  for (int j = 0; j < n; ++j) {
    const double v = es.eigenvectors()(0, j);
    r.nodes.push_back(es.eigenvalues()[j]);
    r.weights.push_back(mu0 * v * v);
  }
  // exact symmetry
  for (int j = 0; j < n / 2; ++j) {
    const int k = n - 1 - j;
    const double x = 0.5 * (r.nodes[k] - r.nodes[j]), w = 0.5 * (r.weights[j] + r.weights[k]);
    r.nodes[j] = -x;
    r.nodes[k] = x;
    r.weights[j] = r.weights[k] = w;
  }
  if (n % 2) r.nodes[n / 2] = 0.0;
  return r;
}

/// N-point Gauss-Legendre rule on [lo, hi].
inline AxisRule gauss_legendre(int n, double lo, double hi) {
  AxisRule r = gauss_jacobi_symmetric(n, 0.0);
  const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    r.nodes[i] = mid + half * r.nodes[i];
    r.weights[i] *= half;
  }
  return r;
}

/// Rule in the angle for integrals of f(theta) cos^m(theta) over
/// (-pi/2, pi/2), built in t = sin(theta): the factor cos^m becomes the
/// Jacobi weight (1 - t^2)^((m-1)/2). Weights are divided by cos^m at the
/// node, since callers multiply by the volume density themselves. Nodes sit
/// O(1/N) away from the poles, not O(1/N^2).
inline AxisRule latitude_rule(int n, int m) {
  AxisRule j = gauss_jacobi_symmetric(n, 0.5 * (m - 1));
  AxisRule r;
  for (std::size_t i = 0; i < j.nodes.size(); ++i) {
    const double t = j.nodes[i];
    r.nodes.push_back(std::asin(t));
    r.weights.push_back(j.weights[i] / std::pow(1 - t * t, 0.5 * m));
  }
  return r;
}

inline AxisRule trapezoid(int n, double lo, double hi) {
  if (n < 1) throw DomainError("trapezoid rule needs at least one node");
  AxisRule r;
  const double h = (hi - lo) / n;
  for (int j = 0; j < n; ++j) {
    r.nodes.push_back(lo + j * h);
    r.weights.push_back(h);
  }
  return r;
}

struct QuadratureRule {
  int resolution = 0;
  std::vector<CoordInfo> coords;
  std::vector<bool> active;
  std::vector<AxisRule> axes;  ///< one per coordinate (collapsed axes have one node)

  std::size_t node_count() const {
    std::size_t c = 1;
    for (const auto& a : axes) c *= a.nodes.size();
    return c;
  }
  double total_weight() const {
    double w = 1;
    for (const auto& a : axes) {
      double s = 0;
      for (double v : a.weights) s += v;
      w *= s;
    }
    return w;
  }
  /// Chart point and product weight of node `idx` (last axis fastest).
  double node(std::size_t idx, std::vector<double>& point) const {
    point.assign(axes.size(), 0.0);
    double w = 1;
    for (std::size_t k = axes.size(); k-- > 0;) {
      const auto& a = axes[k];
      std::size_t j = idx % a.nodes.size();
      idx /= a.nodes.size();
      point[k] = a.nodes[j];
      w *= a.weights[j];
    }
    return w;
  }
};

inline QuadratureRule build_rule(const ManifoldSpec& spec, int n) {
  if (n < 4) throw DomainError("quadrature resolution must be at least 4");
  spec.validate();
  QuadratureRule rule;
  rule.resolution = n;
  rule.coords = spec.coordinates();
  rule.active = spec.active_coordinates();
  for (std::size_t i = 0; i < rule.coords.size(); ++i) {
    const auto& c = rule.coords[i];
    if (!rule.active[i]) {
      rule.axes.push_back({{0.5 * (c.lo + c.hi)}, {c.hi - c.lo}});
    } else if (c.kind == CoordKind::latitude) {
      rule.axes.push_back(latitude_rule(n, c.cos_power));
    } else {
      rule.axes.push_back(trapezoid(n, c.lo, c.hi));
    }
  }
  return rule;
}

/// Order-independent pairwise sum.
inline double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

/// Evaluates f(node, out) for every node into a [nodes x width] table, in
/// parallel; the table layout does not depend on the thread count.
inline std::vector<double> parallel_table(std::size_t nodes, std::size_t width,
                                          const std::function<void(std::size_t, double*)>& f,
                                          unsigned threads = 0) {
  std::vector<double> table(nodes * width, 0.0);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(nodes, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  constexpr std::size_t chunk = 64;
  auto work = [&] {
    for (;;) {
      std::size_t begin = next.fetch_add(chunk);
      if (begin >= nodes) return;
      std::size_t end = std::min(nodes, begin + chunk);
      try {
        for (std::size_t i = begin; i < end; ++i) f(i, table.data() + i * width);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        next = nodes;
        return;
      }
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
  return table;
}

/// Column sums of a [nodes x width] table by pairwise reduction.
inline std::vector<double> column_sums(const std::vector<double>& table, std::size_t width) {
  const std::size_t nodes = width ? table.size() / width : 0;
  std::vector<double> out(width, 0.0), col(nodes);
  for (std::size_t k = 0; k < width; ++k) {
    for (std::size_t i = 0; i < nodes; ++i) col[i] = table[i * width + k];
    out[k] = pairwise_sum(col.data(), nodes);
  }
  return out;
}

/// Integral of a scalar function of the chart point against the volume form
/// of the (conformally rescaled) metric.
inline double integrate_function(const ManifoldSpec& spec, int n,
                                 const std::function<double(const std::vector<double>&)>& f) {
  QuadratureRule rule = build_rule(spec, n);
  auto table = parallel_table(rule.node_count(), 1, [&](std::size_t i, double* out) {
    std::vector<double> x;
    double w = rule.node(i, x);
    double vol = product_volume_density(spec, x);
    if (spec.conformal_u) vol *= std::exp(6.0 * eval(*spec.conformal_u, x));
    out[0] = w * vol * f(x);
  });
  return column_sums(table, 1)[0];
}

enum class Invariant { Q, L1, L2, L3 };

inline const char* to_string(Invariant k) {
  switch (k) {
    case Invariant::Q: return "Q";
    case Invariant::L1: return "L1";
    case Invariant::L2: return "L2";
    case Invariant::L3: return "L3";
  }
  return "?";
}

/// Which pointwise form is integrated: the divergence-free integrands (L3 is
/// its own integrand) or the full densities.
enum class IntegrandPath { integrand, density };

struct IntegrationOptions {
  IntegrandPath path = IntegrandPath::integrand;
  bool with_q = true;  ///< the Q density needs sixth-order jets; skip it if false
  unsigned threads = 0;
};

struct RawIntegrals {
  double value[4] = {0, 0, 0, 0};
  double magnitude[4] = {0, 0, 0, 0};  ///< sum of |node contributions|
  std::size_t nodes = 0;
};

/// One quadrature pass at resolution n.
inline RawIntegrals integrate_raw(const ManifoldSpec& spec, int n, const IntegrationOptions& opt = {}) {
  if (spec.dim() != 6) throw DimensionError("invariants require total dimension 6");
  QuadratureRule rule = build_rule(spec, n);
  const std::vector<int> map = variable_map(rule.active);
  int nvars = 0;
  for (int v : map) nvars = std::max(nvars, v + 1);
  const bool density = opt.path == IntegrandPath::density;
  const int order = density && opt.with_q ? 6 : 4;
  const std::size_t width = 8;
  auto table = parallel_table(
      rule.node_count(), width,
      [&](std::size_t i, double* out) {
        std::vector<double> x;
        double w = rule.node(i, x) * product_volume_density(spec, x);
        MetricJet mj = product_metric_jet(spec, x, order, map);
        if (spec.conformal_u) {
          Jet u = jet_eval(*spec.conformal_u, x, order, nvars, map);
          w *= std::exp(6.0 * u.value());
          mj = conformal_metric_jet(mj, u);
        }
        CurvatureBundle cb = curvature(mj, density);
        double v[4];
        if (density) {
          PointDensities d = densities(cb);
          v[0] = opt.with_q ? d.q6() : 0.0;
          v[1] = d.l1();
          v[2] = d.l2();
          v[3] = d.l3();
        } else {
          PointIntegrands d = integrands(cb);
          v[0] = d.Q;
          v[1] = d.L1;
          v[2] = d.L2;
          v[3] = d.L3;
        }
        for (int k = 0; k < 4; ++k) {
          if (!std::isfinite(v[k])) throw SingularEvaluation("non-finite curvature at a quadrature node");
          out[k] = w * v[k];
          out[4 + k] = std::abs(w * v[k]);
        }
      },
      opt.threads);
  auto sums = column_sums(table, width);
  RawIntegrals r;
  for (int k = 0; k < 4; ++k) {
    r.value[k] = sums[k];
    r.magnitude[k] = sums[4 + k];
  }
  r.nodes = rule.node_count();
  return r;
}

struct InvariantEstimate {
  double value = 0;
  double error = 0;     ///< |I(N) - I(N/2)|
  double roundoff = 0;  ///< floating-point floor from the summed magnitudes
  std::optional<PiScaled> exact;

  double band(double safety) const { return safety * std::max(error, roundoff); }
};

enum class VerdictKind {
  not_conformally_einstein,
  no_nonpositive_einstein_in_class,
  no_einstein_in_class,
  undetermined,
  inconclusive,
};

inline const char* to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::not_conformally_einstein: return "NOT_CONFORMALLY_EINSTEIN";
    case VerdictKind::no_nonpositive_einstein_in_class: return "NO_NONPOSITIVE_EINSTEIN_IN_CLASS";
    case VerdictKind::no_einstein_in_class: return "NO_EINSTEIN_IN_CLASS";
    case VerdictKind::undetermined: return "UNDETERMINED";
    case VerdictKind::inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

struct Verdict {
  VerdictKind kind;
  std::string anchor;
  std::string detail;
};

struct InvariantReport {
  InvariantEstimate Q, L1, L2, L3;
  std::optional<double> gbc_residual;
  int resolution = 0;
  IntegrandPath path = IntegrandPath::integrand;
  std::size_t nodes = 0;
  std::vector<Verdict> verdicts;
  std::vector<std::string> diagnostics;

  InvariantEstimate& operator[](Invariant k) {
    switch (k) {
      case Invariant::Q: return Q;
      case Invariant::L1: return L1;
      case Invariant::L2: return L2;
      default: return L3;
    }
  }
  const InvariantEstimate& operator[](Invariant k) const {
    return const_cast<InvariantReport&>(*this)[k];
  }
};

inline constexpr double kRoundoffFactor = 1e-9;
inline constexpr double kVerdictSafety = 10.0;

inline std::vector<Verdict> verdicts(const InvariantReport& report, const ManifoldSpec& spec,
                                     double safety = kVerdictSafety);

/// Q, L1, L2, L3 at resolutions N and N/2, with error estimates, exact values
/// for the underlying product (the invariants are conformal invariants),
/// the Gauss-Bonnet-Chern residual and verdicts.
inline InvariantReport integrate_invariants(const ManifoldSpec& spec, int n,
                                            const IntegrationOptions& opt = {}) {
  if (n < 8) throw DomainError("resolution must be at least 8 (the error estimate uses N/2)");
  RawIntegrals hi = integrate_raw(spec, n, opt);
  RawIntegrals lo = integrate_raw(spec, n / 2, opt);
  InvariantReport rep;
  rep.resolution = n;
  rep.path = opt.path;
  rep.nodes = hi.nodes;
  std::optional<ExactInvariants> exact;
  try {
    exact = integrated_invariants(spec.exact_form());
  } catch (const Error&) {
    rep.diagnostics.push_back("no exact value: the product is outside the exact pipeline");
  }
  const Invariant kinds[4] = {Invariant::Q, Invariant::L1, Invariant::L2, Invariant::L3};
  for (int k = 0; k < 4; ++k) {
    auto& e = rep[kinds[k]];
    e.value = hi.value[k];
    e.error = std::abs(hi.value[k] - lo.value[k]);
    e.roundoff = kRoundoffFactor * hi.magnitude[k];
    if (exact) {
      const PiScaled* v[4] = {&exact->Q, &exact->L1, &exact->L2, &exact->L3};
      e.exact = *v[k];
    }
  }
  if (opt.path == IntegrandPath::density && !opt.with_q) {
    rep.Q = {};
    rep.diagnostics.push_back("Q density skipped");
  }
  if (spec.euler_char) {
    rep.gbc_residual = 64 * std::pow(std::numbers::pi, 3) * static_cast<double>(*spec.euler_char) +
                       rep.Q.value + rep.L1.value / 3 - 7 * rep.L2.value / 6 - rep.L3.value;
  }
  rep.verdicts = verdicts(rep, spec);
  return rep;
}

inline InvariantEstimate integrate_invariant(const ManifoldSpec& spec, Invariant which, int n,
                                             IntegrandPath path = IntegrandPath::integrand) {
  IntegrationOptions opt;
  opt.path = path;
  opt.with_q = which == Invariant::Q;
  return integrate_invariants(spec, n, opt)[which];
}

inline std::vector<Verdict> verdicts(const InvariantReport& report, const ManifoldSpec& spec,
                                     double safety) {
  std::vector<Verdict> out;
  const double l1 = report.L1.value, q = report.Q.value, l2 = report.L2.value;
  const double b1 = report.L1.band(safety), bq = report.Q.band(safety), b2 = report.L2.band(safety);
  if (l1 < -b1) {
    out.push_back({VerdictKind::not_conformally_einstein, "Thm 1.1",
                   "L1 < 0: no metric in the conformal class is Einstein"});
  }
  const bool neg = q < -bq || l1 < -b1 || l2 < -b2;
  if (neg) {
    std::string which;
    if (q < -bq) which += "Q ";
    if (l1 < -b1) which += "L1 ";
    if (l2 < -b2) which += "L2 ";
    which.pop_back();
    if (spec.pi1_infinite) {
      out.push_back({VerdictKind::no_einstein_in_class, "Cor 1.6",
                     which + " negative and pi1 infinite: no Einstein metric in the conformal class"});
    } else {
      out.push_back({VerdictKind::no_nonpositive_einstein_in_class, "Thm 1.4",
                     which + " negative: no Einstein metric of nonpositive scalar curvature in the "
                             "conformal class"});
    }
  }
  if (std::abs(q) <= bq || std::abs(l2) <= b2) {
    out.push_back({VerdictKind::undetermined, "Thm 1.4",
                   "Q or L2 within the error band: the equality case depends on the Yamabe "
                   "constant, which is not computed"});
  }
  if (out.empty() || (out.size() == 1 && out[0].kind == VerdictKind::undetermined)) {
    out.push_back({VerdictKind::inconclusive, "",
                   "no invariant is confidently negative; the obstructions are one-directional"});
  }
  return out;
}

/// Report for the exact pipeline alone: values come from the product of
/// spaceforms underlying the spec (conformal invariance covers any u).
inline InvariantReport exact_report(const ManifoldSpec& spec) {
  ExactInvariants ex = integrated_invariants(spec.exact_form());
  InvariantReport rep;
  const PiScaled* v[4] = {&ex.Q, &ex.L1, &ex.L2, &ex.L3};
  const Invariant kinds[4] = {Invariant::Q, Invariant::L1, Invariant::L2, Invariant::L3};
  for (int k = 0; k < 4; ++k) {
    rep[kinds[k]].value = v[k]->to_double();
    rep[kinds[k]].exact = *v[k];
  }
  if (spec.euler_char) rep.gbc_residual = gbc_residual(ex, *spec.euler_char).to_double();
  rep.verdicts = verdicts(rep, spec);
  return rep;
}

/// Relative change |I(e^{2u} g) - I(g)| / (|I(g)| + 1) of each invariant.
struct DriftReport {
  InvariantReport base;
  InvariantReport rescaled;
  double drift[4] = {0, 0, 0, 0};

  double max_drift() const { return *std::max_element(drift, drift + 4); }
};

inline DriftReport conformal_drift(const ManifoldSpec& spec, const Expr& u, int n,
                                   const IntegrationOptions& opt = {}) {
  ManifoldSpec base = spec;
  base.conformal_u.reset();
  ManifoldSpec scaled = spec;
  scaled.conformal_u = u;
  DriftReport d;
  d.base = integrate_invariants(base, n, opt);
  d.rescaled = integrate_invariants(scaled, n, opt);
  const Invariant kinds[4] = {Invariant::Q, Invariant::L1, Invariant::L2, Invariant::L3};
  for (int k = 0; k < 4; ++k) {
    double a = d.base[kinds[k]].value, b = d.rescaled[kinds[k]].value;
    d.drift[k] = std::abs(b - a) / (std::abs(a) + 1.0);
  }
  return d;
}

}  // namespace confinv
