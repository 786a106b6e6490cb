// confinv: command-line front end.
//
// Exit codes: 0 ok, 1 verification failure, 2 input error, 3 numeric failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "confinv/confinv.hpp"

namespace {

using namespace confinv;

constexpr int kOk = 0, kVerifyFailed = 1, kInputError = 2, kNumericError = 3;

struct InputFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Loading and parsing errors are input errors; anything thrown while
// integrating is numeric unless it is a representation problem.
int classify(const std::exception& e) {
  if (dynamic_cast<const InputFailure*>(&e) || dynamic_cast<const SpecError*>(&e) ||
      dynamic_cast<const ParseError*>(&e) || dynamic_cast<const RepresentationError*>(&e) ||
      dynamic_cast<const DimensionError*>(&e))
    return kInputError;
  return kNumericError;
}

ManifoldSpec load(const std::string& path) { return load_spec(path); }

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw InputFailure("cannot write " + out_path);
  f << text;
}

std::string fmt(double v, int prec = 12) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

std::string text_report(const InvariantReport& rep, Pipeline p) {
  std::ostringstream os;
  const Invariant kinds[4] = {Invariant::Q, Invariant::L1, Invariant::L2, Invariant::L3};
  os << "pipeline " << to_string(p);
  if (p != Pipeline::exact) os << ", resolution " << rep.resolution << ", " << rep.nodes << " nodes";
  os << "\n";
  for (Invariant k : kinds) {
    const auto& e = rep[k];
    os << "  " << to_string(k) << "\t";
    if (p != Pipeline::exact) os << fmt(e.value) << " +- " << fmt(std::max(e.error, e.roundoff), 3);
    if (e.exact && p != Pipeline::numeric) os << (p == Pipeline::both ? "\texact " : "") << e.exact->to_string();
    os << "\n";
  }
  if (rep.gbc_residual) os << "  gbc residual\t" << fmt(*rep.gbc_residual, 6) << "\n";
  for (const auto& v : rep.verdicts) {
    os << "  verdict " << to_string(v.kind);
    if (!v.anchor.empty()) os << " (" << v.anchor << ")";
    os << ": " << v.detail << "\n";
  }
  for (const auto& d : rep.diagnostics) os << "  note: " << d << "\n";
  return os.str();
}

int cmd_compute(const std::string& spec_path, int resolution, const std::string& pipeline_name,
                const std::string& path_name, bool as_json, const std::string& out, unsigned threads) {
  ManifoldSpec spec;
  Pipeline p;
  IntegrationOptions opt;
  try {
    spec = load(spec_path);
    p = parse_pipeline(pipeline_name);
    if (path_name == "density") opt.path = IntegrandPath::density;
    else if (path_name != "integrand") throw InputFailure("path must be integrand or density");
  } catch (const DomainError& e) {
    throw InputFailure(e.what());
  }
  opt.threads = threads;
  const int n = resolution > 0 ? resolution : spec.resolution.value_or(24);
  if (p != Pipeline::exact && n < 8) throw InputFailure("resolution must be at least 8");
  InvariantReport rep;
  if (p == Pipeline::exact) {
    rep = exact_report(spec);
  } else {
    rep = integrate_invariants(spec, n, opt);
    if (p == Pipeline::both && !rep.Q.exact)
      std::cerr << "confinv: exact values unavailable for this spec\n";
  }
  emit(as_json ? report_to_json(rep, spec, p).dump(2) + "\n" : text_report(rep, p), out);
  return kOk;
}

int cmd_verify(const std::string& filter, bool inject, bool as_json, unsigned threads) {
  BatteryOptions o;
  o.filter = filter;
  o.inject_fault = inject;
  o.threads = threads;
  std::vector<CheckResult> results;
  try {
    results = run_battery(o);
  } catch (const DomainError& e) {
    std::cerr << "confinv: " << e.what() << "; known checks:";
    for (const auto& a : paper_anchors()) std::cerr << " \"" << a << "\"";
    std::cerr << "\n";
    return kInputError;
  }
  bool all = true;
  if (as_json) {
    json doc = json::array();
    for (const auto& r : results) {
      doc.push_back({{"anchor", r.anchor}, {"title", r.title}, {"passed", r.passed},
                     {"residual", r.residual}, {"detail", r.detail}});
      all = all && r.passed;
    }
    std::cout << doc.dump(2) << "\n";
  } else {
    for (const auto& r : results) {
      all = all && r.passed;
      std::printf("%-4s  %-10s %-70s %s (%.2fs)\n", r.passed ? "PASS" : "FAIL", r.anchor.c_str(),
                  r.title.c_str(), r.residual.c_str(), r.seconds);
      if (!r.passed && !r.detail.empty()) std::printf("      %s: %s\n", r.anchor.c_str(), r.detail.c_str());
    }
    if (filter.empty())
      std::printf("out of scope: Prop 5.1 (no explicit metric), statements involving the Yamabe constant,"
                  " and the supremum invariants\n");
  }
  if (!all) {
    for (const auto& r : results)
      if (!r.passed) std::cerr << "confinv: check failed: " << r.anchor << "\n";
  }
  return all ? kOk : kVerifyFailed;
}

int cmd_conformal(const std::string& spec_path, const std::string& u_text, int resolution, double threshold,
                  bool as_json, unsigned threads) {
  ManifoldSpec spec = load(spec_path);
  Expr u = parse_expr(u_text);
  if (u.free_variables() >> spec.dim()) throw InputFailure("u uses coordinates beyond the dimension");
  const int n = resolution > 0 ? resolution : spec.resolution.value_or(24);
  if (n < 8) throw InputFailure("resolution must be at least 8");
  IntegrationOptions opt;
  opt.threads = threads;
  DriftReport d = conformal_drift(spec, u, n, opt);
  const Invariant kinds[4] = {Invariant::Q, Invariant::L1, Invariant::L2, Invariant::L3};
  bool ok = true;
  for (double v : d.drift) ok = ok && v <= threshold;
  if (as_json) {
    json doc;
    for (int k = 0; k < 4; ++k)
      doc["drift"][to_string(kinds[k])] = {{"base", d.base[kinds[k]].value},
                                           {"rescaled", d.rescaled[kinds[k]].value},
                                           {"drift", d.drift[k]}};
    doc["u"] = to_string(u);
    doc["resolution"] = n;
    doc["threshold"] = threshold;
    doc["passed"] = ok;
    std::cout << doc.dump(2) << "\n";
  } else {
    std::printf("u = %s, resolution %d, threshold %g\n", to_string(u).c_str(), n, threshold);
    std::printf("  %-3s %22s %22s %12s\n", "", "I(g)", "I(e^{2u} g)", "drift");
    for (int k = 0; k < 4; ++k)
      std::printf("  %-3s %22.14g %22.14g %12.3g\n", to_string(kinds[k]), d.base[kinds[k]].value,
                  d.rescaled[kinds[k]].value, d.drift[k]);
    std::printf("%s\n", ok ? "all drifts below threshold" : "drift above threshold");
  }
  return ok ? kOk : kVerifyFailed;
}

std::vector<Rational> parse_params(const std::string& text) {
  std::vector<Rational> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    Rational q;
    try {
      q = parse_rational(item);
    } catch (const DomainError& e) {
      throw InputFailure(e.what());
    }
    if (q <= 0) throw InputFailure("parameters must be positive: " + item);
    out.push_back(q);
  }
  if (out.empty()) throw InputFailure("no parameters given");
  return out;
}

int cmd_scan(const std::string& family, const std::string& params, bool as_json) {
  if (family != "s2xs4-scaling") throw InputFailure("unknown family '" + family + "' (known: s2xs4-scaling)");
  auto cs = parse_params(params);
  auto rows = family_scan(s2xs4_scaling, cs);
  PiScaled deriv = s2xs4_l1_derivative(Rational(1));
  bool all = true;
  json doc;
  doc["family"] = family;
  doc["rows"] = json::array();
  if (!as_json) std::printf("%-10s %-22s %-22s %s\n", "c", "L1", "closed form", "match");
  for (const auto& r : rows) {
    PiScaled closed = s2xs4_l1_closed_form(r.parameter);
    bool match = closed == r.invariants.L1;
    all = all && match;
    if (as_json) {
      doc["rows"].push_back({{"c", r.parameter.get_str()},
                             {"Q", r.invariants.Q.to_string()},
                             {"L1", r.invariants.L1.to_string()},
                             {"L2", r.invariants.L2.to_string()},
                             {"L3", r.invariants.L3.to_string()},
                             {"L1_closed_form", closed.to_string()},
                             {"match", match}});
    } else {
      std::printf("%-10s %-22s %-22s %s\n", r.parameter.get_str().c_str(), r.invariants.L1.to_string().c_str(),
                  closed.to_string().c_str(), match ? "yes" : "NO");
    }
  }
  if (as_json) {
    doc["dL1_dc_at_1"] = deriv.to_string();
    doc["dL1_dc_at_1_sign"] = deriv.sign();
    std::cout << doc.dump(2) << "\n";
  } else {
    std::printf("dL1/dc at c = 1: %s (%s; c = 1 is not a critical point)\n", deriv.to_string().c_str(),
                deriv.sign() > 0 ? "positive" : deriv.sign() < 0 ? "negative" : "zero");
  }
  return all && !deriv.is_zero() ? kOk : kVerifyFailed;
}

int cmd_gbc(const std::string& spec_path, std::optional<long> chi, const std::string& pipeline_name, int resolution,
            unsigned threads) {
  ManifoldSpec spec = load(spec_path);
  Pipeline p;
  try {
    p = parse_pipeline(pipeline_name);
  } catch (const DomainError& e) {
    throw InputFailure(e.what());
  }
  long x = chi ? *chi : spec.euler_char ? *spec.euler_char : spec.product_euler_characteristic();
  bool ok = true;
  if (p != Pipeline::numeric) {
    PiScaled r = gbc_residual(integrated_invariants(spec.exact_form()), x);
    std::printf("exact residual (chi = %ld): %s\n", x, r.to_string().c_str());
    ok = ok && r.is_zero();
  }
  if (p != Pipeline::exact) {
    spec.euler_char = x;
    IntegrationOptions opt;
    opt.threads = threads;
    const int n = resolution > 0 ? resolution : spec.resolution.value_or(24);
    auto rep = integrate_invariants(spec, n, opt);
    double scale = 64 * std::pow(std::numbers::pi, 3) * std::max(1.0, std::abs(static_cast<double>(x)));
    double tol = 10 * (rep.Q.band(1) + rep.L1.band(1) / 3 + 7 * rep.L2.band(1) / 6 + rep.L3.band(1)) + 1e-9 * scale;
    std::printf("numeric residual (chi = %ld, N = %d): %.6g (tolerance %.3g)\n", x, n, *rep.gbc_residual, tol);
    ok = ok && std::abs(*rep.gbc_residual) <= tol;
  }
  return ok ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Global conformal invariants of closed Riemannian six-manifolds"};
  app.set_version_flag("--version", std::string(CONFINV_VERSION));
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (0: hardware concurrency)");

  std::string spec_path, pipeline = "both", path = "integrand", out, filter, u_text, family, params;
  int resolution = 0;
  bool as_json = false, inject = false;
  double threshold = 1e-4;
  std::optional<long> chi;

  auto* compute = app.add_subcommand("compute", "invariants of a manifold spec");
  compute->add_option("spec", spec_path, "spec file (JSON)")->required();
  compute->add_option("--resolution,-N", resolution, "quadrature nodes per axis");
  compute->add_option("--pipeline", pipeline, "exact, numeric or both")->check(CLI::IsMember({"exact", "numeric", "both"}));
  compute->add_option("--path", path, "integrand or density")->check(CLI::IsMember({"integrand", "density"}));
  compute->add_flag("--json", as_json, "JSON report");
  compute->add_option("--out,-o", out, "write the report to a file");

  auto* verify = app.add_subcommand("verify-paper", "run the named closed-form checks");
  verify->add_option("--filter", filter, "run only the checks with this anchor");
  verify->add_flag("--json", as_json, "JSON table");
  verify->add_flag("--inject-fault", inject)->group("");

  auto* conformal = app.add_subcommand("conformal-test", "drift of the invariants under g -> e^{2u} g");
  conformal->add_option("spec", spec_path, "spec file (JSON)")->required();
  conformal->add_option("--u", u_text, "conformal factor, e.g. 0.1*sin(x3)")->required();
  conformal->add_option("--resolution,-N", resolution, "quadrature nodes per axis");
  conformal->add_option("--threshold", threshold, "largest accepted drift");
  conformal->add_flag("--json", as_json, "JSON table");

  auto* scan = app.add_subcommand("scan", "exact invariants along a family");
  scan->add_option("family", family, "s2xs4-scaling")->required();
  scan->add_option("--params", params, "comma-separated positive rationals")->required();
  scan->add_flag("--json", as_json, "JSON table");

  auto* gbc = app.add_subcommand("gbc", "Gauss-Bonnet-Chern residual");
  gbc->add_option("spec", spec_path, "spec file (JSON)")->required();
  gbc->add_option("--euler-char", chi, "Euler characteristic (default: from the spec or the product)");
  gbc->add_option("--pipeline", pipeline, "exact, numeric or both")->check(CLI::IsMember({"exact", "numeric", "both"}));
  gbc->add_option("--resolution,-N", resolution, "quadrature nodes per axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*compute) return cmd_compute(spec_path, resolution, pipeline, path, as_json, out, threads);
    if (*verify) return cmd_verify(filter, inject, as_json, threads);
    if (*conformal) return cmd_conformal(spec_path, u_text, resolution, threshold, as_json, threads);
    if (*scan) return cmd_scan(family, params, as_json);
    if (*gbc) {
      if (gbc->count("--pipeline") == 0) pipeline = "exact";
      return cmd_gbc(spec_path, chi, pipeline, resolution, threads);
    }
  } catch (const std::exception& e) {
    std::cerr << "confinv: " << e.what() << "\n";
    return classify(e);
  }
  return kInputError;
}
