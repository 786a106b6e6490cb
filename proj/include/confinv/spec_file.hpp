#pragma once

// JSON manifold specifications and report documents.
//
//   {
//     "schema": "confinv.spec/1",
//     "factors": [{"type": "torus", "dim": 2, "periods": [1, "2*pi"]},
//                 {"type": "sphere", "dim": 4, "curvature": "1/2"}],
//     "conformal_u": "0.1*sin(x3)",
//     "euler_char": 0,
//     "pi1_infinite": true,
//     "resolution": 24
//   }
//
// A torus takes "periods" (list, or one value for every direction) or a
// total "volume"; a volume V is realized by the periods (V, 1, ..., 1).

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "confinv/error.hpp"
#include "confinv/manifold.hpp"
#include "confinv/quadrature.hpp"

#ifndef CONFINV_VERSION
#define CONFINV_VERSION "0.0.0"
#endif

namespace confinv {

using json = nlohmann::json;

inline constexpr const char* kSpecSchema = "confinv.spec/1";
inline constexpr const char* kReportSchema = "confinv.report/1";

namespace detail {

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SpecError(path + "/" + key, "missing required key");
  return *it;
}

inline int spec_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw SpecError(path, "expected an integer");
  return v.get<int>();
}

// Numbers become the shortest decimal that round-trips; strings are parsed
// exactly ("1/3", "0.25").
inline Rational spec_rational(const json& v, const std::string& path) {
  try {
    if (v.is_number_integer()) return Rational(v.get<long>());
    if (v.is_number()) return rational_from_double(v.get<double>());
    if (v.is_string()) return parse_rational(v.get<std::string>());
  } catch (const DomainError& e) {
    throw SpecError(path, e.what());
  }
  throw SpecError(path, "expected a number or a rational string");
}

// Rational or rational multiple of a power of pi ("2*pi").
inline PiScaled spec_pi_scaled(const json& v, const std::string& path) {
  if (v.is_string()) {
    try {
      return PiScaled::parse(v.get<std::string>());
    } catch (const Error& e) {
      throw SpecError(path, e.what());
    }
  }
  return PiScaled(spec_rational(v, path));
}

inline FactorSpec parse_factor(const json& f, const std::string& path) {
  if (!f.is_object()) throw SpecError(path, "expected an object");
  for (const auto& [key, _] : f.items())
    if (key != "type" && key != "dim" && key != "curvature" && key != "periods" && key != "volume")
      throw SpecError(path + "/" + key, "unknown key");
  const json& type = require(f, "type", path);
  if (!type.is_string()) throw SpecError(path + "/type", "expected a string");
  const int dim = spec_int(require(f, "dim", path), path + "/dim");
  const std::string t = type.get<std::string>();
  try {
    if (t == "sphere") {
      if (f.contains("periods") || f.contains("volume"))
        throw SpecError(path, "sphere factors take only a curvature");
      Rational k = f.contains("curvature") ? spec_rational(f["curvature"], path + "/curvature") : Rational(1);
      if (k <= 0) throw SpecError(path + "/curvature", "sphere curvature must be positive");
      return FactorSpec::sphere(dim, k);
    }
    if (t == "torus") {
      if (f.contains("curvature")) {
        Rational k = spec_rational(f["curvature"], path + "/curvature");
        if (k != 0) throw SpecError(path + "/curvature", "torus factors are flat");
      }
      if (dim < 1 || dim > 6) throw SpecError(path + "/dim", "torus dimension must be 1..6");
      if (f.contains("periods") && f.contains("volume"))
        throw SpecError(path, "give either periods or volume, not both");
      std::vector<PiScaled> periods;
      if (f.contains("periods")) {
        const json& p = f["periods"];
        if (p.is_array()) {
          if (static_cast<int>(p.size()) != dim)
            throw SpecError(path + "/periods", "need one period per torus direction");
          for (std::size_t i = 0; i < p.size(); ++i)
            periods.push_back(spec_pi_scaled(p[i], path + "/periods/" + std::to_string(i)));
        } else {
          periods.assign(static_cast<std::size_t>(dim), spec_pi_scaled(p, path + "/periods"));
        }
      } else if (f.contains("volume")) {
        periods.assign(static_cast<std::size_t>(dim), PiScaled(1));
        periods[0] = spec_pi_scaled(f["volume"], path + "/volume");
      } else {
        periods.assign(static_cast<std::size_t>(dim), PiScaled::term(1, Rational(2)));
      }
      for (std::size_t i = 0; i < periods.size(); ++i)
        if (periods[i].sign() <= 0) throw SpecError(path + "/periods/" + std::to_string(i), "must be positive");
      return FactorSpec::torus(std::move(periods));
    }
  } catch (const SpecError&) {
    throw;
  } catch (const Error& e) {
    throw SpecError(path, e.what());
  }
  throw SpecError(path + "/type", "expected \"torus\" or \"sphere\"");
}

}  // namespace detail

/// Validates a spec document and builds the manifold. Errors carry a JSON
/// pointer to the offending element.
inline ManifoldSpec parse_spec(const json& doc) {
  if (!doc.is_object()) throw SpecError("", "spec must be a JSON object");
  static const char* known[] = {"schema", "factors", "conformal_u", "euler_char", "pi1_infinite", "resolution"};
  for (const auto& [key, _] : doc.items())
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
        std::end(known))
      throw SpecError("/" + key, "unknown key");
  if (doc.contains("schema")) {
    if (!doc["schema"].is_string() || doc["schema"].get<std::string>() != kSpecSchema)
      throw SpecError("/schema", std::string("expected \"") + kSpecSchema + "\"");
  }
  const json& factors = detail::require(doc, "factors", "");
  if (!factors.is_array() || factors.empty()) throw SpecError("/factors", "expected a nonempty list");
  ManifoldSpec spec;
  for (std::size_t i = 0; i < factors.size(); ++i)
    spec.factors.push_back(detail::parse_factor(factors[i], "/factors/" + std::to_string(i)));
  if (spec.dim() != 6)
    throw SpecError("/factors", "total dimension is " + std::to_string(spec.dim()) + ", expected 6");
  if (doc.contains("conformal_u")) {
    const json& u = doc["conformal_u"];
    if (!u.is_string()) throw SpecError("/conformal_u", "expected an expression string");
    try {
      spec.conformal_u = parse_expr(u.get<std::string>());
    } catch (const ParseError& e) {
      throw SpecError("/conformal_u", e.what());
    }
    if (spec.conformal_u->free_variables() >> 6)
      throw SpecError("/conformal_u", "uses coordinates beyond x6");
  }
  if (doc.contains("euler_char")) {
    const json& e = doc["euler_char"];
    if (!e.is_number_integer()) throw SpecError("/euler_char", "expected an integer");
    spec.euler_char = e.get<long>();
  }
  if (doc.contains("pi1_infinite")) {
    if (!doc["pi1_infinite"].is_boolean()) throw SpecError("/pi1_infinite", "expected a boolean");
    spec.pi1_infinite = doc["pi1_infinite"].get<bool>();
  }
  if (doc.contains("resolution")) {
    int n = detail::spec_int(doc["resolution"], "/resolution");
    if (n < 8) throw SpecError("/resolution", "must be at least 8");
    spec.resolution = n;
  }
  return spec;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("", "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SpecError("", std::string("malformed JSON: ") + e.what());
  }
}

inline ManifoldSpec load_spec(const std::string& path) { return parse_spec(read_json_file(path)); }

/// Canonical document for a spec (exact values as strings).
inline json spec_to_json(const ManifoldSpec& spec) {
  json doc;
  doc["schema"] = kSpecSchema;
  json fs = json::array();
  for (const auto& f : spec.factors) {
    json o;
    o["type"] = f.kind == FactorKind::sphere ? "sphere" : "torus";
    o["dim"] = f.dim;
    if (f.kind == FactorKind::sphere) {
      o["curvature"] = to_string(f.curvature);
    } else {
      json p = json::array();
      for (const auto& q : f.periods) p.push_back(q.to_string());
      o["periods"] = p;
    }
    fs.push_back(o);
  }
  doc["factors"] = fs;
  if (spec.conformal_u) doc["conformal_u"] = to_string(*spec.conformal_u);
  if (spec.euler_char) doc["euler_char"] = *spec.euler_char;
  if (spec.pi1_infinite) doc["pi1_infinite"] = true;
  if (spec.resolution) doc["resolution"] = *spec.resolution;
  return doc;
}

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string spec_hash(const ManifoldSpec& spec) { return fnv1a_hex(spec_to_json(spec).dump()); }

enum class Pipeline { exact, numeric, both };

inline const char* to_string(Pipeline p) {
  switch (p) {
    case Pipeline::exact: return "exact";
    case Pipeline::numeric: return "numeric";
    case Pipeline::both: return "both";
  }
  return "?";
}

inline Pipeline parse_pipeline(std::string_view s) {
  if (s == "exact") return Pipeline::exact;
  if (s == "numeric") return Pipeline::numeric;
  if (s == "both") return Pipeline::both;
  throw DomainError("pipeline must be exact, numeric or both");
}

inline json report_to_json(const InvariantReport& rep, const ManifoldSpec& spec, Pipeline pipeline) {
  json doc;
  doc["schema"] = kReportSchema;
  json inv;
  const Invariant kinds[4] = {Invariant::Q, Invariant::L1, Invariant::L2, Invariant::L3};
  for (Invariant k : kinds) {
    const auto& e = rep[k];
    json o;
    o["value"] = e.value;
    o["error"] = e.error;
    if (pipeline != Pipeline::exact) o["roundoff"] = e.roundoff;
    if (e.exact && pipeline != Pipeline::numeric) o["exact"] = e.exact->to_string();
    inv[to_string(k)] = o;
  }
  doc["invariants"] = inv;
  if (rep.gbc_residual) doc["gbc_residual"] = *rep.gbc_residual;
  if (spec.euler_char && pipeline != Pipeline::numeric) {
    try {
      doc["gbc_residual_exact"] =
          gbc_residual(integrated_invariants(spec.exact_form()), *spec.euler_char).to_string();
    } catch (const Error&) {
    }
  }
  json vs = json::array();
  for (const auto& v : rep.verdicts) vs.push_back({{"kind", to_string(v.kind)}, {"anchor", v.anchor}, {"detail", v.detail}});
  doc["verdicts"] = vs;
  doc["pipeline"] = to_string(pipeline);
  if (!rep.diagnostics.empty()) doc["diagnostics"] = rep.diagnostics;
  json prov;
  prov["spec_hash"] = spec_hash(spec);
  prov["resolution"] = pipeline == Pipeline::exact ? json(nullptr) : json(rep.resolution);
  prov["version"] = CONFINV_VERSION;
  if (pipeline != Pipeline::exact) {
    prov["nodes"] = rep.nodes;
    prov["path"] = rep.path == IntegrandPath::integrand ? "integrand" : "density";
  }
  doc["provenance"] = prov;
  return doc;
}

}  // namespace confinv
