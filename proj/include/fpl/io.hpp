#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fpl/dirichlet.hpp"
#include "fpl/errors.hpp"
#include "fpl/liouville.hpp"
#include "fpl/params.hpp"
#include "fpl/profiles.hpp"
#include "fpl/quad.hpp"

namespace fpl {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersionTag = "0.1.0";

inline Json params_to_json(const Params& prm) {
  Json j;
  j["n"] = prm.n;
  j["s"] = prm.s;
  j["p"] = prm.p;
  if (prm.q) j["q"] = *prm.q;
  if (prm.sigma) j["sigma"] = *prm.sigma;
  return j;
}

inline Params params_from_json(const Json& j) {
  Params prm(j.at("n").get<int>(), j.at("s").get<double>(),
             j.at("p").get<double>());
  if (j.contains("q")) prm.q = j["q"].get<double>();
  if (j.contains("sigma")) prm.sigma = j["sigma"].get<double>();
  prm.validate();
  return prm;
}

/// One result record.  Every run embeds the seed, the quadrature spec and the
/// code version, so identical configurations reproduce identical records.
inline Json make_record(const std::string& op, const Params& prm,
                        const Estimate& est, const QuadSpec& spec) {
  Json j;
  j["op"] = op;
  j["params"] = params_to_json(prm);
  j["value"] = est.value;
  j["error"] = est.error;
  j["evals"] = est.evals;
  j["method"] = est.method == Method::mc        ? "mc"
                : est.method == Method::adaptive ? "adaptive"
                                                 : "hybrid";
  j["seed"] = spec.seed;
  j["spec"] = {{"rel_tol", spec.rel_tol},
               {"abs_tol", spec.abs_tol},
               {"max_evals", spec.max_evals},
               {"mc_budget", spec.mc_budget}};
  j["version"] = kVersionTag;
  return j;
}

/// Structural validation against the shipped record schema: required keys
/// with the right JSON types.
inline bool validate_record(const Json& j, std::string* why = nullptr) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  for (const char* key : {"op", "params", "value", "error", "evals", "seed",
                          "version"})
    if (!j.contains(key)) return fail(std::string("missing key: ") + key);
  if (!j["op"].is_string()) return fail("op must be a string");
  if (!j["params"].is_object()) return fail("params must be an object");
  if (!j["value"].is_number()) return fail("value must be a number");
  if (!j["error"].is_number() || j["error"].get<double>() < 0)
    return fail("error must be a nonnegative number");
  if (!j["evals"].is_number_integer()) return fail("evals must be an integer");
  if (!j["seed"].is_number()) return fail("seed must be a number");
  if (!j["version"].is_string()) return fail("version must be a string");
  return true;
}

/// Documented CSV column order shared by the record emitters.
inline std::string record_csv_header() {
  return "op,n,s,p,q,sigma,seed,value,error,evals";
}

inline std::string record_to_csv(const Json& j) {
  std::ostringstream os;
  os.precision(17);
  const Json& prm = j["params"];
  os << j["op"].get<std::string>() << "," << prm["n"] << "," << prm["s"]
     << "," << prm["p"] << ","
     << (prm.contains("q") ? prm["q"].dump() : "") << ","
     << (prm.contains("sigma") ? prm["sigma"].dump() : "") << "," << j["seed"]
     << "," << j["value"] << "," << j["error"] << "," << j["evals"];
  return os.str();
}

/// Profile descriptor {kind, params, extra} used by the CLI.
inline Json profile_to_json(const RadialProfile& prof, const Params& prm) {
  Json j;
  j["kind"] = prof.kind;
  j["params"] = params_to_json(prm);
  j["extra"] = prof.extra;
  return j;
}

inline RadialProfile profile_from_json(const Json& j) {
  Params prm = params_from_json(j.at("params"));
  const std::string kind = j.at("kind").get<std::string>();
  double extra = j.contains("extra") ? j["extra"].get<double>() : 0.0;
  if (kind == "fundamental_power") return fundamental_power(prm);
  if (kind == "fundamental_log") return fundamental_log(prm);
  if (kind == "perturbed_power")
    return perturbed_power(prm, extra > 0 ? extra : resolve_sigma(prm));
  if (kind == "scaled_perturbed")
    return scaled_perturbed(prm, resolve_sigma(prm), extra);
  if (kind == "smooth_cutoff") return smooth_cutoff(extra);
  if (kind == "gaussian_bump") return gaussian_bump(extra);
  if (kind == "homogeneous_power") return homogeneous_power(extra);
  if (kind == "constant") return constant_profile(extra);
  throw DomainError("unknown profile kind: " + kind);
}

inline Json supersolution_report_to_json(const SupersolutionReport& rep,
                                         const Params& prm,
                                         const QuadSpec& spec) {
  Json j;
  j["op"] = "supersolution";
  j["params"] = params_to_json(prm);
  j["sigma"] = rep.sigma;
  j["M"] = rep.M;
  j["c_f"] = rep.c_f;
  j["scale"] = rep.scale;
  j["fitted_slope"] = rep.fitted_slope;
  j["predicted_slope"] = rep.predicted_slope;
  j["verified"] = rep.verified;
  Json samples = Json::array();
  for (const auto& smp : rep.ratio_samples)
    samples.push_back({{"r", smp.r},
                       {"G", smp.g_value},
                       {"R", smp.ratio},
                       {"stderr", smp.ratio_error}});
  j["ratio_samples"] = samples;
  Json margins = Json::array();
  for (const auto& m : rep.verification)
    margins.push_back({{"r", m.r}, {"margin", m.margin}, {"tol", m.tol}});
  j["verification"] = margins;
  j["seed"] = spec.seed;
  j["version"] = kVersionTag;
  return j;
}

inline std::string ratio_samples_csv(const SupersolutionReport& rep) {
  std::ostringstream os;
  os.precision(17);
  os << "r,G,R,stderr\n";
  for (const auto& smp : rep.ratio_samples)
    os << smp.r << "," << smp.g_value << "," << smp.ratio << ","
       << smp.ratio_error << "\n";
  return os.str();
}

/// Grid + field serialized as a flat CSV (coordinates, value, interior mask)
/// preceded by nothing; the JSON header travels separately.
inline std::string grid_to_csv(const Grid& g, const DiscreteField& u) {
  std::ostringstream os;
  os.precision(17);
  os << (g.dim == 1 ? "x" : "x,y") << ",value,interior\n";
  for (std::size_t k = 0; k < g.size(); ++k) {
    os << g.nodes[k][0];
    if (g.dim == 2) os << "," << g.nodes[k][1];
    os << "," << u.values[k] << "," << (g.interior[k] ? 1 : 0) << "\n";
  }
  return os.str();
}

inline Json grid_header_json(const Grid& g, const Params& prm) {
  Json j;
  j["dim"] = g.dim;
  j["L"] = g.extent;
  j["h"] = g.spacing;
  j["params"] = params_to_json(prm);
  return j;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open output file: " + path);
  os << text;
}

}  // namespace fpl
