#pragma once

#include <fstream>
#include <memory>
#include <set>
#include <string>

#include <json.hpp>

#include "sg/decay.hpp"
#include "sg/density.hpp"
#include "sg/dual_flow.hpp"
#include "sg/quantize.hpp"

namespace sg {

using Json = nlohmann::json;

namespace detail {

inline void reject_unknown_keys(const Json& obj, const std::string& where,
                                const std::set<std::string>& known) {
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, _] : obj.items())
    if (!known.count(key))
      throw ConfigError(where + ": unknown key '" + key + "'");
}

inline Vec3 parse_vec3(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3)
    throw ConfigError(where + ": expected an array of 3 numbers");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

template <typename T>
T get_or(const Json& obj, const std::string& key, T fallback) {
  return obj.contains(key) ? obj.at(key).get<T>() : fallback;
}

}  // namespace detail

inline std::shared_ptr<const ConvexDomain> parse_domain(const Json& j) {
  detail::reject_unknown_keys(
      j, "domain", {"kind", "center", "half_widths", "radius", "facets", "planes"});
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "box") {
    const Vec3 c = j.contains("center") ? detail::parse_vec3(j.at("center"), "domain.center")
                                        : Vec3(Vec3::Zero());
    const Vec3 h = detail::parse_vec3(j.at("half_widths"), "domain.half_widths");
    return std::make_shared<ConvexDomain>(make_box_domain(c, h));
  }
  if (kind == "ball") {
    const Vec3 c = j.contains("center") ? detail::parse_vec3(j.at("center"), "domain.center")
                                        : Vec3(Vec3::Zero());
    const double r = j.at("radius").get<double>();
    const int facets = detail::get_or<int>(j, "facets", 320);
    return std::make_shared<ConvexDomain>(make_ball_domain(c, r, facets));
  }
  if (kind == "halfspaces") {
    std::vector<HalfSpace> planes;
    for (const auto& p : j.at("planes")) {
      detail::reject_unknown_keys(p, "domain.planes[]", {"normal", "offset"});
      planes.emplace_back(detail::parse_vec3(p.at("normal"), "plane normal"),
                          p.at("offset").get<double>());
    }
    return std::make_shared<ConvexDomain>(make_halfspace_domain(planes));
  }
  throw ConfigError("domain.kind must be box, ball or halfspaces");
}

inline DensityPtr parse_density(const Json& j,
                                const std::shared_ptr<const ConvexDomain>& dom) {
  detail::reject_unknown_keys(j, "density",
                              {"kind", "center", "sigma", "c0", "K", "M",
                               "core_lower", "core_upper", "truncate"});
  const std::string kind = j.at("kind").get<std::string>();
  DensityPtr base;
  if (kind == "uniform") {
    if (!dom) throw ConfigError("uniform density needs a domain");
    base = std::make_shared<UniformDensity>(dom);
  } else if (kind == "gaussian") {
    const Vec3 c = j.contains("center")
                       ? detail::parse_vec3(j.at("center"), "density.center")
                       : Vec3(Vec3::Zero());
    base = std::make_shared<GaussianDensity>(c, j.at("sigma").get<double>());
  } else if (kind == "power-tail") {
    base = std::make_shared<PowerTailDensity>(
        j.at("c0").get<double>(), j.at("K").get<double>(), j.at("M").get<double>(),
        detail::get_or<double>(j, "core_lower", 0.0),
        detail::get_or<double>(j, "core_upper", 0.0));
  } else {
    throw ConfigError("density.kind must be uniform, gaussian or power-tail");
  }
  if (j.contains("truncate"))
    base = mollify_truncate(base, j.at("truncate").get<int>());
  return base;
}

struct RunConfig {
  std::shared_ptr<const ConvexDomain> domain;
  DensityPtr density;
  int n = 0;
  std::uint64_t seed = 0;
  double dt = 0.0;
  double t_final = 0.0;
  Scheme scheme = Scheme::Rk2;
  FlowSettings flow;
  QuantizeSettings quantize;
  int output_cadence = 1;      // write every k-th accepted state
  int checkpoint_cadence = 0;  // 0 = final only
  std::string output_dir;
  std::string raw;  // canonical config text, hashed into checkpoints
};

inline RunConfig parse_run_config(const Json& j) try {
  detail::reject_unknown_keys(
      j, "config",
      {"domain", "density", "n", "seed", "dt", "T", "scheme", "ot", "quantize",
       "output"});
  RunConfig cfg;
  cfg.domain = parse_domain(j.at("domain"));
  cfg.density = parse_density(j.at("density"), cfg.domain);
  cfg.n = j.at("n").get<int>();
  if (cfg.n < 1) throw ConfigError("n must be >= 1");
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.dt = j.at("dt").get<double>();
  if (!(cfg.dt > 0.0)) throw ConfigError("dt must be positive");
  cfg.t_final = j.at("T").get<double>();
  if (!(cfg.t_final >= 0.0)) throw ConfigError("T must be nonnegative");
  cfg.scheme = scheme_from_string(detail::get_or<std::string>(j, "scheme", "rk2"));

  if (j.contains("ot")) {
    const Json& ot = j.at("ot");
    detail::reject_unknown_keys(ot, "ot", {"tol", "stage_tol", "max_iterations"});
    cfg.flow.accept_tol = detail::get_or<double>(ot, "tol", 1e-8);
    cfg.flow.stage_tol = detail::get_or<double>(ot, "stage_tol", 1e-6);
    cfg.flow.max_newton = detail::get_or<int>(ot, "max_iterations", 100);
  }
  if (j.contains("quantize")) {
    const Json& q = j.at("quantize");
    detail::reject_unknown_keys(q, "quantize",
                                {"max_iterations", "tol", "grid_init", "ot_tol"});
    cfg.quantize.max_iterations = detail::get_or<int>(q, "max_iterations", 200);
    cfg.quantize.tol = detail::get_or<double>(q, "tol", 1e-6);
    cfg.quantize.grid_init = detail::get_or<bool>(q, "grid_init", false);
    cfg.quantize.ot_tol = detail::get_or<double>(q, "ot_tol", 1e-9);
  }
  if (j.contains("output")) {
    const Json& o = j.at("output");
    detail::reject_unknown_keys(o, "output",
                                {"directory", "cadence", "checkpoint_cadence"});
    cfg.output_dir = detail::get_or<std::string>(o, "directory", "");
    cfg.output_cadence = detail::get_or<int>(o, "cadence", 1);
    cfg.checkpoint_cadence = detail::get_or<int>(o, "checkpoint_cadence", 0);
    if (cfg.output_cadence < 1) throw ConfigError("output cadence must be >= 1");
  }
  cfg.raw = j.dump();
  return cfg;
} catch (const Json::exception& e) {
  throw ConfigError(std::string("invalid run config: ") + e.what());
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

inline RunConfig load_run_config(const std::string& path) {
  RunConfig cfg = parse_run_config(load_json_file(path));
  if (cfg.output_dir.empty()) {
    std::string stem = path;
    const auto slash = stem.find_last_of('/');
    if (slash != std::string::npos) stem = stem.substr(slash + 1);
    const auto dot = stem.find_last_of('.');
    if (dot != std::string::npos) stem = stem.substr(0, dot);
    cfg.output_dir = stem + "_out";
  }
  return cfg;
}

// Decay-lab configuration: a built-in field, a density, times and sampling.
struct DecayConfig {
  SyntheticField field;
  DensityPtr density;
  std::vector<DecayBound> bounds;
  std::vector<double> times;
  DecaySampleSpec samples;
  std::string output_dir;
};

inline DecayConfig parse_decay_config(const Json& j) try {
  detail::reject_unknown_keys(
      j, "config",
      {"field", "density", "bounds", "times", "samples", "seed", "region_r",
       "output"});
  DecayConfig cfg;
  const Json& f = j.at("field");
  detail::reject_unknown_keys(f, "field", {"kind", "radius", "matrix", "shift"});
  const std::string kind = f.at("kind").get<std::string>();
  if (kind == "zero") cfg.field = zero_field();
  else if (kind == "dilation") cfg.field = dilation_field();
  else if (kind == "rotation") cfg.field = rotation_field();
  else if (kind == "vortex") cfg.field = vortex_field(f.at("radius").get<double>());
  else if (kind == "affine") {
    Mat3 b = Mat3::Zero();
    const Json& rows = f.at("matrix");
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) b(r, c) = rows.at(r).at(c).get<double>();
    const Vec3 shift = f.contains("shift")
                           ? detail::parse_vec3(f.at("shift"), "field.shift")
                           : Vec3(Vec3::Zero());
    cfg.field = affine_field(b, shift);
  } else {
    throw ConfigError("field.kind must be zero, dilation, rotation, vortex or affine");
  }

  cfg.density = parse_density(j.at("density"), nullptr);
  for (const auto& b : j.at("bounds")) {
    const std::string s = b.get<std::string>();
    if (s == "sup-growth") cfg.bounds.push_back(DecayBound::UpperSup);
    else if (s == "inf-decay") cfg.bounds.push_back(DecayBound::LowerInf);
    else if (s == "tail") cfg.bounds.push_back(DecayBound::Tail);
    else if (s == "sandwich") cfg.bounds.push_back(DecayBound::Sandwich);
    else throw ConfigError("unknown bound: " + s);
  }
  for (const auto& t : j.at("times")) cfg.times.push_back(t.get<double>());
  cfg.samples.samples = detail::get_or<int>(j, "samples", 10000);
  cfg.samples.seed = detail::get_or<std::uint64_t>(j, "seed", 20240901);
  cfg.samples.lower_region_r = detail::get_or<double>(j, "region_r", 1.0);
  if (j.contains("output")) {
    const Json& o = j.at("output");
    detail::reject_unknown_keys(o, "output", {"directory"});
    cfg.output_dir = detail::get_or<std::string>(o, "directory", "");
  }
  return cfg;
} catch (const Json::exception& e) {
  throw ConfigError(std::string("invalid decay config: ") + e.what());
}

}  // namespace sg
