#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sg/config.hpp"
#include "sg/dual_flow.hpp"

namespace sg {

inline constexpr int kCheckpointSchema = 1;

inline std::uint64_t fnv1a_hash(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Resumable snapshot of a run: particle state at time t plus the seed and a
// hash of the generating config. JSON double serialization round-trips
// bit-exactly (shortest representation).
struct Checkpoint {
  int schema = kCheckpointSchema;
  double t = 0.0;
  std::size_t step = 0;
  std::vector<Vec3> positions;
  std::vector<double> masses;
  std::vector<double> psi;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

inline Checkpoint make_checkpoint(const DualState& state, std::size_t step,
                                  std::uint64_t seed, std::uint64_t config_hash) {
  Checkpoint cp;
  cp.t = state.t;
  cp.step = step;
  cp.positions = state.cloud.positions;
  cp.masses = state.cloud.masses;
  cp.psi = state.potentials.psi;
  cp.seed = seed;
  cp.config_hash = config_hash;
  return cp;
}

inline void save_checkpoint(const Checkpoint& cp, const std::string& path) {
  Json j;
  j["schema"] = cp.schema;
  j["t"] = cp.t;
  j["step"] = cp.step;
  j["seed"] = cp.seed;
  j["config_hash"] = cp.config_hash;
  Json pos = Json::array();
  for (const auto& p : cp.positions) pos.push_back({p.x(), p.y(), p.z()});
  j["positions"] = std::move(pos);
  j["masses"] = cp.masses;
  j["psi"] = cp.psi;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint: " + path);
  out << j.dump(1) << "\n";
  if (!out) throw ConfigError("checkpoint write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  Json j = load_json_file(path);
  Checkpoint cp;
  try {
    cp.schema = j.at("schema").get<int>();
    if (cp.schema != kCheckpointSchema)
      throw ConfigError("checkpoint schema version mismatch");
    cp.t = j.at("t").get<double>();
    cp.step = j.at("step").get<std::size_t>();
    cp.seed = j.at("seed").get<std::uint64_t>();
    cp.config_hash = j.at("config_hash").get<std::uint64_t>();
    for (const auto& p : j.at("positions"))
      cp.positions.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(),
                                p.at(2).get<double>());
    cp.masses = j.at("masses").get<std::vector<double>>();
    cp.psi = j.at("psi").get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
  if (cp.masses.size() != cp.positions.size() ||
      cp.psi.size() != cp.positions.size())
    throw ConfigError("malformed checkpoint: inconsistent array lengths");
  return cp;
}

inline DualState state_from_checkpoint(const ConvexDomain& domain,
                                       const Checkpoint& cp,
                                       const FlowSettings& fs) {
  WeightedPointCloud cloud{cp.positions, cp.masses};
  cloud.check_invariants();
  DualPotentials warm{cp.psi};
  return make_consistent(domain, std::move(cloud), cp.t, fs.accept_tol,
                         fs.max_newton, warm);
}

}  // namespace sg
