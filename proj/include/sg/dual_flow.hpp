#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sg/ot_solver.hpp"
#include "sg/quadrature.hpp"

namespace sg {

enum class Scheme { Euler, Rk2, Rk4 };

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "euler") return Scheme::Euler;
  if (s == "rk2") return Scheme::Rk2;
  if (s == "rk4") return Scheme::Rk4;
  throw ConfigError("unknown scheme: " + s);
}

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Euler: return "euler";
    case Scheme::Rk2: return "rk2";
    default: return "rk4";
  }
}

// Time-stamped consistent snapshot of the dual evolution.
struct DualState {
  double t = 0.0;
  WeightedPointCloud cloud;
  DualPotentials potentials;
  LaguerreDiagram diagram;
  double residual = 0.0;
};

struct FlowSettings {
  double stage_tol = 1e-6;   // OT tolerance for internal integrator stages
  double accept_tol = 1e-8;  // OT tolerance for accepted states
  int max_newton = 100;
};

// Discrete dual velocity U_i = J(y_i - b_i); the third component vanishes
// identically.
inline std::vector<Vec3> velocity(const DualState& state) {
  std::vector<Vec3> u(state.cloud.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    u[i] = j_apply(state.cloud.positions[i] - state.diagram.barycenters[i]);
  return u;
}

// E = (1/2) int |y(x) - x|^2 dmu(x), the second moment of each cell about
// its generator. This is the quantity the continuous-time flow conserves:
// the volume term gives m_i (y_i - b_i) . J(y_i - b_i) = 0, and the moving
// Laguerre walls contribute the jump psi_i - psi_j times the wall flux,
// which sums to zero because cell volumes are constant. (Because vertical
// positions are rigid, this differs from the kinetic-plus-buoyancy dual
// energy only by a constant. The horizontal-only moment is *not* conserved:
// its wall jump is not constant on the wall and does not cancel.)
inline double geostrophic_energy(const ConvexDomain& domain,
                                 const DualState& state) {
  double e = 0.0;
  for (std::size_t i = 0; i < state.cloud.size(); ++i) {
    if (!state.diagram.nonempty[i]) continue;
    const Vec3& y = state.cloud.positions[i];
    e += 0.5 *
         integrate_cell(
             state.diagram.cells[i],
             [&](const Vec3& x) { return (y - x).squaredNorm(); },
             QuadSpec{2}) /
         domain.volume;
  }
  return e;
}

inline DualState make_consistent(const ConvexDomain& domain,
                                 WeightedPointCloud cloud, double t,
                                 double tol, int max_newton = 100,
                                 std::optional<DualPotentials> warm = {}) {
  DualState st;
  st.t = t;
  st.cloud = std::move(cloud);
  OTSolution sol =
      solve_weights(domain, st.cloud, OTSettings{tol, max_newton}, std::move(warm));
  st.potentials = std::move(sol.potentials);
  st.diagram = std::move(sol.diagram);
  st.residual = sol.residual;
  return st;
}

namespace detail {

inline std::vector<Vec3> stage_velocity(const ConvexDomain& domain,
                                        const WeightedPointCloud& base,
                                        const std::vector<Vec3>& shift,
                                        double factor, const DualPotentials& warm,
                                        const FlowSettings& fs,
                                        DualPotentials* warm_out) {
  WeightedPointCloud moved = base;
  for (std::size_t i = 0; i < moved.size(); ++i)
    moved.positions[i] += factor * shift[i];
  OTSolution sol = solve_weights(domain, moved,
                                 OTSettings{fs.stage_tol, fs.max_newton}, warm);
  if (warm_out) *warm_out = sol.potentials;
  std::vector<Vec3> u(moved.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    u[i] = j_apply(moved.positions[i] - sol.diagram.barycenters[i]);
  return u;
}

}  // namespace detail

// One explicit step of the dual system; every internal stage re-solves the
// transport problem (warm-started). Masses are never touched.
inline DualState step(const ConvexDomain& domain, const DualState& state,
                      double dt, Scheme scheme, const FlowSettings& fs = {}) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  const std::size_t n = state.cloud.size();
  std::vector<Vec3> zero(n, Vec3::Zero());
  DualPotentials warm = state.potentials;

  std::vector<Vec3> k1(n);
  for (std::size_t i = 0; i < n; ++i)
    k1[i] = j_apply(state.cloud.positions[i] - state.diagram.barycenters[i]);

  std::vector<Vec3> move(n);
  try {
    switch (scheme) {
      case Scheme::Euler:
        move = k1;
        break;
      case Scheme::Rk2: {
        const auto k2 = detail::stage_velocity(domain, state.cloud, k1, 0.5 * dt,
                                               warm, fs, &warm);
        move = k2;
        break;
      }
      case Scheme::Rk4: {
        const auto k2 = detail::stage_velocity(domain, state.cloud, k1, 0.5 * dt,
                                               warm, fs, &warm);
        const auto k3 = detail::stage_velocity(domain, state.cloud, k2, 0.5 * dt,
                                               warm, fs, &warm);
        const auto k4 =
            detail::stage_velocity(domain, state.cloud, k3, dt, warm, fs, &warm);
        for (std::size_t i = 0; i < n; ++i)
          move[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
        break;
      }
    }

    WeightedPointCloud advanced = state.cloud;
    for (std::size_t i = 0; i < n; ++i) advanced.positions[i] += dt * move[i];
    return make_consistent(domain, std::move(advanced), state.t + dt,
                           fs.accept_tol, fs.max_newton, warm);
  } catch (const SolveError& e) {
    throw StepError(std::string("OT solve failed inside step: ") + e.what(),
                    state.t);
  }
}

// Lightweight per-step record kept along a trajectory (diagrams are rebuilt
// on demand from positions + psi).
struct StateRecord {
  double t = 0.0;
  std::vector<Vec3> positions;
  std::vector<double> psi;
  std::vector<double> volumes;
  std::vector<Vec3> barycenters;
  std::vector<Vec3> velocities;
  double residual = 0.0;
  double energy = 0.0;
  double min_volume = 0.0;
  double velocity_bound_margin = 0.0;  // max_i (|U_i| - |y_i| - d_Omega)
  double vertical_drift = 0.0;         // max_i |y_i3(t) - y_i3(0)|
};

struct Trajectory {
  std::vector<StateRecord> records;
  double dt = 0.0;
  Scheme scheme = Scheme::Rk2;
};

inline StateRecord record_state(const ConvexDomain& domain,
                                const DualState& state,
                                const std::vector<double>* z0 = nullptr) {
  StateRecord r;
  r.t = state.t;
  r.positions = state.cloud.positions;
  r.psi = state.potentials.psi;
  r.volumes = state.diagram.volumes;
  r.barycenters = state.diagram.barycenters;
  r.velocities = velocity(state);
  r.residual = state.residual;
  r.energy = geostrophic_energy(domain, state);
  r.min_volume = state.diagram.min_volume();
  r.velocity_bound_margin = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r.positions.size(); ++i) {
    const double m =
        r.velocities[i].norm() - r.positions[i].norm() - domain.d_omega;
    r.velocity_bound_margin = std::max(r.velocity_bound_margin, m);
    if (z0)
      r.vertical_drift =
          std::max(r.vertical_drift, std::abs(r.positions[i].z() - (*z0)[i]));
  }
  return r;
}

// Advance one dt, halving the step on OT failure (up to `depth` times).
inline DualState robust_step(const ConvexDomain& domain, const DualState& state,
                             double dt, Scheme scheme, const FlowSettings& fs,
                             int depth = 5) {
  try {
    return step(domain, state, dt, scheme, fs);
  } catch (const StepError&) {
    if (depth <= 0) throw;
    DualState half = robust_step(domain, state, 0.5 * dt, scheme, fs, depth - 1);
    return robust_step(domain, half, 0.5 * dt, scheme, fs, depth - 1);
  }
}

// Deterministic fixed-step trajectory with per-state diagnostics. An optional
// callback sees every accepted record (used for checkpoint/output cadence).
inline Trajectory run_flow(
    const ConvexDomain& domain, DualState initial, double dt, double T,
    Scheme scheme, const FlowSettings& fs = {},
    const std::function<void(std::size_t, const StateRecord&, const DualState&)>&
        on_state = {}) {
  Trajectory traj;
  traj.dt = dt;
  traj.scheme = scheme;
  // whole steps of dt, plus one shortened step if T is not a multiple
  const double span = std::max(T, 0.0);
  std::size_t nsteps = static_cast<std::size_t>(std::floor(span / dt + 1e-9));
  const double tail = span - static_cast<double>(nsteps) * dt;
  const bool partial = tail > 1e-9 * dt;

  std::vector<double> z0(initial.cloud.size());
  for (std::size_t i = 0; i < z0.size(); ++i)
    z0[i] = initial.cloud.positions[i].z();

  DualState current = std::move(initial);
  traj.records.push_back(record_state(domain, current, &z0));
  if (on_state) on_state(0, traj.records.back(), current);

  for (std::size_t k = 1; k <= nsteps + (partial ? 1 : 0); ++k) {
    current = robust_step(domain, current, k <= nsteps ? dt : tail, scheme, fs);
    traj.records.push_back(record_state(domain, current, &z0));
    if (on_state) on_state(k, traj.records.back(), current);
  }
  return traj;
}

}  // namespace sg
