#pragma once

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sg/recovery.hpp"
#include "sg/rng.hpp"

namespace sg {

inline double log_plus(double x) { return x > 1.0 ? std::log(x) : 0.0; }

struct InequalityCheck {
  bool pass = true;
  double min_margin = std::numeric_limits<double>::infinity();  // min RHS-LHS
  long violations = 0;
  long samples = 0;
};

// Sampled verification of the scalar inequality
//   ab log_+^k(ab) <= 2^{k-1}[(k/e)^k + 1] b^2 + 2^{3(k-1)} a^2 log_+^{2k}(a)
// over (a,b) in (0, 1e6)^2 and k in 1..5.
inline InequalityCheck check_numeric_inequality(long samples, std::uint64_t seed) {
  if (samples < 1) throw ConfigError("inequality check needs samples >= 1");
  InequalityCheck r;
  Rng rng(seed);
  for (long s = 0; s < samples; ++s) {
    const double a = 1e6 * rng.uniform();
    const double b = 1e6 * rng.uniform();
    for (int k = 1; k <= 5; ++k) {
      const double lhs = a * b * std::pow(log_plus(a * b), k);
      const double rhs =
          std::pow(2.0, k - 1) * (std::pow(k / std::exp(1.0), k) + 1.0) * b * b +
          std::pow(2.0, 3 * (k - 1)) * a * a * std::pow(log_plus(a), 2 * k);
      r.min_margin = std::min(r.min_margin, rhs - lhs);
      if (lhs > rhs * (1.0 + 1e-12)) ++r.violations;
    }
    ++r.samples;
  }
  r.pass = r.violations == 0;
  return r;
}

// Discrete shadow of the transport energy identity: the quadratic form
// sum_i m_i bdot_i . H_i^+ bdot_i next to -sum_i m_i bdot_i . U_i, with H^+
// the PSD pseudo-inverse. Reported side by side; the Hessian estimator noise
// precludes a pass/fail threshold.
struct EnergyPair {
  double quadratic = 0.0;
  double flux = 0.0;
};

namespace detail {

inline Mat3 psd_pseudo_inverse(const Mat3& h) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (h + h.transpose()));
  const double cutoff = 1e-10 * std::max(1e-300, es.eigenvalues().maxCoeff());
  Vec3 inv = Vec3::Zero();
  for (int i = 0; i < 3; ++i)
    if (es.eigenvalues()(i) > cutoff) inv(i) = 1.0 / es.eigenvalues()(i);
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

inline EnergyPair energy_identity_monitor(const RecoverySnapshot& snap) {
  EnergyPair p;
  for (std::size_t i = 0; i < snap.positions.size(); ++i) {
    if (!snap.diagram.nonempty[i]) continue;
    const Vec3& bd = snap.bdot[i];
    const Vec3 u = j_apply(snap.positions[i] - snap.diagram.barycenters[i]);
    p.quadratic += snap.masses[i] *
                   bd.dot(detail::psd_pseudo_inverse(snap.fields[i].hessian) * bd);
    p.flux -= snap.masses[i] * bd.dot(u);
  }
  return p;
}

// One per-step row of the run report.
struct StepDiagnostics {
  double t = 0.0;
  double velocity_bound_margin = 0.0;
  double vertical_drift = 0.0;
  double ot_residual = 0.0;
  double min_cell_volume = 0.0;
  double energy = 0.0;
  double loglog_bdot_k1 = 0.0, loglog_bdot_k2 = 0.0;
  double loglog_hess_k1 = 0.0, loglog_hess_k2 = 0.0;
  double energy_quadratic = 0.0, energy_flux = 0.0;
};

struct DiagnosticsReport {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  double dt = 0.0;
  std::string scheme;
  std::vector<StepDiagnostics> steps;
  InequalityCheck inequality;
};

// Post-processing pass over a trajectory: per-step invariant margins plus the
// reconstruction-based monitors where a snapshot is available.
inline DiagnosticsReport build_diagnostics(const ConvexDomain& domain,
                                           const Trajectory& traj,
                                           const std::vector<double>& masses,
                                           std::uint64_t seed,
                                           bool with_recovery = true) {
  DiagnosticsReport rep;
  rep.seed = seed;
  rep.n = masses.size();
  rep.dt = traj.dt;
  rep.scheme = to_string(traj.scheme);
  for (std::size_t k = 0; k < traj.records.size(); ++k) {
    const StateRecord& rec = traj.records[k];
    StepDiagnostics d;
    d.t = rec.t;
    d.velocity_bound_margin = rec.velocity_bound_margin;
    d.vertical_drift = rec.vertical_drift;
    d.ot_residual = rec.residual;
    d.min_cell_volume = rec.min_volume;
    d.energy = rec.energy;
    if (with_recovery && traj.records.size() >= 2) {
      const RecoverySnapshot snap = build_snapshot(domain, traj, masses, k);
      const LogLMonitor mon = loglog_monitor(snap);
      d.loglog_bdot_k1 = mon.bdot_k1;
      d.loglog_bdot_k2 = mon.bdot_k2;
      d.loglog_hess_k1 = mon.hess_k1;
      d.loglog_hess_k2 = mon.hess_k2;
      const EnergyPair ep = energy_identity_monitor(snap);
      d.energy_quadratic = ep.quadratic;
      d.energy_flux = ep.flux;
    }
    rep.steps.push_back(d);
  }
  return rep;
}

}  // namespace sg
