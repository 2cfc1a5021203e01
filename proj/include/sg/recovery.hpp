#pragma once

#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

#include "sg/dual_flow.hpp"
#include "sg/quadrature.hpp"
#include "sg/test_functions.hpp"

namespace sg {

// Per-cell Eulerian reconstruction: on Lag_i the transport target is y_i,
// bdot_i realizes d/dt grad P*_t there, H_i estimates the Hessian of P*_t,
// and the velocity is the affine field u(x) = bdot_i + H_i J(y_i - x).
struct CellField {
  Vec3 target = Vec3::Zero();
  Vec3 bdot = Vec3::Zero();
  Mat3 hessian = Mat3::Identity();
  bool low_confidence = false;

  Vec3 u(const Vec3& x) const { return bdot + hessian * j_apply(target - x); }
  double div_u() const { return -(hessian * coriolis()).trace(); }
  Vec3 mean_u(const Vec3& cell_barycenter) const {
    return bdot + hessian * j_apply(target - cell_barycenter);
  }
};

// Central finite difference of cell barycenters: d/dt grad P*_t evaluated at
// the particles; one-sided at the trajectory endpoints.
inline std::vector<Vec3> dt_grad_pstar(const Trajectory& traj, std::size_t k) {
  const auto& recs = traj.records;
  if (recs.size() < 2) throw NumericalError("trajectory too short for bdot");
  const std::size_t n = recs[k].barycenters.size();
  for (const auto& r : recs)
    if (r.barycenters.size() != n)
      throw NumericalError("particle count changed along trajectory");
  std::vector<Vec3> bdot(n);
  const auto diff = [&](std::size_t a, std::size_t b) {
    const double dt = recs[b].t - recs[a].t;
    for (std::size_t i = 0; i < n; ++i)
      bdot[i] = (recs[b].barycenters[i] - recs[a].barycenters[i]) / dt;
  };
  if (k == 0) diff(0, 1);
  else if (k + 1 == recs.size()) diff(k - 1, k);
  else diff(k - 1, k + 1);
  return bdot;
}

namespace detail {

inline Mat3 clamp_psd(const Mat3& h) {
  const Mat3 sym = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Mat3> es(sym);
  Vec3 ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

// Facet-area weighted least squares b_j - b_i ~ H (y_j - y_i), symmetrized
// and eigenvalue-clamped to PSD.
inline Mat3 fit_hessian_ls(const std::vector<Vec3>& dy,
                           const std::vector<Vec3>& db,
                           const std::vector<double>& w, bool* ok = nullptr) {
  Mat3 m1 = Mat3::Zero(), m2 = Mat3::Zero();
  for (std::size_t k = 0; k < dy.size(); ++k) {
    m1 += w[k] * db[k] * dy[k].transpose();
    m2 += w[k] * dy[k] * dy[k].transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(m2);
  const double lo = es.eigenvalues().minCoeff();
  if (dy.size() < 3 || lo <= 1e-12 * std::max(1e-300, es.eigenvalues().maxCoeff())) {
    if (ok) *ok = false;
    return Mat3::Identity();
  }
  if (ok) *ok = true;
  return detail::clamp_psd(m1 * m2.inverse());
}

// Hessian estimate for one Laguerre cell; isolated cells fall back to a
// flagged scalar matrix (cell-size over position-spread scale).
inline CellField fit_hessian(const LaguerreDiagram& diagram,
                             const std::vector<Vec3>& positions,
                             const std::vector<Vec3>& bdot, double domain_volume,
                             int i) {
  CellField f;
  f.target = positions[i];
  f.bdot = bdot.empty() ? Vec3::Zero() : bdot[i];
  std::vector<Vec3> dy, db;
  std::vector<double> w;
  for (const auto& nb : diagram.neighbors[i]) {
    if (!diagram.nonempty[nb.j]) continue;
    dy.push_back(positions[nb.j] - positions[i]);
    db.push_back(diagram.barycenters[nb.j] - diagram.barycenters[i]);
    w.push_back(nb.area);
  }
  bool ok = false;
  Mat3 h = fit_hessian_ls(dy, db, w, &ok);
  if (!ok) {
    const auto verts = diagram.cells[i].vertices();
    double diam = 0.0;
    for (std::size_t a = 0; a < verts.size(); ++a)
      for (std::size_t b = a + 1; b < verts.size(); ++b)
        diam = std::max(diam, (verts[a] - verts[b]).norm());
    const double scale =
        std::cbrt(std::max(1e-300, diagram.volumes[i] * domain_volume)) /
        std::max(diam, 1e-300);
    h = scale * Mat3::Identity();
    f.low_confidence = true;
  }
  f.hessian = h;
  return f;
}

// A fully reconstructed time slice: rebuilt diagram plus per-cell fields.
struct RecoverySnapshot {
  double t = 0.0;
  std::vector<Vec3> positions;
  std::vector<double> masses;
  DualPotentials potentials;
  LaguerreDiagram diagram;
  std::vector<CellField> fields;
  std::vector<Vec3> bdot;
};

inline RecoverySnapshot build_snapshot(const ConvexDomain& domain,
                                       const Trajectory& traj,
                                       const std::vector<double>& masses,
                                       std::size_t k) {
  const StateRecord& rec = traj.records.at(k);
  RecoverySnapshot snap;
  snap.t = rec.t;
  snap.positions = rec.positions;
  snap.masses = masses;
  snap.potentials = DualPotentials{rec.psi};
  WeightedPointCloud cloud{rec.positions, masses};
  snap.diagram = build_laguerre(domain, cloud, snap.potentials);
  snap.bdot = dt_grad_pstar(traj, k);
  snap.fields.resize(rec.positions.size());
  for (std::size_t i = 0; i < rec.positions.size(); ++i)
    if (snap.diagram.nonempty[i])
      snap.fields[i] = fit_hessian(snap.diagram, snap.positions, snap.bdot,
                                   domain.volume, static_cast<int>(i));
  return snap;
}

// Pointwise Eulerian evaluators of one snapshot: velocity, geostrophic wind,
// transported density m (third target coordinate, constant per cell) and the
// pressure pair (P, p).
struct EulerianSnapshot {
  const ConvexDomain* domain = nullptr;
  const RecoverySnapshot* snap = nullptr;

  int cell_at(const Vec3& x) const {
    WeightedPointCloud cloud{snap->positions, snap->masses};
    return transport_forward(*domain, cloud, snap->potentials, x);
  }

  Vec3 u(const Vec3& x) const { return snap->fields[cell_at(x)].u(x); }
  Vec3 geostrophic_wind(const Vec3& x) const {
    return j_apply(snap->positions[cell_at(x)] - x);
  }
  double density_m(const Vec3& x) const { return snap->positions[cell_at(x)].z(); }
  std::pair<double, double> pressure(const Vec3& x) const {
    WeightedPointCloud cloud{snap->positions, snap->masses};
    return potential_values(cloud, snap->potentials, x);
  }
};

// Weak incompressibility residual (divergence form): for each cell,
// boundary flux of psi u . n minus div(u) times the psi volume integral.
// Interior facet contributions from exactly matching affine fields cancel
// at the shared quadrature points.
inline double residual_sg2(const ConvexDomain& domain,
                           const RecoverySnapshot& snap, const SpaceBump& psi,
                           const QuadSpec& quad = {}) {
  if (!psi.supported_inside(domain))
    throw ConfigError("test function support leaves the domain");
  double acc = 0.0;
  for (std::size_t i = 0; i < snap.fields.size(); ++i) {
    if (!snap.diagram.nonempty[i]) continue;
    const CellField& f = snap.fields[i];
    acc += integrate_boundary(
        snap.diagram.cells[i],
        [&](const Vec3& x, const Vec3& n, int) { return psi.value(x) * f.u(x).dot(n); },
        quad);
    acc -= f.div_u() *
           integrate_cell(snap.diagram.cells[i],
                          [&](const Vec3& x) { return psi.value(x); }, quad);
  }
  return acc;
}

namespace detail {

// One time slice of the momentum identity's volume terms, as a vector:
//   sum_i [ y_i Q_i(dt phi) + y_i (int_cell u_i) . avg(grad phi)
//           + J(y_i - b_i) Q_i(phi) ].
// Integrals of (affine factor) x (test factor) use exact affine moments
// against the quadrature average of the test factor.
inline Vec3 sg1_slice(const ConvexDomain& domain, const RecoverySnapshot& snap,
                      const SpaceTimeTest& phi, double t, const QuadSpec& quad) {
  Vec3 acc = Vec3::Zero();
  for (std::size_t i = 0; i < snap.fields.size(); ++i) {
    if (!snap.diagram.nonempty[i]) continue;
    const ConvexPolytope& cell = snap.diagram.cells[i];
    const Vec3& y = snap.positions[i];
    const Vec3& b = snap.diagram.barycenters[i];
    const double vol_raw = snap.diagram.volumes[i] * domain.volume;
    const CellField& f = snap.fields[i];

    const double q_dt =
        integrate_cell(cell, [&](const Vec3& x) { return phi.dt(x, t); }, quad);
    const Vec3 q_grad = integrate_cell(
        cell, [&](const Vec3& x) { return Vec3(phi.gradient(x, t)); }, quad);
    const double q_val =
        integrate_cell(cell, [&](const Vec3& x) { return phi.value(x, t); }, quad);

    acc += y * q_dt;
    acc += y * ((vol_raw * f.mean_u(b)).dot(q_grad / vol_raw));
    acc += j_apply(y - b) * q_val;
  }
  return acc;
}

}  // namespace detail

// Momentum identity residual over a trajectory window: trapezoidal time
// integration of the volume terms plus the initial term at the window start.
inline double residual_sg1(const ConvexDomain& domain,
                           const std::vector<RecoverySnapshot>& snaps,
                           const SpaceTimeTest& phi, const QuadSpec& quad = {}) {
  if (snaps.size() < 2) throw NumericalError("sg1 needs at least two snapshots");
  if (!phi.space.supported_inside(domain))
    throw ConfigError("test function support leaves the domain");
  Vec3 acc = Vec3::Zero();
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    double w;
    if (k == 0) w = 0.5 * (snaps[1].t - snaps[0].t);
    else if (k + 1 == snaps.size()) w = 0.5 * (snaps[k].t - snaps[k - 1].t);
    else w = 0.5 * (snaps[k + 1].t - snaps[k - 1].t);
    acc += w * detail::sg1_slice(domain, snaps[k], phi, snaps[k].t, quad);
  }
  // initial term at the window start
  const RecoverySnapshot& s0 = snaps.front();
  for (std::size_t i = 0; i < s0.fields.size(); ++i) {
    if (!s0.diagram.nonempty[i]) continue;
    acc += s0.positions[i] *
           integrate_cell(s0.diagram.cells[i],
                          [&](const Vec3& x) { return phi.value(x, s0.t); }, quad);
  }
  return acc.norm();
}

struct ChangeOfVariablesResult {
  Vec3 dual_side = Vec3::Zero();
  Vec3 euler_side = Vec3::Zero();
  double gap = 0.0;
};

// Pulled-back-test-function identity: sum_i m_i y_i phi(b_i) against
// sum_i y_i int_{Lag_i} phi dL_Omega; equal in the continuum, the discrete
// gap measures the barycenter-vs-cell quadrature mismatch.
inline ChangeOfVariablesResult change_of_variables_check(
    const ConvexDomain& domain, const RecoverySnapshot& snap,
    const SpaceBump& phi, const QuadSpec& quad = {}) {
  ChangeOfVariablesResult r;
  for (std::size_t i = 0; i < snap.positions.size(); ++i) {
    if (!snap.diagram.nonempty[i]) continue;
    r.dual_side +=
        snap.masses[i] * snap.positions[i] * phi.value(snap.diagram.barycenters[i]);
    r.euler_side += snap.positions[i] *
                    integrate_cell(snap.diagram.cells[i],
                                   [&](const Vec3& x) { return phi.value(x); },
                                   quad) /
                    domain.volume;
  }
  r.gap = (r.dual_side - r.euler_side).norm();
  return r;
}

// Discrete L log L monitor values for one snapshot (k = 1, 2): finite by
// construction, reported without a pass/fail threshold.
struct LogLMonitor {
  double bdot_k1 = 0.0, bdot_k2 = 0.0;
  double hess_k1 = 0.0, hess_k2 = 0.0;
};

inline LogLMonitor loglog_monitor(const RecoverySnapshot& snap) {
  const auto logp = [](double x) { return x > 1.0 ? std::log(x) : 0.0; };
  LogLMonitor m;
  for (std::size_t i = 0; i < snap.positions.size(); ++i) {
    if (!snap.diagram.nonempty[i]) continue;
    const double mass = snap.masses[i];
    const double nb = snap.bdot[i].norm();
    const double nh = snap.fields[i].hessian.norm();
    m.bdot_k1 += mass * nb * logp(nb);
    m.bdot_k2 += mass * nb * logp(nb) * logp(nb);
    m.hess_k1 += mass * nh * std::pow(logp(nh), 2.0);
    m.hess_k2 += mass * nh * std::pow(logp(nh), 4.0);
  }
  return m;
}

}  // namespace sg
