#pragma once

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <optional>
#include <vector>

#include "sg/laguerre.hpp"

namespace sg {

struct OTSolution {
  DualPotentials potentials;
  LaguerreDiagram diagram;
  double residual = 0.0;  // max_i |v_i - m_i|
  int iterations = 0;
};

struct OTSettings {
  double tol = 1e-8;
  int max_iterations = 100;
};

namespace detail {

inline double mass_residual(const LaguerreDiagram& dg,
                            const std::vector<double>& m) {
  double r = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    r = std::max(r, std::abs(dg.volumes[i] - m[i]));
  return r;
}

// Cold start: psi_i = (1 - s) |y_i - c|^2 with s in (0, 1] shrinking the
// cloud into the domain. The shrunk site z_i = c + s (y_i - c) then lies in
// cell i with slack s |y_i - y_j|^2 against every competitor, so no initial
// cell is empty.
inline DualPotentials shrink_start(const ConvexDomain& domain,
                                   const WeightedPointCloud& cloud) {
  const Vec3 c = domain.centroid;
  double rmax = 0.0;
  for (const auto& y : cloud.positions) rmax = std::max(rmax, (y - c).norm());
  const double rin = domain.inradius_at(c);
  const double s = std::min(1.0, 0.95 * rin / std::max(rmax, 1e-300));
  DualPotentials psi;
  psi.psi.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    psi.psi[i] = (1.0 - s) * (cloud.positions[i] - c).squaredNorm();
  psi.fix_gauge();
  return psi;
}

}  // namespace detail

// Damped Newton for F(psi)_i = v_i(psi) - m_i. The Jacobian is the graph
// Laplacian with weights a_ij / (2 |Omega| |y_i - y_j|); its kernel is the
// constant vector, so the linear solve pins one weight and the update is
// re-centered onto the gauge hyperplane sum(psi) = 0. Steps are halved until
// every cell volume stays above eps0 = min(min_i v_i(prev), min_i m_i)/2 and
// the residual decreases.
inline OTSolution solve_weights(const ConvexDomain& domain,
                                const WeightedPointCloud& cloud,
                                const OTSettings& settings = {},
                                std::optional<DualPotentials> warm_start = {}) {
  cloud.check_invariants();
  const int n = static_cast<int>(cloud.size());
  const auto sorted = sorted_neighbor_lists(cloud.positions);

  OTSolution sol;
  // a warm start is kept bit-for-bit: re-fixing the gauge would perturb an
  // already converged state and break checkpoint resume determinism
  sol.potentials =
      warm_start ? *warm_start : detail::shrink_start(domain, cloud);
  sol.diagram = build_laguerre(domain, cloud, sol.potentials, &sorted);

  if (sol.diagram.min_volume() <= 0.0) {
    // a warm start may have gone stale; fall back to the safe cold start
    sol.potentials = detail::shrink_start(domain, cloud);
    sol.diagram = build_laguerre(domain, cloud, sol.potentials, &sorted);
    if (sol.diagram.min_volume() <= 0.0)
      throw SolveError("initial Laguerre diagram has empty cells", 1.0);
  }
  sol.residual = detail::mass_residual(sol.diagram, cloud.masses);

  double min_mass = std::numeric_limits<double>::infinity();
  for (double m : cloud.masses) min_mass = std::min(min_mass, m);

  while (sol.residual > settings.tol) {
    if (sol.iterations >= settings.max_iterations)
      throw SolveError("semi-discrete OT Newton did not converge",
                       sol.residual);
    ++sol.iterations;

    if (n == 1) break;  // v = m = 1 identically

    // Assemble the reduced (n-1) x (n-1) SPD system, pinning index n-1.
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd rhs(n - 1);
    for (int i = 0; i < n - 1; ++i)
      rhs[i] = cloud.masses[i] - sol.diagram.volumes[i];
    for (int i = 0; i < n; ++i) {
      double diag = 0.0;
      for (const auto& nb : sol.diagram.neighbors[i]) {
        const double w = nb.area / (2.0 * domain.volume * nb.distance);
        diag += w;
        if (i < n - 1 && nb.j < n - 1)
          trips.emplace_back(i, nb.j, -w);
      }
      if (i < n - 1) trips.emplace_back(i, i, diag);
    }
    Eigen::SparseMatrix<double> H(n - 1, n - 1);
    H.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(H);
    if (ldlt.info() != Eigen::Success)
      throw SolveError("Newton Jacobian factorization failed", sol.residual);
    const Eigen::VectorXd delta = ldlt.solve(rhs);

    const double eps0 = 0.5 * std::min(sol.diagram.min_volume(), min_mass);
    double alpha = 1.0;
    bool accepted = false;
    for (int halvings = 0; halvings < 48; ++halvings, alpha *= 0.5) {
      DualPotentials trial = sol.potentials;
      for (int i = 0; i < n - 1; ++i) trial.psi[i] += alpha * delta[i];
      trial.fix_gauge();
      LaguerreDiagram dg = build_laguerre(domain, cloud, trial, &sorted);
      if (dg.min_volume() < eps0) continue;
      const double r = detail::mass_residual(dg, cloud.masses);
      if (r >= sol.residual) continue;
      sol.potentials = std::move(trial);
      sol.diagram = std::move(dg);
      sol.residual = r;
      accepted = true;
      break;
    }
    if (!accepted)
      throw SolveError("Newton damping stalled", sol.residual);
  }
  return sol;
}

}  // namespace sg
