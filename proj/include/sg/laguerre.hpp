#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "sg/cloud.hpp"
#include "sg/errors.hpp"
#include "sg/geometry.hpp"

namespace sg {

// Kantorovich weights psi_i, gauge-fixed to sum zero. The associated convex
// potential is P(x) = max_i (x . y_i - phi_i) with phi_i = (|y_i|^2 - psi_i)/2.
struct DualPotentials {
  std::vector<double> psi;

  static DualPotentials zeros(std::size_t n) {
    return DualPotentials{std::vector<double>(n, 0.0)};
  }

  void fix_gauge() {
    if (psi.empty()) return;
    const double mean = std::accumulate(psi.begin(), psi.end(), 0.0) / psi.size();
    for (double& p : psi) p -= mean;
  }
};

struct CellNeighbor {
  int j;
  double area;      // facet area a_ij
  double distance;  // |y_i - y_j|
};

// Power diagram of the cloud clipped to Omega: the discrete optimal map.
struct LaguerreDiagram {
  std::vector<ConvexPolytope> cells;
  std::vector<double> volumes;        // normalized by |Omega|
  std::vector<Vec3> barycenters;      // = y_i placeholder for empty cells
  std::vector<bool> nonempty;
  std::vector<std::vector<CellNeighbor>> neighbors;

  std::size_t size() const { return cells.size(); }

  double min_volume() const {
    double v = std::numeric_limits<double>::infinity();
    for (double x : volumes) v = std::min(v, x);
    return v;
  }
};

// Candidate bisectors for one site, nearest first.
inline std::vector<std::vector<std::pair<double, int>>> sorted_neighbor_lists(
    const std::vector<Vec3>& ys) {
  const int n = static_cast<int>(ys.size());
  std::vector<std::vector<std::pair<double, int>>> lists(n);
  for (int i = 0; i < n; ++i) {
    auto& l = lists[i];
    l.reserve(n - 1);
    for (int j = 0; j < n; ++j)
      if (j != i) l.emplace_back((ys[j] - ys[i]).norm(), j);
    std::sort(l.begin(), l.end());
  }
  return lists;
}

// Each cell is Omega cut by the bisector half-spaces
//   x . (y_j - y_i) <= (|y_j|^2 - |y_i|^2 + psi_i - psi_j) / 2.
// Bisectors are processed nearest-first with a security-radius early exit.
inline LaguerreDiagram build_laguerre(
    const ConvexDomain& domain, const WeightedPointCloud& cloud,
    const DualPotentials& psi,
    const std::vector<std::vector<std::pair<double, int>>>* sorted = nullptr) {
  const std::size_t n = cloud.size();
  if (psi.psi.size() != n) throw NumericalError("psi/cloud size mismatch");

  std::vector<std::vector<std::pair<double, int>>> local;
  if (!sorted) {
    local = sorted_neighbor_lists(cloud.positions);
    sorted = &local;
  }

  double psi_lo = 0.0, psi_hi = 0.0;
  for (double p : psi.psi) {
    psi_lo = std::min(psi_lo, p);
    psi_hi = std::max(psi_hi, p);
  }
  const double psi_spread = psi_hi - psi_lo;

  LaguerreDiagram dg;
  dg.cells.resize(n);
  dg.volumes.assign(n, 0.0);
  dg.barycenters.resize(n);
  dg.nonempty.assign(n, false);
  dg.neighbors.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& yi = cloud.positions[i];
    ConvexPolytope cell = domain.shape;
    double rad = cell.max_dist_from(yi);
    for (const auto& [d, j] : (*sorted)[i]) {
      if (d * d > psi_spread && (d * d - psi_spread) / (2.0 * d) > rad) break;
      const Vec3 diff = cloud.positions[j] - yi;
      const double tj =
          (d * d + psi.psi[i] - psi.psi[j]) / (2.0 * d);  // plane dist from y_i
      if (tj > rad) continue;
      cell = cell.clipped(HalfSpace(diff, diff.dot(yi) + tj * d), j);
      if (cell.empty()) break;
      rad = cell.max_dist_from(yi);
    }
    dg.cells[i] = std::move(cell);
    if (!dg.cells[i].empty()) {
      const double vol = dg.cells[i].volume();
      if (vol > 0.0) {
        dg.nonempty[i] = true;
        dg.volumes[i] = vol / domain.volume;
        dg.barycenters[i] = dg.cells[i].barycenter();
        for (const auto& f : dg.cells[i].faces)
          if (f.source >= 0) {
            const double a = f.area();
            if (a <= 0.0) continue;
            bool merged = false;
            for (auto& nb : dg.neighbors[i])
              if (nb.j == f.source) { nb.area += a; merged = true; break; }
            if (!merged)
              dg.neighbors[i].push_back(
                  {f.source, a, (cloud.positions[f.source] - yi).norm()});
          }
      }
    }
    if (!dg.nonempty[i]) dg.barycenters[i] = yi;
  }
  return dg;
}

// argmin_i |x - y_i|^2 - psi_i; ties broken by lowest index.
inline int transport_forward(const ConvexDomain& domain,
                             const WeightedPointCloud& cloud,
                             const DualPotentials& psi, const Vec3& x) {
  if (!domain.contains(x, 1e-10)) throw NumericalError("point outside domain");
  int best = 0;
  double bestv = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double v = (x - cloud.positions[i]).squaredNorm() - psi.psi[i];
    if (v < bestv) {
      bestv = v;
      best = static_cast<int>(i);
    }
  }
  return best;
}

// (P(x), p(x)) with the conjugate normalized so that P*(0) = 0: all phi_i are
// shifted by max_i(-phi_i).
inline std::pair<double, double> potential_values(
    const WeightedPointCloud& cloud, const DualPotentials& psi, const Vec3& x) {
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double phi = (cloud.positions[i].squaredNorm() - psi.psi[i]) / 2.0;
    shift = std::max(shift, -phi);
  }
  double P = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double phi = (cloud.positions[i].squaredNorm() - psi.psi[i]) / 2.0 + shift;
    P = std::max(P, x.dot(cloud.positions[i]) - phi);
  }
  const double p = P - 0.5 * (x.x() * x.x() + x.y() * x.y());
  return {P, p};
}

}  // namespace sg
