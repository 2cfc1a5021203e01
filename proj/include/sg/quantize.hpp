#pragma once

#include <cmath>
#include <vector>

#include "sg/cloud.hpp"
#include "sg/density.hpp"
#include "sg/ot_solver.hpp"

namespace sg {

struct QuantizeSettings {
  int max_iterations = 5000;
  double tol = 1e-6;          // on max movement, relative to support diameter
  bool grid_init = false;     // k^3 lattice start (uniform box densities)
  double ot_tol = 1e-9;
  double relaxation = 1.95;   // over-relaxation factor for the centroidal step
};

namespace detail {

inline WeightedPointCloud equal_mass_cloud(std::vector<Vec3> pos) {
  WeightedPointCloud cloud;
  cloud.masses.assign(pos.size(), 1.0 / static_cast<double>(pos.size()));
  cloud.positions = std::move(pos);
  return cloud;
}

// Centroidal relaxation against the exact geometry: over-relaxed fixed-point
// iteration y_i <- y_i + w (b_i - y_i) with b_i the equal-mass Laguerre
// barycenters. The fixed point has U = 0; plain Lloyd (w = 1) converges at a
// rate too close to 1 for desk-scale budgets.
inline WeightedPointCloud lloyd_geometric(const UniformDensity& spec,
                                          std::vector<Vec3> pos,
                                          const QuantizeSettings& st) {
  const ConvexDomain& dom = spec.domain();
  const double diam = (dom.bbox_hi() - dom.bbox_lo()).norm();
  WeightedPointCloud cloud = equal_mass_cloud(std::move(pos));
  OTSettings ot{st.ot_tol, 200};
  std::optional<DualPotentials> warm;
  for (int it = 0; it < st.max_iterations; ++it) {
    OTSolution sol = solve_weights(dom, cloud, ot, warm);
    warm = sol.potentials;
    double max_move = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const Vec3 d = sol.diagram.barycenters[i] - cloud.positions[i];
      max_move = std::max(max_move, d.norm());
      cloud.positions[i] += st.relaxation * d;
    }
    if (max_move < st.tol * diam) break;
  }
  cloud.check_invariants();
  return cloud;
}

// Sample-pool relaxation in the density's own metric for non-polytope
// densities: nearest-pool-point Lloyd with a fixed seeded pool.
inline WeightedPointCloud lloyd_pool(const Density& spec, std::vector<Vec3> pos,
                                     Rng& rng, const QuantizeSettings& st) {
  const int n = static_cast<int>(pos.size());
  const int pool_size = std::max(40 * n, 20000);
  std::vector<Vec3> pool(pool_size);
  for (auto& p : pool) p = spec.sample(rng);
  const double diam = 2.0 * spec.support_radius();

  for (int it = 0; it < st.max_iterations; ++it) {
    std::vector<Vec3> sum(n, Vec3::Zero());
    std::vector<int> cnt(n, 0);
    for (const auto& p : pool) {
      int best = 0;
      double bestd = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) {
        const double d = (p - pos[i]).squaredNorm();
        if (d < bestd) { bestd = d; best = i; }
      }
      sum[best] += p;
      ++cnt[best];
    }
    double mean_move = 0.0;
    for (int i = 0; i < n; ++i) {
      if (cnt[i] == 0) continue;
      const Vec3 c = sum[i] / cnt[i];
      mean_move += (c - pos[i]).norm();
      pos[i] = c;
    }
    mean_move /= n;
    if (mean_move < st.tol * diam) break;
  }
  WeightedPointCloud cloud = equal_mass_cloud(std::move(pos));
  cloud.check_invariants();
  return cloud;
}

}  // namespace detail

// Equal-mass quantization of a compactly supported density: seeded i.i.d.
// sampling followed by centroidal relaxation. Deterministic given the seed.
inline WeightedPointCloud quantize(const DensityPtr& spec, int n,
                                   std::uint64_t seed,
                                   const QuantizeSettings& st = {}) {
  if (n < 1) throw ConfigError("particle count must be >= 1");
  if (!spec->compactly_supported())
    throw ConfigError("quantize needs a compactly supported density "
                      "(apply mollify_truncate first)");
  Rng rng(seed);

  std::vector<Vec3> pos;
  const auto* uni = dynamic_cast<const UniformDensity*>(spec.get());
  if (st.grid_init) {
    if (!uni) throw ConfigError("grid init needs a uniform-on-domain density");
    const int k = static_cast<int>(std::lround(std::cbrt(double(n))));
    if (k * k * k != n) throw ConfigError("grid init needs a cubic particle count");
    const Vec3 lo = uni->domain().bbox_lo(), hi = uni->domain().bbox_hi();
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        for (int c = 0; c < k; ++c)
          pos.push_back(lo + ((hi - lo).array() *
                              Vec3((a + 0.5) / k, (b + 0.5) / k, (c + 0.5) / k)
                                  .array())
                                 .matrix());
  } else {
    pos.reserve(n);
    for (int i = 0; i < n; ++i) pos.push_back(spec->sample(rng));
  }

  try {
    if (uni) return detail::lloyd_geometric(*uni, std::move(pos), st);
    return detail::lloyd_pool(*spec, std::move(pos), rng, st);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("quantization error: ") + e.what());
  }
}

}  // namespace sg
