#include <catch_amalgamated.hpp>

#include "sg/diagnostics.hpp"
#include "sg/quantize.hpp"

using namespace sg;

TEST_CASE("positive-part logarithm") {
  CHECK(log_plus(0.5) == 0.0);
  CHECK(log_plus(1.0) == 0.0);
  CHECK(log_plus(std::exp(2.0)) == Catch::Approx(2.0));
}

TEST_CASE("scalar inequality holds on seeded samples") {
  const InequalityCheck r = check_numeric_inequality(3000, 2024);
  CHECK(r.pass);
  CHECK(r.violations == 0);
  CHECK(r.samples == 3000);
  CHECK(r.min_margin >= 0.0);
  CHECK(std::isfinite(r.min_margin));
  CHECK_THROWS_AS(check_numeric_inequality(0, 1), ConfigError);
}

TEST_CASE("inequality margin at hand-picked points") {
  // direct evaluation of both sides, independent of the sampling loop
  for (double a : {0.5, 10.0, 1e3, 9.9e5}) {
    for (double b : {0.5, 10.0, 1e3, 9.9e5}) {
      for (int k = 1; k <= 5; ++k) {
        const double lhs = a * b * std::pow(log_plus(a * b), k);
        const double rhs =
            std::pow(2.0, k - 1) * (std::pow(k / std::exp(1.0), k) + 1.0) * b * b +
            std::pow(2.0, 3 * (k - 1)) * a * a * std::pow(log_plus(a), 2 * k);
        CHECK(lhs <= rhs * (1.0 + 1e-12));
      }
    }
  }
}

TEST_CASE("pseudo-inverse inverts on the range and kills the kernel") {
  Mat3 h;
  h << 2.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.0;  // rank 2 PSD
  const Mat3 hp = detail::psd_pseudo_inverse(h);
  CHECK((h * hp * h - h).norm() < 1e-12);
  CHECK((hp * h * hp - hp).norm() < 1e-12);
  CHECK((hp * Vec3(0, 0, 1)).norm() < 1e-12);

  Mat3 spd;
  spd << 3.0, 0.2, 0.1, 0.2, 2.0, 0.0, 0.1, 0.0, 1.0;
  CHECK((detail::psd_pseudo_inverse(spd) - spd.inverse()).norm() < 1e-10);
}

TEST_CASE("energy monitor vanishes on a steady configuration") {
  const ConvexDomain dom = make_box_domain(Vec3::Zero(), Vec3::Constant(0.5));
  auto domp = std::make_shared<ConvexDomain>(dom);
  auto rho = std::static_pointer_cast<const Density>(
      std::make_shared<UniformDensity>(domp));
  QuantizeSettings st;
  st.grid_init = true;
  const WeightedPointCloud cloud = quantize(rho, 27, 1, st);
  DualState init = make_consistent(dom, cloud, 0.0, 1e-10);
  const Trajectory traj = run_flow(dom, init, 0.01, 0.03, Scheme::Rk2);
  const EnergyPair p =
      energy_identity_monitor(build_snapshot(dom, traj, cloud.masses, 1));
  CHECK(std::abs(p.quadratic) < 1e-12);
  CHECK(std::abs(p.flux) < 1e-12);
}

TEST_CASE("diagnostics report collects per-step rows") {
  const ConvexDomain dom = make_box_domain(Vec3::Zero(), Vec3::Constant(0.5));
  WeightedPointCloud cloud{{Vec3(-0.2, 0.1, 0.0), Vec3(0.2, -0.05, 0.1)},
                           {0.5, 0.5}};
  DualState init = make_consistent(dom, cloud, 0.0, 1e-9);
  const Trajectory traj = run_flow(dom, init, 0.01, 0.04, Scheme::Rk2);
  const DiagnosticsReport rep =
      build_diagnostics(dom, traj, cloud.masses, 42, true);
  CHECK(rep.seed == 42);
  CHECK(rep.n == 2);
  CHECK(rep.dt == 0.01);
  CHECK(rep.scheme == "rk2");
  REQUIRE(rep.steps.size() == traj.records.size());
  for (const auto& s : rep.steps) {
    CHECK(s.velocity_bound_margin < 0.0);
    CHECK(s.vertical_drift <= 1e-12);
    CHECK(s.min_cell_volume > 0.0);
    CHECK(std::isfinite(s.energy_quadratic));
    CHECK(std::isfinite(s.energy_flux));
  }
  CHECK(rep.inequality.samples == 0);  // not part of the trajectory pass
}
