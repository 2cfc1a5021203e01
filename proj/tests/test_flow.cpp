#include <catch_amalgamated.hpp>

#include "sg/dual_flow.hpp"

using namespace sg;

namespace {

DualState single_particle_state(const ConvexDomain& dom, const Vec3& y0) {
  WeightedPointCloud cloud{{y0}, {1.0}};
  return make_consistent(dom, std::move(cloud), 0.0, 1e-10);
}

}  // namespace

TEST_CASE("scheme names round-trip") {
  for (Scheme s : {Scheme::Euler, Scheme::Rk2, Scheme::Rk4})
    CHECK(scheme_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(scheme_from_string("heun"), ConfigError);
}

TEST_CASE("one particle in a centered ball rotates on the exact circle") {
  // barycenter stays at the center, so ydot = J y: horizontal rotation
  const ConvexDomain dom = make_ball_domain(Vec3::Zero(), 1.0, 160);
  const Vec3 y0(0.3, 0.0, 0.2);
  DualState st = single_particle_state(dom, y0);
  const double dt = 0.01, T = 0.5;
  const Trajectory traj = run_flow(dom, st, dt, T, Scheme::Rk4);
  const Vec3 y = traj.records.back().positions[0];
  const Vec3 exact(0.3 * std::cos(T), 0.3 * std::sin(T), 0.2);
  // the facet approximation of the ball shifts the barycenter by ~1e-7
  CHECK((y - exact).norm() < 1e-6);

  for (const auto& rec : traj.records) {
    CHECK(rec.vertical_drift == 0.0);  // J annihilates e3 exactly
    CHECK(rec.velocity_bound_margin <= 1e-12);
    CHECK(std::abs(rec.energy - traj.records.front().energy) < 1e-10);
  }
}

TEST_CASE("trajectory covers T exactly with a shortened final step") {
  const ConvexDomain dom = make_box_domain(Vec3::Zero(), Vec3::Constant(0.5));
  DualState st = single_particle_state(dom, Vec3(0.1, 0.0, 0.0));
  const Trajectory traj = run_flow(dom, st, 0.02, 0.05, Scheme::Rk2);
  REQUIRE(traj.records.size() == 4);
  CHECK(traj.records[0].t == Catch::Approx(0.0));
  CHECK(traj.records[1].t == Catch::Approx(0.02));
  CHECK(traj.records[2].t == Catch::Approx(0.04));
  CHECK(traj.records[3].t == Catch::Approx(0.05).margin(1e-12));

  // an exact multiple of dt gets no extra step
  const Trajectory even = run_flow(dom, st, 0.02, 0.06, Scheme::Rk2);
  CHECK(even.records.size() == 4);
  CHECK(even.records.back().t == Catch::Approx(0.06).margin(1e-12));
}

TEST_CASE("nonpositive dt is rejected") {
  const ConvexDomain dom = make_box_domain(Vec3::Zero(), Vec3::Constant(0.5));
  DualState st = single_particle_state(dom, Vec3(0.1, 0.0, 0.0));
  CHECK_THROWS_AS(step(dom, st, 0.0, Scheme::Euler), ConfigError);
  CHECK_THROWS_AS(step(dom, st, -0.1, Scheme::Rk2), ConfigError);
}

TEST_CASE("discrete velocity and energy evaluate the definitions") {
  const ConvexDomain dom = make_box_domain(Vec3::Zero(), Vec3::Constant(0.5));
  DualState st = single_particle_state(dom, Vec3(0.2, -0.1, 0.4));
  const std::vector<Vec3> u = velocity(st);
  const Vec3 d = st.cloud.positions[0] - st.diagram.barycenters[0];
  CHECK((u[0] - j_apply(d)).norm() < 1e-15);
  CHECK(u[0].z() == 0.0);
  // single cell = the whole unit cube: second moment about the generator
  // splits as |d|^2 plus the cube's per-axis variance 1/12, three axes
  CHECK(geostrophic_energy(dom, st) ==
        Catch::Approx(0.5 * (d.squaredNorm() + 3.0 / 12.0)).epsilon(1e-12));
}

TEST_CASE("integration order: rk2 beats euler against an rk4 reference") {
  const ConvexDomain dom = make_ball_domain(Vec3::Zero(), 1.0, 80);
  DualState st = single_particle_state(dom, Vec3(0.4, 0.0, 0.0));
  const double T = 0.4;
  const auto final_pos = [&](Scheme s, double dt) {
    return run_flow(dom, st, dt, T, s).records.back().positions[0];
  };
  const Vec3 ref = final_pos(Scheme::Rk4, 0.002);
  const double e_euler = (final_pos(Scheme::Euler, 0.02) - ref).norm();
  const double e_rk2 = (final_pos(Scheme::Rk2, 0.02) - ref).norm();
  const double e_rk2_half = (final_pos(Scheme::Rk2, 0.01) - ref).norm();
  CHECK(e_rk2 < 0.2 * e_euler);
  const double order = std::log2(e_rk2 / e_rk2_half);
  CHECK(order > 1.7);
}

TEST_CASE("state records carry the per-step diagnostics") {
  const ConvexDomain dom = make_box_domain(Vec3::Zero(), Vec3::Constant(0.5));
  WeightedPointCloud cloud{{Vec3(-0.2, 0.1, 0.0), Vec3(0.25, -0.05, 0.1)},
                           {0.5, 0.5}};
  DualState st = make_consistent(dom, std::move(cloud), 0.0, 1e-9);
  const Trajectory traj = run_flow(dom, st, 0.01, 0.05, Scheme::Rk2);
  for (const auto& rec : traj.records) {
    CHECK(rec.residual <= 1e-8);
    CHECK(rec.min_volume > 0.0);
    CHECK(rec.velocity_bound_margin < 0.0);
    CHECK(rec.positions.size() == 2);
    CHECK(rec.psi.size() == 2);
  }
  // callback sees every accepted state in order
  std::vector<std::size_t> seen;
  run_flow(dom, st, 0.01, 0.03, Scheme::Rk2, FlowSettings{},
           [&](std::size_t k, const StateRecord&, const DualState&) {
             seen.push_back(k);
           });
  CHECK(seen == std::vector<std::size_t>{0, 1, 2, 3});
}
