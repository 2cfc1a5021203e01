#include <catch_amalgamated.hpp>

#include "sg/ot_solver.hpp"
#include "sg/rng.hpp"

using namespace sg;

namespace {

ConvexDomain unit_cube() {
  return make_box_domain(Vec3::Zero(), Vec3::Constant(0.5));
}

WeightedPointCloud random_cloud(int n, std::uint64_t seed, bool equal_masses) {
  Rng rng(seed);
  WeightedPointCloud cloud;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    cloud.positions.push_back(
        rng.uniform_in_box(Vec3::Constant(-0.45), Vec3::Constant(0.45)));
    const double m = equal_masses ? 1.0 : 0.2 + rng.uniform();
    cloud.masses.push_back(m);
    total += m;
  }
  for (double& m : cloud.masses) m /= total;
  return cloud;
}

}  // namespace

TEST_CASE("single particle owns the whole domain") {
  const ConvexDomain dom = unit_cube();
  WeightedPointCloud cloud{{Vec3(0.2, -0.1, 0.3)}, {1.0}};
  const OTSolution sol = solve_weights(dom, cloud);
  CHECK(sol.diagram.volumes[0] == Catch::Approx(1.0).epsilon(1e-12));
  CHECK((sol.diagram.barycenters[0] - dom.centroid).norm() < 1e-12);
  CHECK(sol.iterations == 0);
}

TEST_CASE("two symmetric particles split the cube in half") {
  const ConvexDomain dom = unit_cube();
  WeightedPointCloud cloud{{Vec3(-0.2, 0.0, 0.0), Vec3(0.2, 0.0, 0.0)},
                           {0.5, 0.5}};
  const OTSolution sol = solve_weights(dom, cloud, OTSettings{1e-12, 50});
  CHECK(sol.diagram.volumes[0] == Catch::Approx(0.5).margin(1e-11));
  CHECK(sol.diagram.volumes[1] == Catch::Approx(0.5).margin(1e-11));
  CHECK(sol.diagram.barycenters[0].x() == Catch::Approx(-0.25).margin(1e-9));
  CHECK(sol.diagram.barycenters[1].x() == Catch::Approx(0.25).margin(1e-9));
  CHECK(std::abs(sol.potentials.psi[0] - sol.potentials.psi[1]) < 1e-11);
}

TEST_CASE("cell volumes match prescribed masses") {
  const ConvexDomain dom = unit_cube();
  const WeightedPointCloud cloud = random_cloud(30, 4, false);
  const OTSolution sol = solve_weights(dom, cloud, OTSettings{1e-10, 100});
  CHECK(sol.residual <= 1e-10);
  double total = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK(sol.diagram.volumes[i] == Catch::Approx(cloud.masses[i]).margin(1e-10));
    total += sol.diagram.volumes[i];
  }
  CHECK(total == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("cell volumes agree with a Monte-Carlo transport oracle") {
  const ConvexDomain dom = unit_cube();
  const WeightedPointCloud cloud = random_cloud(12, 9, false);
  const OTSolution sol = solve_weights(dom, cloud, OTSettings{1e-10, 100});

  // classify uniform samples by the transport assignment, independently of
  // the clipped geometry
  Rng rng(123);
  const long samples = 150000;
  std::vector<long> hits(cloud.size(), 0);
  for (long s = 0; s < samples; ++s) {
    const Vec3 x =
        rng.uniform_in_box(Vec3::Constant(-0.5), Vec3::Constant(0.5));
    ++hits[transport_forward(dom, cloud, sol.potentials, x)];
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double p = static_cast<double>(hits[i]) / samples;
    const double se = std::sqrt(p * (1.0 - p) / samples);
    CHECK(std::abs(p - sol.diagram.volumes[i]) <= 4.0 * se + 1e-6);
  }
}

TEST_CASE("transport assignment is pointwise monotone across cells") {
  const ConvexDomain dom = unit_cube();
  const WeightedPointCloud cloud = random_cloud(25, 21, true);
  const OTSolution sol = solve_weights(dom, cloud, OTSettings{1e-9, 100});
  Rng rng(77);
  for (int s = 0; s < 2000; ++s) {
    const Vec3 x =
        rng.uniform_in_box(Vec3::Constant(-0.5), Vec3::Constant(0.5));
    const int i = transport_forward(dom, cloud, sol.potentials, x);
    const double own =
        (x - cloud.positions[i]).squaredNorm() - sol.potentials.psi[i];
    for (std::size_t j = 0; j < cloud.size(); ++j) {
      const double other =
          (x - cloud.positions[j]).squaredNorm() - sol.potentials.psi[j];
      CHECK(other - own >= -1e-12);
    }
  }
}

TEST_CASE("diagram geometry is consistent with the assignment rule") {
  const ConvexDomain dom = unit_cube();
  const WeightedPointCloud cloud = random_cloud(15, 33, true);
  const OTSolution sol = solve_weights(dom, cloud, OTSettings{1e-9, 100});
  Rng rng(8);
  for (int s = 0; s < 500; ++s) {
    const Vec3 x =
        rng.uniform_in_box(Vec3::Constant(-0.499), Vec3::Constant(0.499));
    const int i = transport_forward(dom, cloud, sol.potentials, x);
    CHECK(sol.diagram.cells[i].contains(x, 1e-9));
  }
  // neighbor areas are symmetric: a_ij == a_ji
  for (std::size_t i = 0; i < cloud.size(); ++i)
    for (const auto& nb : sol.diagram.neighbors[i]) {
      bool found = false;
      for (const auto& back : sol.diagram.neighbors[nb.j])
        if (back.j == static_cast<int>(i)) {
          CHECK(back.area == Catch::Approx(nb.area).margin(1e-10));
          found = true;
        }
      CHECK(found);
    }
}

TEST_CASE("a converged warm start is returned bit-for-bit") {
  const ConvexDomain dom = unit_cube();
  const WeightedPointCloud cloud = random_cloud(20, 55, true);
  const OTSolution first = solve_weights(dom, cloud, OTSettings{1e-9, 100});
  const OTSolution again =
      solve_weights(dom, cloud, OTSettings{1e-9, 100}, first.potentials);
  CHECK(again.iterations == 0);
  for (std::size_t i = 0; i < cloud.size(); ++i)
    CHECK(again.potentials.psi[i] == first.potentials.psi[i]);
}

TEST_CASE("cold start survives a cloud far outside the domain") {
  const ConvexDomain dom = unit_cube();
  Rng rng(2);
  WeightedPointCloud cloud;
  for (int i = 0; i < 16; ++i) {
    cloud.positions.push_back(Vec3(5.0, -3.0, 2.0) +
                              rng.uniform_in_ball(Vec3::Zero(), 2.0));
    cloud.masses.push_back(1.0 / 16);
  }
  const OTSolution sol = solve_weights(dom, cloud, OTSettings{1e-9, 100});
  CHECK(sol.residual <= 1e-9);
  CHECK(sol.diagram.min_volume() > 0.0);
}

TEST_CASE("iteration cap raises a solver error") {
  const ConvexDomain dom = unit_cube();
  const WeightedPointCloud cloud = random_cloud(40, 13, false);
  CHECK_THROWS_AS(solve_weights(dom, cloud, OTSettings{1e-12, 1}), SolveError);
}
