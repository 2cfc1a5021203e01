#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sg/csv.hpp"
#include "sg/errors.hpp"
#include "sg/linalg.hpp"

namespace sg {

// Particle approximation of the dual density: positions y_i and probability
// masses m_i summing to 1.
struct WeightedPointCloud {
  std::vector<Vec3> positions;
  std::vector<double> masses;

  std::size_t size() const { return positions.size(); }

  double total_mass() const {
    double s = 0.0;
    for (double m : masses) s += m;
    return s;
  }

  double diameter() const {
    double d = 0.0;
    for (std::size_t i = 0; i < positions.size(); ++i)
      for (std::size_t j = i + 1; j < positions.size(); ++j)
        d = std::max(d, (positions[i] - positions[j]).norm());
    return d;
  }

  double min_pairwise_distance() const {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < positions.size(); ++i)
      for (std::size_t j = i + 1; j < positions.size(); ++j)
        d = std::min(d, (positions[i] - positions[j]).norm());
    return d;
  }

  void check_invariants() const {
    if (positions.size() != masses.size() || positions.empty())
      throw NumericalError("malformed point cloud");
    for (double m : masses)
      if (!(m > 0.0)) throw NumericalError("nonpositive particle mass");
    if (std::abs(total_mass() - 1.0) > 1e-12)
      throw NumericalError("cloud mass not normalized");
    if (positions.size() > 1 &&
        min_pairwise_distance() <= 1e-9 * diameter())
      throw NumericalError("duplicate particle positions");
  }
};

inline void write_cloud_csv(const WeightedPointCloud& cloud,
                            const std::string& path) {
  CsvWriter w(path);
  w.header({"id", "y1", "y2", "y3", "mass"});
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    w.field(static_cast<long long>(i));
    w.field(cloud.positions[i].x());
    w.field(cloud.positions[i].y());
    w.field(cloud.positions[i].z());
    w.field(cloud.masses[i]);
    w.end_row();
  }
}

inline WeightedPointCloud read_cloud_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int c1 = t.column("y1"), c2 = t.column("y2"), c3 = t.column("y3");
  const int cm = t.column("mass");
  WeightedPointCloud cloud;
  for (const auto& row : t.rows) {
    cloud.positions.emplace_back(parse_double(row[c1]), parse_double(row[c2]),
                                 parse_double(row[c3]));
    cloud.masses.push_back(parse_double(row[cm]));
  }
  cloud.check_invariants();
  return cloud;
}

}  // namespace sg
