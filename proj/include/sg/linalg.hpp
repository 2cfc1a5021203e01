#pragma once

#include <Eigen/Dense>

namespace sg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// The fixed horizontal rotation J: J e3 = 0, J^2 = -Id on the horizontal
// plane, J^T = -J.
inline const Mat3& coriolis() {
  static const Mat3 j = [] {
    Mat3 m;
    m << 0, -1, 0,
         1,  0, 0,
         0,  0, 0;
    return m;
  }();
  return j;
}

inline Vec3 j_apply(const Vec3& v) { return Vec3(-v.y(), v.x(), 0.0); }

inline double horizontal_norm(const Vec3& v) {
  return std::sqrt(v.x() * v.x() + v.y() * v.y());
}

}  // namespace sg
