#pragma once

#include <functional>
#include <vector>

#include "sg/geometry.hpp"

namespace sg {

struct QuadSpec {
  int degree = 3;  // polynomial exactness of the tetrahedral rule (1, 2 or 3)
};

namespace detail {

struct BaryPoint {
  double l0, l1, l2, l3, w;
};

inline const std::vector<BaryPoint>& tet_rule(int degree) {
  static const std::vector<BaryPoint> d1 = {{0.25, 0.25, 0.25, 0.25, 1.0}};
  static const std::vector<BaryPoint> d2 = [] {
    const double a = 0.5854101966249685, b = 0.1381966011250105;
    std::vector<BaryPoint> r;
    r.push_back({a, b, b, b, 0.25});
    r.push_back({b, a, b, b, 0.25});
    r.push_back({b, b, a, b, 0.25});
    r.push_back({b, b, b, a, 0.25});
    return r;
  }();
  static const std::vector<BaryPoint> d3 = [] {
    std::vector<BaryPoint> r;
    r.push_back({0.25, 0.25, 0.25, 0.25, -0.8});
    const double a = 0.5, b = 1.0 / 6.0, w = 0.45;
    r.push_back({a, b, b, b, w});
    r.push_back({b, a, b, b, w});
    r.push_back({b, b, a, b, w});
    r.push_back({b, b, b, a, w});
    return r;
  }();
  if (degree <= 1) return d1;
  if (degree == 2) return d2;
  return d3;
}

// Symmetric (permutation-invariant) triangle rules, so that the two sides of
// a shared facet quadrate at identical points.
struct TriPoint {
  double l0, l1, l2, w;
};

inline const std::vector<TriPoint>& tri_rule(int degree) {
  static const std::vector<TriPoint> d1 = {{1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0}};
  static const std::vector<TriPoint> d3 = [] {
    std::vector<TriPoint> r;
    r.push_back({1.0 / 3, 1.0 / 3, 1.0 / 3, -9.0 / 16.0});
    const double a = 0.6, b = 0.2, w = 25.0 / 48.0;
    r.push_back({a, b, b, w});
    r.push_back({b, a, b, w});
    r.push_back({b, b, a, w});
    return r;
  }();
  return degree <= 1 ? d1 : d3;
}

}  // namespace detail

// Integral of f over a bounded convex cell: tetrahedra (g, c, a, b) with g
// the cell barycenter, c the vertex mean of each face and (a, b) its edges.
// The edge fan is invariant to how the clipping ordered faces and vertex
// loops, so rebuilding an identical cell reproduces the value to rounding.
template <typename F>
auto integrate_cell(const ConvexPolytope& cell, const F& f,
                    const QuadSpec& quad = {}) -> decltype(f(Vec3())) {
  using R = decltype(f(Vec3()));
  R acc = R(0.0 * f(Vec3::Zero()));
  if (cell.empty()) return acc;
  const Vec3 g = cell.barycenter();
  const auto& rule = detail::tet_rule(quad.degree);
  for (const auto& face : cell.faces) {
    const std::size_t n = face.verts.size();
    if (n < 3) continue;
    Vec3 c = Vec3::Zero();
    for (const auto& v : face.verts) c += v;
    c /= static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
      const Vec3& a = face.verts[j];
      const Vec3& b = face.verts[(j + 1) % n];
      const double vol = (c - g).dot((a - g).cross(b - g)) / 6.0;
      if (vol == 0.0) continue;
      for (const auto& q : rule)
        acc = acc + (vol * q.w) * f(q.l0 * g + q.l1 * c + q.l2 * a + q.l3 * b);
    }
  }
  return acc;
}

// Surface integral of f (scalar or vector valued in x, given also the facet
// normal and source id) over the boundary of a cell.
template <typename F>
double integrate_boundary(const ConvexPolytope& cell, const F& f,
                          const QuadSpec& quad = {}) {
  double acc = 0.0;
  const auto& rule = detail::tri_rule(quad.degree);
  for (const auto& face : cell.faces) {
    Vec3 c = Vec3::Zero();
    for (const auto& v : face.verts) c += v;
    c /= static_cast<double>(face.verts.size());
    const std::size_t n = face.verts.size();
    for (std::size_t j = 0; j < n; ++j) {
      const Vec3 &a = face.verts[j], &b = face.verts[(j + 1) % n];
      const double area = 0.5 * (a - c).cross(b - c).dot(face.normal);
      if (area == 0.0) continue;
      for (const auto& q : rule)
        acc += area * q.w * f(q.l0 * c + q.l1 * a + q.l2 * b, face.normal, face.source);
    }
  }
  return acc;
}

}  // namespace sg
