#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sg/errors.hpp"
#include "sg/linalg.hpp"

namespace sg {

// Relative tolerance for on-plane classification and vertex merging.
inline constexpr double kPlaneTol = 1e-12;

struct HalfSpace {
  Vec3 normal;   // unit
  double offset; // {x : normal . x <= offset}

  HalfSpace(const Vec3& n, double c) {
    const double len = n.norm();
    if (len < 1e-300) throw GeometryError("half-space with zero normal");
    normal = n / len;
    offset = c / len;
  }

  double signed_dist(const Vec3& x) const { return normal.dot(x) - offset; }
};

// One facet of a convex polytope: supporting plane, an outward-oriented
// vertex loop, and the id of whatever produced it (>= 0: bisector of that
// particle index, < 0: domain facet).
struct Face {
  Vec3 normal;
  double offset;
  int source;
  std::vector<Vec3> verts;

  double area() const {
    if (verts.size() < 3) return 0.0;
    Vec3 s = Vec3::Zero();
    for (std::size_t j = 1; j + 1 < verts.size(); ++j)
      s += (verts[j] - verts[0]).cross(verts[j + 1] - verts[0]);
    return 0.5 * s.dot(normal);
  }
};

class ConvexPolytope {
 public:
  std::vector<Face> faces;

  bool empty() const { return faces.empty(); }

  double coordinate_scale() const {
    double m = 1.0;
    for (const auto& f : faces)
      for (const auto& v : f.verts) m = std::max(m, v.lpNorm<Eigen::Infinity>());
    return m;
  }

  std::vector<Vec3> vertices() const {
    std::vector<Vec3> out;
    const double tol = kPlaneTol * coordinate_scale();
    for (const auto& f : faces)
      for (const auto& v : f.verts) {
        bool dup = false;
        for (const auto& w : out)
          if ((v - w).lpNorm<Eigen::Infinity>() <= tol) { dup = true; break; }
        if (!dup) out.push_back(v);
      }
    return out;
  }

  // Signed volume via tetrahedra fanned from the global origin; exact for a
  // closed outward-oriented surface.
  double volume() const {
    double v6 = 0.0;
    for (const auto& f : faces)
      for (std::size_t j = 1; j + 1 < f.verts.size(); ++j)
        v6 += f.verts[0].dot(f.verts[j].cross(f.verts[j + 1]));
    return v6 / 6.0;
  }

  Vec3 barycenter() const {
    if (empty()) throw GeometryError("barycenter of empty polytope");
    double v6 = 0.0;
    Vec3 c = Vec3::Zero();
    for (const auto& f : faces)
      for (std::size_t j = 1; j + 1 < f.verts.size(); ++j) {
        const Vec3 &a = f.verts[0], &b = f.verts[j], &d = f.verts[j + 1];
        const double w = a.dot(b.cross(d));
        v6 += w;
        c += w * (a + b + d); // tet centroid (0+a+b+d)/4, factored below
      }
    if (v6 <= 0.0) throw GeometryError("barycenter of degenerate polytope");
    return c / (4.0 * v6);
  }

  double facet_area(int source) const {
    double a = 0.0;
    for (const auto& f : faces)
      if (f.source == source) a += f.area();
    return a;
  }

  double facet_area(const HalfSpace& h) const {
    const double tol = 1e-9 * (1.0 + std::abs(h.offset));
    double a = 0.0;
    for (const auto& f : faces)
      if (f.normal.dot(h.normal) > 1.0 - 1e-9 && std::abs(f.offset - h.offset) <= tol)
        a += f.area();
    return a;
  }

  double max_dist_from(const Vec3& p) const {
    double r = 0.0;
    for (const auto& f : faces)
      for (const auto& v : f.verts) r = std::max(r, (v - p).norm());
    return r;
  }

  bool contains(const Vec3& x, double tol) const {
    for (const auto& f : faces)
      if (f.normal.dot(x) - f.offset > tol) return false;
    return true;
  }

  // Intersection with a half-space. May return an empty polytope. The cut
  // introduces one new facet tagged with `source`.
  [[nodiscard]] ConvexPolytope clipped(const HalfSpace& h, int source) const {
    const double tol = kPlaneTol * coordinate_scale();

    double dmin = std::numeric_limits<double>::infinity();
    double dmax = -dmin;
    for (const auto& f : faces)
      for (const auto& v : f.verts) {
        const double d = h.signed_dist(v);
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
      }
    if (dmax <= tol) return *this;                 // plane does not cut
    if (dmin >= -tol) return ConvexPolytope{};     // nothing kept

    ConvexPolytope out;
    bool coplanar_kept = false;
    std::vector<Vec3> cap;
    const auto push_cap = [&](const Vec3& p) {
      for (const auto& q : cap)
        if ((p - q).lpNorm<Eigen::Infinity>() <= tol) return;
      cap.push_back(p);
    };

    for (const auto& f : faces) {
      Face nf{f.normal, f.offset, f.source, {}};
      const std::size_t n = f.verts.size();
      for (std::size_t i = 0; i < n; ++i) {
        const Vec3& a = f.verts[i];
        const Vec3& b = f.verts[(i + 1) % n];
        const double da = h.signed_dist(a);
        const double db = h.signed_dist(b);
        if (da <= tol) nf.verts.push_back(a);
        if ((da < -tol && db > tol) || (da > tol && db < -tol)) {
          const double t = da / (da - db);
          nf.verts.push_back(a + t * (b - a));
        }
      }
      if (nf.verts.size() < 3) continue;
      if (f.normal.dot(h.normal) > 1.0 - 1e-9 && std::abs(f.offset - h.offset) <= tol * 2)
        coplanar_kept = true;
      for (const auto& v : nf.verts)
        if (std::abs(h.signed_dist(v)) <= 2.0 * tol) push_cap(v);
      out.faces.push_back(std::move(nf));
    }

    if (!coplanar_kept && cap.size() >= 3) {
      // Order the cap loop counterclockwise around the cut normal.
      Vec3 c = Vec3::Zero();
      for (const auto& p : cap) c += p;
      c /= static_cast<double>(cap.size());
      Vec3 u = h.normal.unitOrthogonal();
      Vec3 w = h.normal.cross(u);
      std::sort(cap.begin(), cap.end(), [&](const Vec3& p, const Vec3& q) {
        return std::atan2(w.dot(p - c), u.dot(p - c)) <
               std::atan2(w.dot(q - c), u.dot(q - c));
      });
      Face cf{h.normal, h.offset, source, std::move(cap)};
      if (cf.area() > tol * tol) out.faces.push_back(std::move(cf));
    }
    if (out.faces.size() < 4) return ConvexPolytope{}; // degenerate sliver
    return out;
  }
};

// Axis-aligned box with outward-oriented faces; domain facet sources -1..-6.
inline ConvexPolytope make_box_polytope(const Vec3& center, const Vec3& half) {
  if (half.minCoeff() <= 0.0) throw GeometryError("box with nonpositive half-width");
  ConvexPolytope p;
  int src = -1;
  for (int axis = 0; axis < 3; ++axis)
    for (int sign = -1; sign <= 1; sign += 2) {
      Vec3 n = Vec3::Zero();
      n[axis] = sign;
      Vec3 u = Vec3::Zero(), v = Vec3::Zero();
      u[(axis + 1) % 3] = 1.0;
      v[(axis + 2) % 3] = 1.0;
      if (sign < 0) std::swap(u, v); // keep (u, v, n) right-handed
      const Vec3 fc = center + sign * half[axis] * Vec3::Unit(axis);
      const Vec3 hu = half[(sign < 0) ? (axis + 2) % 3 : (axis + 1) % 3] * u;
      const Vec3 hv = half[(sign < 0) ? (axis + 1) % 3 : (axis + 2) % 3] * v;
      Face f{n, n.dot(fc), src--, {fc - hu - hv, fc + hu - hv, fc + hu + hv, fc - hu + hv}};
      p.faces.push_back(std::move(f));
    }
  return p;
}

// Intersection of half-spaces, seeded by a large box so unboundedness can be
// detected: any surviving seed facet means the intersection is unbounded.
inline ConvexPolytope make_halfspace_polytope(const std::vector<HalfSpace>& hs,
                                              double seed_halfwidth = 1e4) {
  constexpr int kSeedBase = -1000000;
  ConvexPolytope p = make_box_polytope(Vec3::Zero(), Vec3::Constant(seed_halfwidth));
  for (auto& f : p.faces) f.source += kSeedBase;
  int src = -1;
  for (const auto& h : hs) {
    p = p.clipped(h, src--);
    if (p.empty()) throw GeometryError("empty half-space intersection");
  }
  for (const auto& f : p.faces)
    if (f.source <= kSeedBase)
      throw GeometryError("unbounded half-space intersection");
  return p;
}

// Quasi-uniform facet directions (Fibonacci sphere).
inline std::vector<Vec3> fibonacci_directions(int count) {
  std::vector<Vec3> dirs;
  dirs.reserve(count);
  const double ga = M_PI * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < count; ++k) {
    const double z = 1.0 - (2.0 * k + 1.0) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = ga * k;
    dirs.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return dirs;
}

inline ConvexPolytope make_ball_polytope(const Vec3& center, double radius,
                                         int facet_count = 320) {
  if (radius <= 0.0) throw GeometryError("ball with nonpositive radius");
  if (facet_count < 4) throw GeometryError("ball approximation needs >= 4 facets");
  ConvexPolytope p = make_box_polytope(center, Vec3::Constant(1.5 * radius));
  constexpr int kSeedBase = -1000000;
  for (auto& f : p.faces) f.source += kSeedBase;
  int src = -1;
  for (const auto& n : fibonacci_directions(facet_count)) {
    p = p.clipped(HalfSpace(n, n.dot(center) + radius), src--);
    if (p.empty()) throw GeometryError("degenerate ball approximation");
  }
  for (const auto& f : p.faces)
    if (f.source <= kSeedBase)
      throw GeometryError("ball approximation left seed facets");
  return p;
}

// The bounded convex target Omega with its normalized Lebesgue measure.
class ConvexDomain {
 public:
  ConvexPolytope shape;
  double volume = 0.0;   // raw Lebesgue volume
  double d_omega = 0.0;  // closure contained in B(0, d_omega)
  Vec3 centroid = Vec3::Zero();

  ConvexDomain() = default;

  explicit ConvexDomain(ConvexPolytope poly) : shape(std::move(poly)) {
    if (shape.empty()) throw GeometryError("empty domain");
    volume = shape.volume();
    if (!(volume > 0.0)) throw GeometryError("domain with nonpositive volume");
    centroid = shape.barycenter();
    double r = 0.0;
    for (const auto& v : shape.vertices()) r = std::max(r, v.norm());
    d_omega = r * (1.0 + 1e-12);
  }

  bool contains(const Vec3& x, double tol = 1e-10) const {
    return shape.contains(x, tol);
  }

  // Radius of the largest coordinate ball around c inside the domain.
  double inradius_at(const Vec3& c) const {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& f : shape.faces) r = std::min(r, f.offset - f.normal.dot(c));
    return r;
  }

  Vec3 bbox_lo() const {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    for (const auto& v : shape.vertices()) lo = lo.cwiseMin(v);
    return lo;
  }
  Vec3 bbox_hi() const {
    Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());
    for (const auto& v : shape.vertices()) hi = hi.cwiseMax(v);
    return hi;
  }
};

inline ConvexDomain make_box_domain(const Vec3& center, const Vec3& half) {
  return ConvexDomain(make_box_polytope(center, half));
}

inline ConvexDomain make_ball_domain(const Vec3& center, double radius,
                                     int facet_count = 320) {
  return ConvexDomain(make_ball_polytope(center, radius, facet_count));
}

inline ConvexDomain make_halfspace_domain(const std::vector<HalfSpace>& hs) {
  return ConvexDomain(make_halfspace_polytope(hs));
}

}  // namespace sg
