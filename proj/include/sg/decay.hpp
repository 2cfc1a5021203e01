#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "sg/density.hpp"

namespace sg {

// Closed-form velocity field with its divergence and the growth constants of
// the decay estimates: |div v| <= n_div and |v(x,t)| <= a |x| + d.
struct SyntheticField {
  std::string name;
  std::function<Vec3(const Vec3&, double)> v;
  std::function<double(const Vec3&, double)> div_v;
  double n_div = 0.0;
  double a = 0.0;
  double d = 0.0;
  double support_radius = std::numeric_limits<double>::infinity();

  bool compact() const { return std::isfinite(support_radius); }
};

inline SyntheticField zero_field() {
  SyntheticField f;
  f.name = "zero";
  f.v = [](const Vec3&, double) { return Vec3(Vec3::Zero()); };
  f.div_v = [](const Vec3&, double) { return 0.0; };
  f.support_radius = 0.0;
  return f;
}

inline SyntheticField dilation_field() {
  SyntheticField f;
  f.name = "dilation";
  f.v = [](const Vec3& x, double) { return x; };
  f.div_v = [](const Vec3&, double) { return 3.0; };
  f.n_div = 3.0;
  f.a = 1.0;
  return f;
}

inline SyntheticField rotation_field() {
  SyntheticField f;
  f.name = "rotation";
  f.v = [](const Vec3& x, double) { return j_apply(x); };
  f.div_v = [](const Vec3&, double) { return 0.0; };
  f.a = 1.0;
  return f;
}

// Divergence-free smooth vortex g(|x|^2/R^2) Jx supported in B(0,R):
// div(g Jx) = grad g . Jx = 0 since grad g is radial.
inline SyntheticField vortex_field(double radius) {
  SyntheticField f;
  f.name = "vortex";
  const double r2 = radius * radius;
  f.v = [r2](const Vec3& x, double) {
    return Vec3(bump_profile(x.squaredNorm() / r2) * j_apply(x));
  };
  f.div_v = [](const Vec3&, double) { return 0.0; };
  f.a = 1.0;
  f.support_radius = radius;
  return f;
}

inline SyntheticField affine_field(const Mat3& b, const Vec3& c) {
  SyntheticField f;
  f.name = "affine";
  f.v = [b, c](const Vec3& x, double) { return Vec3(b * x + c); };
  f.div_v = [tr = b.trace()](const Vec3&, double) { return tr; };
  f.n_div = std::abs(b.trace());
  f.a = Eigen::JacobiSVD<Mat3>(b).singularValues()(0);
  f.d = c.norm();
  return f;
}

// Sampled verification of the declared field constants on a space-time grid.
inline bool check_field_constants(const SyntheticField& f, double radius,
                                  double t_max, int grid = 12,
                                  double slack = 1e-9) {
  for (int it = 0; it <= grid; ++it) {
    const double t = t_max * it / grid;
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j)
        for (int k = 0; k < grid; ++k) {
          const Vec3 x =
              radius * (2.0 * Vec3((i + 0.5) / grid, (j + 0.5) / grid,
                                   (k + 0.5) / grid) -
                        Vec3::Ones());
          if (std::abs(f.div_v(x, t)) > f.n_div + slack) return false;
          if (f.v(x, t).norm() > f.a * x.norm() + f.d + slack) return false;
        }
  }
  return true;
}

// (e^{at} - 1)/a, continuous at a = 0.
inline double growth_factor(double a, double t) {
  return std::abs(a * t) < 1e-8 ? t * (1.0 + 0.5 * a * t) : std::expm1(a * t) / a;
}

struct FlowEvaluation {
  Vec3 forward = Vec3::Zero();    // X_t(x)
  Vec3 inverse = Vec3::Zero();    // X_t^{-1}(x)
  double div_integral = 0.0;      // int_0^t div v_s along the forward path
  double round_trip_error = 0.0;  // |X_t^{-1}(X_t(x)) - x|
};

namespace detail {

// Dormand-Prince 5(4) on the augmented state (position, running divergence
// integral); adaptive in the position error.
struct FlowPoint {
  Vec3 x;
  double w;
};

inline FlowPoint integrate_characteristic(const SyntheticField& f, Vec3 x0,
                                          double t0, double t1, double tol) {
  static const double c[7] = {0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0};
  static const double a[7][6] = {
      {},
      {0.2},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
      {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
  static const double b5[7] = {35.0 / 384,     0, 500.0 / 1113, 125.0 / 192,
                               -2187.0 / 6784, 11.0 / 84,       0};
  static const double b4[7] = {5179.0 / 57600,    0,           7571.0 / 16695,
                               393.0 / 640,       -92097.0 / 339200,
                               187.0 / 2100,      1.0 / 40};

  FlowPoint s{x0, 0.0};
  double t = t0;
  const double dir = (t1 >= t0) ? 1.0 : -1.0;
  double h = dir * std::max(1e-6, std::abs(t1 - t0) / 64.0);
  const double scale = std::max(1.0, x0.norm());

  while (dir * (t1 - t) > 1e-15 * std::max(1.0, std::abs(t1))) {
    if (dir * (t + h - t1) > 0.0) h = t1 - t;
    Vec3 kx[7];
    double kw[7];
    for (int i = 0; i < 7; ++i) {
      Vec3 xi = s.x;
      double wi = s.w;
      for (int j = 0; j < i; ++j) {
        xi += h * a[i][j] * kx[j];
        wi += h * a[i][j] * kw[j];
      }
      kx[i] = f.v(xi, t + c[i] * h);
      kw[i] = f.div_v(xi, t + c[i] * h);
    }
    Vec3 x5 = s.x, x4 = s.x;
    double w5 = s.w;
    for (int i = 0; i < 7; ++i) {
      x5 += h * b5[i] * kx[i];
      x4 += h * b4[i] * kx[i];
      w5 += h * b5[i] * kw[i];
    }
    const double err = (x5 - x4).norm() / scale;
    if (err <= tol) {
      s.x = x5;
      s.w = w5;
      t += h;
    }
    const double shrink =
        0.9 * std::pow(tol / std::max(err, 1e-300), 0.2);
    h *= std::clamp(shrink, 0.2, 5.0);
    if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t1 - t0)))
      throw NumericalError("characteristic integration: step-size underflow");
  }
  return s;
}

}  // namespace detail

inline FlowEvaluation flow(const SyntheticField& f, const Vec3& x, double t,
                           double tol = 1e-10) {
  if (!(tol > 0.0)) throw ConfigError("flow tolerance must be positive");
  FlowEvaluation ev;
  const auto fwd = detail::integrate_characteristic(f, x, 0.0, t, tol);
  ev.forward = fwd.x;
  ev.div_integral = fwd.w;
  ev.inverse = detail::integrate_characteristic(f, x, t, 0.0, tol).x;
  ev.round_trip_error =
      (detail::integrate_characteristic(f, ev.forward, t, 0.0, tol).x - x).norm();
  return ev;
}

// Exact transported density by characteristics:
//   rho_t(x) = rho_0(X_t^{-1}(x)) exp(-int_0^t div v_s ds along that curve).
inline double density_along_flow(const SyntheticField& f, const Density& rho0,
                                 const Vec3& x, double t, double tol = 1e-10) {
  const auto back = detail::integrate_characteristic(f, x, t, 0.0, tol);
  return rho0(back.x) * std::exp(back.w);
}

enum class DecayBound { UpperSup, LowerInf, Tail, Sandwich };

inline std::string to_string(DecayBound b) {
  switch (b) {
    case DecayBound::UpperSup: return "sup-growth";
    case DecayBound::LowerInf: return "inf-decay";
    case DecayBound::Tail: return "tail";
    default: return "sandwich";
  }
}

struct BoundCheck {
  DecayBound bound;
  double t = 0.0;
  std::string region;
  int samples = 0;
  double max_violation = 0.0;  // relative; <= 0 means satisfied with margin
  bool pass = false;
};

struct DecaySampleSpec {
  int samples = 10000;
  std::uint64_t seed = 20240901;
  double lower_region_r = 1.0;  // |x| <= r region of the lower bound
  double flow_tol = 1e-10;
};

namespace detail {

inline double rel_excess(double value, double bound) {
  return (value - bound) / std::max(std::abs(bound), 1e-300);
}

}  // namespace detail

// Checks the requested decay bounds of the transported density on seeded
// samples of each bound's stated region; pass means max relative violation
// is at most 1e-9.
inline std::vector<BoundCheck> verify_lemma33(
    const SyntheticField& f, const Density& rho0,
    const std::vector<DecayBound>& bounds, const std::vector<double>& times,
    const DecaySampleSpec& spec = {}) {
  for (DecayBound b : bounds) {
    if (b == DecayBound::Tail && !(rho0.tail_K() > 4.0))
      throw ConfigError("tail bound needs a declared power tail");
    if (b == DecayBound::Sandwich &&
        (!f.compact() || !rho0.compactly_supported() ||
         !(rho0.core_lower() > 0.0)))
      throw ConfigError(
          "sandwich bound needs a compact field and a compactly supported "
          "density with positive core bounds");
  }

  std::vector<BoundCheck> out;
  const double n_div = f.n_div, a = f.a, d = f.d;
  char buf[128];

  for (double t : times) {
    Rng rng(spec.seed);
    for (DecayBound b : bounds) {
      BoundCheck chk;
      chk.bound = b;
      chk.t = t;
      chk.samples = spec.samples;
      double viol = -std::numeric_limits<double>::infinity();

      switch (b) {
        case DecayBound::UpperSup: {
          // rho_t <= e^{Nt} ||rho_0||_inf on all of space
          const double cap = std::exp(n_div * t) * rho0.sup_bound();
          const double r_max =
              std::isfinite(rho0.support_radius())
                  ? (rho0.support_radius() * std::exp(a * t) +
                     d * growth_factor(a, t)) *
                        1.2
                  : 8.0 * std::exp(a * t);
          for (int i = 0; i < spec.samples; ++i) {
            const Vec3 x = rng.uniform_in_ball(Vec3::Zero(), r_max);
            viol = std::max(viol, detail::rel_excess(
                                      density_along_flow(f, rho0, x, t,
                                                         spec.flow_tol),
                                      cap));
          }
          std::snprintf(buf, sizeof buf, "B(0, %.3g)", r_max);
          chk.region = buf;
          break;
        }
        case DecayBound::LowerInf: {
          // rho_t >= e^{-Nt} inf over B(0, r e^{At} + D(e^{At}-1)/A) of rho_0,
          // for |x| <= r
          const double r = spec.lower_region_r;
          const double r0 = r * std::exp(a * t) + d * growth_factor(a, t);
          double inf0 = std::numeric_limits<double>::infinity();
          for (int i = 0; i < spec.samples; ++i) {
            const double rr = r0 * (i + 1.0) / spec.samples;
            inf0 = std::min(inf0, rho0(rr * rng.uniform_dir()));
          }
          const double floor = std::exp(-n_div * t) * inf0;
          for (int i = 0; i < spec.samples; ++i) {
            const Vec3 x = rng.uniform_in_ball(Vec3::Zero(), r);
            viol = std::max(viol, detail::rel_excess(
                                      floor, density_along_flow(
                                                 f, rho0, x, t, spec.flow_tol)));
          }
          std::snprintf(buf, sizeof buf, "B(0, %.3g)", r);
          chk.region = buf;
          break;
        }
        case DecayBound::Tail: {
          // rho_t(x) <= d0 2^K e^{(N+AK)t} / |x|^K for
          // |x| >= 2M e^{At} + 2D(e^{At}-1)/A
          const double k = rho0.tail_K();
          const double d0 = rho0.tail_c0();
          const double r_lo = 2.0 * rho0.tail_M() * std::exp(a * t) +
                              2.0 * d * growth_factor(a, t);
          const double coeff =
              d0 * std::pow(2.0, k) * std::exp((n_div + a * k) * t);
          for (int i = 0; i < spec.samples; ++i) {
            const double rr = r_lo * (1.0 + 9.0 * rng.uniform());
            const Vec3 x = rr * rng.uniform_dir();
            viol = std::max(
                viol, detail::rel_excess(
                          density_along_flow(f, rho0, x, t, spec.flow_tol),
                          coeff / std::pow(rr, k)));
          }
          std::snprintf(buf, sizeof buf, "|x| >= %.3g", r_lo);
          chk.region = buf;
          break;
        }
        case DecayBound::Sandwich: {
          // lambda e^{-tN} <= rho_t <= Lambda e^{tN} on the support ball
          const double r = std::max(f.support_radius, rho0.support_radius());
          const double lo = rho0.core_lower() * std::exp(-n_div * t);
          const double hi = rho0.core_upper() * std::exp(n_div * t);
          for (int i = 0; i < spec.samples; ++i) {
            const Vec3 x = rng.uniform_in_ball(Vec3::Zero(), r * (1.0 - 1e-9));
            const double v = density_along_flow(f, rho0, x, t, spec.flow_tol);
            viol = std::max(viol, detail::rel_excess(v, hi));
            viol = std::max(viol, detail::rel_excess(lo, v));
          }
          std::snprintf(buf, sizeof buf, "B(0, %.3g)", r);
          chk.region = buf;
          break;
        }
      }
      chk.max_violation = viol;
      chk.pass = viol <= 1e-9;
      out.push_back(std::move(chk));
    }
  }
  return out;
}

}  // namespace sg
