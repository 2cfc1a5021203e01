#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "sg/errors.hpp"
#include "sg/geometry.hpp"
#include "sg/rng.hpp"

namespace sg {

// Smooth standard bump profile on [0,1): b(0) = 1, vanishes at 1 with all
// derivatives.
inline double bump_profile(double s2) {
  if (s2 >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s2));
}

namespace detail {

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol, int depth = 24) {
  const double c = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fc = f(c);
  std::function<double(double, double, double, double, double, double, int)> rec =
      [&](double x0, double x2, double f0, double f1, double f2, double eps,
          int d) -> double {
    const double x1l = 0.5 * (x0 + 0.5 * (x0 + x2));
    const double x1r = 0.5 * (0.5 * (x0 + x2) + x2);
    const double fl = f(x1l), fr = f(x1r);
    const double h = x2 - x0;
    const double whole = h / 6.0 * (f0 + 4.0 * f1 + f2);
    const double left = h / 12.0 * (f0 + 4.0 * fl + f1);
    const double right = h / 12.0 * (f1 + 4.0 * fr + f2);
    if (d <= 0 || std::abs(left + right - whole) < 15.0 * eps)
      return left + right + (left + right - whole) / 15.0;
    const double xm = 0.5 * (x0 + x2);
    return rec(x0, xm, f0, fl, f1, eps * 0.5, d - 1) +
           rec(xm, x2, f1, fr, f2, eps * 0.5, d - 1);
  };
  return rec(a, b, fa, fc, fb, tol, depth);
}

}  // namespace detail

// Pointwise-evaluable probability density on R^3 with an exact seeded
// sampler. The carrier of the initial dual density and its regularizations.
class Density {
 public:
  virtual ~Density() = default;

  virtual double operator()(const Vec3& x) const = 0;
  virtual Vec3 sample(Rng& rng) const = 0;

  // Radius of a ball containing the support; infinity if unbounded.
  virtual double support_radius() const = 0;
  bool compactly_supported() const { return std::isfinite(support_radius()); }

  virtual bool radial() const { return false; }
  virtual double sup_bound() const = 0;

  // Tail data (hp:dec)-style: rho(x) <= tail_c0 / |x|^tail_K for |x| >= tail_M.
  // Negative tail_K means no declared tail.
  virtual double tail_c0() const { return -1.0; }
  virtual double tail_K() const { return -1.0; }
  virtual double tail_M() const { return 0.0; }

  // Declared core bounds (lambda, Lambda) if any; 0 means undeclared.
  virtual double core_lower() const { return 0.0; }
  virtual double core_upper() const { return 0.0; }
};

using DensityPtr = std::shared_ptr<const Density>;

// Normalized Lebesgue measure on a convex domain.
class UniformDensity final : public Density {
 public:
  explicit UniformDensity(std::shared_ptr<const ConvexDomain> dom)
      : dom_(std::move(dom)) {
    double r = 0.0;
    for (const auto& v : dom_->shape.vertices()) r = std::max(r, v.norm());
    radius_ = r;
    lo_ = dom_->bbox_lo();
    hi_ = dom_->bbox_hi();
  }

  double operator()(const Vec3& x) const override {
    return dom_->contains(x, 1e-12) ? 1.0 / dom_->volume : 0.0;
  }

  Vec3 sample(Rng& rng) const override {
    for (int k = 0; k < 100000; ++k) {
      const Vec3 x = rng.uniform_in_box(lo_, hi_);
      if (dom_->contains(x, 0.0)) return x;
    }
    throw NumericalError("uniform density rejection sampling failed");
  }

  double support_radius() const override { return radius_; }
  double sup_bound() const override { return 1.0 / dom_->volume; }
  double core_lower() const override { return 1.0 / dom_->volume; }
  double core_upper() const override { return 1.0 / dom_->volume; }

  const ConvexDomain& domain() const { return *dom_; }

 private:
  std::shared_ptr<const ConvexDomain> dom_;
  double radius_;
  Vec3 lo_, hi_;
};

class GaussianDensity final : public Density {
 public:
  GaussianDensity(const Vec3& center, double sigma) : c_(center), s_(sigma) {
    if (sigma <= 0.0) throw ConfigError("gaussian sigma must be positive");
  }

  double operator()(const Vec3& x) const override {
    const double q = (x - c_).squaredNorm() / (2.0 * s_ * s_);
    return std::exp(-q) / std::pow(2.0 * M_PI * s_ * s_, 1.5);
  }

  Vec3 sample(Rng& rng) const override { return c_ + s_ * rng.normal3(); }

  double support_radius() const override {
    return std::numeric_limits<double>::infinity();
  }
  bool radial() const override { return c_.norm() == 0.0; }
  double sup_bound() const override {
    return 1.0 / std::pow(2.0 * M_PI * s_ * s_, 1.5);
  }

 private:
  Vec3 c_;
  double s_;
};

// Radial density C (1 + (r/M)^2)^(-K/2): flat core of size M, power tail
// rho ~ C M^K / r^K. Satisfies rho(x) |x|^K <= C M^K for all x.
class PowerTailDensity final : public Density {
 public:
  PowerTailDensity(double c0, double K, double M, double core_lo, double core_hi)
      : c0_(c0), K_(K), M_(M), lam_(core_lo), Lam_(core_hi) {
    if (M <= 0.0) throw ConfigError("power-tail density needs M > 0");
    if (K <= 3.0) throw ConfigError("power-tail density not integrable for K <= 3");
    // normalize: mass = C * 4 pi M^3 * I with I = int s^2 (1+s^2)^(-K/2) ds
    const double S = 1e4;
    const double body = detail::adaptive_simpson(
        [K](double s) { return s * s * std::pow(1.0 + s * s, -K / 2.0); }, 0.0, S,
        1e-13);
    const double tail = std::pow(S, 3.0 - K) / (K - 3.0);
    C_ = 1.0 / (4.0 * M_PI * M * M * M * (body + tail));
    build_cdf();
  }

  double operator()(const Vec3& x) const override { return radial_value(x.norm()); }

  double radial_value(double r) const {
    const double s = r / M_;
    return C_ * std::pow(1.0 + s * s, -K_ / 2.0);
  }

  Vec3 sample(Rng& rng) const override {
    // inverse-CDF radial sampling on a precomputed table
    const double u = rng.uniform();
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    std::size_t i = std::min<std::size_t>(cdf_.size() - 1,
                                          std::max<std::ptrdiff_t>(1, it - cdf_.begin()));
    const double t = (u - cdf_[i - 1]) / std::max(1e-300, cdf_[i] - cdf_[i - 1]);
    const double r = grid_[i - 1] + t * (grid_[i] - grid_[i - 1]);
    return r * rng.uniform_dir();
  }

  double support_radius() const override {
    return std::numeric_limits<double>::infinity();
  }
  bool radial() const override { return true; }
  double sup_bound() const override { return C_; }
  double tail_c0() const override { return c0_; }
  double tail_K() const override { return K_; }
  double tail_M() const override { return M_; }
  double core_lower() const override { return lam_; }
  double core_upper() const override { return Lam_; }

  // sup over |x| >= M of rho |x|^K (attained in the limit)
  double tail_sup() const { return C_ * std::pow(M_, K_); }

 private:
  void build_cdf() {
    const int n = 4000;
    const double rmax = M_ * 1e3;
    grid_.resize(n + 1);
    cdf_.resize(n + 1);
    grid_[0] = 0.0;
    cdf_[0] = 0.0;
    // geometric-ish grid: linear to 4M, then geometric
    for (int i = 1; i <= n; ++i) {
      const double a = static_cast<double>(i) / n;
      grid_[i] = 4.0 * M_ * a + (rmax - 4.0 * M_) * std::pow(a, 8.0);
    }
    double acc = 0.0;
    for (int i = 1; i <= n; ++i) {
      const double r0 = grid_[i - 1], r1 = grid_[i], rm = 0.5 * (r0 + r1);
      const double f0 = 4.0 * M_PI * r0 * r0 * radial_value(r0);
      const double fm = 4.0 * M_PI * rm * rm * radial_value(rm);
      const double f1 = 4.0 * M_PI * r1 * r1 * radial_value(r1);
      acc += (r1 - r0) / 6.0 * (f0 + 4.0 * fm + f1);
      cdf_[i] = acc;
    }
    for (auto& v : cdf_) v /= acc;
  }

  double c0_, K_, M_, lam_, Lam_, C_;
  std::vector<double> grid_, cdf_;
};

// rho0 mollified at width 1/n and truncated to B(0,n):
//   rho_n = (rho0 * phi_n) 1_{B(0,n)} / c_n.
class MollifiedDensity final : public Density {
 public:
  MollifiedDensity(DensityPtr base, int n) : base_(std::move(base)), n_(n) {
    if (n < 1) throw ConfigError("mollification index must be >= 1");
    w_ = 1.0 / n;
    phi_norm_ = 1.0 / (4.0 * M_PI *
                       detail::adaptive_simpson(
                           [](double s) { return s * s * bump_profile(s * s); },
                           0.0, 1.0, 1e-13));
    build_quadrature();
    compute_cn();
    if (cn_ < 1e-6)
      throw NumericalError("degenerate truncation: mass inside B(0,n) below 1e-6");
  }

  double operator()(const Vec3& x) const override {
    if (x.norm() >= n_) return 0.0;
    return convolved(x) / cn_;
  }

  Vec3 sample(Rng& rng) const override {
    // X = Y + Z with Y ~ rho0, Z ~ phi_n samples rho0 * phi_n exactly;
    // rejection onto B(0,n) realizes the truncation and the 1/c_n factor.
    for (int k = 0; k < 1000000; ++k) {
      const Vec3 x = base_->sample(rng) + sample_mollifier(rng);
      if (x.norm() < n_) return x;
    }
    throw NumericalError("mollified density rejection sampling failed");
  }

  double support_radius() const override { return static_cast<double>(n_); }
  bool radial() const override { return base_->radial(); }
  double sup_bound() const override { return base_->sup_bound() / cn_; }
  double tail_c0() const override { return base_->tail_c0(); }
  double tail_K() const override { return base_->tail_K(); }
  double tail_M() const override { return base_->tail_M(); }
  double core_lower() const override { return base_->core_lower(); }
  double core_upper() const override { return base_->core_upper(); }

  double cn() const { return cn_; }
  int index() const { return n_; }
  const Density& base() const { return *base_; }

 private:
  double mollifier(double r) const {
    const double s = r / w_;
    return phi_norm_ / (w_ * w_ * w_) * bump_profile(s * s);
  }

  Vec3 sample_mollifier(Rng& rng) const {
    while (true) {
      const Vec3 z = rng.uniform_in_ball(Vec3::Zero(), w_);
      if (rng.uniform() <= bump_profile(z.squaredNorm() / (w_ * w_))) return z;
    }
  }

  // (rho0 * phi_n)(x) by a fixed tensor Gauss-Legendre rule over the
  // mollifier cube.
  double convolved(const Vec3& x) const {
    double acc = 0.0;
    for (const auto& [z, wq] : quad_) acc += wq * (*base_)(x - z);
    return acc;
  }

  void build_quadrature() {
    // 10-point Gauss-Legendre nodes/weights on [-1,1]
    static const double xs[5] = {0.1488743389816312, 0.4333953941292472,
                                 0.6794095682990244, 0.8650633666889845,
                                 0.9739065285171717};
    static const double ws[5] = {0.2955242247147529, 0.2692667193099963,
                                 0.2190863625159820, 0.1494513491505806,
                                 0.0666713443086881};
    std::vector<double> node, wt;
    for (int i = 4; i >= 0; --i) { node.push_back(-xs[i]); wt.push_back(ws[i]); }
    for (int i = 0; i < 5; ++i) { node.push_back(xs[i]); wt.push_back(ws[i]); }
    double wsum = 0.0;
    for (std::size_t a = 0; a < node.size(); ++a)
      for (std::size_t b = 0; b < node.size(); ++b)
        for (std::size_t c = 0; c < node.size(); ++c) {
          const Vec3 z(w_ * node[a], w_ * node[b], w_ * node[c]);
          const double phi = mollifier(z.norm());
          if (phi <= 0.0) continue;
          const double wq = wt[a] * wt[b] * wt[c] * w_ * w_ * w_ * phi;
          quad_.emplace_back(z, wq);
          wsum += wq;
        }
    // renormalize the discrete mollifier mass to exactly 1
    for (auto& [z, wq] : quad_) wq /= wsum;
  }

  void compute_cn() {
    const double rs = base_->support_radius();
    if (rs + w_ <= static_cast<double>(n_)) {
      cn_ = 1.0;  // truncation ball already covers the mollified support
      return;
    }
    if (!base_->radial())
      throw ConfigError(
          "truncation ball must cover the support of a non-radial density");
    cn_ = detail::adaptive_simpson(
        [this](double r) {
          return 4.0 * M_PI * r * r * convolved(Vec3(r, 0.0, 0.0));
        },
        0.0, static_cast<double>(n_), 1e-10);
    cn_ = std::min(cn_, 1.0);
  }

  DensityPtr base_;
  int n_;
  double w_, phi_norm_, cn_ = 1.0;
  std::vector<std::pair<Vec3, double>> quad_;
};

inline DensityPtr mollify_truncate(DensityPtr spec, int n) {
  return std::make_shared<MollifiedDensity>(std::move(spec), n);
}

// Numerical report for the standing hypotheses on rho0.
struct ValidationReport {
  double sup_estimate = 0.0;          // max over samples
  double local_lower_bound = 0.0;     // min over samples in B(0, r)
  double local_radius = 0.0;
  double tail_max = 0.0;              // max of rho |x|^K over samples, |x| >= M
  bool tail_ok = true;
  bool lower_bound_ok = true;
};

// Samples the density on a seeded radial grid and checks the decay /
// nondegeneracy hypotheses. K <= 4 is rejected outright.
inline ValidationReport validate_hypotheses(const Density& spec,
                                            double local_radius = 1.0,
                                            int radial_samples = 10000,
                                            std::uint64_t seed = 12345) {
  if (spec.tail_K() >= 0.0 && spec.tail_K() <= 4.0)
    throw ConfigError("decay exponent K must exceed 4");

  ValidationReport rep;
  rep.local_radius = local_radius;
  rep.local_lower_bound = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  const double K = spec.tail_K();
  const double M = std::max(spec.tail_M(), 1e-6);
  double rmax = 8.0 * std::max({local_radius, M, 1.0});
  if (spec.compactly_supported())
    rmax = std::min(rmax, spec.support_radius() * 0.999);

  for (int i = 0; i < radial_samples; ++i) {
    const double r = rmax * (i + 0.5) / radial_samples;
    const Vec3 x = r * rng.uniform_dir();
    const double v = spec(x);
    rep.sup_estimate = std::max(rep.sup_estimate, v);
    if (r <= local_radius) rep.local_lower_bound = std::min(rep.local_lower_bound, v);
    if (K > 4.0 && r >= spec.tail_M())
      rep.tail_max = std::max(rep.tail_max, v * std::pow(r, K));
  }
  if (K > 4.0) rep.tail_ok = rep.tail_max <= spec.tail_c0() * (1.0 + 1e-9);
  rep.lower_bound_ok = rep.local_lower_bound > 0.0;
  if (!rep.lower_bound_ok)
    throw NumericalError("density vanishes inside the requested ball");
  return rep;
}

}  // namespace sg
