#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "wsl/errors.hpp"
#include "wsl/profile.hpp"
#include "wsl/shape.hpp"
#include "wsl/spline.hpp"

namespace wsl {

/// Curvature and torsion sampled in arc length, interpolated by cubic splines.
class CurveData {
 public:
  CurveData() = default;
  CurveData(std::vector<double> s_grid, std::vector<double> kappa, std::vector<double> tau) {
    if (s_grid.size() != kappa.size() || s_grid.size() != tau.size())
      throw DimensionMismatch("curve samples must share the grid length");
    for (double k : kappa)
      if (k < 0.0) throw NonPositiveCurvature("curvature samples must be non-negative");
    kappa_ = CubicSpline(s_grid, std::move(kappa));
    tau_ = CubicSpline(std::move(s_grid), std::move(tau));
  }

  const std::vector<double>& s_grid() const { return kappa_.x(); }
  const std::vector<double>& kappa_samples() const { return kappa_.y(); }
  const std::vector<double>& tau_samples() const { return tau_.y(); }
  double kappa(double s) const { return kappa_(s); }
  double tau(double s) const { return tau_(s); }
  const CubicSpline& tau_spline() const { return tau_; }
  double s_min() const { return kappa_.front(); }
  double s_max() const { return kappa_.back(); }

  double kappa_sup() const {
    double m = 0.0;
    for (double k : kappa_samples()) m = std::max(m, std::abs(k));
    return m;
  }

 private:
  CubicSpline kappa_, tau_;
};

/// Rotation angle theta of the cross-section and its derivative, sampled on the curve grid.
class AngleFunction {
 public:
  AngleFunction() = default;
  AngleFunction(std::vector<double> s_grid, std::vector<double> theta, std::vector<double> theta_dot)
      : theta_(std::move(theta)) {
    if (s_grid.size() != theta_.size() || s_grid.size() != theta_dot.size())
      throw DimensionMismatch("angle samples must share the grid length");
    theta_dot_ = CubicSpline(std::move(s_grid), std::move(theta_dot));
    if (consistency_error() > 1e-6) throw DimensionMismatch("theta_dot is inconsistent with theta");
  }

  /// theta_dot derived from the cubic interpolant of theta.
  static AngleFunction from_theta(std::vector<double> s_grid, std::vector<double> theta) {
    CubicSpline sp(s_grid, theta);
    std::vector<double> d(s_grid.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = sp.derivative(s_grid[i]);
    AngleFunction a;
    a.theta_ = std::move(theta);
    a.theta_dot_ = CubicSpline(std::move(s_grid), std::move(d));
    if (a.consistency_error() > 1e-6) throw GridTooCoarse("theta samples too coarse for a consistent derivative");
    return a;
  }

  /// theta = theta0 + integral of the interpolated theta_dot.
  static AngleFunction from_rate(std::vector<double> s_grid, std::vector<double> theta_dot, double theta0) {
    AngleFunction a;
    a.theta_dot_ = CubicSpline(std::move(s_grid), std::move(theta_dot));
    const auto& x = a.theta_dot_.x();
    a.theta_.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) a.theta_[i] = theta0 + a.theta_dot_.integral(x[i]);
    return a;
  }

  static AngleFunction constant(const std::vector<double>& s_grid, double theta0) {
    return from_rate(s_grid, std::vector<double>(s_grid.size(), 0.0), theta0);
  }

  double theta(double s) const {
    const auto& x = theta_dot_.x();
    auto it = std::upper_bound(x.begin(), x.end(), s);
    std::size_t i = it == x.begin() ? 0 : std::size_t(it - x.begin()) - 1;
    if (i >= x.size()) i = x.size() - 1;
    return theta_[i] + theta_dot_.integral(x[i], s);
  }
  double theta_dot(double s) const { return theta_dot_(s); }

  const std::vector<double>& s_grid() const { return theta_dot_.x(); }
  const std::vector<double>& theta_samples() const { return theta_; }
  const std::vector<double>& theta_dot_samples() const { return theta_dot_.y(); }

  /// Largest mismatch between theta increments and the integral of theta_dot, relative to the increment scale.
  double consistency_error() const {
    const auto& x = theta_dot_.x();
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      double inc = theta_dot_.integral(x[i], x[i + 1]);
      double d = theta_[i + 1] - theta_[i];
      err = std::max(err, std::abs(d - inc));
      scale = std::max({scale, std::abs(d), std::abs(inc)});
    }
    return scale > 0 ? err / scale : err;
  }

 private:
  std::vector<double> theta_;
  CubicSpline theta_dot_;
};

/// Rows e1, e2^theta, e3^theta at each grid point, plus the curve position.
struct FrameField {
  std::vector<double> s;
  std::vector<Mat3> frames;
  std::vector<Vec3> positions;
};

struct TubeSpec {
  CurveData curve;
  AngleFunction angle;
  CrossSectionShape shape = Disc{};
  double half_length = 1.0;
};

struct MetricSample {
  double h = 1.0, h2 = 0.0, h3 = 0.0;
  Mat3 G = Mat3::Identity();
  Mat3 Ginv = Mat3::Identity();
};

inline Mat3 rotation_theta(double theta) {
  double c = std::cos(theta), s = std::sin(theta);
  Mat3 R;
  R << 1, 0, 0, 0, c, -s, 0, s, c;
  return R;
}

namespace detail {

inline Mat3 frame_generator(const TubeSpec& spec, double s) {
  double k = spec.curve.kappa(s);
  double th = spec.angle.theta(s);
  double w = spec.curve.tau(s) - spec.angle.theta_dot(s);
  double kc = k * std::cos(th), ks = k * std::sin(th);
  Mat3 K;
  K << 0, kc, ks, -kc, 0, w, -ks, -w, 0;
  return K;
}

struct FrameState {
  Mat3 F;
  Vec3 x;
};

inline FrameState rk4_step(const TubeSpec& spec, const FrameState& y, double s, double h) {
  Mat3 K0 = frame_generator(spec, s);
  Mat3 Km = frame_generator(spec, s + 0.5 * h);
  Mat3 K1 = frame_generator(spec, s + h);
  Mat3 k1 = K0 * y.F;
  Vec3 x1 = y.F.row(0).transpose();
  Mat3 F2 = y.F + 0.5 * h * k1;
  Mat3 k2 = Km * F2;
  Vec3 x2 = F2.row(0).transpose();
  Mat3 F3 = y.F + 0.5 * h * k2;
  Mat3 k3 = Km * F3;
  Vec3 x3 = F3.row(0).transpose();
  Mat3 F4 = y.F + h * k3;
  Mat3 k4 = K1 * F4;
  Vec3 x4 = F4.row(0).transpose();
  return {y.F + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), y.x + h / 6.0 * (x1 + 2.0 * x2 + 2.0 * x3 + x4)};
}

inline Mat3 polar_orthonormalize(const Mat3& F) {
  Eigen::JacobiSVD<Mat3> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace detail

/// Integrates the rotated-frame system from the first grid point, where the Frenet frame is the identity.
inline FrameField integrate_frame(const TubeSpec& spec) {
  const auto& s = spec.curve.s_grid();
  if (spec.angle.s_grid() != s) throw DimensionMismatch("angle and curve must share the grid");
  FrameField out;
  out.s = s;
  out.frames.reserve(s.size());
  out.positions.reserve(s.size());
  detail::FrameState y{rotation_theta(spec.angle.theta(s.front())), Vec3(s.front(), 0.0, 0.0)};
  out.frames.push_back(y.F);
  out.positions.push_back(y.x);
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    y = detail::rk4_step(spec, y, s[i], s[i + 1] - s[i]);
    double drift = (y.F * y.F.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (drift > 1e-6) throw GridTooCoarse("frame orthonormality drift exceeds 1e-6 in one step");
    y.F = detail::polar_orthonormalize(y.F);
    out.frames.push_back(y.F);
    out.positions.push_back(y.x);
  }
  return out;
}

inline FrameField integrate_frame(const CurveData& curve, const AngleFunction& angle) {
  TubeSpec spec;
  spec.curve = curve;
  spec.angle = angle;
  return integrate_frame(spec);
}

/// theta with theta_dot = tau, theta(s_0) = theta0.
inline AngleFunction tang_frame_angle(const CurveData& curve, double theta0) {
  return AngleFunction::from_rate(curve.s_grid(), curve.tau_samples(), theta0);
}

/// A tube specification with its frame field integrated once.
class Tube {
 public:
  explicit Tube(TubeSpec spec) : spec_(std::move(spec)), frames_(integrate_frame(spec_)), a_(farthest_radius(spec_.shape)) {}

  const TubeSpec& spec() const { return spec_; }
  const FrameField& frames() const { return frames_; }
  double a() const { return a_; }

  /// Frame rows and curve point at arbitrary s, by one RK4 substep from the grid node to the left.
  detail::FrameState state_at(double s) const {
    const auto& g = frames_.s;
    double span = g.back() - g.front();
    if (s < g.front() - 1e-12 * (1 + span) || s > g.back() + 1e-12 * (1 + span))
      throw OutOfDomain("arc length outside the curve grid");
    auto it = std::upper_bound(g.begin(), g.end(), s);
    std::size_t i = it == g.begin() ? 0 : std::size_t(it - g.begin()) - 1;
    if (i >= g.size()) i = g.size() - 1;
    detail::FrameState y{frames_.frames[i], frames_.positions[i]};
    if (s == g[i]) return y;
    return detail::rk4_step(spec_, y, g[i], s - g[i]);
  }

  Vec3 map(double s, const Vec2& t) const {
    if (t.norm() > a_ * (1 + 1e-9) + 1e-300) throw OutOfDomain("cross-section point outside the farthest radius");
    auto y = state_at(s);
    return y.x + t.x() * y.F.row(1).transpose() + t.y() * y.F.row(2).transpose();
  }

 private:
  TubeSpec spec_;
  FrameField frames_;
  double a_;
};

inline Vec3 tube_map(const Tube& tube, double s, const Vec2& t) { return tube.map(s, t); }

inline MetricSample metric_from(double kappa, double theta, double twist, const Vec2& t) {
  MetricSample m;
  m.h = 1.0 - (t.x() * std::cos(theta) + t.y() * std::sin(theta)) * kappa;
  m.h2 = -t.y() * twist;
  m.h3 = t.x() * twist;
  if (!(m.h > 0)) throw DegenerateJacobian("h <= 0: the cross-section reaches the focal set");
  double h = m.h, h2 = m.h2, h3 = m.h3;
  m.G << h * h + h2 * h2 + h3 * h3, h2, h3, h2, 1, 0, h3, 0, 1;
  m.Ginv << 1, -h2, -h3, -h2, h * h + h2 * h2, h2 * h3, -h3, h2 * h3, h * h + h3 * h3;
  m.Ginv /= h * h;
  return m;
}

inline MetricSample metric_at(const TubeSpec& spec, double s, const Vec2& t) {
  return metric_from(spec.curve.kappa(s), spec.angle.theta(s), spec.curve.tau(s) - spec.angle.theta_dot(s), t);
}

struct HypothesisReport {
  double a = 0.0;
  double kappa_sup = 0.0;
  double margin = 1.0;
  long pairs_checked = 0;
  double min_image_ratio = 0.0;  // smallest image distance over parameter distance among sampled pairs
  bool passed = true;
};

/// Positivity of h and a sampled injectivity check of the tube map on [-L, L] x shape.
inline HypothesisReport check_hypotheses(const Tube& tube, long sample_count = 20000, std::uint64_t seed = 20240601) {
  const auto& spec = tube.spec();
  HypothesisReport r;
  r.a = tube.a();
  r.kappa_sup = spec.curve.kappa_sup();
  r.margin = 1.0 - r.a * r.kappa_sup;
  if (!(r.margin > 0)) {
    r.passed = false;
    throw HypothesisViolated("a*sup(kappa) = " + std::to_string(r.a * r.kappa_sup) + " >= 1");
  }
  double lo = std::max(-spec.half_length, spec.curve.s_min());
  double hi = std::min(spec.half_length, spec.curve.s_max());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> us(lo, hi), ut(-r.a, r.a);
  auto draw_t = [&]() {
    for (int k = 0; k < 10000; ++k) {
      Vec2 t(ut(rng), ut(rng));
      if (contains(spec.shape, t)) return t;
    }
    throw MeshFailure("could not sample the cross-section");
  };
  const double diameter = 2.0 * r.a;
  const double floor = 0.05 * r.a;
  r.min_image_ratio = std::numeric_limits<double>::infinity();
  {
    const auto& g = tube.frames().s;
    const auto& x = tube.frames().positions;
    std::vector<std::size_t> idx;
    std::size_t stride = std::max<std::size_t>(1, g.size() / 2000);
    for (std::size_t i = 0; i < g.size(); i += stride)
      if (g[i] >= lo && g[i] <= hi) idx.push_back(i);
    for (std::size_t p = 0; p < idx.size(); ++p)
      for (std::size_t q = p + 1; q < idx.size(); ++q) {
        double dp = g[idx[q]] - g[idx[p]];
        if (dp <= floor) continue;
        double di = (x[idx[q]] - x[idx[p]]).norm();
        r.min_image_ratio = std::min(r.min_image_ratio, di / dp);
        if (di < 1e-9 * diameter) {
          r.passed = false;
          throw HypothesisViolated("tube map not injective: the reference curve meets itself");
        }
      }
  }
  for (long k = 0; k < sample_count; ++k) {
    double s1 = us(rng), s2 = us(rng);
    Vec2 t1 = draw_t(), t2 = draw_t();
    double dp = std::sqrt((s1 - s2) * (s1 - s2) + (t1 - t2).squaredNorm());
    if (dp <= floor) continue;
    double di = (tube.map(s1, t1) - tube.map(s2, t2)).norm();
    ++r.pairs_checked;
    r.min_image_ratio = std::min(r.min_image_ratio, di / dp);
    if (di < 1e-9 * diameter) {
      r.passed = false;
      throw HypothesisViolated("tube map not injective: two parameter points share an image");
    }
  }
  return r;
}

/// Gauss curvature of the ruled surface s, r -> Gamma(s) + r e2^theta(s) at r = a/2.
inline double ruled_surface_gauss_curvature(const Tube& tube, double s) {
  const double r = 0.5 * tube.a();
  const double ds = 1e-3, dr = 0.25 * tube.a();
  const auto& g = tube.frames().s;
  if (s - ds < g.front() || s + ds > g.back()) throw OutOfDomain("arc length too close to the grid ends");
  auto X = [&](double ss, double rr) {
    auto y = tube.state_at(ss);
    return Vec3(y.x + rr * y.F.row(1).transpose());
  };
  Vec3 x0 = X(s, r);
  Vec3 xsp = X(s + ds, r), xsm = X(s - ds, r), xrp = X(s, r + dr), xrm = X(s, r - dr);
  Vec3 Xs = (xsp - xsm) / (2 * ds), Xr = (xrp - xrm) / (2 * dr);
  Vec3 Xss = (xsp - 2 * x0 + xsm) / (ds * ds);
  Vec3 Xrr = (xrp - 2 * x0 + xrm) / (dr * dr);
  Vec3 Xsr = (X(s + ds, r + dr) - X(s + ds, r - dr) - X(s - ds, r + dr) + X(s - ds, r - dr)) / (4 * ds * dr);
  Vec3 n = Xs.cross(Xr);
  double nn = n.norm();
  if (!(nn > 0)) throw DegenerateJacobian("ruled surface is singular");
  n /= nn;
  double E = Xs.dot(Xs), F = Xs.dot(Xr), G = Xr.dot(Xr);
  double L = Xss.dot(n), M = Xsr.dot(n), N = Xrr.dot(n);
  return (L * N - M * M) / (E * G - F * F);
}

/// Curvature and torsion recovered from the integrated frame by central differences at interior grid points.
struct RoundTrip {
  double kappa_error = 0.0;
  double tau_error = 0.0;
};

inline RoundTrip frame_roundtrip(const Tube& tube) {
  const auto& spec = tube.spec();
  const auto& g = tube.frames().s;
  RoundTrip rt;
  const double ds = 1e-3;
  for (std::size_t i = 1; i + 1 < g.size(); ++i) {
    double s = g[i];
    if (s - ds < g.front() || s + ds > g.back()) continue;
    auto yp = tube.state_at(s + ds), ym = tube.state_at(s - ds), y0 = tube.state_at(s);
    Vec3 xpp = (yp.x - 2 * y0.x + ym.x) / (ds * ds);
    double k = spec.curve.kappa(s);
    rt.kappa_error = std::max(rt.kappa_error, std::abs(xpp.norm() - k));
    if (k > 1e-3) {
      auto frenet = [&](const detail::FrameState& y, double ss) {
        double th = spec.angle.theta(ss);
        Vec3 e2 = std::cos(th) * y.F.row(1).transpose() + std::sin(th) * y.F.row(2).transpose();
        Vec3 e3 = -std::sin(th) * y.F.row(1).transpose() + std::cos(th) * y.F.row(2).transpose();
        return std::pair{e2, e3};
      };
      Vec3 de2 = (frenet(yp, s + ds).first - frenet(ym, s - ds).first) / (2 * ds);
      rt.tau_error = std::max(rt.tau_error, std::abs(de2.dot(frenet(y0, s).second) - spec.curve.tau(s)));
    }
  }
  return rt;
}

namespace curves {

inline std::vector<double> grid(double lo, double hi, double ds) {
  if (!(hi > lo) || !(ds > 0)) throw ConfigError("curve grid needs hi > lo and ds > 0");
  int n = std::max(2, int(std::ceil((hi - lo) / ds - 1e-9)));
  std::vector<double> s(n + 1);
  for (int i = 0; i <= n; ++i) s[i] = lo + (hi - lo) * i / n;
  return s;
}

inline CurveData from_profiles(const std::vector<double>& s, const Profile1D& kappa, const Profile1D& tau) {
  std::vector<double> k(s.size()), t(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) k[i] = kappa(s[i]), t[i] = tau(s[i]);
  return CurveData(s, k, t);
}

inline CurveData line(double lo, double hi, double ds) {
  return from_profiles(grid(lo, hi, ds), profile::zero(), profile::zero());
}
inline CurveData circle(double radius, double lo, double hi, double ds) {
  return from_profiles(grid(lo, hi, ds), profile::constant(1.0 / radius), profile::zero());
}
inline CurveData helix(double kappa, double tau, double lo, double hi, double ds) {
  return from_profiles(grid(lo, hi, ds), profile::constant(kappa), profile::constant(tau));
}
inline CurveData bump(double peak, double center, double width, double lo, double hi, double ds) {
  return from_profiles(grid(lo, hi, ds), profile::bump(peak, center, width), profile::zero());
}
inline CurveData mild(double eps0, double lo, double hi, double ds) {
  return from_profiles(grid(lo, hi, ds), profile::decaying(eps0), profile::zero());
}

}  // namespace curves
}  // namespace wsl
