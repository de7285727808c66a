#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "wsl/errors.hpp"

namespace wsl {

/// Scalar function of arc length with a known support interval (possibly unbounded).
struct Profile1D {
  std::function<double(double)> f = [](double) { return 0.0; };
  double support_lo = 0.0;
  double support_hi = 0.0;
  std::string name = "zero";

  double operator()(double s) const { return f(s); }
  bool trivial() const { return !(support_hi > support_lo); }
  bool compact() const { return std::isfinite(support_lo) && std::isfinite(support_hi); }
};

namespace profile {

inline constexpr double inf = std::numeric_limits<double>::infinity();

inline Profile1D zero() { return {}; }

inline Profile1D constant(double v) {
  if (v == 0.0) return zero();
  return {[v](double) { return v; }, -inf, inf, "constant"};
}

/// exp(-1/(1-x^2)) scaled to peak value `peak` at `center`, supported on |s - center| < width/2.
inline Profile1D bump(double peak, double center, double width) {
  if (!(width > 0)) throw ConfigError("bump width must be positive");
  double half = 0.5 * width;
  auto f = [=](double s) {
    double x = (s - center) / half;
    if (std::abs(x) >= 1.0) return 0.0;
    return peak * std::exp(1.0 - 1.0 / (1.0 - x * x));
  };
  if (peak == 0.0) return zero();
  return {f, center - half, center + half, "bump"};
}

/// Equal to v on [lo, hi], C1 cubic ramps of length taper to zero outside.
inline Profile1D plateau(double v, double lo, double hi, double taper) {
  if (!(hi >= lo) || !(taper >= 0)) throw ConfigError("plateau needs lo <= hi and taper >= 0");
  auto f = [=](double s) {
    if (s >= lo && s <= hi) return v;
    double d = s < lo ? lo - s : s - hi;
    if (taper <= 0.0 || d >= taper) return 0.0;
    double x = 1.0 - d / taper;
    return v * x * x * (3.0 - 2.0 * x);
  };
  if (v == 0.0) return zero();
  return {f, lo - taper, hi + taper, "plateau"};
}

/// v / (1 + (s - center)^2).
inline Profile1D decaying(double v, double center = 0.0) {
  if (v == 0.0) return zero();
  return {[=](double s) { return v / (1.0 + (s - center) * (s - center)); }, -inf, inf, "decaying"};
}

/// Piecewise-linear interpolant of samples; zero outside the sample range.
inline Profile1D sampled(std::vector<double> s, std::vector<double> v) {
  if (s.size() != v.size() || s.size() < 2) throw DimensionMismatch("sampled profile needs >= 2 matching samples");
  for (std::size_t i = 1; i < s.size(); ++i)
    if (!(s[i] > s[i - 1])) throw DimensionMismatch("sampled profile abscissae must increase");
  double lo = inf, hi = -inf;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (v[i] != 0.0) {
      lo = std::min(lo, i > 0 ? s[i - 1] : s[i]);
      hi = std::max(hi, i + 1 < s.size() ? s[i + 1] : s[i]);
    }
  }
  if (!(hi > lo)) return zero();
  auto f = [s = std::move(s), v = std::move(v)](double x) {
    if (x < s.front() || x > s.back()) return 0.0;
    auto it = std::upper_bound(s.begin(), s.end(), x);
    std::size_t i = it == s.begin() ? 0 : std::size_t(it - s.begin()) - 1;
    if (i + 1 >= s.size()) return v.back();
    double b = (x - s[i]) / (s[i + 1] - s[i]);
    return (1.0 - b) * v[i] + b * v[i + 1];
  };
  return {f, lo, hi, "sampled"};
}

inline Profile1D scaled(const Profile1D& p, double c) {
  if (c == 0.0) return zero();
  Profile1D q = p;
  q.f = [g = p.f, c](double s) { return c * g(s); };
  return q;
}

inline double sup_norm(const Profile1D& p, double lo, double hi, int samples = 20001) {
  double best = 0.0;
  for (int i = 0; i < samples; ++i) best = std::max(best, std::abs(p(lo + (hi - lo) * i / (samples - 1))));
  return best;
}

}  // namespace profile
}  // namespace wsl
