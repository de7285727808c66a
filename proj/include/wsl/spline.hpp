#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "wsl/errors.hpp"

namespace wsl {

/// Natural cubic spline through (x_i, y_i) with exact derivative and antiderivative.
class CubicSpline {
 public:
  CubicSpline() = default;

  CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw DimensionMismatch("spline needs >= 2 matching samples");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1])) throw DimensionMismatch("spline abscissae must increase strictly");
    m_.assign(n, 0.0);
    if (n > 2) {
      std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
      for (std::size_t i = 1; i + 1 < n; ++i) {
        double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
        diag[i] = (h0 + h1) / 3.0;
        upper[i] = h1 / 6.0;
        rhs[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
      }
      // Thomas sweep on interior rows; lower coefficient of row i is h_{i-1}/6
      for (std::size_t i = 2; i + 1 < n; ++i) {
        double lower = (x_[i] - x_[i - 1]) / 6.0;
        double w = lower / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
      }
      for (std::size_t i = n - 2; i >= 1; --i) {
        m_[i] = (rhs[i] - (i + 2 < n ? upper[i] * m_[i + 1] : 0.0)) / diag[i];
        if (i == 1) break;
      }
    }
    cumulative_.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) cumulative_[i + 1] = cumulative_[i] + segment_integral(i, x_[i + 1]);
  }

  double operator()(double s) const {
    auto [i, a, b, h] = locate(s);
    return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
  }

  double derivative(double s) const {
    auto [i, a, b, h] = locate(s);
    return (y_[i + 1] - y_[i]) / h + ((1.0 - 3.0 * a * a) * m_[i] + (3.0 * b * b - 1.0) * m_[i + 1]) * h / 6.0;
  }

  /// Integral from x_0 to s.
  double integral(double s) const {
    auto [i, a, b, h] = locate(s);
    (void)a;
    (void)b;
    (void)h;
    return cumulative_[i] + segment_integral(i, s);
  }

  double integral(double lo, double hi) const { return integral(hi) - integral(lo); }

  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& y() const { return y_; }
  double front() const { return x_.front(); }
  double back() const { return x_.back(); }
  bool empty() const { return x_.empty(); }

 private:
  struct Loc {
    std::size_t i;
    double a, b, h;
  };

  Loc locate(double s) const {
    const double span = x_.back() - x_.front();
    if (s < x_.front() - 1e-12 * (1.0 + span) || s > x_.back() + 1e-12 * (1.0 + span))
      throw OutOfDomain("spline evaluated outside its sample range");
    s = std::clamp(s, x_.front(), x_.back());
    auto it = std::upper_bound(x_.begin(), x_.end(), s);
    std::size_t i = it == x_.begin() ? 0 : std::size_t(it - x_.begin()) - 1;
    if (i + 1 >= x_.size()) i = x_.size() - 2;
    double h = x_[i + 1] - x_[i];
    double b = (s - x_[i]) / h;
    return {i, 1.0 - b, b, h};
  }

  double segment_integral(std::size_t i, double s) const {
    double h = x_[i + 1] - x_[i];
    double b = (s - x_[i]) / h;
    double a = 1.0 - b;
    // antiderivative of the cubic in terms of a and b, measured from x_i (a = 1)
    auto prim = [&](double aa, double bb) {
      return h * (-0.5 * aa * aa * y_[i] + 0.5 * bb * bb * y_[i + 1]) +
             h * h * h / 6.0 *
                 (-(0.25 * aa * aa * aa * aa - 0.5 * aa * aa) * m_[i] + (0.25 * bb * bb * bb * bb - 0.5 * bb * bb) * m_[i + 1]);
    };
    return prim(a, b) - prim(1.0, 0.0);
  }

  std::vector<double> x_, y_, m_, cumulative_;
};

}  // namespace wsl
