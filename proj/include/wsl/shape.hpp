#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "wsl/errors.hpp"

namespace wsl {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Disc {
  double radius = 1.0;
  Vec2 center = Vec2::Zero();
};

struct Annulus {
  double r_in = 0.5;
  double r_out = 1.0;
  Vec2 center = Vec2::Zero();
};

struct Ellipse {
  double a = 1.0;
  double b = 0.5;
  Vec2 center = Vec2::Zero();
  double tilt = 0.0;
};

struct Rectangle {
  double width = 1.0;
  double height = 1.0;
  Vec2 center = Vec2::Zero();
  double tilt = 0.0;
};

struct Polygon {
  std::vector<Vec2> vertices;
};

/// Planar cross-section, described in the t = (t2, t3) plane.
using CrossSectionShape = std::variant<Disc, Annulus, Ellipse, Rectangle, Polygon>;

inline Vec2 rotate2(const Vec2& v, double phi) {
  double c = std::cos(phi), s = std::sin(phi);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

inline std::string shape_kind(const CrossSectionShape& shape) {
  static const char* names[] = {"disc", "annulus", "ellipse", "rectangle", "polygon"};
  return names[shape.index()];
}

inline std::vector<Vec2> rectangle_corners(const Rectangle& r) {
  std::vector<Vec2> c = {{-0.5 * r.width, -0.5 * r.height},
                         {0.5 * r.width, -0.5 * r.height},
                         {0.5 * r.width, 0.5 * r.height},
                         {-0.5 * r.width, 0.5 * r.height}};
  for (auto& p : c) p = r.center + rotate2(p, r.tilt);
  return c;
}

inline double signed_area(const std::vector<Vec2>& poly) {
  double area = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    area += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * area;
}

inline void validate_shape(const CrossSectionShape& shape) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disc>) {
          if (!(s.radius > 0)) throw MeshFailure("disc radius must be positive");
        } else if constexpr (std::is_same_v<T, Annulus>) {
          if (!(s.r_in > 0 && s.r_out > s.r_in)) throw MeshFailure("annulus needs 0 < r_in < r_out");
        } else if constexpr (std::is_same_v<T, Ellipse>) {
          if (!(s.a > 0 && s.b > 0)) throw MeshFailure("ellipse semi-axes must be positive");
        } else if constexpr (std::is_same_v<T, Rectangle>) {
          if (!(s.width > 0 && s.height > 0)) throw MeshFailure("rectangle sides must be positive");
        } else {
          if (s.vertices.size() < 3) throw MeshFailure("polygon needs at least 3 vertices");
          if (std::abs(signed_area(s.vertices)) <= 0) throw MeshFailure("degenerate polygon");
        }
      },
      shape);
}

/// Farthest-point radius a = sup |t| over the shape.
inline double farthest_radius(const CrossSectionShape& shape) {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disc>) {
          return s.center.norm() + s.radius;
        } else if constexpr (std::is_same_v<T, Annulus>) {
          return s.center.norm() + s.r_out;
        } else if constexpr (std::is_same_v<T, Ellipse>) {
          auto point = [&](double psi) { return (s.center + rotate2({s.a * std::cos(psi), s.b * std::sin(psi)}, s.tilt)).norm(); };
          const int n = 4096;
          double best = 0.0, arg = 0.0;
          for (int i = 0; i < n; ++i) {
            double psi = 2.0 * std::numbers::pi * i / n;
            double r = point(psi);
            if (r > best) best = r, arg = psi;
          }
          double lo = arg - 2.0 * std::numbers::pi / n, hi = arg + 2.0 * std::numbers::pi / n;
          const double g = 0.5 * (std::sqrt(5.0) - 1.0);
          for (int it = 0; it < 100; ++it) {
            double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
            if (point(m1) > point(m2))
              hi = m2;
            else
              lo = m1;
          }
          return std::max(best, point(0.5 * (lo + hi)));
        } else if constexpr (std::is_same_v<T, Rectangle>) {
          double best = 0.0;
          for (const auto& c : rectangle_corners(s)) best = std::max(best, c.norm());
          return best;
        } else {
          double best = 0.0;
          for (const auto& v : s.vertices) best = std::max(best, v.norm());
          return best;
        }
      },
      shape);
}

/// Radius of a disc that fits inside the shape (exact for the smooth kinds, a lower bound for polygons).
inline double inradius(const CrossSectionShape& shape) {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disc>) {
          return s.radius;
        } else if constexpr (std::is_same_v<T, Annulus>) {
          return 0.5 * (s.r_out - s.r_in);
        } else if constexpr (std::is_same_v<T, Ellipse>) {
          return std::min(s.a, s.b);
        } else if constexpr (std::is_same_v<T, Rectangle>) {
          return 0.5 * std::min(s.width, s.height);
        } else {
          double perimeter = 0.0;
          for (std::size_t i = 0; i < s.vertices.size(); ++i)
            perimeter += (s.vertices[(i + 1) % s.vertices.size()] - s.vertices[i]).norm();
          return 2.0 * std::abs(signed_area(s.vertices)) / perimeter;
        }
      },
      shape);
}

inline bool point_in_polygon(const std::vector<Vec2>& poly, const Vec2& p) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) && p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x())
      inside = !inside;
  }
  return inside;
}

inline bool contains(const CrossSectionShape& shape, const Vec2& t) {
  return std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disc>) {
          return (t - s.center).norm() < s.radius;
        } else if constexpr (std::is_same_v<T, Annulus>) {
          double r = (t - s.center).norm();
          return r > s.r_in && r < s.r_out;
        } else if constexpr (std::is_same_v<T, Ellipse>) {
          Vec2 q = rotate2(t - s.center, -s.tilt);
          return (q.x() / s.a) * (q.x() / s.a) + (q.y() / s.b) * (q.y() / s.b) < 1.0;
        } else if constexpr (std::is_same_v<T, Rectangle>) {
          Vec2 q = rotate2(t - s.center, -s.tilt);
          return std::abs(q.x()) < 0.5 * s.width && std::abs(q.y()) < 0.5 * s.height;
        } else {
          return point_in_polygon(s.vertices, t);
        }
      },
      shape);
}

/// The shape rotated by beta about the origin.
inline CrossSectionShape rotated(const CrossSectionShape& shape, double beta) {
  return std::visit(
      [&](auto s) -> CrossSectionShape {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Polygon>) {
          for (auto& v : s.vertices) v = rotate2(v, beta);
        } else {
          s.center = rotate2(s.center, beta);
          if constexpr (std::is_same_v<T, Ellipse> || std::is_same_v<T, Rectangle>) s.tilt += beta;
        }
        return s;
      },
      shape);
}

/// The shape scaled by eps about the origin.
inline CrossSectionShape scaled(const CrossSectionShape& shape, double eps) {
  return std::visit(
      [&](auto s) -> CrossSectionShape {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disc>) {
          s.radius *= eps;
          s.center *= eps;
        } else if constexpr (std::is_same_v<T, Annulus>) {
          s.r_in *= eps;
          s.r_out *= eps;
          s.center *= eps;
        } else if constexpr (std::is_same_v<T, Ellipse>) {
          s.a *= eps;
          s.b *= eps;
          s.center *= eps;
        } else if constexpr (std::is_same_v<T, Rectangle>) {
          s.width *= eps;
          s.height *= eps;
          s.center *= eps;
        } else {
          for (auto& v : s.vertices) v *= eps;
        }
        return s;
      },
      shape);
}

/// Decided from the descriptor: a disc or annulus centered at the origin (an ellipse with equal axes is a disc).
inline bool is_rotationally_invariant(const CrossSectionShape& shape, double tol = 1e-12) {
  return std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disc> || std::is_same_v<T, Annulus>) {
          return s.center.norm() <= tol;
        } else if constexpr (std::is_same_v<T, Ellipse>) {
          return s.center.norm() <= tol && std::abs(s.a - s.b) <= tol;
        } else {
          return false;
        }
      },
      shape);
}

}  // namespace wsl
