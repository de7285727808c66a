#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "wsl/errors.hpp"
#include "wsl/shape.hpp"

namespace wsl {

/// Conforming triangulation of a cross-section, counter-clockwise triangles.
struct Mesh2D {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<bool> boundary;
  double h_mesh = 0.0;

  int interior_count() const {
    int n = 0;
    for (bool b : boundary) n += b ? 0 : 1;
    return n;
  }
};

inline double triangle_area(const Mesh2D& m, const std::array<int, 3>& t) {
  const Vec2 &a = m.nodes[t[0]], &b = m.nodes[t[1]], &c = m.nodes[t[2]];
  return 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
}

inline double max_edge(const Mesh2D& m) {
  double e = 0.0;
  for (const auto& t : m.triangles)
    for (int k = 0; k < 3; ++k) e = std::max(e, (m.nodes[t[k]] - m.nodes[t[(k + 1) % 3]]).norm());
  return e;
}

/// Flags nodes on edges that belong to exactly one triangle and orients triangles counter-clockwise.
inline void finalize_mesh(Mesh2D& m) {
  std::map<std::pair<int, int>, int> edges;
  for (auto& t : m.triangles) {
    double a = triangle_area(m, t);
    if (a < 0) std::swap(t[1], t[2]);
    if (!(std::abs(a) > 0)) throw MeshFailure("degenerate triangle");
    for (int k = 0; k < 3; ++k) {
      int i = t[k], j = t[(k + 1) % 3];
      ++edges[{std::min(i, j), std::max(i, j)}];
    }
  }
  m.boundary.assign(m.nodes.size(), false);
  for (const auto& [e, count] : edges) {
    if (count > 2) throw MeshFailure("non-manifold edge");
    if (count == 1) m.boundary[e.first] = m.boundary[e.second] = true;
  }
}

namespace detail {

/// Concentric rings with a fixed even node count; ring k is rotated by half a step for odd k.
inline Mesh2D polar_rings(double r0, double r1, int rings, int per_ring) {
  Mesh2D m;
  const double dphi = 2.0 * std::numbers::pi / per_ring;
  int first = 0;
  if (r0 == 0.0) {
    m.nodes.push_back(Vec2::Zero());
    first = 1;
  }
  int k0 = r0 == 0.0 ? 1 : 0;
  auto idx = [&](int k, int j) { return first + (k - k0) * per_ring + ((j % per_ring) + per_ring) % per_ring; };
  for (int k = k0; k <= rings; ++k) {
    double r = r0 + (r1 - r0) * k / rings;
    double off = 0.5 * (k % 2);
    for (int j = 0; j < per_ring; ++j) {
      double phi = (j + off) * dphi;
      m.nodes.push_back(Vec2(r * std::cos(phi), r * std::sin(phi)));
    }
  }
  if (r0 == 0.0)
    for (int j = 0; j < per_ring; ++j) m.triangles.push_back({0, idx(1, j), idx(1, j + 1)});
  for (int k = k0; k < rings; ++k) {
    bool odd = k % 2 == 1;
    for (int j = 0; j < per_ring; ++j) {
      if (!odd) {
        // outer node (k+1, j) sits between inner (k, j) and (k, j+1)
        m.triangles.push_back({idx(k, j), idx(k, j + 1), idx(k + 1, j)});
        m.triangles.push_back({idx(k + 1, j), idx(k, j + 1), idx(k + 1, j + 1)});
      } else {
        // outer node (k+1, j+1) sits between inner (k, j) and (k, j+1)
        m.triangles.push_back({idx(k, j), idx(k, j + 1), idx(k + 1, j + 1)});
        m.triangles.push_back({idx(k + 1, j), idx(k, j), idx(k + 1, j + 1)});
      }
    }
  }
  return m;
}

inline int even_count(double circumference, double h) {
  int n = int(std::ceil(circumference / (1.25 * h) - 1e-9));
  n = std::max(n, 8);
  return n + (n % 2);
}

inline Mesh2D disc_mesh(double radius, double h) {
  int rings = std::max(2, int(std::ceil(radius / h - 1e-9)));
  int per = even_count(2.0 * std::numbers::pi * radius, h);
  Mesh2D m = polar_rings(0.0, radius, rings, per);
  // outer ring placed exactly on the circle
  for (auto& p : m.nodes) {
    double r = p.norm();
    if (std::abs(r - radius) < 1e-9 * radius) p *= radius / r;
  }
  return m;
}

inline std::vector<std::array<int, 3>> ear_clip(const std::vector<Vec2>& poly) {
  std::vector<int> idx(poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) idx[i] = int(i);
  if (signed_area(poly) < 0) std::reverse(idx.begin(), idx.end());
  auto cross = [](const Vec2& a, const Vec2& b, const Vec2& c) { return (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x(); };
  std::vector<std::array<int, 3>> tris;
  int guard = 0;
  while (idx.size() > 3) {
    bool clipped = false;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      int a = idx[(i + idx.size() - 1) % idx.size()], b = idx[i], c = idx[(i + 1) % idx.size()];
      if (cross(poly[a], poly[b], poly[c]) <= 0) continue;
      bool ear = true;
      for (int q : idx) {
        if (q == a || q == b || q == c) continue;
        if (cross(poly[a], poly[b], poly[q]) >= 0 && cross(poly[b], poly[c], poly[q]) >= 0 && cross(poly[c], poly[a], poly[q]) >= 0) {
          ear = false;
          break;
        }
      }
      if (!ear) continue;
      tris.push_back({a, b, c});
      idx.erase(idx.begin() + long(i));
      clipped = true;
      break;
    }
    if (!clipped || ++guard > 100000) throw MeshFailure("polygon could not be triangulated (self-intersecting?)");
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

inline bool segments_cross(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) {
    double v = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
    return (v > 0) - (v < 0);
  };
  return orient(p1, p2, q1) * orient(p1, p2, q2) < 0 && orient(q1, q2, p1) * orient(q1, q2, p2) < 0;
}

/// Uniform subdivision of each coarse triangle into n^2 pieces, sharing nodes along common edges.
inline Mesh2D subdivide(const std::vector<Vec2>& pts, const std::vector<std::array<int, 3>>& tris, int n) {
  Mesh2D m;
  std::map<std::array<long long, 2>, int> lookup;
  auto key = [](const Vec2& p) {
    return std::array<long long, 2>{std::llround(p.x() * 1e9), std::llround(p.y() * 1e9)};
  };
  auto node = [&](const Vec2& p) {
    auto k = key(p);
    auto it = lookup.find(k);
    if (it != lookup.end()) return it->second;
    int id = int(m.nodes.size());
    m.nodes.push_back(p);
    lookup[k] = id;
    return id;
  };
  for (const auto& t : tris) {
    const Vec2 &A = pts[t[0]], &B = pts[t[1]], &C = pts[t[2]];
    auto at = [&](int i, int j) {
      // exact endpoints keep shared edges bitwise identical
      if (i == 0 && j == 0) return node(A);
      if (i == n && j == 0) return node(B);
      if (i == 0 && j == n) return node(C);
      double u = double(i) / n, v = double(j) / n;
      if (j == 0) return node(A + u * (B - A));
      if (i == 0) return node(A + v * (C - A));
      if (i + j == n) return node(B + v * (C - B));
      return node(A + u * (B - A) + v * (C - A));
    };
    for (int j = 0; j < n; ++j)
      for (int i = 0; i + j < n; ++i) {
        m.triangles.push_back({at(i, j), at(i + 1, j), at(i, j + 1)});
        if (i + j + 1 < n) m.triangles.push_back({at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)});
      }
  }
  return m;
}

}  // namespace detail

/// Triangulates the shape with maximum edge at most 1.5 h_mesh; curved boundary nodes lie on the true boundary.
inline Mesh2D generate_mesh(const CrossSectionShape& shape, double h_mesh) {
  validate_shape(shape);
  if (!(h_mesh > 0)) throw MeshFailure("h_mesh must be positive");
  if (!(h_mesh < inradius(shape))) throw MeshFailure("h_mesh must be smaller than the inradius");
  Mesh2D m = std::visit(
      [&](const auto& s) -> Mesh2D {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disc>) {
          Mesh2D d = detail::disc_mesh(s.radius, h_mesh);
          for (auto& p : d.nodes) p += s.center;
          return d;
        } else if constexpr (std::is_same_v<T, Annulus>) {
          int rings = std::max(2, int(std::ceil((s.r_out - s.r_in) / h_mesh - 1e-9)));
          int per = detail::even_count(2.0 * std::numbers::pi * s.r_out, h_mesh);
          Mesh2D d = detail::polar_rings(s.r_in, s.r_out, rings, per);
          for (auto& p : d.nodes) {
            double r = p.norm();
            if (std::abs(r - s.r_in) < 1e-9 * s.r_out) p *= s.r_in / r;
            if (std::abs(r - s.r_out) < 1e-9 * s.r_out) p *= s.r_out / r;
            p += s.center;
          }
          return d;
        } else if constexpr (std::is_same_v<T, Ellipse>) {
          double big = std::max(s.a, s.b);
          Mesh2D d = detail::disc_mesh(1.0, h_mesh / big);
          for (auto& p : d.nodes) p = s.center + rotate2(Vec2(s.a * p.x(), s.b * p.y()), s.tilt);
          return d;
        } else if constexpr (std::is_same_v<T, Rectangle>) {
          int nx = int(std::ceil(s.width / h_mesh - 1e-9)), ny = int(std::ceil(s.height / h_mesh - 1e-9));
          Mesh2D d;
          for (int j = 0; j <= ny; ++j)
            for (int i = 0; i <= nx; ++i)
              d.nodes.push_back(s.center + rotate2(Vec2(s.width * (double(i) / nx - 0.5), s.height * (double(j) / ny - 0.5)), s.tilt));
          auto id = [&](int i, int j) { return j * (nx + 1) + i; };
          for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
              d.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
              d.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
            }
          return d;
        } else {
          const auto& v = s.vertices;
          for (std::size_t i = 0; i < v.size(); ++i)
            for (std::size_t j = i + 1; j < v.size(); ++j) {
              if (j == i + 1 || (i == 0 && j + 1 == v.size())) continue;
              if (detail::segments_cross(v[i], v[(i + 1) % v.size()], v[j], v[(j + 1) % v.size()]))
                throw MeshFailure("polygon edges intersect");
            }
          auto tris = detail::ear_clip(v);
          double longest = 0.0;
          for (const auto& t : tris)
            for (int k = 0; k < 3; ++k) longest = std::max(longest, (v[t[k]] - v[t[(k + 1) % 3]]).norm());
          return detail::subdivide(v, tris, std::max(1, int(std::ceil(longest / h_mesh - 1e-9))));
        }
      },
      shape);
  m.h_mesh = h_mesh;
  finalize_mesh(m);
  if (m.interior_count() == 0) throw MeshFailure("mesh has no interior nodes");
  return m;
}

/// Splits every triangle into four through edge midpoints (nested refinement).
inline Mesh2D refine_uniform(const Mesh2D& m) {
  Mesh2D r;
  r.nodes = m.nodes;
  r.h_mesh = 0.5 * m.h_mesh;
  std::map<std::pair<int, int>, int> mid;
  auto midpoint = [&](int a, int b) {
    auto k = std::make_pair(std::min(a, b), std::max(a, b));
    auto it = mid.find(k);
    if (it != mid.end()) return it->second;
    int id = int(r.nodes.size());
    r.nodes.push_back(0.5 * (m.nodes[a] + m.nodes[b]));
    mid[k] = id;
    return id;
  };
  for (const auto& t : m.triangles) {
    int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
    r.triangles.push_back({t[0], ab, ca});
    r.triangles.push_back({ab, t[1], bc});
    r.triangles.push_back({ca, bc, t[2]});
    r.triangles.push_back({ab, bc, ca});
  }
  finalize_mesh(r);
  return r;
}

inline Mesh2D scaled(const Mesh2D& m, double eps) {
  Mesh2D r = m;
  for (auto& p : r.nodes) p *= eps;
  r.h_mesh *= eps;
  return r;
}

inline Mesh2D rotated(const Mesh2D& m, double beta) {
  Mesh2D r = m;
  for (auto& p : r.nodes) p = rotate2(p, beta);
  return r;
}

inline void write_mesh(const Mesh2D& m, std::ostream& os) {
  os.precision(17);
  os << m.nodes.size() << ' ' << m.triangles.size() << ' ' << m.h_mesh << '\n';
  for (std::size_t i = 0; i < m.nodes.size(); ++i)
    os << m.nodes[i].x() << ' ' << m.nodes[i].y() << ' ' << (m.boundary[i] ? 1 : 0) << '\n';
  for (const auto& t : m.triangles) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

inline Mesh2D read_mesh(std::istream& is) {
  Mesh2D m;
  std::size_t nn = 0, nt = 0;
  if (!(is >> nn >> nt >> m.h_mesh)) throw MeshFailure("bad mesh header");
  m.nodes.resize(nn);
  m.boundary.resize(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    int b = 0;
    if (!(is >> m.nodes[i].x() >> m.nodes[i].y() >> b)) throw MeshFailure("bad node line");
    m.boundary[i] = b != 0;
  }
  m.triangles.resize(nt);
  for (auto& t : m.triangles)
    if (!(is >> t[0] >> t[1] >> t[2])) throw MeshFailure("bad triangle line");
  for (const auto& t : m.triangles)
    for (int v : t)
      if (v < 0 || std::size_t(v) >= nn) throw MeshFailure("triangle references a missing node");
  auto flags = m.boundary;
  finalize_mesh(m);
  if (flags != m.boundary) throw MeshFailure("boundary flags disagree with the triangulation");
  return m;
}

}  // namespace wsl
