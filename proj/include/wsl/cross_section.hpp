#pragma once

#include <Eigen/Sparse>
#include <array>
#include <cmath>
#include <memory>
#include <vector>

#include "wsl/mesh.hpp"
#include "wsl/shape.hpp"
#include "wsl/spectral.hpp"

namespace wsl {

using Triplets = std::vector<Eigen::Triplet<double>>;

/// Geometric data of one P1 triangle.
struct TriangleData {
  std::array<int, 3> v;
  double area;
  std::array<Vec2, 3> grad;
  Vec2 centroid;
  std::array<Vec2, 3> mid;  // mid[k] is the midpoint of edge (v[k], v[k+1])
};

/// u(t) = (t3, -t2), so that d_u = u . grad.
inline Vec2 angular_field(const Vec2& t) { return {t.y(), -t.x()}; }

/// P1 value of local basis function i at mid-edge point k.
inline double midedge_value(int i, int k) { return (i == k || i == (k + 1) % 3) ? 0.5 : 0.0; }

/// P1 Dirichlet finite-element space on a cross-section mesh and its assembled 2D matrices (interior dofs).
class CrossSectionFE {
 public:
  explicit CrossSectionFE(Mesh2D mesh) : mesh_(std::move(mesh)) {
    const int nn = int(mesh_.nodes.size());
    dof_.assign(nn, -1);
    for (int i = 0; i < nn; ++i)
      if (!mesh_.boundary[i]) {
        dof_[i] = int(node_.size());
        node_.push_back(i);
      }
    tris_.reserve(mesh_.triangles.size());
    for (const auto& t : mesh_.triangles) {
      TriangleData d;
      d.v = t;
      const Vec2 &p0 = mesh_.nodes[t[0]], &p1 = mesh_.nodes[t[1]], &p2 = mesh_.nodes[t[2]];
      d.area = triangle_area(mesh_, t);
      if (!(d.area > 0)) throw MeshFailure("inverted triangle");
      std::array<const Vec2*, 3> p = {&p0, &p1, &p2};
      for (int k = 0; k < 3; ++k) {
        const Vec2& a = *p[(k + 1) % 3];
        const Vec2& b = *p[(k + 2) % 3];
        d.grad[k] = Vec2(a.y() - b.y(), b.x() - a.x()) / (2.0 * d.area);
        d.mid[k] = 0.5 * (*p[k] + *p[(k + 1) % 3]);
      }
      d.centroid = (p0 + p1 + p2) / 3.0;
      tris_.push_back(d);
    }
    assemble();
  }

  const Mesh2D& mesh() const { return mesh_; }
  int size() const { return int(node_.size()); }
  int dof(int node) const { return dof_[node]; }
  int node(int dof) const { return node_[dof]; }
  const std::vector<TriangleData>& triangles() const { return tris_; }

  const SpMat& stiffness() const { return K_; }
  const SpMat& mass() const { return M_; }
  /// (d_u f, d_u g) with d_u evaluated at triangle centroids.
  const SpMat& twist_stiffness() const { return U_; }
  /// (f, d_u g) with both factors evaluated at triangle centroids.
  const SpMat& twist_mixed() const { return C_; }
  const SpMat& twist_stiffness_exact() const { return Ue_; }
  const SpMat& twist_mixed_exact() const { return Ce_; }

  Vec to_nodal(const Vec& interior) const {
    Vec f = Vec::Zero(Eigen::Index(mesh_.nodes.size()));
    for (int d = 0; d < size(); ++d) f[node_[d]] = interior[d];
    return f;
  }
  Vec to_interior(const Vec& nodal) const {
    Vec f(size());
    for (int d = 0; d < size(); ++d) f[d] = nodal[node_[d]];
    return f;
  }

  DiscretizationMeta meta() const {
    DiscretizationMeta m;
    m.h_mesh = mesh_.h_mesh;
    m.mesh_nodes = int(mesh_.nodes.size());
    m.interior_nodes = size();
    return m;
  }

 private:
  void assemble() {
    Triplets k, m, u, c, ue, ce;
    for (const auto& d : tris_) {
      Vec2 uc = angular_field(d.centroid);
      Eigen::Matrix2d uu = Eigen::Matrix2d::Zero();
      std::array<Vec2, 3> phi_u;  // integral of phi_i * u
      for (int q = 0; q < 3; ++q) {
        Vec2 um = angular_field(d.mid[q]);
        uu += um * um.transpose() * (d.area / 3.0);
      }
      for (int i = 0; i < 3; ++i) {
        phi_u[i] = Vec2::Zero();
        for (int q = 0; q < 3; ++q) phi_u[i] += midedge_value(i, q) * angular_field(d.mid[q]) * (d.area / 3.0);
      }
      for (int i = 0; i < 3; ++i) {
        int di = dof_[d.v[i]];
        if (di < 0) continue;
        for (int j = 0; j < 3; ++j) {
          int dj = dof_[d.v[j]];
          if (dj < 0) continue;
          k.emplace_back(di, dj, d.area * d.grad[i].dot(d.grad[j]));
          m.emplace_back(di, dj, d.area / 12.0 * (i == j ? 2.0 : 1.0));
          u.emplace_back(di, dj, d.area * uc.dot(d.grad[i]) * uc.dot(d.grad[j]));
          c.emplace_back(di, dj, d.area / 3.0 * uc.dot(d.grad[j]));
          ue.emplace_back(di, dj, d.grad[i].dot(uu * d.grad[j]));
          ce.emplace_back(di, dj, phi_u[i].dot(d.grad[j]));
        }
      }
    }
    auto build = [&](SpMat& out, const Triplets& t) {
      out.resize(size(), size());
      out.setFromTriplets(t.begin(), t.end());
      out.makeCompressed();
    };
    build(K_, k);
    build(M_, m);
    build(U_, u);
    build(C_, c);
    build(Ue_, ue);
    build(Ce_, ce);
  }

  Mesh2D mesh_;
  std::vector<int> dof_, node_;
  std::vector<TriangleData> tris_;
  SpMat K_, M_, U_, C_, Ue_, Ce_;
};

/// First Dirichlet eigenpair of the cross-section; J1 is M-normalized and positive.
struct GroundMode {
  double E1 = 0.0;
  Vec J1;  // interior dofs
  double residual = 0.0;
};

inline GroundMode solve_ground_mode(const CrossSectionFE& fe, double tol = 1e-10) {
  AssembledForm f{fe.stiffness(), fe.mass(), "cross-section Dirichlet Laplacian", fe.meta()};
  auto r = lowest_eigenpairs(f, 1, tol);
  GroundMode g;
  g.E1 = r.eigenvalues[0];
  g.J1 = r.vectors.col(0);
  g.J1 /= std::sqrt(g.J1.dot(fe.mass() * g.J1));
  // sign fixed at the interior node nearest the area centroid
  Vec2 centroid = Vec2::Zero();
  double area = 0.0;
  for (const auto& t : fe.triangles()) centroid += t.area * t.centroid, area += t.area;
  centroid /= area;
  int best = 0;
  double dist = 1e300;
  for (int d = 0; d < fe.size(); ++d) {
    double e = (fe.mesh().nodes[fe.node(d)] - centroid).norm();
    if (e < dist) dist = e, best = d;
  }
  if (g.J1[best] < 0) g.J1 = -g.J1;
  Vec mj = fe.mass() * g.J1;
  g.residual = (fe.stiffness() * g.J1 - g.E1 * mj).norm() / mj.norm();
  return g;
}

/// Nodal d_u f from piecewise-constant gradients averaged with area weights (diagnostic strong form).
inline Vec angular_derivative(const CrossSectionFE& fe, const Vec& nodal) {
  const auto& nodes = fe.mesh().nodes;
  Vec out = Vec::Zero(Eigen::Index(nodes.size())), w = Vec::Zero(Eigen::Index(nodes.size()));
  for (const auto& t : fe.triangles()) {
    Vec2 g = Vec2::Zero();
    for (int i = 0; i < 3; ++i) g += nodal[t.v[i]] * t.grad[i];
    for (int i = 0; i < 3; ++i) {
      out[t.v[i]] += t.area * angular_field(nodes[t.v[i]]).dot(g);
      w[t.v[i]] += t.area;
    }
  }
  return out.cwiseQuotient(w);
}

/// Norm of d_u f in L2(omega) under the assembled twist form.
inline double angular_norm(const CrossSectionFE& fe, const Vec& interior) {
  return std::sqrt(std::max(0.0, interior.dot(fe.twist_stiffness() * interior)));
}

struct BAlphaResult {
  double lambda = 0.0;
  Vec f;
};

/// Lowest eigenvalue of ||grad f||^2 - E1 ||f||^2 + alpha0^2 ||d_u f||^2 over the Dirichlet space.
inline BAlphaResult solve_b_alpha0(const CrossSectionFE& fe, const GroundMode& g, double alpha0, double tol = 1e-10) {
  SpMat A = fe.stiffness() + (alpha0 * alpha0) * fe.twist_stiffness();
  AssembledForm f{A, fe.mass(), "twisted cross-section form", fe.meta()};
  auto r = lowest_eigenpairs(f, 1, tol);
  return {r.eigenvalues[0] - g.E1, r.vectors.col(0)};
}

struct COmegaResult {
  double value = 0.0;
  bool invariant = false;
  std::vector<double> alpha0 = {0.1, 0.05, 0.025};
  std::vector<double> ratios;       // lambda(alpha0) / alpha0^2
  double first_order = 0.0;         // (d_u J1, d_u J1)
  double second_order_coeff = 0.0;  // sum |(J_n, U J1)|^2 / (E_n - E1)
  int perturbation_modes = 0;
};

/// Second-order perturbation coefficients of lambda(alpha0) from the lowest `modes` cross-section eigenpairs.
inline void perturbation_estimate(const CrossSectionFE& fe, const GroundMode& g, int modes, COmegaResult& out) {
  Vec uj = fe.twist_stiffness() * g.J1;
  out.first_order = g.J1.dot(uj);
  modes = std::min(modes, fe.size());
  AssembledForm f{fe.stiffness(), fe.mass(), "cross-section Dirichlet Laplacian", fe.meta()};
  auto r = lowest_eigenpairs(f, modes, 1e-9);
  double sum = 0.0;
  for (int n = 1; n < modes; ++n) {
    double c = r.vectors.col(n).dot(uj);
    sum += c * c / (r.eigenvalues[n] - r.eigenvalues[0]);
  }
  out.second_order_coeff = sum;
  out.perturbation_modes = modes;
}

/// C(omega) as the small-alpha0 limit of lambda(alpha0)/alpha0^2 by two-level Richardson extrapolation.
inline COmegaResult extract_c_omega(const CrossSectionFE& fe, const GroundMode& g, const CrossSectionShape& shape) {
  COmegaResult out;
  if (is_rotationally_invariant(shape)) {
    out.invariant = true;
    out.value = 0.0;
    return out;
  }
  for (double a : out.alpha0) out.ratios.push_back(solve_b_alpha0(fe, g, a).lambda / (a * a));
  const auto& q = out.ratios;
  double slack = 1e-9 * std::max(1.0, std::abs(q[2]));
  if (q[0] > q[1] + slack || q[1] > q[2] + slack) throw ExtrapolationUnstable("lambda(alpha0)/alpha0^2 is not monotone in alpha0");
  double r1 = (4.0 * q[1] - q[0]) / 3.0, r2 = (4.0 * q[2] - q[1]) / 3.0;
  out.value = (16.0 * r2 - r1) / 15.0;
  return out;
}

}  // namespace wsl
