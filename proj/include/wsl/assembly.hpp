#pragma once

#include <unsupported/Eigen/KroneckerProduct>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "wsl/cross_section.hpp"
#include "wsl/geometry.hpp"
#include "wsl/profile.hpp"

namespace wsl {

enum class EndCondition { dirichlet, natural };

inline std::string to_string(EndCondition e) { return e == EndCondition::dirichlet ? "dirichlet" : "natural"; }

/// Arc-length grid: spacing ds inside [core_lo, core_hi], growing linearly by `growth` per unit distance up to ds_far outside.
struct SGridSpec {
  double lo = -1.0;
  double hi = 1.0;
  double ds = 0.1;
  double ds_far = 0.0;  // 0 keeps the grid uniform
  double core_lo = 0.0;
  double core_hi = 0.0;
  double growth = 0.1;
  std::vector<double> breakpoints;  // forced nodes
};

inline std::vector<double> build_s_grid(const SGridSpec& g) {
  if (!(g.hi > g.lo) || !(g.ds > 0)) throw ConfigError("s-grid needs hi > lo and ds > 0");
  auto spacing = [&](double s) {
    if (!(g.ds_far > g.ds)) return g.ds;
    double d = s < g.core_lo ? g.core_lo - s : (s > g.core_hi ? s - g.core_hi : 0.0);
    return std::min(g.ds_far, g.ds + g.growth * d);
  };
  std::vector<double> cuts = {g.lo, g.hi};
  for (double b : g.breakpoints) {
    if (b < g.lo - 1e-12 || b > g.hi + 1e-12) throw OverlappingPartition("breakpoint outside the grid range");
    cuts.push_back(std::clamp(b, g.lo, g.hi));
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }), cuts.end());
  std::vector<double> s = {cuts.front()};
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    double a = cuts[c], b = cuts[c + 1];
    const int fine = 2000;
    std::vector<double> cum(fine + 1, 0.0);
    for (int i = 0; i < fine; ++i) {
      double x = a + (b - a) * (i + 0.5) / fine;
      cum[i + 1] = cum[i] + (b - a) / fine / spacing(x);
    }
    int n = std::max(1, int(std::ceil(cum.back() - 1e-9)));
    for (int k = 1; k < n; ++k) {
      double target = cum.back() * k / n;
      auto it = std::lower_bound(cum.begin(), cum.end(), target);
      int i = int(it - cum.begin()) - 1;
      double frac = (target - cum[i]) / (cum[i + 1] - cum[i]);
      s.push_back(a + (b - a) * (i + frac) / fine);
    }
    s.push_back(b);
  }
  return s;
}

inline std::vector<double> uniform_s_grid(double lo, double hi, double ds) { 
  SGridSpec g;
  g.lo = lo, g.hi = hi, g.ds = ds;
  return build_s_grid(g);
}

/// Tensor-product P1 discretization of I x omega.
class TubeDiscretization {
 public:
  TubeDiscretization(std::vector<double> s_nodes, std::shared_ptr<const CrossSectionFE> fe, EndCondition end)
      : s_(std::move(s_nodes)), fe_(std::move(fe)), end_(end) {
    if (s_.size() < 2) throw DimensionMismatch("s-grid needs at least two nodes");
    for (std::size_t i = 1; i < s_.size(); ++i)
      if (!(s_[i] > s_[i - 1])) throw DimensionMismatch("s-grid must increase strictly");
    sdof_.assign(s_.size(), -1);
    int next = 0;
    for (std::size_t a = 0; a < s_.size(); ++a) {
      bool end_node = a == 0 || a + 1 == s_.size();
      if (end_ == EndCondition::dirichlet && end_node) continue;
      sdof_[a] = next++;
    }
    ns_ = next;
    if (ns_ == 0) throw DimensionMismatch("no active s-nodes");
  }

  const std::vector<double>& s_nodes() const { return s_; }
  const CrossSectionFE& fe() const { return *fe_; }
  std::shared_ptr<const CrossSectionFE> fe_ptr() const { return fe_; }
  EndCondition end_condition() const { return end_; }
  int s_dofs() const { return ns_; }
  int t_dofs() const { return fe_->size(); }
  int size() const { return ns_ * fe_->size(); }
  int sdof(int s_node) const { return sdof_[s_node]; }
  int index(int s_dof, int t_dof) const { return s_dof * fe_->size() + t_dof; }
  double lo() const { return s_.front(); }
  double hi() const { return s_.back(); }

  /// Product vector f(s_a) g_i over the active dofs.
  Vec product(const std::function<double(double)>& f, const Vec& g) const {
    Vec v(size());
    for (std::size_t a = 0; a < s_.size(); ++a) {
      int d = sdof_[a];
      if (d < 0) continue;
      v.segment(Eigen::Index(d) * t_dofs(), t_dofs()) = f(s_[a]) * g;
    }
    return v;
  }

  DiscretizationMeta meta() const {
    DiscretizationMeta m = fe_->meta();
    m.ds_min = 1e300;
    m.ds_max = 0.0;
    for (std::size_t i = 1; i < s_.size(); ++i) {
      m.ds_min = std::min(m.ds_min, s_[i] - s_[i - 1]);
      m.ds_max = std::max(m.ds_max, s_[i] - s_[i - 1]);
    }
    m.s_lo = s_.front();
    m.s_hi = s_.back();
    m.s_nodes = int(s_.size());
    m.end_condition = to_string(end_);
    return m;
  }

 private:
  std::vector<double> s_;
  std::shared_ptr<const CrossSectionFE> fe_;
  EndCondition end_;
  std::vector<int> sdof_;
  int ns_ = 0;
};

namespace detail {

inline constexpr double gauss_offset = 0.28867513459481288225;  // 1 / (2 sqrt 3)

/// Element-wise 2-point Gauss assembly of a 1D bilinear form on the active s-dofs.
/// kernel(s, phi_a, dphi_a, phi_b, dphi_b) is integrated for every local pair.
template <class Kernel>
SpMat assemble_1d(const TubeDiscretization& d, Kernel kernel) {
  const auto& s = d.s_nodes();
  Triplets t;
  for (std::size_t e = 0; e + 1 < s.size(); ++e) {
    double len = s[e + 1] - s[e], mid = 0.5 * (s[e] + s[e + 1]);
    int dofs[2] = {d.sdof(int(e)), d.sdof(int(e + 1))};
    double dphi[2] = {-1.0 / len, 1.0 / len};
    for (double sign : {-1.0, 1.0}) {
      double sg = mid + sign * gauss_offset * len;
      double phi[2] = {(s[e + 1] - sg) / len, (sg - s[e]) / len};
      for (int a = 0; a < 2; ++a) {
        if (dofs[a] < 0) continue;
        for (int b = 0; b < 2; ++b) {
          if (dofs[b] < 0) continue;
          t.emplace_back(dofs[a], dofs[b], 0.5 * len * kernel(sg, phi[a], dphi[a], phi[b], dphi[b]));
        }
      }
    }
  }
  SpMat m(d.s_dofs(), d.s_dofs());
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

inline SpMat kron(const SpMat& p, const SpMat& q) {
  SpMat k = Eigen::kroneckerProduct(p, q);
  k.makeCompressed();
  return k;
}

}  // namespace detail

inline SpMat s_stiffness(const TubeDiscretization& d) {
  return detail::assemble_1d(d, [](double, double, double da, double, double db) { return da * db; });
}
inline SpMat s_mass(const TubeDiscretization& d, const std::function<double(double)>& w = nullptr) {
  if (!w) return detail::assemble_1d(d, [](double, double pa, double, double pb, double) { return pa * pb; });
  return detail::assemble_1d(d, [&](double s, double pa, double, double pb, double) { return w(s) * pa * pb; });
}

/// Matrix for the integral of w(s) |psi|^2 over the tube.
inline SpMat assemble_weighted_mass(const TubeDiscretization& d, const std::function<double(double)>& w) {
  const auto& s = d.s_nodes();
  for (std::size_t e = 0; e + 1 < s.size(); ++e) {
    double len = s[e + 1] - s[e], mid = 0.5 * (s[e] + s[e + 1]);
    for (double sign : {-1.0, 1.0})
      if (w(mid + sign * detail::gauss_offset * len) < 0) throw NegativeWeight("weight is negative at a quadrature point");
  }
  return detail::kron(s_mass(d, w), d.fe().mass());
}

/// Discrete form of ||d_1 psi - alpha d_u psi||^2 + ||grad' psi||^2 with the plain L2 inner product.
inline AssembledForm assemble_straight_twisted(const Profile1D& alpha, const TubeDiscretization& d) {
  const auto& fe = d.fe();
  SpMat S = s_stiffness(d);
  SpMat M1 = s_mass(d);
  SpMat D = detail::assemble_1d(d, [&](double s, double, double da, double pb, double) { return alpha(s) * da * pb; });
  SpMat Ma2 = detail::assemble_1d(d, [&](double s, double pa, double, double pb, double) {
    double a = alpha(s);
    return a * a * pa * pb;
  });
  AssembledForm f;
  f.A = detail::kron(S, fe.mass()) + detail::kron(M1, fe.stiffness());
  if (!alpha.trivial()) {
    SpMat DC = detail::kron(D, fe.twist_mixed());
    f.A = f.A - DC - SpMat(DC.transpose()) + detail::kron(Ma2, fe.twist_stiffness());
  }
  f.A.makeCompressed();
  f.B = detail::kron(M1, fe.mass());
  f.description = "twisted straight-tube form |d1 psi - alpha d_u psi|^2 + |grad' psi|^2 (alpha: " + alpha.name + ")";
  f.meta = d.meta();
  return f;
}

inline AssembledForm assemble_straight_twisted(double alpha0, const TubeDiscretization& d) {
  return assemble_straight_twisted(profile::constant(alpha0), d);
}

/// Discrete form of (d_i psi, G^{ij} d_j psi) with weight h, over the curved and twisted tube.
inline AssembledForm assemble_full_tube(const TubeSpec& spec, const TubeDiscretization& d) {
  const auto& fe = d.fe();
  const auto& s = d.s_nodes();
  const int nt = fe.size();
  if (s.front() < spec.curve.s_min() - 1e-12 || s.back() > spec.curve.s_max() + 1e-12)
    throw OutOfDomain("s-grid extends beyond the curve data");
  Triplets ta, tb;
  ta.reserve((s.size() - 1) * fe.triangles().size() * 72);
  tb.reserve((s.size() - 1) * fe.triangles().size() * 72);
  for (std::size_t e = 0; e + 1 < s.size(); ++e) {
    double len = s[e + 1] - s[e], mid = 0.5 * (s[e] + s[e + 1]);
    int sd[2] = {d.sdof(int(e)), d.sdof(int(e + 1))};
    double dphi[2] = {-1.0 / len, 1.0 / len};
    for (double sign : {-1.0, 1.0}) {
      double sg = mid + sign * detail::gauss_offset * len;
      double wg = 0.5 * len;
      double phi[2] = {(s[e + 1] - sg) / len, (sg - s[e]) / len};
      double kap = spec.curve.kappa(sg), th = spec.angle.theta(sg);
      double tw = spec.curve.tau(sg) - spec.angle.theta_dot(sg);
      for (const auto& T : fe.triangles()) {
        int td[3] = {fe.dof(T.v[0]), fe.dof(T.v[1]), fe.dof(T.v[2])};
        if (td[0] < 0 && td[1] < 0 && td[2] < 0) continue;
        MetricSample mc = metric_from(kap, th, tw, T.centroid);
        double hq[3];
        for (int q = 0; q < 3; ++q) hq[q] = metric_from(kap, th, tw, T.mid[q]).h;
        Vec2 g(mc.h2, mc.h3);
        double gg[3], mm[3][3], hm[3][3];
        for (int i = 0; i < 3; ++i) gg[i] = g.dot(T.grad[i]);
        double hbar = 0.0;
        for (int q = 0; q < 3; ++q) hbar += hq[q] / 3.0;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            mm[i][j] = T.area / 12.0 * (i == j ? 2.0 : 1.0);
            double acc = 0.0;
            for (int q = 0; q < 3; ++q) acc += hq[q] * midedge_value(i, q) * midedge_value(j, q);
            hm[i][j] = T.area / 3.0 * acc;
          }
        const double inv_h = 1.0 / mc.h;
        for (int a = 0; a < 2; ++a) {
          if (sd[a] < 0) continue;
          for (int i = 0; i < 3; ++i) {
            if (td[i] < 0) continue;
            int row = d.index(sd[a], td[i]);
            for (int b = 0; b < 2; ++b) {
              if (sd[b] < 0) continue;
              for (int j = 0; j < 3; ++j) {
                if (td[j] < 0) continue;
                int col = d.index(sd[b], td[j]);
                double along = inv_h * dphi[a] * dphi[b] * mm[i][j];
                double twist = inv_h * T.area *
                               (-(dphi[a] * phi[b] * gg[j] + dphi[b] * phi[a] * gg[i]) / 3.0 + phi[a] * phi[b] * gg[i] * gg[j]);
                double cross = phi[a] * phi[b] * T.area * hbar * T.grad[i].dot(T.grad[j]);
                ta.emplace_back(row, col, wg * (along + twist + cross));
                tb.emplace_back(row, col, wg * phi[a] * phi[b] * hm[i][j]);
              }
            }
          }
        }
      }
    }
  }
  AssembledForm f;
  const int n = d.s_dofs() * nt;
  f.A.resize(n, n);
  f.B.resize(n, n);
  f.A.setFromTriplets(ta.begin(), ta.end());
  f.B.setFromTriplets(tb.begin(), tb.end());
  f.A.makeCompressed();
  f.B.makeCompressed();
  f.description = "curved tube form (d_i psi, G^ij d_j psi) with weight h";
  f.meta = d.meta();
  return f;
}

/// Integral of h over the discretized tube with the same quadrature as the full-tube mass.
inline double weighted_volume(const TubeSpec& spec, const TubeDiscretization& d) {
  const auto& s = d.s_nodes();
  double vol = 0.0;
  for (std::size_t e = 0; e + 1 < s.size(); ++e) {
    double len = s[e + 1] - s[e], mid = 0.5 * (s[e] + s[e + 1]);
    for (double sign : {-1.0, 1.0}) {
      double sg = mid + sign * detail::gauss_offset * len;
      double kap = spec.curve.kappa(sg), th = spec.angle.theta(sg), tw = spec.curve.tau(sg) - spec.angle.theta_dot(sg);
      for (const auto& T : d.fe().triangles())
        for (int q = 0; q < 3; ++q) vol += 0.5 * len * T.area / 3.0 * metric_from(kap, th, tw, T.mid[q]).h;
    }
  }
  return vol;
}

/// Coordinate text export (row col value), one entry per line.
inline void write_coordinate(const SpMat& m, std::ostream& os) {
  os.precision(17);
  os << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it) os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

}  // namespace wsl
