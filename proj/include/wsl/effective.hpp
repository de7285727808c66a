#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "wsl/assembly.hpp"
#include "wsl/cross_section.hpp"

namespace wsl {

/// -d^2/ds^2 + V on a bounded interval with Dirichlet ends, discretized by P1 elements on `s`.
struct EffectiveOperator1D {
  std::vector<double> s;
  std::function<double(double)> potential;
  std::vector<double> V;  // potential at the nodes
  double c_omega = 0.0;
};

inline EffectiveOperator1D effective_operator(std::vector<double> s, std::function<double(double)> potential, double c_omega = 0.0) {
  if (s.size() < 3) throw DimensionMismatch("effective operator needs at least one interior node");
  for (std::size_t i = 1; i < s.size(); ++i)
    if (!(s[i] > s[i - 1])) throw DimensionMismatch("s-grid must increase strictly");
  EffectiveOperator1D op;
  op.V.reserve(s.size());
  for (double x : s) op.V.push_back(potential(x));
  op.s = std::move(s);
  op.potential = std::move(potential);
  op.c_omega = c_omega;
  return op;
}

/// V = -kappa^2/4 + C(omega) (tau - theta_dot)^2 from the tube data.
inline EffectiveOperator1D effective_operator(const TubeSpec& spec, double c_omega, std::vector<double> s) {
  auto curve = std::make_shared<const CurveData>(spec.curve);
  auto angle = std::make_shared<const AngleFunction>(spec.angle);
  auto V = [curve, angle, c_omega](double x) {
    double k = curve->kappa(x), w = curve->tau(x) - angle->theta_dot(x);
    return -0.25 * k * k + c_omega * w * w;
  };
  return effective_operator(std::move(s), V, c_omega);
}

inline AssembledForm effective_form(const EffectiveOperator1D& op) {
  const auto& s = op.s;
  const int n = int(s.size()) - 2;
  Triplets a, b;
  for (std::size_t e = 0; e + 1 < s.size(); ++e) {
    double len = s[e + 1] - s[e], mid = 0.5 * (s[e] + s[e + 1]);
    int dofs[2] = {int(e) - 1, int(e)};
    if (e + 1 == s.size() - 1) dofs[1] = -1;
    for (double sign : {-1.0, 1.0}) {
      double sg = mid + sign * detail::gauss_offset * len;
      double phi[2] = {(s[e + 1] - sg) / len, (sg - s[e]) / len};
      double dphi[2] = {-1.0 / len, 1.0 / len};
      double v = op.potential(sg);
      for (int i = 0; i < 2; ++i) {
        if (dofs[i] < 0) continue;
        for (int j = 0; j < 2; ++j) {
          if (dofs[j] < 0) continue;
          a.emplace_back(dofs[i], dofs[j], 0.5 * len * (dphi[i] * dphi[j] + v * phi[i] * phi[j]));
          b.emplace_back(dofs[i], dofs[j], 0.5 * len * phi[i] * phi[j]);
        }
      }
    }
  }
  AssembledForm f;
  f.A.resize(n, n);
  f.B.resize(n, n);
  f.A.setFromTriplets(a.begin(), a.end());
  f.B.setFromTriplets(b.begin(), b.end());
  f.A.makeCompressed();
  f.B.makeCompressed();
  f.description = "effective 1D operator -d2/ds2 - kappa^2/4 + C(omega)(tau - theta_dot)^2";
  f.meta.s_lo = s.front();
  f.meta.s_hi = s.back();
  f.meta.s_nodes = int(s.size());
  f.meta.end_condition = "dirichlet";
  return f;
}

inline std::vector<double> effective_eigenvalues(const EffectiveOperator1D& op, int k, double tol = 1e-11) {
  return lowest_eigenpairs(effective_form(op), k, tol).eigenvalues;
}

struct ThinLimitRow {
  double eps = 0.0;
  int j = 0;
  double lambda = 0.0;     // full-tube eigenvalue
  double threshold = 0.0;  // E1 / eps^2
  double mu = 0.0;
  double d = 0.0;          // lambda - threshold - mu
};

struct ThinLimitStudy {
  double E1 = 0.0;
  double c_omega = 0.0;
  std::vector<double> mu;
  std::vector<ThinLimitRow> rows;
  std::vector<std::string> warnings;

  /// |d_j| along the eps list in input order.
  std::vector<double> abs_defect(int j) const {
    std::vector<double> out;
    for (const auto& r : rows)
      if (r.j == j) out.push_back(std::abs(r.d));
    return out;
  }
  bool strictly_decreasing(int j) const {
    auto d = abs_defect(j);
    for (std::size_t i = 1; i < d.size(); ++i)
      if (!(d[i] < d[i - 1])) return false;
    return true;
  }
};

inline constexpr double thin_limit_conditioning = 1e12;

/// Full-tube eigenvalues over eps * omega against E1/eps^2 + mu_j, Dirichlet ends on the s-grid.
/// The cross-section mesh is the eps = 1 mesh mapped by eps, so E1(eps omega) = E1/eps^2 exactly.
inline ThinLimitStudy thin_limit_study(const TubeSpec& spec, const Mesh2D& mesh, const std::vector<double>& eps_list, int j_max,
                                       const std::vector<double>& s_nodes, double c_omega, double tol = 1e-10) {
  ThinLimitStudy out;
  CrossSectionFE fe1(mesh);
  out.E1 = solve_ground_mode(fe1).E1;
  out.c_omega = c_omega;
  out.mu = effective_eigenvalues(effective_operator(spec, c_omega, s_nodes), j_max);
  double a = farthest_radius(spec.shape);
  for (double eps : eps_list) {
    if (!(eps > 0)) throw DimensionMismatch("eps must be positive");
    double margin = 1.0 - a * eps * spec.curve.kappa_sup();
    if (!(margin > 0)) throw HypothesisViolated("a * eps * sup(kappa) >= 1 at eps = " + std::to_string(eps));
    double threshold = out.E1 / (eps * eps);
    if (threshold > thin_limit_conditioning)
      out.warnings.push_back("E1/eps^2 = " + std::to_string(threshold) + " exceeds the conditioning guard at eps = " + std::to_string(eps));
    TubeSpec se = spec;
    se.shape = scaled(spec.shape, eps);
    auto fe = std::make_shared<const CrossSectionFE>(scaled(mesh, eps));
    TubeDiscretization d(s_nodes, fe, EndCondition::dirichlet);
    auto r = lowest_eigenpairs(assemble_full_tube(se, d), j_max, tol);
    for (int j = 0; j < j_max; ++j) {
      ThinLimitRow row;
      row.eps = eps;
      row.j = j + 1;
      row.lambda = r.eigenvalues[j];
      row.threshold = threshold;
      row.mu = out.mu[j];
      row.d = row.lambda - threshold - row.mu;
      out.rows.push_back(row);
    }
  }
  return out;
}

}  // namespace wsl
