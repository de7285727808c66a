#pragma once

#include "wsl/assembly.hpp"

namespace wsl {

/// Form shifted by the discrete cross-section threshold: (A - E1 B, B).
inline AssembledForm shifted_by_threshold(const AssembledForm& f, double E1) {
  AssembledForm s = f;
  s.A = f.A - E1 * f.B;
  s.A.makeCompressed();
  s.description = f.description + " minus E1";
  return s;
}

/// Lowest eigenvalue of the twisted straight-tube form minus E1 on the given discretization.
inline double lambda_alpha_I(const Profile1D& alpha, const TubeDiscretization& d, const GroundMode& g, double tol = 1e-10) {
  auto form = shifted_by_threshold(assemble_straight_twisted(alpha, d), g.E1);
  return lowest_eigenpairs(form, 1, tol).eigenvalues[0];
}

/// Natural-ends lambda(alpha, I) on a uniform grid of spacing ds over I = (lo, hi).
inline double lambda_alpha_I(const Profile1D& alpha, double lo, double hi, std::shared_ptr<const CrossSectionFE> fe,
                             const GroundMode& g, double ds, double tol = 1e-10) {
  TubeDiscretization d(uniform_s_grid(lo, hi, ds), std::move(fe), EndCondition::natural);
  return lambda_alpha_I(alpha, d, g, tol);
}

}  // namespace wsl
