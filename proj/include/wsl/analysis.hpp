#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "wsl/effective.hpp"
#include "wsl/threshold.hpp"

namespace wsl {

// ---------------------------------------------------------------------------
// Bending certificates

struct BendingOptions {
  int n_start = 8;
  int max_doublings = 10;
};

struct BendingStep {
  double n = 0.0;
  double value = 0.0;
};

/// Trial function psi_n + eps phi with Q1[psi_n + eps phi] < 0.
struct BendingCertificate {
  double n = 0.0;
  double epsilon = 0.0;
  double value = 0.0;      // Q1 at the optimal epsilon
  double norm2 = 0.0;      // squared weighted norm of the trial function
  double rayleigh = 0.0;   // E1 + value / norm2
  double center = 0.0;     // centre of the cutoff psi_n
  double xi_lo = 0.0, xi_hi = 0.0;
  std::vector<BendingStep> history;
  Vec trial;
};

/// Cutoff equal to 1 on |s - c| <= n/2, linear to 0 at |s - c| = n.
inline double cutoff(double s, double c, double n) { return std::clamp(2.0 - 2.0 * std::abs(s - c) / n, 0.0, 1.0); }

/// Hat on [lo, hi] with apex at the midpoint.
inline double hat(double s, double lo, double hi) {
  double m = 0.5 * (lo + hi), w = 0.5 * (hi - lo);
  return w > 0 ? std::max(0.0, 1.0 - std::abs(s - m) / w) : 0.0;
}

/// Largest run of the s-grid around the curvature maximum where kappa stays nonzero with one sign.
inline bool constant_sign_run(const CurveData& curve, const std::vector<double>& s, double& lo, double& hi) {
  std::size_t best = 0;
  double peak = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (std::abs(curve.kappa(s[i])) > peak) peak = std::abs(curve.kappa(s[i])), best = i;
  if (!(peak > 0)) return false;
  double cut = 1e-12 * peak, sgn = curve.kappa(s[best]) > 0 ? 1.0 : -1.0;
  auto inside = [&](std::size_t i) { return sgn * curve.kappa(s[i]) > cut; };
  std::size_t a = best, b = best;
  while (a > 0 && inside(a - 1)) --a;
  while (b + 1 < s.size() && inside(b + 1)) ++b;
  lo = a > 0 ? s[a - 1] : s[a];
  hi = b + 1 < s.size() ? s[b + 1] : s[b];
  return true;
}

/// Two-step trial-function certificate that the tube spectrum starts below E1, on the discrete full-tube form.
inline BendingCertificate certify_bending(const TubeSpec& spec, const TubeDiscretization& d, const GroundMode& g,
                                          const BendingOptions& opt = {}) {
  for (double s : spec.curve.s_grid())
    if (std::abs(spec.curve.tau(s) - spec.angle.theta_dot(s)) > 1e-10)
      throw HypothesisViolated("certify_bending needs tau - theta_dot = 0");
  const auto& s = d.s_nodes();
  const auto& fe = d.fe();
  const int nt = fe.size();
  auto form = assemble_full_tube(spec, d);
  SpMat Q1 = form.A - g.E1 * form.B;

  BendingCertificate c;
  bool bent = constant_sign_run(spec.curve, s, c.xi_lo, c.xi_hi);
  c.center = bent ? 0.5 * (c.xi_lo + c.xi_hi) : 0.5 * (s.front() + s.back());

  Vec phi = Vec::Zero(d.size());
  if (bent) {
    Vec radial(nt);
    for (std::size_t a = 0; a < s.size(); ++a) {
      int sd = d.sdof(int(a));
      double xi = hat(s[a], c.xi_lo, c.xi_hi);
      if (sd < 0 || xi == 0.0) continue;
      double th = spec.angle.theta(s[a]), ct = std::cos(th), st = std::sin(th);
      for (int i = 0; i < nt; ++i) {
        const Vec2& t = fe.mesh().nodes[fe.node(i)];
        radial[i] = (t.x() * ct + t.y() * st) * g.J1[i];
      }
      phi.segment(Eigen::Index(sd) * nt, nt) = xi * radial;
    }
  }
  Vec qphi = Q1 * phi;
  const double q11 = phi.dot(qphi);

  double n = opt.n_start;
  for (int k = 0; k <= opt.max_doublings; ++k, n *= 2) {
    if (c.center - n < s.front() - 1e-12 || c.center + n > s.back() + 1e-12) break;
    double cen = c.center, nn = n;
    Vec psi = d.product([cen, nn](double x) { return cutoff(x, cen, nn); }, g.J1);
    double q00 = psi.dot(Q1 * psi), q01 = psi.dot(qphi);
    double eps = q11 > 0 ? -q01 / q11 : 0.0;
    double value = q00 + 2.0 * eps * q01 + eps * eps * q11;
    c.history.push_back({n, value});
    if (value < 0) {
      c.n = n;
      c.epsilon = eps;
      c.value = value;
      c.trial = psi + eps * phi;
      c.norm2 = c.trial.dot(form.B * c.trial);
      c.rayleigh = g.E1 + value / c.norm2;
      return c;
    }
  }
  throw NoCertificateFound("no negative Q1 on the cutoff schedule up to n = " + std::to_string(n / 2));
}

// ---------------------------------------------------------------------------
// Weyl probe

/// phi(s/n - n) cos(k s) J1(t) with phi(x) = exp(-1/(1 - x^2)); support (n^2 - n, n^2 + n).
inline Vec weyl_probe(const TubeDiscretization& d, const GroundMode& g, double n, double k) {
  return d.product(
      [n, k](double s) {
        double x = s / n - n;
        return std::abs(x) < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) * std::cos(k * s) : 0.0;
      },
      g.J1);
}

// ---------------------------------------------------------------------------
// Hardy scan

struct HardyStep {
  double c = 0.0;
  bool passed = false;
};

struct HardyScanResult {
  double c_star = 0.0;
  double c_hi = 0.0;
  double s0 = 0.0;
  double j_lo = 0.0, j_hi = 0.0;
  double lambda_J = 0.0;
  bool vacuous = false;  // rotationally invariant cross-section
  std::string weight = "1/(1+(s-s0)^2)";
  std::vector<HardyStep> history;
  int factorizations = 0;
};

enum class HardyMethod { eigen, bisection };

struct HardyOptions {
  HardyMethod method = HardyMethod::eigen;
  double tol = 1e-9;
  double bracket = 1e-3;  // relative gap of the failing check above c_star
  int bisections = 40;
  int max_doublings = 60;
  bool has_s0 = false;
  double s0 = 0.0;
};

inline double hardy_weight(double s, double s0) { return 1.0 / (1.0 + (s - s0) * (s - s0)); }

/// Support of alpha clipped to the grid, as the interval J.
inline void support_interval(const Profile1D& alpha, const std::vector<double>& s, double& lo, double& hi) {
  lo = std::max(alpha.support_lo, s.front());
  hi = std::min(alpha.support_hi, s.back());
  if (!std::isfinite(alpha.support_lo) || !std::isfinite(alpha.support_hi)) {
    lo = s.back(), hi = s.front();
    for (double x : s)
      if (alpha(x) != 0.0) lo = std::min(lo, x), hi = std::max(hi, x);
  }
  if (!(hi > lo)) throw ConfigError("twist profile has no support on the s-grid");
}

/// Grid nodes of d inside [lo, hi], padded with the interval ends.
inline std::vector<double> sub_grid(const std::vector<double>& s, double lo, double hi) {
  std::vector<double> out{lo};
  for (double x : s)
    if (x > lo + 1e-12 && x < hi - 1e-12) out.push_back(x);
  out.push_back(hi);
  return out;
}

/// Largest c with A - E1 B - c W >= -tol on the natural-ends discretization, W the weight 1/(1+(s-s0)^2).
inline HardyScanResult hardy_scan(const Profile1D& alpha, const TubeDiscretization& d, const GroundMode& g,
                                  const CrossSectionShape& shape, const HardyOptions& opt = {}) {
  HardyScanResult r;
  r.vacuous = is_rotationally_invariant(shape);
  support_interval(alpha, d.s_nodes(), r.j_lo, r.j_hi);
  r.s0 = opt.has_s0 ? opt.s0 : 0.5 * (r.j_lo + r.j_hi);

  TubeDiscretization dj(sub_grid(d.s_nodes(), r.j_lo, r.j_hi), d.fe_ptr(), EndCondition::natural);
  r.lambda_J = lambda_alpha_I(alpha, dj, g);

  auto form = shifted_by_threshold(assemble_straight_twisted(alpha, d), g.E1);
  const double s0 = r.s0;
  SpMat W = assemble_weighted_mass(d, [s0](double s) { return hardy_weight(s, s0); });
  SpectrumSlicer slicer(form.A, form.B);
  auto passes = [&](double c) {
    bool ok = slicer.bounded_below(W, c, opt.tol);
    r.history.push_back({c, ok});
    return ok;
  };

  double lo = 0.0, hi = 0.0;
  if (opt.method == HardyMethod::eigen) {
    // c_star is the lowest eigenvalue of (A - E1 B + tol B, W); two inertia checks bracket it
    AssembledForm pencil{SpMat(form.A + opt.tol * form.B), W, "Hardy pencil", form.meta};
    double est = std::max(lowest_eigenpairs(pencil, 1, 1e-10).eigenvalues[0], 0.0);
    lo = est * (1.0 - 1e-6);
    hi = est * (1.0 + opt.bracket);
    if (!passes(lo)) {
      hi = lo, lo = 0.0;
    } else if (passes(hi)) {
      lo = hi;
      hi = 0.0;
    }
  }
  if (opt.method == HardyMethod::bisection || hi == 0.0) {
    double len = r.j_hi - r.j_lo;
    hi = std::max({r.lambda_J * (1.0 + 0.25 * len * len), 2.0 * lo, 0.0});
    if (!(hi > 0)) hi = 1.0;
    int doublings = 0;
    while (passes(hi)) {
      hi *= 2.0;
      if (++doublings > opt.max_doublings) throw SolverNoConvergence("Hardy constant unbounded: no failing c found");
    }
  }
  bool bracketed = opt.method == HardyMethod::eigen && lo > 0 && hi <= lo * (1.0 + 2.0 * opt.bracket);
  int steps = bracketed ? 0 : opt.bisections;
  for (int i = 0; i < steps; ++i) {
    double mid = 0.5 * (lo + hi);
    if (passes(mid))
      lo = mid;
    else
      hi = mid;
  }
  r.c_star = lo;
  r.c_hi = hi;
  r.factorizations = slicer.factorizations();
  return r;
}

// ---------------------------------------------------------------------------
// Partitioned lower bound

struct Interval {
  double lo = 0.0, hi = 0.0;
};

struct PartitionBound {
  std::vector<Interval> parts;
  std::vector<double> lambdas;  // lambda(alpha, I_j)
  double min_slack = 0.0;       // over the random vectors
  double ground_slack = 0.0;
  double ground_value = 0.0;    // lowest eigenvalue of (A - E1 B, B)
  int vectors = 0;
  bool passed = false;
};

/// Checks psi^T (A - E1 B) psi >= sum_j lambda(alpha, I_j) psi^T M_j psi on B-normalized vectors.
/// Partition endpoints must be nodes of the s-grid.
inline PartitionBound partition_lower_bound(const Profile1D& alpha, const TubeDiscretization& d, const GroundMode& g,
                                            std::vector<Interval> parts, int random_vectors = 100,
                                            std::uint64_t seed = 0x5eedf00dULL, double tol = 1e-8) {
  std::sort(parts.begin(), parts.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  const auto& s = d.s_nodes();
  auto is_node = [&](double x) {
    for (double y : s)
      if (std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(x))) return true;
    return false;
  };
  for (std::size_t j = 0; j < parts.size(); ++j) {
    if (!(parts[j].hi > parts[j].lo)) throw OverlappingPartition("empty partition interval");
    if (j > 0 && parts[j].lo < parts[j - 1].hi - 1e-12) throw OverlappingPartition("partition intervals overlap");
    if (parts[j].lo < s.front() - 1e-12 || parts[j].hi > s.back() + 1e-12) throw OverlappingPartition("partition leaves the interval");
    if (!is_node(parts[j].lo) || !is_node(parts[j].hi)) throw DimensionMismatch("partition endpoints must be s-grid nodes");
  }

  PartitionBound out;
  out.parts = parts;
  auto form = shifted_by_threshold(assemble_straight_twisted(alpha, d), g.E1);
  SpMat rhs(d.size(), d.size());
  for (const auto& p : parts) {
    TubeDiscretization dj(sub_grid(s, p.lo, p.hi), d.fe_ptr(), EndCondition::natural);
    double l = lambda_alpha_I(alpha, dj, g);
    out.lambdas.push_back(l);
    double lo = p.lo, hi = p.hi;
    rhs += l * assemble_weighted_mass(d, [lo, hi](double x) { return x > lo && x < hi ? 1.0 : 0.0; });
  }
  auto slack = [&](const Vec& v) { return (v.dot(form.A * v) - v.dot(rhs * v)) / v.dot(form.B * v); };

  // random vectors smoothed by one shifted inverse step, so they carry low-energy content
  ShiftedCholesky chol(detail::pattern_union(form.A, form.B));
  if (!chol.factorize(detail::shifted(form.A, form.B, -1.0))) throw FactorizationFailure("A - E1 B + B is not positive definite");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  out.min_slack = 1e300;
  for (int k = 0; k < random_vectors; ++k) {
    Vec r(d.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = nd(rng);
    Vec v = chol.solve(Vec(form.B * r));
    out.min_slack = std::min(out.min_slack, slack(v));
  }
  out.vectors = random_vectors;
  auto ground = lowest_eigenpairs(form, 1, 1e-10);
  out.ground_value = ground.eigenvalues[0];
  out.ground_slack = slack(ground.vectors.col(0));
  out.passed = out.min_slack >= -tol && out.ground_slack >= -tol;
  return out;
}

// ---------------------------------------------------------------------------
// Mild bending against twisting

struct MildBendingRow {
  double eps0 = 0.0;
  double half_length = 0.0;
  double lambda1 = 0.0;
  double E1 = 0.0;
  bool above_threshold = false;  // lambda1 >= E1 - 10 tol
};

struct MildBendingScan {
  double c_star = 0.0;
  double s0 = 0.0;
  double a = 0.0;
  double E1 = 0.0;
  double eps0_star = 0.0;  // largest eps0 passing the pointwise sufficient condition
  std::vector<MildBendingRow> rows;
};

/// Pointwise sufficient condition for mild-bending stability at strength eps0, at each grid point.
inline std::vector<double> mild_condition(double eps0, double a, double E1, double c_star, double s0, const std::vector<double>& s) {
  double ksup = 0.0;
  for (double x : s) ksup = std::max(ksup, eps0 / (1.0 + x * x));
  double pre = (1.0 - a * ksup) / ((1.0 + a * ksup) * (1.0 + a * ksup));
  std::vector<double> out;
  out.reserve(s.size());
  for (double x : s) {
    double k = eps0 / (1.0 + x * x);
    double hm = 1.0 - a * k, hp = 1.0 + a * k;
    double gx = hm / (hp * hp) - hp;
    out.push_back(pre * c_star * hardy_weight(x, s0) + E1 * gx);
  }
  return out;
}

inline double mild_condition_min(double eps0, double a, double E1, double c_star, double s0, const std::vector<double>& s) {
  auto v = mild_condition(eps0, a, E1, c_star, s0, s);
  return *std::min_element(v.begin(), v.end());
}

/// Largest |g|(1 + s^2) over the grid, g = h-/h+^2 - h+ for kappa = eps0/(1+s^2).
inline double mild_g_decay(double eps0, double a, const std::vector<double>& s) {
  double m = 0.0;
  for (double x : s) {
    double k = eps0 / (1.0 + x * x), hm = 1.0 - a * k, hp = 1.0 + a * k;
    m = std::max(m, std::abs(hm / (hp * hp) - hp) * (1.0 + x * x));
  }
  return m;
}

/// Closed-form bound on |g|(1+s^2): a eps0 (4 + 3 a eps0 + (a eps0)^2).
inline double mild_g_bound(double eps0, double a) {
  double x = a * eps0;
  return x * (4.0 + 3.0 * x + x * x);
}

/// Certified eps0* by bisection on the pointwise condition; the condition is monotone in eps0.
inline double certified_eps0(double a, double E1, double c_star, double s0, const std::vector<double>& s, int steps = 60) {
  if (!(c_star > 0)) return 0.0;
  double lo = 0.0, hi = 1.0 / a;
  for (int i = 0; i < steps; ++i) {
    double mid = 0.5 * (lo + hi);
    if (mild_condition_min(mid, a, E1, c_star, s0, s) >= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

/// Tube with kappa = eps0/(1+s^2), planar centreline, and the given twist rate theta_dot.
inline TubeSpec mild_tube(double eps0, const Profile1D& twist, const CrossSectionShape& shape, double L, double ds_curve = 0.01) {
  TubeSpec spec;
  spec.curve = curves::mild(eps0, -L, L, ds_curve);
  std::vector<double> rate;
  for (double x : spec.curve.s_grid()) rate.push_back(twist.trivial() ? 0.0 : twist(x));
  spec.angle = AngleFunction::from_rate(spec.curve.s_grid(), rate, 0.0);
  spec.shape = shape;
  spec.half_length = L;
  return spec;
}

/// Lowest Dirichlet-ends eigenvalue of the full mild-bending tube over the s-grid.
inline MildBendingRow mild_bending_eigen(double eps0, const Profile1D& twist, const CrossSectionShape& shape,
                                         std::shared_ptr<const CrossSectionFE> fe, const GroundMode& g,
                                         const std::vector<double>& s, double tol = 1e-10) {
  MildBendingRow row;
  row.eps0 = eps0;
  row.half_length = std::max(std::abs(s.front()), std::abs(s.back()));
  auto spec = mild_tube(eps0, twist, shape, row.half_length);
  TubeDiscretization d(s, std::move(fe), EndCondition::dirichlet);
  row.lambda1 = lowest_eigenpairs(assemble_full_tube(spec, d), 1, tol).eigenvalues[0];
  row.E1 = g.E1;
  row.above_threshold = row.lambda1 >= g.E1 - 10.0 * tol;
  return row;
}

}  // namespace wsl
