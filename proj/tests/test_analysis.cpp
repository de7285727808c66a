#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wsl/analysis.hpp"

using namespace wsl;

namespace {

std::shared_ptr<const CrossSectionFE> fe_of(const CrossSectionShape& shape, double h) {
  return std::make_shared<const CrossSectionFE>(generate_mesh(shape, h));
}

std::vector<double> graded(double L, double ds, double far, double core) {
  SGridSpec g;
  g.lo = -L, g.hi = L, g.ds = ds, g.ds_far = far, g.core_lo = -core, g.core_hi = core;
  return build_s_grid(g);
}

TubeSpec bent_disc(double radius, double peak, double width, double L) {
  TubeSpec spec;
  spec.curve = curves::bump(peak, 0.0, width, -L, L, 0.01);
  spec.angle = tang_frame_angle(spec.curve, 0.0);
  spec.shape = Disc{radius};
  spec.half_length = L;
  return spec;
}

}  // namespace

TEST(Bending, CertificateAndEigenvalueDominance) {
  auto spec = bent_disc(0.3, 1.0, 6.0, 8.0);
  auto fe = fe_of(spec.shape, 0.075);
  auto g = solve_ground_mode(*fe);
  TubeDiscretization d(graded(8, 0.2, 0.5, 3), fe, EndCondition::dirichlet);
  auto c = certify_bending(spec, d, g);
  EXPECT_LT(c.value, 0.0);
  EXPECT_EQ(c.n, 8.0);
  EXPECT_NE(c.epsilon, 0.0);
  auto form = assemble_full_tube(spec, d);
  EXPECT_NEAR(rayleigh_quotient(form, c.trial), c.rayleigh, 1e-10 * c.rayleigh);
  double l1 = lowest_eigenpairs(form, 1).eigenvalues[0];
  EXPECT_LT(l1, g.E1);
  EXPECT_LE(l1, c.rayleigh + 1e-9);
}

TEST(Bending, StraightTubeHasNoCertificate) {
  auto spec = bent_disc(0.3, 0.0, 6.0, 8.0);
  auto fe = fe_of(spec.shape, 0.1);
  auto g = solve_ground_mode(*fe);
  TubeDiscretization d(graded(8, 0.25, 0.5, 3), fe, EndCondition::dirichlet);
  EXPECT_THROW(certify_bending(spec, d, g), NoCertificateFound);
}

TEST(Bending, TwistedTubeRejected) {
  auto spec = bent_disc(0.3, 1.0, 6.0, 8.0);
  std::vector<double> rate(spec.curve.s_grid().size(), 0.5);
  spec.angle = AngleFunction::from_rate(spec.curve.s_grid(), rate, 0.0);
  auto fe = fe_of(spec.shape, 0.1);
  TubeDiscretization d(graded(8, 0.25, 0.5, 3), fe, EndCondition::dirichlet);
  EXPECT_THROW(certify_bending(spec, d, solve_ground_mode(*fe)), HypothesisViolated);
}

TEST(Hardy, EigenAndBisectionAgree) {
  Ellipse e{1.0, 0.5};
  auto fe = fe_of(e, 0.2);
  auto g = solve_ground_mode(*fe);
  TubeDiscretization d(graded(6, 0.1, 0.5, 2), fe, EndCondition::natural);
  auto alpha = profile::plateau(1.0, -1, 1, 0.5);
  auto r = hardy_scan(alpha, d, g, e);
  HardyOptions bis;
  bis.method = HardyMethod::bisection;
  auto b = hardy_scan(alpha, d, g, e, bis);
  EXPECT_GT(r.c_star, 0.0);
  EXPECT_FALSE(r.vacuous);
  EXPECT_DOUBLE_EQ(r.s0, 0.0);
  EXPECT_NEAR(r.j_lo, -1.5, 1e-12);
  EXPECT_NEAR(b.c_star, r.c_star, 2e-3 * r.c_star);
  EXPECT_GE(b.history.size(), 41u);
  EXPECT_LE(r.history.size(), 3u);

  // certified below, failing just above
  auto form = shifted_by_threshold(assemble_straight_twisted(alpha, d), g.E1);
  SpMat W = assemble_weighted_mass(d, [](double s) { return hardy_weight(s, 0.0); });
  SpectrumSlicer sl(form.A, form.B);
  EXPECT_TRUE(sl.bounded_below(W, r.c_star, 1e-9));
  EXPECT_FALSE(sl.bounded_below(W, r.c_star * 1.01, 1e-9));

  // doubling the twist does not lower the constant
  auto r2 = hardy_scan(profile::scaled(alpha, 2.0), d, g, e);
  EXPECT_GE(r2.c_star, r.c_star * (1 - 1e-6));
}

TEST(Hardy, CenteredDiscIsVacuous) {
  auto fe = fe_of(Disc{1.0}, 0.2);
  auto g = solve_ground_mode(*fe);
  TubeDiscretization d(graded(6, 0.1, 0.5, 2), fe, EndCondition::natural);
  auto r = hardy_scan(profile::plateau(1.0, -1, 1, 0.5), d, g, Disc{1.0});
  EXPECT_TRUE(r.vacuous);
  EXPECT_LE(r.c_star, 1e-6);
}

TEST(Partition, InequalityAndControls) {
  Ellipse e{1.0, 0.5};
  auto fe = fe_of(e, 0.2);
  auto g = solve_ground_mode(*fe);
  TubeDiscretization d(uniform_s_grid(-3, 3, 0.1), fe, EndCondition::natural);
  auto alpha = profile::plateau(1.0, -1, 1, 0.5);
  auto p = partition_lower_bound(alpha, d, g, {{-2, -0.5}, {-0.5, 1}, {1.5, 3}}, 20);
  ASSERT_EQ(p.lambdas.size(), 3u);
  for (double l : p.lambdas) EXPECT_GE(l, -1e-9);
  EXPECT_GT(p.lambdas[1], 1e-3);
  EXPECT_TRUE(p.passed);
  EXPECT_GE(p.ground_slack, -1e-8);

  auto z = partition_lower_bound(profile::zero(), d, g, {{-2, 0}, {0, 2}}, 5);
  for (double l : z.lambdas) EXPECT_NEAR(l, 0.0, 1e-9);
  EXPECT_TRUE(z.passed);

  // never-vanishing twist: uniform cover gives a positive floor
  auto u = partition_lower_bound(profile::constant(1.0), d, g, {{-3, -1}, {-1, 1}, {1, 3}}, 5);
  EXPECT_GT(*std::min_element(u.lambdas.begin(), u.lambdas.end()), 0.0);
  EXPECT_GT(u.ground_value, 0.0);

  EXPECT_THROW(partition_lower_bound(alpha, d, g, {{-2, 0}, {-1, 1}}), OverlappingPartition);
  EXPECT_THROW(partition_lower_bound(alpha, d, g, {{-2, 0.05}}), DimensionMismatch);
}

TEST(MildBending, DecayOfTheComparisonFunction) {
  auto s = uniform_s_grid(-50, 50, 0.05);
  for (double eps0 : {1e-3, 1e-2, 0.1}) {
    double a = 1.0;
    double m = mild_g_decay(eps0, a, s);
    EXPECT_LE(m, mild_g_bound(eps0, a) * (1 + 1e-12));
    // leading coefficient is 4 a eps0
    EXPECT_NEAR(m / (a * eps0), 4.0, 3.5 * a * eps0 + 1e-9);
  }
}

TEST(MildBending, CertifiedStrengthIsSharpForTheCondition) {
  auto s = uniform_s_grid(-40, 40, 0.1);
  double a = 1.0, E1 = 14.0, c = 0.3;
  double e = certified_eps0(a, E1, c, 0.0, s);
  EXPECT_GT(e, 0.0);
  EXPECT_GE(mild_condition_min(e, a, E1, c, 0.0, s), 0.0);
  EXPECT_LT(mild_condition_min(e * 1.01, a, E1, c, 0.0, s), 0.0);
  EXPECT_NEAR(e, c / (4 * E1 * a), 0.1 * e);
  EXPECT_EQ(certified_eps0(a, E1, 0.0, 0.0, s), 0.0);
}

TEST(MildBending, TwistProtectsAgainstBending) {
  Ellipse e{1.0, 0.5};
  auto fe = fe_of(e, 0.2);
  auto g = solve_ground_mode(*fe);
  auto s = graded(20, 0.1, 1.0, 2);
  auto twist = profile::plateau(1.0, -1, 1, 0.5);
  auto flat = mild_bending_eigen(0.0, twist, e, fe, g, s);
  EXPECT_TRUE(flat.above_threshold);
  auto bare = mild_bending_eigen(0.9, profile::zero(), e, fe, g, s);
  EXPECT_FALSE(bare.above_threshold);
  auto guarded = mild_bending_eigen(0.9, twist, e, fe, g, s);
  EXPECT_TRUE(guarded.above_threshold);
}

TEST(Weyl, QuotientApproachesThresholdPlusMomentum) {
  Ellipse e{1.0, 0.5};
  auto fe = fe_of(e, 0.2);
  auto g = solve_ground_mode(*fe);
  TubeDiscretization d(uniform_s_grid(-2, 60, 0.05), fe, EndCondition::dirichlet);
  auto form = assemble_straight_twisted(profile::decaying(1.0), d);
  for (double k : {0.0, 1.0}) {
    double target = g.E1 + k * k, prev = 1e300;
    for (double n : {4.0, 5.0, 6.0, 7.0}) {
      double q = rayleigh_quotient(form, weyl_probe(d, g, n, k));
      double err = std::abs(q - target);
      EXPECT_LT(err, prev);
      prev = err;
    }
    EXPECT_LT(prev, 0.02 * target);
  }
}
