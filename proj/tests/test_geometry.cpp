#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "wsl/geometry.hpp"

using namespace wsl;

namespace {

TubeSpec make_spec(CurveData curve, AngleFunction angle, CrossSectionShape shape, double L) {
  TubeSpec spec;
  spec.curve = std::move(curve);
  spec.angle = std::move(angle);
  spec.shape = std::move(shape);
  spec.half_length = L;
  return spec;
}

TubeSpec twisted_straight(double rate, double lo, double hi, double ds, CrossSectionShape shape) {
  auto curve = curves::line(lo, hi, ds);
  auto angle = AngleFunction::from_rate(curve.s_grid(), std::vector<double>(curve.s_grid().size(), rate), 0.0);
  return make_spec(curve, angle, shape, std::max(std::abs(lo), std::abs(hi)));
}

}  // namespace

TEST(Spline, ReproducesCubicInteriorAndIntegratesSine) {
  auto s = curves::grid(0, std::numbers::pi, 0.01);
  std::vector<double> y(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) y[i] = std::sin(s[i]);
  CubicSpline sp(s, y);
  EXPECT_NEAR(sp.integral(std::numbers::pi), 2.0, 1e-8);
  EXPECT_NEAR(sp(1.2345), std::sin(1.2345), 1e-8);
  EXPECT_NEAR(sp.derivative(1.2345), std::cos(1.2345), 1e-5);
  EXPECT_THROW(sp(4.0), OutOfDomain);
}

TEST(Frame, StraightLineGivesIdentity) {
  auto curve = curves::line(0, 10, 0.1);
  Tube tube(make_spec(curve, AngleFunction::constant(curve.s_grid(), 0.0), Disc{}, 10));
  for (const auto& F : tube.frames().frames) EXPECT_LT((F - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-14);
  Vec3 p = tube.map(3.3, Vec2(0.2, -0.4));
  EXPECT_NEAR(p.x(), 3.3, 1e-12);
  EXPECT_NEAR(p.y(), 0.2, 1e-12);
  EXPECT_NEAR(p.z(), -0.4, 1e-12);
}

TEST(Frame, CircleClosesAfterOneTurn) {
  auto curve = curves::circle(1.0, 0.0, 2 * std::numbers::pi, 0.01);
  Tube tube(make_spec(curve, AngleFunction::constant(curve.s_grid(), 0.0), Disc{0.5}, 10));
  const auto& fr = tube.frames();
  for (std::size_t i = 0; i < fr.s.size(); i += 37) {
    EXPECT_NEAR(fr.frames[i](0, 0), std::cos(fr.s[i]), 1e-9);
    EXPECT_NEAR(fr.frames[i](0, 1), std::sin(fr.s[i]), 1e-9);
  }
  EXPECT_LT((fr.frames.back() - fr.frames.front()).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((fr.positions.back() - fr.positions.front()).norm(), 1e-6);
  // t = (r, 0) at s = 0 lies on the inward normal, toward the circle center (0, 1, 0)
  Vec3 p = tube.map(0.0, Vec2(0.3, 0.0));
  EXPECT_NEAR(p.x(), 0.0, 1e-12);
  EXPECT_NEAR(p.y(), 0.3, 1e-12);
}

TEST(Frame, HelixHasConstantCurvatureAndRoundTrips) {
  auto curve = curves::helix(1.0, 1.0, 0.0, 20.0, 0.01);
  Tube tube(make_spec(curve, tang_frame_angle(curve, 0.0), Disc{0.3}, 10));
  auto rt = frame_roundtrip(tube);
  EXPECT_LT(rt.kappa_error, 1e-5);
  EXPECT_LT(rt.tau_error, 1e-5);
  for (const auto& F : tube.frames().frames) EXPECT_LT((F * F.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Frame, LongCurveStaysOrthonormal) {
  auto s = curves::grid(-50, 50, 0.02);
  auto curve = curves::from_profiles(s, profile::bump(0.8, 0.0, 30.0), profile::decaying(0.7));
  auto angle = AngleFunction::from_rate(s, [&] {
    std::vector<double> r(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) r[i] = std::sin(s[i]);
    return r;
  }(), 0.3);
  Tube tube(make_spec(curve, angle, Ellipse{}, 50));
  for (const auto& F : tube.frames().frames) {
    EXPECT_LT((F * F.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_NEAR(F.determinant(), 1.0, 1e-8);
  }
  auto rt = frame_roundtrip(tube);
  EXPECT_LT(rt.kappa_error, 1e-5);
  EXPECT_LT(rt.tau_error, 1e-5);
}

TEST(Frame, CoarseGridIsRejected) {
  auto curve = curves::helix(3.0, 2.0, 0.0, 10.0, 0.5);
  EXPECT_THROW(Tube(make_spec(curve, AngleFunction::constant(curve.s_grid(), 0.0), Disc{0.1}, 5)), GridTooCoarse);
}

TEST(Frame, NegativeCurvatureIsRejected) {
  EXPECT_THROW(CurveData({0, 1, 2}, {0.1, -0.2, 0.1}, {0, 0, 0}), NonPositiveCurvature);
}

TEST(TangFrame, ClosedForms) {
  auto zero_tau = curves::line(0, 1, 0.1);
  auto flat = tang_frame_angle(zero_tau, 0.7);
  for (double th : flat.theta_samples()) EXPECT_EQ(th, 0.7);
  auto unit_tau = curves::helix(0.5, 1.0, 0.0, 1.0, 0.01);
  auto a = tang_frame_angle(unit_tau, 0.0);
  for (double s : {0.0, 0.25, 0.5, 0.999, 1.0}) EXPECT_NEAR(a.theta(s), s, 1e-10);
  auto s = curves::grid(0, std::numbers::pi, 0.005);
  auto sine = curves::from_profiles(s, profile::constant(0.5), Profile1D{[](double x) { return std::sin(x); }, 0, 4, "sin"});
  EXPECT_NEAR(tang_frame_angle(sine, 0.0).theta(std::numbers::pi), 2.0, 1e-8);
}

TEST(TangFrame, MakesCoordinatesOrthogonal) {
  auto s = curves::grid(-5, 5, 0.01);
  auto curve = curves::from_profiles(s, profile::bump(0.5, 0, 4), Profile1D{[](double x) { return std::cos(x); }, -9, 9, "c"});
  TubeSpec spec = make_spec(curve, tang_frame_angle(curve, 0.4), Ellipse{}, 5);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> us(-5, 5), ut(-0.5, 0.5);
  for (int k = 0; k < 200; ++k) {
    auto m = metric_at(spec, us(rng), Vec2(ut(rng), ut(rng)));
    EXPECT_EQ(m.h2, 0.0);
    EXPECT_EQ(m.h3, 0.0);
  }
}

TEST(AngleFunctionTest, InconsistentRateRejected) {
  std::vector<double> s = {0, 1, 2, 3};
  EXPECT_THROW(AngleFunction(s, {0, 1, 2, 3}, {0, 0, 0, 0}), DimensionMismatch);
  EXPECT_NO_THROW(AngleFunction(s, {0, 1, 2, 3}, {1, 1, 1, 1}));
}

TEST(Metric, ExamplesAndAlgebraicIdentities) {
  auto curve = curves::line(-1, 1, 0.1);
  TubeSpec flat = make_spec(curve, AngleFunction::constant(curve.s_grid(), 0.0), Disc{}, 1);
  auto m = metric_at(flat, 0.3, Vec2(0.5, 0.5));
  EXPECT_LT((m.G - Mat3::Identity()).norm(), 1e-15);

  auto ex = metric_from(0.5, 0.0, 2.0, Vec2(1.0, 0.0));
  EXPECT_DOUBLE_EQ(ex.h, 0.5);
  EXPECT_DOUBLE_EQ(ex.h2, 0.0);
  EXPECT_DOUBLE_EQ(ex.h3, 2.0);
  EXPECT_NEAR(ex.G.determinant(), 0.25, 1e-12);
  EXPECT_THROW(metric_from(2.0, 0.0, 0.0, Vec2(1.0, 0.0)), DegenerateJacobian);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 1000; ++k) {
    double kap = 0.9 * std::abs(u(rng)), th = 4 * u(rng), w = 3 * u(rng);
    Vec2 t(u(rng), u(rng));
    t *= 0.7;
    auto g = metric_from(kap, th, w, t);
    EXPECT_NEAR(g.G.determinant(), g.h * g.h, 1e-12 * std::max(1.0, g.G.norm()));
    EXPECT_LT((g.G * g.Ginv - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GE(g.h, 1 - 0.7 * std::sqrt(2.0) * kap - 1e-15);
  }
  auto axis = metric_from(0.7, 1.0, 3.0, Vec2(0, 0));
  EXPECT_EQ(axis.h, 1.0);
  EXPECT_EQ(axis.h2, 0.0);
  EXPECT_EQ(axis.h3, 0.0);
}

TEST(Metric, MatchesFiniteDifferenceJacobianOfTubeMap) {
  auto s = curves::grid(-3, 3, 0.005);
  auto curve = curves::from_profiles(s, profile::bump(0.5, 0, 4), profile::constant(0.3));
  auto angle = AngleFunction::from_rate(s, std::vector<double>(s.size(), 2.3), 0.2);
  Tube tube(make_spec(curve, angle, Disc{1.0}, 3));
  for (double s0 : {-0.7, 0.0, 0.55}) {
    for (Vec2 t : {Vec2(0.5, 0.2), Vec2(-0.3, 0.6)}) {
      const double d = 1e-5;
      Vec3 Ls = (tube.map(s0 + d, t) - tube.map(s0 - d, t)) / (2 * d);
      Vec3 L2 = (tube.map(s0, t + Vec2(d, 0)) - tube.map(s0, t - Vec2(d, 0))) / (2 * d);
      Vec3 L3 = (tube.map(s0, t + Vec2(0, d)) - tube.map(s0, t - Vec2(0, d))) / (2 * d);
      Mat3 J;
      J.col(0) = Ls, J.col(1) = L2, J.col(2) = L3;
      Mat3 G = J.transpose() * J;
      auto m = metric_at(tube.spec(), s0, t);
      EXPECT_LT((G - m.G).cwiseAbs().maxCoeff(), 1e-7);
      EXPECT_NEAR(G.determinant(), m.h * m.h, 1e-7);
    }
  }
}

TEST(Hypotheses, MarginAndViolation) {
  auto curve = curves::line(-5, 5, 0.1);
  Tube straight(make_spec(curve, AngleFunction::constant(curve.s_grid(), 0), Disc{1.0}, 5));
  auto r = check_hypotheses(straight, 2000);
  EXPECT_EQ(r.margin, 1.0);
  EXPECT_GT(r.pairs_checked, 1000);

  auto bent = curves::circle(1.0, -3, 3, 0.01);
  Tube ok(make_spec(bent, AngleFunction::constant(bent.s_grid(), 0), Disc{0.3}, 3));
  EXPECT_NEAR(check_hypotheses(ok, 2000).margin, 0.7, 1e-12);
  auto tight = curves::circle(0.25, -1, 1, 0.001);
  Tube bad(make_spec(tight, AngleFunction::constant(tight.s_grid(), 0), Disc{0.3}, 1));
  EXPECT_THROW(check_hypotheses(bad, 100), HypothesisViolated);
}

TEST(Hypotheses, SelfOverlapDetected) {
  // a circle of radius 1 traversed twice overlaps itself
  auto curve = curves::circle(1.0, -2 * std::numbers::pi, 2 * std::numbers::pi, 0.005);
  Tube tube(make_spec(curve, AngleFunction::constant(curve.s_grid(), 0), Disc{0.05}, 2 * std::numbers::pi));
  EXPECT_LT((tube.map(-1.0, Vec2(0.01, 0.0)) - tube.map(-1.0 + 2 * std::numbers::pi, Vec2(0.01, 0.0))).norm(), 1e-6);
  EXPECT_THROW(check_hypotheses(tube, 100), HypothesisViolated);
}

TEST(RuledSurface, GaussCurvatureSign) {
  auto s = curves::grid(-3, 3, 0.005);
  auto curve = curves::from_profiles(s, profile::bump(0.6, 0, 5), profile::constant(0.8));
  Tube tang(make_spec(curve, tang_frame_angle(curve, 0.3), Disc{0.4}, 3));
  for (double s0 : {-1.0, 0.0, 0.7}) EXPECT_NEAR(ruled_surface_gauss_curvature(tang, s0), 0.0, 1e-6);

  Tube helicoid(twisted_straight(1.0, -3, 3, 0.005, Disc{0.4}));
  double r = 0.2;
  double expected = -1.0 / ((1 + r * r) * (1 + r * r));
  EXPECT_NEAR(ruled_surface_gauss_curvature(helicoid, 0.3), expected, 1e-5);
  EXPECT_LT(ruled_surface_gauss_curvature(helicoid, 0.3), 0.0);

  Tube plane(twisted_straight(0.0, -3, 3, 0.01, Disc{0.4}));
  EXPECT_NEAR(ruled_surface_gauss_curvature(plane, 0.0), 0.0, 1e-9);

  // twisted relative to Tang on a bent curve: nonzero
  auto angle = AngleFunction::from_rate(s, std::vector<double>(s.size(), 0.0), 0.0);
  Tube non_tang(make_spec(curve, angle, Disc{0.4}, 3));
  EXPECT_GT(std::abs(ruled_surface_gauss_curvature(non_tang, 0.0)), 1e-3);
}

TEST(FrameInvariance, RotatedShapeAndShiftedAngle) {
  auto s = curves::grid(-3, 3, 0.01);
  auto curve = curves::from_profiles(s, profile::bump(0.6, 0, 5), profile::constant(0.4));
  std::vector<double> rate(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) rate[i] = 0.5 * std::cos(s[i]);
  const double beta = 0.83;
  Ellipse e{1.0, 0.5, Vec2(0.1, -0.05), 0.2};
  Tube a(make_spec(curve, AngleFunction::from_rate(s, rate, 0.1), e, 3));
  Tube b(make_spec(curve, AngleFunction::from_rate(s, rate, 0.1 - beta), rotated(e, -beta), 3));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> us(-3, 3), ut(-0.5, 0.5);
  for (int k = 0; k < 200; ++k) {
    double s0 = us(rng);
    Vec2 t(ut(rng), ut(rng));
    Vec2 tb = rotate2(t, -beta);
    EXPECT_LT((a.map(s0, t) - b.map(s0, tb)).norm(), 1e-10);
  }
}
