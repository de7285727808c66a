#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "wsl/cross_section.hpp"

using namespace wsl;

namespace {

AssembledForm laplacian_1d(int interior) {
  double h = 1.0 / (interior + 1);
  std::vector<Eigen::Triplet<double>> a, b;
  for (int i = 0; i < interior; ++i) {
    a.emplace_back(i, i, 2.0 / (h * h));
    b.emplace_back(i, i, 1.0);
    if (i + 1 < interior) a.emplace_back(i, i + 1, -1.0 / (h * h)), a.emplace_back(i + 1, i, -1.0 / (h * h));
  }
  AssembledForm f;
  f.A.resize(interior, interior);
  f.B.resize(interior, interior);
  f.A.setFromTriplets(a.begin(), a.end());
  f.B.setFromTriplets(b.begin(), b.end());
  f.description = "1D Dirichlet Laplacian";
  return f;
}

AssembledForm disc_form(double h) {
  CrossSectionFE fe(generate_mesh(Disc{1.0}, h));
  return {fe.stiffness(), fe.mass(), "disc", fe.meta()};
}

}  // namespace

TEST(Solver, OneDimensionalLaplacianDenseAndSparse) {
  auto f = laplacian_1d(127);
  double pi2 = oracle::pi * oracle::pi;
  auto dense = lowest_eigenpairs(f, 3);
  EXPECT_NEAR(dense.eigenvalues[0], pi2, 1e-3 * pi2);
  EigenOptions opt;
  opt.dense_limit = 0;
  auto sparse = lowest_eigenpairs(f, 3, 1e-10, opt);
  EXPECT_NEAR(sparse.eigenvalues[0], pi2, 1e-3 * pi2);
  EXPECT_GT(sparse.iterations, 0);
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(dense.eigenvalues[j], sparse.eigenvalues[j], 1e-8 * sparse.eigenvalues[j]);
    EXPECT_LE(sparse.residuals[j], 1e-10);
    // same sign convention on both paths
    EXPECT_NEAR(dense.vectors.col(j).dot(f.B * sparse.vectors.col(j)), 1.0, 1e-8);
  }
}

TEST(Solver, IdentityPencil) {
  auto f = disc_form(0.2);
  f.A = f.B;
  auto r = lowest_eigenpairs(f, 5);
  for (double l : r.eigenvalues) EXPECT_NEAR(l, 1.0, 1e-12);
}

TEST(Solver, ResidualsAscendingAndBOrthonormal) {
  auto f = disc_form(0.08);
  auto r = lowest_eigenpairs(f, 6, 1e-10);
  ASSERT_EQ(r.eigenvalues.size(), 6u);
  for (int j = 0; j < 6; ++j) EXPECT_LE(r.residuals[j], 1e-10);
  EXPECT_TRUE(std::is_sorted(r.eigenvalues.begin(), r.eigenvalues.end()));
  Mat G = r.vectors.transpose() * (f.B * r.vectors);
  EXPECT_LT((G - Mat::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-10);
  // the disc's second and third modes are a rotation pair
  EXPECT_NEAR(r.eigenvalues[1], r.eigenvalues[2], 1e-6 * r.eigenvalues[1]);
}

TEST(Solver, BitwiseDeterministic) {
  auto f = disc_form(0.08);
  auto r1 = lowest_eigenpairs(f, 4);
  auto r2 = lowest_eigenpairs(f, 4);
  EXPECT_EQ(r1.eigenvalues, r2.eigenvalues);
  EXPECT_EQ(r1.residuals, r2.residuals);
  EXPECT_TRUE(r1.vectors == r2.vectors);
  EXPECT_EQ(r1.iterations, r2.iterations);
}

TEST(Solver, PsdPerturbationNeverLowersEigenvalues) {
  auto f = disc_form(0.1);
  auto base = lowest_eigenpairs(f, 4, 1e-10);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = int(f.A.rows());
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i < n; ++i) t.emplace_back(i, i, 5.0 * u(rng));
    // rank-one pieces v v^T on random pairs
    for (int r = 0; r < 20; ++r) {
      int i = int(u(rng) * n), j = int(u(rng) * n);
      double a = u(rng), b = u(rng) - 0.5;
      t.emplace_back(i, i, a * a), t.emplace_back(j, j, b * b);
      if (i != j) t.emplace_back(i, j, a * b), t.emplace_back(j, i, a * b);
    }
    SpMat P(n, n);
    P.setFromTriplets(t.begin(), t.end());
    AssembledForm g = f;
    g.A = f.A + P;
    auto r = lowest_eigenpairs(g, 4, 1e-10);
    for (int j = 0; j < 4; ++j) EXPECT_GE(r.eigenvalues[j], base.eigenvalues[j] - 1e-9 * base.eigenvalues[j]);
  }
}

TEST(Solver, Errors) {
  auto f = disc_form(0.2);
  EXPECT_THROW(lowest_eigenpairs(f, 0), DimensionMismatch);
  AssembledForm bad = f;
  bad.B = -f.B;
  EigenOptions opt;
  opt.dense_limit = 0;
  EXPECT_THROW(lowest_eigenpairs(bad, 1, 1e-9, opt), FactorizationFailure);
  opt.max_iterations = 1;
  EXPECT_THROW(lowest_eigenpairs(f, 3, 1e-14, opt), SolverNoConvergence);
}

TEST(RayleighQuotient, GroundVectorAndZero) {
  auto f = disc_form(0.08);
  auto r = lowest_eigenpairs(f, 1, 1e-10);
  EXPECT_NEAR(rayleigh_quotient(f, r.vectors.col(0)), r.eigenvalues[0], 1e-9 * r.eigenvalues[0]);
  EXPECT_THROW(rayleigh_quotient(f, Vec::Zero(f.A.rows())), ZeroVector);
  EXPECT_THROW(rayleigh_quotient(f, Vec::Ones(3)), DimensionMismatch);
}

TEST(SpectrumSlicer, BracketsTheLowestEigenvalue) {
  auto f = disc_form(0.1);
  double l1 = lowest_eigenpairs(f, 1, 1e-10).eigenvalues[0];
  SpectrumSlicer slicer(f.A, f.B);
  EXPECT_TRUE(slicer.bounded_below(f.B, l1 * (1 - 1e-6), 0.0));
  EXPECT_FALSE(slicer.bounded_below(f.B, l1 * (1 + 1e-6), 0.0));
  EXPECT_EQ(slicer.factorizations(), 2);
}
