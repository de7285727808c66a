#pragma once

#include <Eigen/CholmodSupport>
#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "wsl/errors.hpp"

namespace wsl {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct DiscretizationMeta {
  double h_mesh = 0.0;
  int mesh_nodes = 0;
  int interior_nodes = 0;
  double ds_min = 0.0;
  double ds_max = 0.0;
  double s_lo = 0.0;
  double s_hi = 0.0;
  int s_nodes = 0;
  std::string end_condition = "none";
};

/// Pencil (A, B) of a discrete quadratic form and its inner product.
struct AssembledForm {
  SpMat A;
  SpMat B;
  std::string description;
  DiscretizationMeta meta;
};

struct SpectrumReport {
  std::vector<double> eigenvalues;
  std::vector<double> residuals;  // |A x - l B x| / (|B x| max(1, |l|))
  int iterations = 0;
  int factorizations = 0;
  double shift = 0.0;
  std::string description;
  DiscretizationMeta meta;
  Mat vectors;  // B-orthonormal columns
};

struct EigenOptions {
  double tol = 1e-9;
  int max_iterations = 1000;
  std::uint64_t seed = 0x5eedf00dULL;
  int dense_limit = 200;
};

/// Cholesky of A - sigma B with a cached symbolic analysis; success doubles as a positive-definiteness test.
class ShiftedCholesky {
 public:
  explicit ShiftedCholesky(const SpMat& pattern) {
    quiet();
    solver_.analyzePattern(pattern);
  }

  bool factorize(const SpMat& M) {
    solver_.factorize(M);
    ++count_;
    return solver_.info() == Eigen::Success;
  }

  Mat solve(const Mat& rhs) const { return solver_.solve(rhs); }
  Vec solve(const Vec& rhs) const { return solver_.solve(rhs); }
  int count() const { return count_; }

 private:
  void quiet() {
    solver_.cholmod().print = 0;
    solver_.cholmod().error_handler = nullptr;
  }
  Eigen::CholmodSupernodalLLT<SpMat, Eigen::Lower> solver_;
  int count_ = 0;
};

inline bool is_positive_definite(const SpMat& M) {
  ShiftedCholesky c(M);
  return c.factorize(M);
}

inline SpMat symmetrize(const SpMat& M) {
  SpMat t = M.transpose();
  return SpMat(0.5 * (M + t));
}

inline double symmetry_defect(const SpMat& M) {
  SpMat d = M - SpMat(M.transpose());
  double scale = 0.0;
  for (int k = 0; k < M.outerSize(); ++k)
    for (SpMat::InnerIterator it(M, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  double m = 0.0;
  for (int k = 0; k < d.outerSize(); ++k)
    for (SpMat::InnerIterator it(d, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return scale > 0 ? m / scale : m;
}

inline double rayleigh_quotient(const AssembledForm& form, const Vec& psi) {
  if (psi.size() != form.A.rows()) throw DimensionMismatch("vector length does not match the form");
  double b = psi.dot(form.B * psi);
  if (!(psi.squaredNorm() > 0) || !(b > 0)) throw ZeroVector("Rayleigh quotient of a zero vector");
  return psi.dot(form.A * psi) / b;
}

namespace detail {

inline void normalize_sign(Eigen::Ref<Vec> v) {
  double m = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-8 * m) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

/// Ascending order; within clusters of relative gap 1e-8, lexicographic on vector entries.
inline std::vector<int> cluster_order(const std::vector<double>& vals, const Mat& vecs) {
  std::vector<int> idx(vals.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return vals[a] < vals[b]; });
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i + 1;
    while (j < idx.size() &&
           vals[idx[j]] - vals[idx[j - 1]] <= 1e-8 * std::max(1.0, std::abs(vals[idx[j]])))
      ++j;
    if (j - i > 1) {
      std::sort(idx.begin() + long(i), idx.begin() + long(j), [&](int a, int b) {
        for (Eigen::Index r = 0; r < vecs.rows(); ++r) {
          if (vecs(r, a) < vecs(r, b)) return true;
          if (vecs(r, a) > vecs(r, b)) return false;
        }
        return a < b;
      });
    }
    i = j;
  }
  return idx;
}

/// B-orthonormalizes the columns of Y (Cholesky QR twice, eigen-based fallback).
inline Mat b_orthonormalize(const Mat& Y, const SpMat& B) {
  Mat X = Y;
  for (int pass = 0; pass < 2; ++pass) {
    Mat G = X.transpose() * (B * X);
    G = 0.5 * (G + G.transpose()).eval();
    Eigen::LLT<Mat> llt(G);
    if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 1e-10 * std::sqrt(G.diagonal().maxCoeff())) {
      X = llt.matrixU().solve<Eigen::OnTheRight>(X);
    } else {
      Eigen::SelfAdjointEigenSolver<Mat> es(G);
      Vec d = es.eigenvalues();
      double cut = 1e-14 * d.maxCoeff();
      Mat S = es.eigenvectors();
      for (int c = 0; c < d.size(); ++c) S.col(c) *= d[c] > cut ? 1.0 / std::sqrt(d[c]) : 0.0;
      X = X * S;
    }
  }
  return X;
}

inline SpMat pattern_union(const SpMat& A, const SpMat& B) {
  SpMat P = A + B;
  P.makeCompressed();
  return P;
}

inline SpMat shifted(const SpMat& A, const SpMat& B, double sigma) {
  SpMat M = A - sigma * B;
  M.makeCompressed();
  return M;
}

inline SpectrumReport dense_eigenpairs(const AssembledForm& form, int k) {
  Mat A = Mat(form.A), B = Mat(form.B);
  A = 0.5 * (A + A.transpose()).eval();
  B = 0.5 * (B + B.transpose()).eval();
  Eigen::LLT<Mat> llt(B);
  if (llt.info() != Eigen::Success) throw FactorizationFailure("mass matrix is not positive definite");
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(A, B);
  if (es.info() != Eigen::Success) throw SolverNoConvergence("dense generalized eigensolver failed");
  SpectrumReport r;
  r.vectors = es.eigenvectors().leftCols(k);
  r.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + k);
  return r;
}

}  // namespace detail

/// k smallest eigenpairs of A x = l B x by shift-invert block iteration with Rayleigh-Ritz.
inline SpectrumReport lowest_eigenpairs(const AssembledForm& form, int k, double tol = 1e-9, EigenOptions opt = {}) {
  opt.tol = tol;
  const SpMat& A = form.A;
  const SpMat& B = form.B;
  const int n = int(A.rows());
  if (A.cols() != n || B.rows() != n || B.cols() != n) throw DimensionMismatch("pencil matrices must be square and equal size");
  if (k < 1 || k > n) throw DimensionMismatch("requested eigenpair count out of range");

  SpectrumReport out;
  if (n <= opt.dense_limit) {
    out = detail::dense_eigenpairs(form, k);
  } else {
    SpMat P = detail::pattern_union(A, B);
    if (!is_positive_definite(B)) throw FactorizationFailure("mass matrix is not positive definite");
    ShiftedCholesky chol(P);

    Vec ad(n), bd(n);
    for (int i = 0; i < n; ++i) ad[i] = A.coeff(i, i), bd[i] = B.coeff(i, i);
    double scale = std::max((ad.array() / bd.array()).abs().mean(), 1e-300);
    double sigma = -1e-3 * scale;
    int tries = 0;
    while (!chol.factorize(detail::shifted(A, B, sigma))) {
      sigma *= 8.0;
      if (++tries > 30) throw FactorizationFailure("no shift below the spectrum found");
    }

    const int p = std::min(n, std::max(2 * k + 6, k + 8));
    Mat X(n, p);
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    X.col(0).setOnes();
    for (int c = 1; c < p; ++c)
      for (int i = 0; i < n; ++i) X(i, c) = nd(rng);
    X = detail::b_orthonormalize(X, B);

    Vec theta;
    Mat V;
    double prev = 0.0;
    bool converged = false;
    int it = 0;
    for (it = 1; it <= opt.max_iterations; ++it) {
      Mat Y = chol.solve(Mat(B * X));
      Y = detail::b_orthonormalize(Y, B);
      Mat H = Y.transpose() * (A * Y);
      H = 0.5 * (H + H.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Mat> es(H);
      theta = es.eigenvalues();
      X = Y * es.eigenvectors();
      Mat AX = A * X.leftCols(k), BX = B * X.leftCols(k);
      double worst = 0.0;
      for (int j = 0; j < k; ++j) {
        double r = (AX.col(j) - theta[j] * BX.col(j)).norm() / (BX.col(j).norm() * std::max(1.0, std::abs(theta[j])));
        worst = std::max(worst, r);
      }
      if (worst <= opt.tol) {
        converged = true;
        break;
      }
      double gap = theta[0] - sigma;
      bool settled = it > 1 && std::abs(theta[0] - prev) <= 0.05 * gap;
      bool slow = gap > 0.05 * (theta[p - 1] - sigma);
      prev = theta[0];
      if (settled && slow) {
        double floor = 1e-6 * std::max(1.0, std::abs(theta[0]));
        bool moved = false;
        for (double frac : {0.1, 0.5}) {
          double cand = theta[0] - std::max(frac * gap, floor);
          if (cand <= sigma) break;
          if (chol.factorize(detail::shifted(A, B, cand))) {
            sigma = cand;
            moved = true;
            break;
          }
        }
        if (!moved && !chol.factorize(detail::shifted(A, B, sigma))) throw FactorizationFailure("lost a valid shift");
      }
    }
    if (!converged) throw SolverNoConvergence("shift-invert iteration hit the iteration cap");
    out.iterations = it;
    out.factorizations = chol.count();
    out.shift = sigma;
    out.vectors = X.leftCols(k);
    out.eigenvalues.assign(theta.data(), theta.data() + k);
  }

  for (int j = 0; j < k; ++j) detail::normalize_sign(out.vectors.col(j));
  auto order = detail::cluster_order(out.eigenvalues, out.vectors);
  Mat sorted(n, k);
  std::vector<double> vals(k);
  for (int j = 0; j < k; ++j) sorted.col(j) = out.vectors.col(order[j]), vals[j] = out.eigenvalues[order[j]];
  out.vectors = std::move(sorted);
  out.eigenvalues = std::move(vals);
  out.residuals.resize(k);
  for (int j = 0; j < k; ++j) {
    Vec x = out.vectors.col(j);
    Vec bx = B * x;
    out.residuals[j] = (A * x - out.eigenvalues[j] * bx).norm() / (bx.norm() * std::max(1.0, std::abs(out.eigenvalues[j])));
  }
  out.description = form.description;
  out.meta = form.meta;
  return out;
}

/// True iff the lowest eigenvalue of (A, B) is >= -margin, decided by a Cholesky of A + margin B.
class SpectrumSlicer {
 public:
  SpectrumSlicer(SpMat A, SpMat B) : A_(std::move(A)), B_(std::move(B)), chol_(detail::pattern_union(A_, B_)) {}

  bool bounded_below(const SpMat& extra, double coeff, double margin) {
    SpMat M = A_ - coeff * extra + margin * B_;
    M.makeCompressed();
    return chol_.factorize(M);
  }

  int factorizations() const { return chol_.count(); }

 private:
  SpMat A_, B_;
  ShiftedCholesky chol_;
};

}  // namespace wsl
