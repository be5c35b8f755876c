#include "mvlab/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "mvlab/errors.hpp"
#include "mvlab/quadrature.hpp"

namespace mvlab {

namespace {

double entry_scale(const Mat& a) {
  return a.size() == 0 ? 1.0 : std::max(1.0, a.cwiseAbs().maxCoeff());
}

}  // namespace

SymMatrix::SymMatrix(const Mat& a) {
  if (a.rows() != a.cols()) throw SizeMismatch("SymMatrix needs a square matrix");
  const double asym = a.size() == 0 ? 0.0 : (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance * entry_scale(a)) throw NotSymmetric(asym);
  a_ = 0.5 * (a + a.transpose());
}

SymMatrix SymMatrix::identity(Eigen::Index n) { return SymMatrix(Mat::Identity(n, n)); }
SymMatrix SymMatrix::zero(Eigen::Index n) { return SymMatrix(Mat::Zero(n, n)); }

Vec SymMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Mat> es(a_, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double SymMatrix::min_eigenvalue() const {
  if (dim() == 0) return 0.0;
  return eigenvalues().minCoeff();
}

HamiltonianStructure make_hamiltonian_structure(const Mat& A, const Mat& M) {
  if (A.rows() != A.cols() || A.rows() == 0) throw SizeMismatch("A must be square and non-empty");
  if (M.rows() != A.rows() || M.cols() == 0) throw SizeMismatch("M must have as many rows as A");
  const auto l = kalman_rank_index(A, M);
  if (!l) throw ParameterOutOfRange("(A, M) fails the Kalman rank condition");
  return HamiltonianStructure{A, M, *l};
}

SymMatrix psd_sqrt(const SymMatrix& a) {
  const Mat& m = a.matrix();
  if (m.size() == 0) return a;
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  const Vec& ev = es.eigenvalues();
  const double tol = kEigenTolerance * entry_scale(m);
  if (ev.minCoeff() < -tol) throw NegativeEigenvalue(ev.minCoeff());
  const Vec root = ev.cwiseMax(0.0).cwiseSqrt();
  const Mat& v = es.eigenvectors();
  Mat r = v * root.asDiagonal() * v.transpose();
  return SymMatrix(0.5 * (r + r.transpose()));
}

SymMatrix decompose_noise(const SymMatrix& a, double lambda) {
  const Mat& m = a.matrix();
  const Eigen::Index n = m.rows();
  Mat shifted = m - lambda * lambda * Mat::Identity(n, n);
  if (n == 0) return a;
  Eigen::SelfAdjointEigenSolver<Mat> es(shifted);
  const double tol = kEigenTolerance * entry_scale(m);
  if (es.eigenvalues().minCoeff() < -tol) {
    throw EllipticityViolated(es.eigenvalues().minCoeff() + lambda * lambda, lambda);
  }
  const Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Mat r = es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
  return SymMatrix(0.5 * (r + r.transpose()));
}

Mat matrix_exp(const Mat& A, double t) {
  if (A.rows() != A.cols()) throw SizeMismatch("matrix_exp needs a square matrix");
  if (A.size() == 0) return A;
  const Mat scaled = t * A;
  return scaled.exp();
}

std::optional<int> kalman_rank_index(const Mat& A, const Mat& M) {
  const Eigen::Index m = A.rows();
  if (A.cols() != m || M.rows() != m) throw SizeMismatch("kalman_rank_index: shape mismatch");
  if (m == 0) return std::nullopt;
  const double scale = std::max(entry_scale(A), entry_scale(M));
  Mat block = M;
  Mat krylov(m, 0);
  for (int l = 1; l <= m; ++l) {
    Mat next(m, krylov.cols() + block.cols());
    next << krylov, block;
    krylov = std::move(next);
    Eigen::JacobiSVD<Mat> svd(krylov);
    const Vec& s = svd.singularValues();
    const double cutoff = 1e-10 * std::max(scale, s.size() ? s(0) : 0.0);
    long rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) rank += s(i) > cutoff ? 1 : 0;
    if (rank == m) return l;
    block = A * block;
  }
  return std::nullopt;
}

SymMatrix gramian(const Mat& A, const Mat& M, double t, double rel_tol) {
  if (!(t > 0.0)) throw ParameterOutOfRange("gramian needs t > 0");
  if (A.rows() != A.cols() || M.rows() != A.rows()) throw SizeMismatch("gramian: shape mismatch");
  const Mat MMt = M * M.transpose();
  const double t2 = t * t;
  auto integrand = [&](double s) -> Mat {
    const Mat e = matrix_exp(A, -s);
    return (s * (t - s) / t2) * (e * MMt * e.transpose());
  };
  Mat q = simpson_halving(integrand, 0.0, t, rel_tol);
  return SymMatrix(0.5 * (q + q.transpose()));
}

GramianScaling gramian_inverse_norm_slope(const Mat& A, const Mat& M, int l,
                                          std::span<const double> t_grid) {
  if (t_grid.size() < 2) throw GridMismatch("need at least two t values");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 0.0)) throw GridMismatch("t values must be positive");
    if (i > 0 && !(t_grid[i] < t_grid[i - 1])) throw GridMismatch("t grid must be decreasing");
  }
  if (!kalman_rank_index(A, M)) throw SingularGramian(t_grid.front());

  GramianScaling out;
  out.l = l;
  out.bound_slope = 1.0 - 2.0 * l;
  for (double t : t_grid) {
    const SymMatrix q = gramian(A, M, t);
    const Vec ev = q.eigenvalues();
    // ev(0) is the smallest eigenvalue; ||Q^{-1}|| = 1 / ev(0).
    if (!(ev(0) > 1e-300) || ev(0) <= 1e-14 * ev(ev.size() - 1)) throw SingularGramian(t);
    out.t.push_back(t);
    out.inverse_norm.push_back(1.0 / ev(0));
  }
  out.fit = fit_log_log(out.t, out.inverse_norm);
  out.within_bound = out.fit.slope >= out.bound_slope - 0.1;
  return out;
}

Mat solve_lyapunov(const Mat& F, const Mat& D) {
  const Eigen::Index n = F.rows();
  if (F.cols() != n || D.rows() != n || D.cols() != n) throw SizeMismatch("solve_lyapunov: shape mismatch");
  // vec(F X + X F^T) = (I kron F + F kron I) vec(X).
  const Mat I = Mat::Identity(n, n);
  Mat K = Mat::Zero(n * n, n * n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      K.block(a * n, b * n, n, n) += I(a, b) * F + F(a, b) * I;
    }
  }
  const Vec rhs = -Eigen::Map<const Vec>(D.data(), n * n);
  Vec x = K.fullPivLu().solve(rhs);
  Mat X = Eigen::Map<Mat>(x.data(), n, n);
  return 0.5 * (X + X.transpose());
}

}  // namespace mvlab
