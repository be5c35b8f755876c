#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mvlab/stats.hpp"
#include "mvlab/types.hpp"

namespace mvlab {

// Eigenvalues above -kEigenTolerance (times max(1, max|a_ij|)) are treated as
// round-off and clipped to zero.
inline constexpr double kEigenTolerance = 1e-10;
inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kGramianRelTolerance = 1e-9;

// A real symmetric matrix. Construction rejects inputs whose asymmetry exceeds
// kSymmetryTolerance (relative) and stores the exact symmetric part.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Mat& a);

  static SymMatrix identity(Eigen::Index n);
  static SymMatrix zero(Eigen::Index n);

  const Mat& matrix() const { return a_; }
  Eigen::Index dim() const { return a_.rows(); }
  Vec eigenvalues() const;
  double min_eigenvalue() const;

 private:
  Mat a_;
};

// Drift structure of the degenerate block: dX1 = (A X1 + M X2) dt with the
// minimal Kalman rank index l.
struct HamiltonianStructure {
  Mat A;  // m x m
  Mat M;  // m x d
  int l = 0;

  Eigen::Index degenerate_dim() const { return A.rows(); }
  Eigen::Index noisy_dim() const { return M.cols(); }
};

// Validates shapes, computes the minimal rank index and throws
// ParameterOutOfRange when (A, M) is not controllable.
HamiltonianStructure make_hamiltonian_structure(const Mat& A, const Mat& M);

SymMatrix psd_sqrt(const SymMatrix& a);

// Returns sqrt(a - lambda^2 I), the measure-dependent part of the noise once a
// constant lambda I has been split off.
SymMatrix decompose_noise(const SymMatrix& a, double lambda);

// exp(t A) by scaling and squaring with a Pade approximant.
Mat matrix_exp(const Mat& A, double t);

// Minimal l <= m with rank [M, AM, ..., A^{l-1} M] = m, if any.
std::optional<int> kalman_rank_index(const Mat& A, const Mat& M);

// Q_t = int_0^t s(t-s)/t^2 e^{-sA} M M^T e^{-sA^T} ds.
SymMatrix gramian(const Mat& A, const Mat& M, double t, double rel_tol = kGramianRelTolerance);

struct GramianScaling {
  std::vector<double> t;
  std::vector<double> inverse_norm;  // spectral norm of Q_t^{-1}
  LinearFit fit;                     // log inverse_norm against log t
  int l = 0;
  double bound_slope = 0.0;          // 1 - 2l
  bool within_bound = false;         // fit.slope >= 1 - 2l - 0.1
};

GramianScaling gramian_inverse_norm_slope(const Mat& A, const Mat& M, int l,
                                          std::span<const double> t_grid);

// Solves F X + X F^T + D = 0 for symmetric X (F Hurwitz).
Mat solve_lyapunov(const Mat& F, const Mat& D);

}  // namespace mvlab
