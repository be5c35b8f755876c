#pragma once

#include <vector>

#include "mvlab/linalg.hpp"
#include "mvlab/types.hpp"

namespace mvlab {

// Precomputed pieces of the Gramian-steered control on [0, t] with step h:
//   alpha(s) = (s/t) a - (s(t-s)/t^2) M^T e^{-sA^T} w,   w = Q_t^{-1}(c0 + V),
//   V = int_0^t e^{-rA} M {((t-r)/t) c1 + (r/t) c2 + p(r)} dr,
// with p piecewise constant on the step grid. Integrals over a step use
// three-point Gauss-Legendre nodes. Replica-independent, so it is built once.
class SteeringPlan {
 public:
  SteeringPlan(const HamiltonianStructure& s, double t, double h);

  double t() const { return t_; }
  double h() const { return h_; }
  long steps() const { return steps_; }

  // p[j] is the value on [s_j, s_{j+1}); only the first steps() entries are read.
  Vec V(const Vec& c1, const Vec& c2, const std::vector<Vec>& p) const;
  // Q_t^{-1} x by Cholesky solve.
  Vec solve_gramian(const Vec& x) const;

  Vec alpha_at(double s, const Vec& a, const Vec& w) const;
  Vec alpha(long j, const Vec& a, const Vec& w) const;        // at s_j
  Vec alpha_prime(long j, const Vec& a, const Vec& w) const;  // at s_j, closed form

  // int_{s_j}^{s_{j+1}} e^{-rA} M {c1 + alpha(r) + p_j} dr.
  Vec step_integral(long j, const Vec& c1, const Vec& a, const Vec& w, const Vec& p_j) const;

  const Mat& exp_grid(long j) const { return exp_sA_[static_cast<std::size_t>(j)]; }  // e^{s_j A}

 private:
  HamiltonianStructure s_;
  double t_, h_;
  long steps_;
  Eigen::LLT<Mat> q_llt_;
  std::vector<Mat> em_grid_;   // e^{-s_j A} M
  std::vector<Mat> exp_sA_;    // e^{s_j A}
  std::vector<double> nodes_;  // 3 per step
  std::vector<double> weights_;
  std::vector<Mat> em_nodes_;  // e^{-r A} M at the nodes
};

}  // namespace mvlab
