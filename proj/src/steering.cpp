#include "mvlab/steering.hpp"

#include <cmath>

#include "mvlab/errors.hpp"

namespace mvlab {

namespace {
constexpr double kGL[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr double kGW[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
}  // namespace

SteeringPlan::SteeringPlan(const HamiltonianStructure& s, double t, double h) : s_(s), t_(t), h_(h) {
  if (!(t > 0.0) || !(h > 0.0)) throw ParameterOutOfRange("steering needs t > 0 and h > 0");
  steps_ = std::lround(t / h);
  if (steps_ < 1 || std::abs(static_cast<double>(steps_) * h - t) > 1e-9 * t) {
    throw GridMismatch("t must be an integer number of steps");
  }
  // Tight tolerance: the closed-form identities are checked against step integrals.
  const SymMatrix q = gramian(s.A, s.M, t, 1e-13);
  q_llt_.compute(q.matrix());
  const Vec ev = q.eigenvalues();
  if (q_llt_.info() != Eigen::Success || !(ev(0) > 1e-14 * ev(ev.size() - 1))) throw SingularGramian(t);

  for (long j = 0; j <= steps_; ++j) {
    const double sj = static_cast<double>(j) * h;
    em_grid_.push_back(matrix_exp(s.A, -sj) * s.M);
    exp_sA_.push_back(matrix_exp(s.A, sj));
  }
  for (long j = 0; j < steps_; ++j) {
    const double mid = (static_cast<double>(j) + 0.5) * h;
    for (int q = 0; q < 3; ++q) {
      const double r = mid + 0.5 * h * kGL[q];
      nodes_.push_back(r);
      weights_.push_back(0.5 * h * kGW[q]);
      em_nodes_.push_back(matrix_exp(s.A, -r) * s.M);
    }
  }
}

Vec SteeringPlan::V(const Vec& c1, const Vec& c2, const std::vector<Vec>& p) const {
  if (static_cast<long>(p.size()) < steps_) throw GridMismatch("path shorter than the steering grid");
  Vec v = Vec::Zero(s_.A.rows());
  for (long j = 0; j < steps_; ++j) {
    for (int q = 0; q < 3; ++q) {
      const std::size_t k = static_cast<std::size_t>(3 * j + q);
      const double r = nodes_[k];
      v += weights_[k] * (em_nodes_[k] * (((t_ - r) / t_) * c1 + (r / t_) * c2 + p[static_cast<std::size_t>(j)]));
    }
  }
  return v;
}

Vec SteeringPlan::solve_gramian(const Vec& x) const { return q_llt_.solve(x); }

Vec SteeringPlan::alpha_at(double s, const Vec& a, const Vec& w) const {
  const Mat em = matrix_exp(s_.A, -s) * s_.M;
  return (s / t_) * a - (s * (t_ - s) / (t_ * t_)) * (em.transpose() * w);
}

Vec SteeringPlan::alpha(long j, const Vec& a, const Vec& w) const {
  const double s = static_cast<double>(j) * h_;
  return (s / t_) * a - (s * (t_ - s) / (t_ * t_)) * (em_grid_[static_cast<std::size_t>(j)].transpose() * w);
}

Vec SteeringPlan::alpha_prime(long j, const Vec& a, const Vec& w) const {
  const double s = static_cast<double>(j) * h_;
  const Mat& em = em_grid_[static_cast<std::size_t>(j)];
  // d/ds M^T e^{-sA^T} = -(A e^{-sA} M)^T.
  const Vec base = em.transpose() * w;
  const Vec dbase = -((s_.A * em).transpose() * w);
  return a / t_ - ((t_ - 2.0 * s) / (t_ * t_)) * base - (s * (t_ - s) / (t_ * t_)) * dbase;
}

Vec SteeringPlan::step_integral(long j, const Vec& c1, const Vec& a, const Vec& w, const Vec& p_j) const {
  Vec out = Vec::Zero(s_.A.rows());
  for (int q = 0; q < 3; ++q) {
    const std::size_t k = static_cast<std::size_t>(3 * j + q);
    const double r = nodes_[k];
    const Mat& em = em_nodes_[k];
    const Vec alpha_r = (r / t_) * a - (r * (t_ - r) / (t_ * t_)) * (em.transpose() * w);
    out += weights_[k] * (em * (c1 + alpha_r + p_j));
  }
  return out;
}

}  // namespace mvlab
