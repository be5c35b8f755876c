#include "mvlab/gaussian_path.hpp"

#include <cmath>

#include "mvlab/errors.hpp"

namespace mvlab {

namespace {

struct State {
  Vec m;
  Mat S;
};

State derivative(const LinearGaussianForm& f, const State& s) {
  const Eigen::Index d = f.noise_embedding.cols();
  const Mat sig = f.noise(s.m);
  const Mat Q = f.lambda * f.lambda * Mat::Identity(d, d) + sig * sig.transpose();
  State out;
  out.m = (f.B + f.C) * s.m;
  out.S = f.B * s.S + s.S * f.B.transpose() + f.noise_embedding * Q * f.noise_embedding.transpose();
  return out;
}

State axpy(const State& s, double a, const State& k) { return {s.m + a * k.m, s.S + a * k.S}; }

State rk4(const LinearGaussianForm& f, State s, double t, long n) {
  const double dt = t / static_cast<double>(n);
  for (long i = 0; i < n; ++i) {
    const State k1 = derivative(f, s);
    const State k2 = derivative(f, axpy(s, 0.5 * dt, k1));
    const State k3 = derivative(f, axpy(s, 0.5 * dt, k2));
    const State k4 = derivative(f, axpy(s, dt, k3));
    s.m += dt / 6.0 * (k1.m + 2.0 * k2.m + 2.0 * k3.m + k4.m);
    s.S += dt / 6.0 * (k1.S + 2.0 * k2.S + 2.0 * k3.S + k4.S);
  }
  s.S = 0.5 * (s.S + s.S.transpose());
  return s;
}

double max_abs(const State& s) {
  const double a = s.m.size() ? s.m.cwiseAbs().maxCoeff() : 0.0;
  const double b = s.S.size() ? s.S.cwiseAbs().maxCoeff() : 0.0;
  return std::max(a, b);
}

}  // namespace

GaussianLaw propagate_gaussian(const LinearGaussianForm& form, const GaussianLaw& initial, double t) {
  if (!(t >= 0.0)) throw ParameterOutOfRange("propagation time must be nonnegative");
  const State s0{initial.mean, initial.cov.matrix()};
  if (t == 0.0) return initial;
  long n = std::max<long>(8, static_cast<long>(std::ceil(t / 0.02)));
  State coarse = rk4(form, s0, t, n);
  for (int level = 0; level < 16; ++level) {
    n *= 2;
    State fine = rk4(form, s0, t, n);
    const double diff = max_abs(axpy(fine, -1.0, coarse));
    if (diff <= 1e-10 * std::max(1.0, max_abs(fine))) return GaussianLaw{fine.m, SymMatrix(fine.S)};
    coarse = std::move(fine);
  }
  throw NotConverged("RK4 step doubling did not reach 1e-10");
}

std::vector<GaussianLaw> gaussian_path(const LinearGaussianForm& form, const GaussianLaw& initial,
                                       std::span<const double> times) {
  std::vector<GaussianLaw> out;
  GaussianLaw cur = initial;
  double now = 0.0;
  for (double t : times) {
    if (t < now) throw GridMismatch("times must be nondecreasing");
    cur = propagate_gaussian(form, cur, t - now);
    now = t;
    out.push_back(cur);
  }
  return out;
}

GaussianLaw linear_closed_form(const Mat& B, const Mat& C, const Mat& Sigma, double lambda, const Vec& m0,
                               const Mat& S0, double t) {
  const Eigen::Index d = B.rows();
  LinearGaussianForm form{B, C, Mat::Identity(d, d), lambda, [Sigma](const Vec&) { return Sigma; }};
  return propagate_gaussian(form, GaussianLaw{m0, SymMatrix(S0)}, t);
}

Mat stationary_covariance(const LinearGaussianForm& form, const Vec& stationary_mean) {
  const Eigen::Index d = form.noise_embedding.cols();
  const Mat sig = form.noise(stationary_mean);
  const Mat Q = form.lambda * form.lambda * Mat::Identity(d, d) + sig * sig.transpose();
  return solve_lyapunov(form.B, form.noise_embedding * Q * form.noise_embedding.transpose());
}

}  // namespace mvlab
