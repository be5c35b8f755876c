#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "mvlab/errors.hpp"
#include "mvlab/linalg.hpp"

using namespace mvlab;

namespace {

Mat random_matrix(std::mt19937_64& gen, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Mat a(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) a(i, j) = n(gen);
  return a;
}

Mat nilpotent() { return (Mat(2, 2) << 0.0, 1.0, 0.0, 0.0).finished(); }
Mat e2() { return (Mat(2, 1) << 0.0, 1.0).finished(); }

}  // namespace

TEST_CASE("SymMatrix rejects asymmetric input") {
  Mat a(2, 2);
  a << 1.0, 2.0, 2.1, 1.0;
  CHECK_THROWS_AS(SymMatrix{a}, NotSymmetric);
  a(1, 0) = 2.0;
  CHECK(SymMatrix(a).matrix() == a);
}

TEST_CASE("psd_sqrt examples") {
  CHECK((psd_sqrt(SymMatrix::identity(2)).matrix() - Mat::Identity(2, 2)).norm() < 1e-14);
  Mat d = Vec((Vec(2) << 4.0, 9.0).finished()).asDiagonal();
  Mat r = psd_sqrt(SymMatrix(d)).matrix();
  CHECK(r(0, 0) == doctest::Approx(2.0));
  CHECK(r(1, 1) == doctest::Approx(3.0));
  CHECK(std::abs(r(0, 1)) < 1e-15);
  Mat neg = Vec((Vec(2) << 1.0, -1e-3).finished()).asDiagonal();
  CHECK_THROWS_AS(psd_sqrt(SymMatrix(neg)), NegativeEigenvalue);
  // Round-off negatives are clipped.
  Mat tiny = Vec((Vec(2) << 1.0, -1e-12).finished()).asDiagonal();
  CHECK_NOTHROW(psd_sqrt(SymMatrix(tiny)));
}

TEST_CASE("psd_sqrt multiply-back and idempotence on random PSD matrices") {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 1 + trial % 8;
    const Mat g = random_matrix(gen, n, n);
    const Mat a = g * g.transpose();
    const Mat r = psd_sqrt(SymMatrix(a)).matrix();
    CHECK((r * r - a).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, a.cwiseAbs().maxCoeff()));
    // psd_sqrt(r^2) = r for PSD r.
    const Mat r2 = r * r;
    const Mat back = psd_sqrt(SymMatrix(0.5 * (r2 + r2.transpose()))).matrix();
    CHECK((back - r).cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, r.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("decompose_noise examples and round trip") {
  Mat s = decompose_noise(SymMatrix(4.0 * Mat::Identity(2, 2)), 1.0).matrix();
  CHECK((s - std::sqrt(3.0) * Mat::Identity(2, 2)).norm() < 1e-14);
  CHECK(decompose_noise(SymMatrix(Mat::Identity(2, 2)), 1.0).matrix().norm() < 1e-14);
  Mat d = Vec((Vec(2) << 2.0, 5.0).finished()).asDiagonal();
  Mat r = decompose_noise(SymMatrix(d), 1.0).matrix();
  CHECK(r(0, 0) == doctest::Approx(1.0));
  CHECK(r(1, 1) == doctest::Approx(2.0));
  CHECK_THROWS_AS(decompose_noise(SymMatrix(0.5 * Mat::Identity(2, 2)), 1.0), EllipticityViolated);

  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 1 + trial % 16;
    const double lambda = 0.5 + 0.1 * trial;
    const Mat g = random_matrix(gen, n, n);
    const Mat a = g * g.transpose() + 2.0 * lambda * lambda * Mat::Identity(n, n);
    const Mat st = decompose_noise(SymMatrix(a), lambda).matrix();
    CHECK((st * st + lambda * lambda * Mat::Identity(n, n) - a).cwiseAbs().maxCoeff() < 1e-9);
    // With a >= 2 lambda^2 I the remainder dominates lambda I.
    CHECK(SymMatrix(st - lambda * Mat::Identity(n, n)).min_eigenvalue() > -1e-9);
  }
}

TEST_CASE("matrix_exp examples and group law") {
  CHECK((matrix_exp(Mat::Zero(3, 3), 2.0) - Mat::Identity(3, 3)).norm() < 1e-15);
  const Mat A = nilpotent();
  for (double t : {0.3, 1.0, -2.5}) {
    CHECK((matrix_exp(A, t) - (Mat::Identity(2, 2) + t * A)).cwiseAbs().maxCoeff() < 1e-14);
  }
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index n = 1 + trial % 5;
    Mat B = random_matrix(gen, n, n);
    B *= 2.0 / std::max(1e-12, B.operatorNorm());
    const double s = 0.1 * (trial % 7), t = 0.7 - 0.05 * trial;
    CHECK((matrix_exp(B, t) * matrix_exp(B, -t) - Mat::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((matrix_exp(B, s + t) - matrix_exp(B, s) * matrix_exp(B, t)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("kalman_rank_index") {
  CHECK(kalman_rank_index(Mat::Zero(2, 2), Mat::Identity(2, 2)) == 1);
  CHECK(kalman_rank_index(nilpotent(), e2()) == 2);
  CHECK_FALSE(kalman_rank_index(Mat::Zero(2, 2), Mat::Zero(2, 1)).has_value());
  // e_1 direction only: A = 0, M = e2 never reaches rank 2.
  CHECK_FALSE(kalman_rank_index(Mat::Zero(2, 2), e2()).has_value());
  const Mat chain = (Mat(3, 3) << 0, 1, 0, 0, 0, 1, 0, 0, 0).finished();
  CHECK(kalman_rank_index(chain, (Mat(3, 1) << 0, 0, 1).finished()) == 3);
  CHECK_THROWS_AS(make_hamiltonian_structure(Mat::Zero(2, 2), e2()), ParameterOutOfRange);
  CHECK(make_hamiltonian_structure(nilpotent(), e2()).l == 2);
}

TEST_CASE("gramian closed forms") {
  for (double t : {0.1, 0.5, 2.0}) {
    const Mat q = gramian(Mat::Zero(1, 1), Mat::Identity(1, 1), t).matrix();
    CHECK(q(0, 0) == doctest::Approx(t / 6.0).epsilon(1e-12));
    CHECK(gramian(Mat::Zero(2, 2), Mat::Zero(2, 1), t).matrix().norm() == 0.0);
    const Mat k = gramian(nilpotent(), e2(), t).matrix();
    Mat expected(2, 2);
    expected << std::pow(t, 3) / 20.0, -t * t / 12.0, -t * t / 12.0, t / 6.0;
    CHECK((k - expected).cwiseAbs().maxCoeff() < 1e-9 * expected.cwiseAbs().maxCoeff());
  }
  CHECK_THROWS_AS(gramian(nilpotent(), e2(), 0.0), ParameterOutOfRange);
}

TEST_CASE("gramian matches a fine trapezoid oracle") {
  const double t = 1.0;
  const long n = 1000000;
  Mat sum = Mat::Zero(2, 2);
  // e^{-sA} = I - sA for the nilpotent pair, so the integrand is explicit.
  for (long i = 0; i <= n; ++i) {
    const double s = t * static_cast<double>(i) / static_cast<double>(n);
    Vec v(2);
    v << -s, 1.0;
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    sum += w * (s * (t - s) / (t * t)) * (v * v.transpose());
  }
  sum *= t / static_cast<double>(n);
  CHECK((gramian(nilpotent(), e2(), t).matrix() - sum).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("gramian symmetry, PSD and definiteness follow the rank condition") {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index m = 1 + trial % 3, d = 1 + trial % 2;
    const Mat A = random_matrix(gen, m, m, 0.7);
    Mat M = random_matrix(gen, m, d);
    if (trial % 5 == 0) M.setZero();
    const SymMatrix q = gramian(A, M, 0.8);
    CHECK(q.matrix() == q.matrix().transpose());
    const double lo = q.min_eigenvalue();
    CHECK(lo > -1e-12);
    const bool controllable = kalman_rank_index(A, M).has_value();
    CHECK((lo > 1e-12) == controllable);
  }
}

TEST_CASE("gramian inverse-norm slopes") {
  std::vector<double> grid;
  for (int k = 1; k <= 8; ++k) grid.push_back(std::pow(2.0, -k));
  const auto free = gramian_inverse_norm_slope(Mat::Zero(2, 2), Mat::Identity(2, 2), 1, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(std::abs(free.inverse_norm[i] - 6.0 / grid[i]) < 1e-8 * (6.0 / grid[i]));
  }
  CHECK(free.fit.slope == doctest::Approx(-1.0).epsilon(1e-9));

  const auto kin = gramian_inverse_norm_slope(nilpotent(), e2(), 2, grid);
  CHECK(std::abs(kin.fit.slope + 3.0) < 0.1);
  CHECK(kin.within_bound);
  const auto scaled = gramian_inverse_norm_slope(nilpotent(), 2.0 * e2(), 2, grid);
  CHECK(scaled.fit.slope == doctest::Approx(kin.fit.slope).epsilon(1e-8));
  CHECK(scaled.inverse_norm[0] == doctest::Approx(kin.inverse_norm[0] / 4.0).epsilon(1e-8));

  const double bad[] = {0.5, 0.25};
  CHECK_THROWS_AS(gramian_inverse_norm_slope(Mat::Zero(2, 2), e2(), 1, bad), SingularGramian);
  const double increasing[] = {0.25, 0.5};
  CHECK_THROWS_AS(gramian_inverse_norm_slope(nilpotent(), e2(), 2, increasing), GridMismatch);
}

TEST_CASE("solve_lyapunov") {
  // Stationary OU with B = -I, unit noise: S = I / 2.
  const Mat S = solve_lyapunov(-Mat::Identity(2, 2), Mat::Identity(2, 2));
  CHECK((S - 0.5 * Mat::Identity(2, 2)).norm() < 1e-14);
  std::mt19937_64 gen(5);
  Mat F = random_matrix(gen, 3, 3, 0.3) - 2.0 * Mat::Identity(3, 3);
  Mat G = random_matrix(gen, 3, 3);
  Mat D = G * G.transpose();
  const Mat X = solve_lyapunov(F, D);
  CHECK((F * X + X * F.transpose() + D).cwiseAbs().maxCoeff() < 1e-12);
}
