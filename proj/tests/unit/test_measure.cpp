#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mvlab/assignment.hpp"
#include "mvlab/errors.hpp"
#include "mvlab/measure.hpp"

using namespace mvlab;

namespace {

RowMat random_cloud(std::mt19937_64& gen, Eigen::Index n, Eigen::Index d, double shift = 0.0, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  RowMat x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = g(gen) + shift;
  return x;
}

double brute_force(const Mat& cost) {
  std::vector<int> perm(static_cast<std::size_t>(cost.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    best = std::min(best, assignment_cost(cost, perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

RowMat gaussian_sample(std::mt19937_64& gen, Eigen::Index n, const Vec& mean, const Mat& cov) {
  const Mat L = cov.llt().matrixL();
  RowMat z = random_cloud(gen, n, mean.size());
  RowMat x = (z * L.transpose()).rowwise() + mean.transpose();
  return x;
}

}  // namespace

TEST_CASE("empirical measure invariants") {
  RowMat p(3, 1);
  p << 0, 1, 2;
  EmpiricalMeasure mu(p);
  CHECK(mu.uniform());
  CHECK(mu.weights().sum() == doctest::Approx(1.0));
  CHECK_THROWS_AS(EmpiricalMeasure(p, Vec::Constant(3, 0.3)), UnsupportedWeights);
  CHECK_THROWS_AS(EmpiricalMeasure(RowMat(0, 2)), TooFewParticles);
}

TEST_CASE("wasserstein examples") {
  std::mt19937_64 gen(1);
  const RowMat a = random_cloud(gen, 20, 3);
  CHECK(wasserstein_k(EmpiricalMeasure(a), EmpiricalMeasure(a), 2.0) == 0.0);
  Vec x(2), y(2);
  x << 1, 2;
  y << 4, 6;
  CHECK(wasserstein_k(EmpiricalMeasure::dirac(x), EmpiricalMeasure::dirac(y), 1.0) == doctest::Approx(5.0));
  CHECK(wasserstein_k(EmpiricalMeasure::dirac(x), EmpiricalMeasure::dirac(y), 3.0) == doctest::Approx(5.0));
  CHECK_THROWS_AS(wasserstein_k(EmpiricalMeasure(a), EmpiricalMeasure(random_cloud(gen, 19, 3)), 2.0), SizeMismatch);
  Vec w = Vec::Constant(20, 0.05);
  w(0) = 0.04;
  w(1) = 0.06;
  CHECK_THROWS_AS(wasserstein_k(EmpiricalMeasure(a, w), EmpiricalMeasure(a), 2.0), UnsupportedWeights);
}

TEST_CASE("1-D N=3 equals the minimum over all permutations") {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 50; ++trial) {
    const RowMat a = random_cloud(gen, 3, 1), b = random_cloud(gen, 3, 1, 0.5);
    for (double k : {1.0, 2.0, 3.5}) {
      Mat c(3, 3);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) c(i, j) = std::pow(std::abs(a(i, 0) - b(j, 0)), k);
      const double expected = std::pow(brute_force(c) / 3.0, 1.0 / k);
      CHECK(wasserstein_k(EmpiricalMeasure(a), EmpiricalMeasure(b), k) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("Hungarian equals brute force for N <= 6") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 6;
    Mat c(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c(i, j) = u(gen);
    CHECK(assignment_cost(c, solve_assignment(c)) == brute_force(c));
  }
}

TEST_CASE("W2 is a metric on equal-size clouds") {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 20; ++trial) {
    const EmpiricalMeasure a(random_cloud(gen, 15, 2)), b(random_cloud(gen, 15, 2, 0.3)),
        c(random_cloud(gen, 15, 2, -0.2, 1.5));
    const double ab = wasserstein_k(a, b, 2), ba = wasserstein_k(b, a, 2);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-14));
    CHECK(wasserstein_k(a, c, 2) <= ab + wasserstein_k(b, c, 2) + 1e-9);
  }
}

TEST_CASE("modified distance") {
  Vec x(3), y(3);
  x << 1, 2, 3;
  CHECK(modified_distance(x, x, 0.3, 2) == 0.0);
  y << 0, 0, 1;
  CHECK(modified_distance(x, y, 1.0, 2) == doctest::Approx((x - y).norm()));
  Vec z = y;
  z(0) += 0.25;
  CHECK(modified_distance(z, y, 0.25, 2) == doctest::Approx(1.0));
}

TEST_CASE("modified W2 examples and sandwich") {
  std::mt19937_64 gen(5);
  const EmpiricalMeasure a(random_cloud(gen, 12, 3)), b(random_cloud(gen, 12, 3, 0.4));
  CHECK(wasserstein_2_modified(a, b, 1.0, 0) == doctest::Approx(wasserstein_k(a, b, 2)).epsilon(1e-12));
  CHECK(wasserstein_2_modified(a, a, 0.3, 2) == 0.0);
  const double T = 2.0;
  for (int trial = 0; trial < 30; ++trial) {
    const EmpiricalMeasure p(random_cloud(gen, 10, 3)), q(random_cloud(gen, 10, 3, 0.2, 1.3));
    const double t = T * (trial + 1) / 30.0;
    const double w2 = std::pow(wasserstein_k(p, q, 2), 2), w2t = std::pow(wasserstein_2_modified(p, q, t, 2), 2);
    CHECK(w2 / std::max(T * T, 1.0) <= w2t * (1 + 1e-12));
    CHECK(w2t <= std::max(1.0, T * T) / (t * t) * w2 * (1 + 1e-12));
  }
}

TEST_CASE("optimal initial coupling") {
  std::mt19937_64 gen(6);
  const RowMat a = random_cloud(gen, 8, 2);
  const auto id = optimal_initial_coupling(EmpiricalMeasure(a), EmpiricalMeasure(a));
  for (int i = 0; i < 8; ++i) CHECK(id[static_cast<std::size_t>(i)] == i);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 5;
    const RowMat x = random_cloud(gen, n, 1), y = random_cloud(gen, n, 1, 1.0);
    const EmpiricalMeasure mx(x), my(y);
    const auto pi = optimal_initial_coupling(mx, my);
    Mat c(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c(i, j) = std::pow(x(i, 0) - y(j, 0), 2);
    CHECK(pairing_cost(mx, my, pi) == doctest::Approx(brute_force(c) / n).epsilon(1e-12));
    CHECK(pairing_cost(mx, my, pi) == doctest::Approx(std::pow(wasserstein_k(mx, my, 2), 2)).epsilon(1e-12));
  }
}

TEST_CASE("gaussian_kl closed forms") {
  const GaussianLaw p{Vec::Zero(2), SymMatrix::identity(2)};
  CHECK(gaussian_kl(p, p) == 0.0);
  Vec delta(2);
  delta << 0.3, -0.4;
  CHECK(gaussian_kl(GaussianLaw{delta, SymMatrix::identity(2)}, p) == doctest::Approx(0.5 * 0.25));
  const GaussianLaw a{Vec::Zero(1), SymMatrix::identity(1)};
  const GaussianLaw b{Vec::Zero(1), SymMatrix(2.0 * Mat::Identity(1, 1))};
  const double closed = 0.5 * (0.5 - 1.0 + std::log(2.0));
  CHECK(gaussian_kl(a, b) == doctest::Approx(closed));
  // Numeric integral of p log(p / q) in 1-D.
  double integral = 0.0;
  const double dx = 1e-3;
  for (double x = -12.0; x <= 12.0; x += dx) {
    const double pa = std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI);
    const double pb = std::exp(-0.25 * x * x) / std::sqrt(4 * M_PI);
    integral += pa * std::log(pa / pb) * dx;
  }
  CHECK(integral == doctest::Approx(closed).epsilon(1e-6));
  CHECK_THROWS_AS(gaussian_kl(p, GaussianLaw{Vec::Zero(2), SymMatrix::zero(2)}), SingularCovariance);
  // Nonnegative over a parameter grid, zero only on the diagonal.
  for (double s : {0.5, 1.0, 2.0})
    for (double m : {-1.0, 0.0, 0.5}) {
      const GaussianLaw q{Vec::Constant(1, m), SymMatrix(s * Mat::Identity(1, 1))};
      const double kl = gaussian_kl(a, q);
      CHECK(kl >= 0.0);
      CHECK((kl == 0.0) == (s == 1.0 && m == 0.0));
    }
}

TEST_CASE("gaussian W2 closed forms") {
  const GaussianLaw a{Vec::Zero(1), SymMatrix(Mat::Identity(1, 1))};
  const GaussianLaw b{Vec::Constant(1, 2.0), SymMatrix(4.0 * Mat::Identity(1, 1))};
  CHECK(gaussian_w2_squared(a, b) == doctest::Approx(4.0 + 1.0));
  Vec m(2);
  m << 0.5, 1.0;
  const GaussianLaw p{Vec::Zero(2), SymMatrix::identity(2)}, q{m, SymMatrix::identity(2)};
  CHECK(gaussian_w2_modified_squared(p, q, 0.5, 1) == doctest::Approx(1.0 + 1.0));
}

TEST_CASE("knn relative entropy") {
  std::mt19937_64 gen(7);
  const Vec zero = Vec::Zero(2);
  const RowMat p = gaussian_sample(gen, 10000, zero, Mat::Identity(2, 2));
  const RowMat q = gaussian_sample(gen, 10000, zero, Mat::Identity(2, 2));
  CHECK(std::abs(knn_relative_entropy(p, q, 5, 1)) <= 0.05);

  Vec shift(2);
  shift << 1.0, 0.0;  // KL = 0.5
  const RowMat r = gaussian_sample(gen, 10000, shift, Mat::Identity(2, 2));
  CHECK(std::abs(knn_relative_entropy(r, q, 5, 1) - 0.5) <= 0.1);

  KnnDiagnostics diag;
  const double same = knn_relative_entropy(p, p, 5, 1, &diag);
  CHECK(std::abs(same) < 1e-3);
  CHECK(diag.excluded_coincidences == 10000);

  RowMat dup = p.topRows(50);
  dup.row(1) = dup.row(0);
  CHECK_NOTHROW(knn_relative_entropy(dup, q.topRows(50), 3, 1, &diag));
  CHECK(diag.jittered_points == 1);
  CHECK_THROWS_AS(knn_relative_entropy(p.topRows(3), q, 5), DegenerateSample);
}

TEST_CASE("gaussian_fit") {
  std::mt19937_64 gen(8);
  const RowMat x = random_cloud(gen, 100000, 2);
  const GaussianLaw g = gaussian_fit(EmpiricalMeasure(x));
  CHECK(g.mean.cwiseAbs().maxCoeff() < 0.02);
  CHECK((g.cov.matrix() - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.05);

  Mat A(2, 2);
  A << 2, 1, 0, 0.5;
  Vec b(2);
  b << 1, -1;
  const RowMat y = (x * A.transpose()).rowwise() + b.transpose();
  const GaussianLaw h = gaussian_fit(EmpiricalMeasure(y));
  CHECK((h.mean - (A * g.mean + b)).norm() < 1e-10);
  CHECK((h.cov.matrix() - A * g.cov.matrix() * A.transpose()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK_THROWS_AS(gaussian_fit(EmpiricalMeasure::dirac(b, 2)), TooFewParticles);
  const GaussianLaw point = gaussian_fit(EmpiricalMeasure::dirac(b, 5));
  CHECK(point.cov.matrix().norm() == 0.0);
}
