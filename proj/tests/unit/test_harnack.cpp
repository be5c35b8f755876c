#include "doctest.h"

#include <cmath>
#include <random>

#include "mvlab/errors.hpp"
#include "mvlab/harnack.hpp"
#include "mvlab/presets.hpp"

using namespace mvlab;

namespace {

RowMat gaussian_cloud(std::uint64_t seed, Eigen::Index n, Eigen::Index d, double mean = 0.0, double sd = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(mean, sd);
  RowMat x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = g(gen);
  return x;
}

std::vector<double> log_grid(double a, double b, int n) {
  std::vector<double> t;
  for (int k = 0; k < n; ++k) t.push_back(a * std::pow(b / a, k / double(n - 1)));
  return t;
}

GaussianLaw dirac(const Vec& x) { return {x, SymMatrix(Mat::Zero(x.size(), x.size()))}; }

}  // namespace

TEST_CASE("identical laws carry no entropy") {
  const auto ou = make_preset("linear-ou");
  const GaussianLaw mu{(Vec(2) << 0.3, 0.1).finished(), SymMatrix(0.2 * Mat::Identity(2, 2))};
  const auto r = entropy_cost_gaussian(*ou, mu, mu, log_grid(0.05, 1.0, 5));
  for (const auto& row : r.rows) CHECK(std::abs(row.entropy) < 1e-12);
  CHECK(r.fitted_c == 0.0);

  const auto kin = make_preset("kinetic-langevin");
  const auto d = degenerate_entropy_cost_experiment(*kin, dirac(Vec::Zero(3)), dirac(Vec::Zero(3)), {0.1, 0.5, 1.0});
  for (const auto& row : d.rows) CHECK(std::abs(row.entropy) < 1e-12);
}

TEST_CASE("mean shift: bounded ratio and quadratic scaling") {
  const auto ou = make_preset("linear-ou");
  const auto t = log_grid(0.05, 1.0, 12);
  const Vec delta = (Vec(2) << 0.5, 0.0).finished();
  const auto r1 = entropy_cost_gaussian(*ou, dirac(Vec::Zero(2)), dirac(delta), t);
  const auto r2 = entropy_cost_gaussian(*ou, dirac(Vec::Zero(2)), dirac(2.0 * delta), t);
  CHECK(r1.stable);
  CHECK(r1.ratio_spread < 2.0);
  CHECK(r1.path == EntropyPath::Gaussian);
  for (std::size_t k = 0; k < t.size(); ++k) {
    CHECK(r2.rows[k].w2sq == doctest::Approx(4.0 * r1.rows[k].w2sq).epsilon(1e-12));
    // sigma~ depends on the mean, so the covariance part breaks exact scaling slightly.
    CHECK(r2.rows[k].entropy == doctest::Approx(4.0 * r1.rows[k].entropy).epsilon(0.05));
  }
  // Constant noise: the mean-shift entropy is exactly quadratic.
  const auto flat = make_linear_ou(2, 1.0, 0.5, 1.0, 1.0, 0.0);
  const auto f1 = entropy_cost_gaussian(*flat, dirac(Vec::Zero(2)), dirac(delta), t);
  const auto f2 = entropy_cost_gaussian(*flat, dirac(Vec::Zero(2)), dirac(2.0 * delta), t);
  for (std::size_t k = 0; k < t.size(); ++k) {
    CHECK(f2.rows[k].entropy == doctest::Approx(4.0 * f1.rows[k].entropy).epsilon(1e-8));
    CHECK(f2.rows[k].ratio == doctest::Approx(f1.rows[k].ratio).epsilon(1e-8));
  }
  // Small-t limit of t Ent / W2^2 is 1 / (2 (lambda^2 + s0^2)) = 1/4.
  CHECK(f1.rows.front().ratio == doctest::Approx(0.25).epsilon(0.02));

  auto held = r1;
  check_holdout(held, *ou, GaussianLaw{(Vec(2) << 0.2, -0.1).finished(), SymMatrix(0.1 * Mat::Identity(2, 2))},
                GaussianLaw{(Vec(2) << -0.3, 0.4).finished(), SymMatrix(0.1 * Mat::Identity(2, 2))});
  CHECK(held.holdout_pass);
  CHECK(held.holdout.size() == t.size());
}

TEST_CASE("degenerate entropy envelope") {
  const auto kin = make_preset("kinetic-langevin");
  const auto r = degenerate_entropy_cost_experiment(*kin, dirac(Vec::Zero(3)),
                                                    dirac((Vec(3) << 0.3, 0.2, 0.1).finished()), log_grid(0.1, 1.0, 10));
  CHECK(r.exponent == 5.0);
  CHECK(r.exponent_plain == 7.0);
  CHECK(r.modified_form);
  CHECK(r.entropy_fit.slope >= -5.5);
  CHECK(r.modified_fit.slope >= -5.5);
  // A position offset is two integrations away from the noise: Ent ~ t^-5.
  CHECK(r.entropy_fit.slope == doctest::Approx(-5.0).epsilon(0.05));
  const auto ou = make_preset("linear-ou");
  CHECK_THROWS_AS(degenerate_entropy_cost_experiment(*ou, dirac(Vec::Zero(2)), dirac(Vec::Zero(2)), {0.5}),
                  ParameterOutOfRange);
}

TEST_CASE("k-NN entropy path") {
  const auto ou = make_preset("linear-ou");
  const RowMat mu = gaussian_cloud(1, 1000, 2, 0.0, 0.5);
  const RowMat nu = gaussian_cloud(2, 1000, 2, 0.0, 0.5);
  KnnOptions o;
  o.h = 0.05;
  const auto same = entropy_cost_knn(*ou, mu, nu, {0.5, 1.0}, o);
  CHECK(same.path == EntropyPath::Knn);
  for (const auto& row : same.rows) CHECK(std::abs(row.entropy) < 0.1);
  CHECK_THROWS_AS(entropy_cost_knn(*ou, mu, nu, {0.01, 1.0}, o), EstimatorDegenerate);

  // Shifted clouds: compare with the Gaussian path of the fitted laws.
  const RowMat shifted = (nu.array() + 1.0).matrix();
  const auto knn = entropy_cost_knn(*ou, mu, shifted, {0.5, 1.0}, o);
  const auto exact = entropy_cost_gaussian(*ou, gaussian_fit(EmpiricalMeasure(mu)),
                                           gaussian_fit(EmpiricalMeasure(shifted)), {0.5, 1.0});
  for (std::size_t k = 0; k < 2; ++k) CHECK(knn.rows[k].entropy == doctest::Approx(exact.rows[k].entropy).epsilon(0.25));
}

TEST_CASE("log-Harnack checks") {
  const auto ou = make_preset("linear-ou");
  const RowMat mu = gaussian_cloud(3, 400, 2, 0.2, 0.5);
  LogHarnackOptions o;
  o.h = 0.02;
  const auto jensen = log_harnack_check(*ou, mu, mu, 0.5, harnack_battery(2), o);
  CHECK(jensen.pass);
  CHECK(jensen.cost == 0.0);
  for (const auto& row : jensen.rows) CHECK(row.excess <= 1e-12);
  CHECK(jensen.rows.front().f == "one");
  CHECK(jensen.rows.front().excess == 0.0);

  const RowMat nu = (mu.array() + 0.3).matrix();
  o.c = 0.25;
  const auto shifted = log_harnack_check(*ou, mu, nu, 0.5, harnack_battery(2), o);
  CHECK(shifted.pass);
  CHECK(shifted.cost > 0.0);
  CHECK_THROWS_AS(log_harnack_check(*ou, mu, nu, 0.5, {make_test_function("coord0", 2)}, o), ParameterOutOfRange);

  // Closed form with the Gaussian-path constant.
  const auto r = entropy_cost_gaussian(*ou, dirac(Vec::Zero(2)), dirac((Vec(2) << 0.5, 0.0).finished()),
                                       log_grid(0.05, 1.0, 12));
  const GaussianLaw gm{Vec::Zero(2), SymMatrix(0.1 * Mat::Identity(2, 2))};
  const GaussianLaw gn{(Vec(2) << 0.4, -0.2).finished(), SymMatrix(0.1 * Mat::Identity(2, 2))};
  for (double t : {0.1, 0.5, 1.0}) CHECK(gaussian_log_harnack(*ou, gm, gn, t, 0.5, r.fitted_c).pass);
}
