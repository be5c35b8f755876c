#include "doctest.h"

#include <cmath>
#include <random>

#include "mvlab/errors.hpp"
#include "mvlab/presets.hpp"

using namespace mvlab;

namespace {

RowMat random_cloud(std::mt19937_64& gen, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> g(0.3, 1.0);
  RowMat x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = g(gen);
  return x;
}

}  // namespace

TEST_CASE("preset catalogue") {
  const auto cat = preset_catalogue();
  REQUIRE(cat.size() == 3);
  CHECK(cat[0].name == "linear-ou");
  CHECK(cat[2].name == "kinetic-langevin");
  CHECK(cat[2].l == 2);
  CHECK(make_preset("kinetic-langevin")->structure()->l == 2);
  CHECK(preset_info("linear-ou").theoretical_rate() == doctest::Approx(0.82));
  CHECK_THROWS_AS(make_preset("nope"), ConfigInvalid);
}

TEST_CASE("derivative oracles agree with finite differences") {
  std::mt19937_64 gen(11);
  for (const auto& info : preset_catalogue()) {
    const auto model = make_preset(info.name);
    const Eigen::Index n = model->dim(), d = model->noise_dim();
    const RowMat cloud = random_cloud(gen, 40, n);
    const EmpiricalMeasure mu(cloud);
    const Vec x = cloud.row(3).transpose();
    Vec v = Vec::Random(n);
    const double eps = 1e-5;

    // grad_x_drift against central differences: error O(eps^2).
    const Vec fd = (drift_at(*model, 0.0, x + eps * v, mu) - drift_at(*model, 0.0, x - eps * v, mu)) / (2 * eps);
    CHECK((grad_x_drift(*model, 0.0, x, mu, v) - fd).norm() < 1e-8);

    // Lions kernel: moving particle j by eps v changes the measure by
    // (1/N) D^I b(x)(mu)(y_j) v to first order.
    const Eigen::Index j = 7;
    RowMat plus = cloud, minus = cloud;
    plus.row(j) += eps * v.transpose();
    minus.row(j) -= eps * v.transpose();
    const Vec fd_mu =
        (drift_at(*model, 0.0, x, EmpiricalMeasure(plus)) - drift_at(*model, 0.0, x, EmpiricalMeasure(minus))) /
        (2 * eps) * static_cast<double>(cloud.rows());
    CHECK((lions_drift(*model, 0.0, x, mu, cloud.row(j).transpose()) * v - fd_mu).norm() < 1e-6);

    const Mat fd_sigma = (sigma_tilde_at(*model, 0.0, EmpiricalMeasure(plus)) -
                          sigma_tilde_at(*model, 0.0, EmpiricalMeasure(minus))) /
                         (2 * eps) * static_cast<double>(cloud.rows());
    const auto kernel = lions_sigma(*model, 0.0, mu, cloud.row(j).transpose());
    Mat contracted = Mat::Zero(d, d);
    for (Eigen::Index k = 0; k < n; ++k) contracted += kernel[static_cast<std::size_t>(k)] * v(k);
    CHECK((contracted - fd_sigma).norm() < 1e-6);
  }
}

TEST_CASE("ellipticity margin and Lipschitz spot checks") {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> g(0.0, 2.0);
  for (const auto& info : preset_catalogue()) {
    const auto model = make_preset(info.name);
    const Eigen::Index n = model->dim();
    for (int trial = 0; trial < 50; ++trial) {
      const EmpiricalMeasure mu(random_cloud(gen, 10, n));
      const Mat s = sigma_tilde_at(*model, 0.0, mu);
      const Mat diff = s - model->lambda() * Mat::Identity(s.rows(), s.cols());
      CHECK(SymMatrix(diff).min_eigenvalue() >= -1e-12);
      Vec x(n), y(n);
      for (Eigen::Index k = 0; k < n; ++k) {
        x(k) = g(gen);
        y(k) = g(gen);
      }
      const double lhs = (drift_at(*model, 0.0, x, mu) - drift_at(*model, 0.0, y, mu)).norm();
      CHECK(lhs <= model->lipschitz_x() * (x - y).norm() + 1e-12);
    }
  }
}

TEST_CASE("linear forms reproduce the drift") {
  const auto model = make_preset("kinetic-langevin");
  const auto form = model->linear_form();
  REQUIRE(form.has_value());
  Vec x(3), m(3);
  x << 0.3, -0.2, 1.1;
  m << 0.1, 0.4, -0.5;
  Vec z(1);
  z << m(2);
  Vec b(1);
  model->drift(0.0, x, z, b);
  const Vec full = form->B * x + form->C * m;
  CHECK(full(0) == doctest::Approx(-0.5 * x(0) + x(1)));
  CHECK(full(1) == doctest::Approx(x(2)));
  CHECK(full(2) == doctest::Approx(b(0)));
  CHECK(form->noise(m)(0, 0) == doctest::Approx(std::sqrt(1.0 + 0.04 * 0.25)));
}
