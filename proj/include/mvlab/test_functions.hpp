#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mvlab/measure.hpp"
#include "mvlab/types.hpp"

namespace mvlab {

// A payoff f with, where available, its exact expectation under a Gaussian.
struct TestFunction {
  std::string name;
  std::function<double(const Vec&)> f;
  std::function<double(const GaussianLaw&)> gaussian_mean;  // empty when unknown
  bool positive = false;
};

// "one", "coord<k>", "square<k>", "norm2", "bump" (exp(-|x|^2/2)),
// "gauss" (exp(-|x|^2)), "sigmoid<k>" (1 + logistic(x_k)).
TestFunction make_test_function(const std::string& name, Eigen::Index dim);

// Payoffs used by the weighted-law transfer check.
std::vector<TestFunction> transfer_battery(Eigen::Index dim);
// Strictly positive bounded payoffs for the log-Harnack check.
std::vector<TestFunction> harnack_battery(Eigen::Index dim);

}  // namespace mvlab
