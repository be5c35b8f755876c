#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mvlab/types.hpp"

namespace mvlab {

// Pairwise (tree) summation in a fixed order.
double pairwise_sum(std::span<const double> values);

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double std_dev = 0.0;
  std::size_t count = 0;
};

MeanEstimate mean_estimate(std::span<const double> samples);

// Sample covariance of two equally long sequences (divisor n - 1).
double sample_covariance(std::span<const double> a, std::span<const double> b);

// Standard error of mean(a) - mean(b) when a and b are independent.
double combined_std_error(const MeanEstimate& a, const MeanEstimate& b);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_std_error = 0.0;
  double residual_rms = 0.0;
  std::size_t count = 0;
};

// Ordinary least squares y = intercept + slope * x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

// Least-squares fit of log(y) against log(x); every entry must be positive.
LinearFit fit_log_log(std::span<const double> x, std::span<const double> y);

// Two-sided 95% Student-t quantile for the given degrees of freedom.
double student_t_quantile_95(std::size_t dof);

// Row-wise mean of a particle cloud, reduced pairwise over particles.
Vec cloud_mean(const RowMat& states);

}  // namespace mvlab
