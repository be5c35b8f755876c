#include "mvlab/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "mvlab/errors.hpp"

namespace mvlab {

namespace {

double pairwise_sum_range(const double* data, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += data[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum_range(data, half) + pairwise_sum_range(data + half, n - half);
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
  return pairwise_sum_range(values.data(), values.size());
}

MeanEstimate mean_estimate(std::span<const double> samples) {
  MeanEstimate est;
  est.count = samples.size();
  if (samples.empty()) return est;
  est.mean = pairwise_sum(samples) / static_cast<double>(samples.size());
  if (samples.size() < 2) return est;
  std::vector<double> sq(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double dev = samples[i] - est.mean;
    sq[i] = dev * dev;
  }
  const double var = pairwise_sum(sq) / static_cast<double>(samples.size() - 1);
  est.std_dev = std::sqrt(var);
  est.std_error = est.std_dev / std::sqrt(static_cast<double>(samples.size()));
  return est;
}

double sample_covariance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw LengthMismatch("sample_covariance: lengths differ");
  if (a.size() < 2) return 0.0;
  const double ma = pairwise_sum(a) / static_cast<double>(a.size());
  const double mb = pairwise_sum(b) / static_cast<double>(b.size());
  std::vector<double> prod(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) prod[i] = (a[i] - ma) * (b[i] - mb);
  return pairwise_sum(prod) / static_cast<double>(a.size() - 1);
}

double combined_std_error(const MeanEstimate& a, const MeanEstimate& b) {
  return std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw LengthMismatch("fit_line: lengths differ");
  if (x.size() < 2) throw LengthMismatch("fit_line: need at least two points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LinearFit fit;
  fit.count = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    rss += r * r;
  }
  fit.residual_rms = std::sqrt(rss / n);
  if (x.size() > 2) fit.slope_std_error = std::sqrt(rss / (n - 2.0) / sxx);
  return fit;
}

LinearFit fit_log_log(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw LengthMismatch("fit_log_log: lengths differ");
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::domain_error("fit_log_log: non-positive entry");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return fit_line(lx, ly);
}

double student_t_quantile_95(std::size_t dof) {
  static constexpr double kTable[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                                      2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
                                      2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
                                      2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
  if (dof == 0) return std::numeric_limits<double>::infinity();
  if (dof <= 30) return kTable[dof - 1];
  return 1.96 + 2.4 / static_cast<double>(dof);
}

Vec cloud_mean(const RowMat& states) {
  const auto n = static_cast<std::size_t>(states.rows());
  Vec mean(states.cols());
  std::vector<double> column(n);
  for (Eigen::Index c = 0; c < states.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) column[i] = states(static_cast<Eigen::Index>(i), c);
    mean(c) = pairwise_sum(column) / static_cast<double>(n);
  }
  return mean;
}

}  // namespace mvlab
