#pragma once

#include <array>
#include <cmath>
#include <utility>

#include "mvlab/errors.hpp"
#include "mvlab/types.hpp"

namespace mvlab {

// Composite Simpson on [a, b], halving the panel width until the max-norm
// change between successive levels drops below rel_tol times the estimate.
// f maps a scalar to an Eigen matrix (or vector) of fixed shape.
template <typename F>
Mat simpson_halving(F&& f, double a, double b, double rel_tol, int max_levels = 20) {
  Mat fa = f(a);
  Mat fb = f(b);
  Mat odd = f(0.5 * (a + b));
  Mat even = Mat::Zero(fa.rows(), fa.cols());
  long panels = 2;
  Mat previous = (b - a) / 6.0 * (fa + fb + 4.0 * odd);
  for (int level = 1; level <= max_levels; ++level) {
    even += odd;
    odd.setZero();
    panels *= 2;
    const double width = (b - a) / static_cast<double>(panels);
    for (long k = 1; k < panels; k += 2) odd += f(a + width * static_cast<double>(k));
    Mat current = width / 3.0 * (fa + fb + 4.0 * odd + 2.0 * even);
    const double change = (current - previous).cwiseAbs().maxCoeff();
    const double scale = current.cwiseAbs().maxCoeff();
    if (change <= rel_tol * scale || (scale == 0.0 && change == 0.0)) {
      if (level >= 2) return current;
    }
    previous = std::move(current);
  }
  throw QuadratureNotConverged("composite Simpson did not reach the requested tolerance");
}

// Three-point Gauss-Legendre rule on [a, b].
template <typename F>
auto gauss_legendre3(F&& f, double a, double b) {
  static constexpr std::array<double, 3> kNodes = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static constexpr std::array<double, 3> kWeights = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  auto sum = (kWeights[0] * f(mid + half * kNodes[0])).eval();
  sum += kWeights[1] * f(mid + half * kNodes[1]);
  sum += kWeights[2] * f(mid + half * kNodes[2]);
  return (half * sum).eval();
}

}  // namespace mvlab
