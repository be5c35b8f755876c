#pragma once

#include <span>
#include <vector>

#include "mvlab/measure.hpp"
#include "mvlab/model.hpp"

namespace mvlab {

// Exact law of a linear model started from a Gaussian:
//   m' = (B + C) m,  S' = B S + S B^T + E (lambda^2 I + sigma~(m) sigma~(m)^T) E^T.
// Integrated by RK4 with step doubling until successive results agree to
// 1e-10 (relative to max(1, |value|)).
GaussianLaw propagate_gaussian(const LinearGaussianForm& form, const GaussianLaw& initial, double t);

// Laws at increasing times (each entry integrated from the previous one).
std::vector<GaussianLaw> gaussian_path(const LinearGaussianForm& form, const GaussianLaw& initial,
                                       std::span<const double> times);

// b(x, mu) = B x + C mean(mu), constant sigma~ = Sigma.
GaussianLaw linear_closed_form(const Mat& B, const Mat& C, const Mat& Sigma, double lambda, const Vec& m0,
                               const Mat& S0, double t);

// Stationary covariance when the noise does not depend on the mean:
// (B) S + S B^T + E (lambda^2 I + sigma~ sigma~^T) E^T = 0.
Mat stationary_covariance(const LinearGaussianForm& form, const Vec& stationary_mean);

}  // namespace mvlab
