#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvlab/measure.hpp"
#include "mvlab/model.hpp"
#include "mvlab/parallel.hpp"
#include "mvlab/stats.hpp"

namespace mvlab {

// Relative slack allowed below a theoretical decay rate.
inline constexpr double kRateTolerance = 0.25;
// Decay fits stop once value - floor falls to this multiple of the floor.
inline constexpr double kFloorMultiple = 5.0;

// Probe results for a dissipativity condition
//   LHS(x, y, mu, nu) <= theta1 W2(mu, nu)^2 - theta2 |x - y|^2.
struct DissipativityReport {
  double theta1 = 0.0;         // constants under test
  double theta2 = 0.0;
  double margin = 0.0;         // min over probes of theta1 W2^2 - theta2 |x-y|^2 - LHS, per unit scale
  double implied_theta2 = 0.0; // min over mu = nu probes of -LHS / |x-y|^2
  double implied_theta1 = 0.0; // max over x = y probes of LHS / W2^2
  long probes = 0;
  bool satisfied = false;      // margin >= 0 and theta2 > theta1
};

struct ProbeOptions {
  long samples = 2000;
  Eigen::Index cloud_size = 5;
  std::uint64_t seed = 0;
};

// (E): 2<b(x,mu) - b(y,nu), x - y> + ||sigma~(mu) - sigma~(nu)||_HS^2.
DissipativityReport check_dissipativity_E(const MeanFieldModel& model, double theta1, double theta2,
                                          const ProbeOptions& options = {});

// (F) with the Lyapunov weights (r, r0):
//   (1/2)||sigma~(mu) - sigma~(nu)||^2 + <b(x,mu) - b(y,nu), D2 + r r0 M^T D1>
//   + <r^2 D1 + r r0 M D2, A D1 + M D2>.
DissipativityReport check_dissipativity_F(const MeanFieldModel& model, double r, double r0, double theta1,
                                          double theta2, const ProbeOptions& options = {});

// rho(x) = (r^2/2)|x1|^2 + (1/2)|x2|^2 + r r0 <x1, M x2>.
double lyapunov_rho(ConstVecRef x, double r, double r0, const Mat& M);
// Largest c0 with c0 |x|^2 <= rho(x) <= |x|^2 / c0.
double sandwich_constant(double r, double r0, const Mat& M);

struct InvariantEstimate {
  RowMat cloud;           // ensemble at the burn-in time
  double burn_in = 0.0;
  double w2sq_split = 0.0;    // W2^2 between the two halves at T0
  double w2sq_shifted = 0.0;  // W2^2 between half A at T0 and half B at T0 + 1
  bool stationary = false;    // shifted <= 2 split
};

struct DecayOptions {
  double h = 0.01;
  long snapshot_every = 10;
  std::uint64_t seed = 0;
  std::uint64_t flow_id = 0;
  double fit_from = 0.0;  // particle fits ignore earlier snapshots
  Execution exec;
};

// Runs the particle system to T0 and checks stationarity over one more time
// unit; throws NotConverged when the check fails.
InvariantEstimate estimate_invariant_measure(const MeanFieldModel& model, const RowMat& initial, double burn_in,
                                             const DecayOptions& options);

struct DecayReport {
  std::string path_tag;  // "particles" or "gaussian"
  std::vector<double> t;
  std::vector<double> w2sq;
  std::vector<double> entropy;
  double floor = 0.0;           // W2^2 between independent stationary clouds, subtracted before the fit
  LinearFit fit;                // log(value - floor) vs t on the fit window
  double fit_from = 0.0;        // window start
  double fitted_rate = 0.0;     // -slope
  double rate_ci = 0.0;         // 95% half-width
  double theoretical_rate = 0.0;
  bool pass = false;            // fitted_rate >= (1 - kRateTolerance) theoretical_rate
};

// W2^2(P_t mu, mu_bar) from particles; mu_bar is represented by `reference`.
// At most kMaxAssignmentSize leading points enter each distance.
DecayReport w2_decay_rate(const MeanFieldModel& model, const RowMat& initial, const RowMat& reference,
                          double horizon, double theoretical_rate, const DecayOptions& options);

// Independent repetitions of w2_decay_rate, each with its own reference cloud
// (burn-in from reference_start) and its own noise. The snapshots of one system
// are strongly correlated, so the interval comes from the spread of the fits.
struct ReplicatedDecay {
  std::vector<DecayReport> runs;
  std::vector<double> rates;
  double fitted_rate = 0.0;  // mean of the per-run rates
  double rate_ci = 0.0;      // 95% half-width of that mean
  double theoretical_rate = 0.0;
  bool pass = false;
};
ReplicatedDecay replicated_w2_decay(const MeanFieldModel& model, const RowMat& initial,
                                    const RowMat& reference_start, double burn_in, double horizon,
                                    double theoretical_rate, const DecayOptions& options, int replications);

// Stationary Gaussian law of a linear model (mean from (B + C) m = 0).
GaussianLaw stationary_gaussian(const MeanFieldModel& model);

// Exact Gaussian W2^2 and entropy curves against the stationary law; the
// entropy fit uses t >= 1 only.
DecayReport gaussian_w2_decay(const MeanFieldModel& model, const GaussianLaw& initial, const std::vector<double>& t,
                              double theoretical_rate);
DecayReport entropy_decay_rate(const MeanFieldModel& model, const GaussianLaw& initial,
                               const std::vector<double>& t, double theoretical_rate);

// Kinetic analogue of w2_decay_rate, gated on c0 (theta2 - theta1).
DecayReport degenerate_decay_rate(const MeanFieldModel& model, const RowMat& initial, const RowMat& reference,
                                  double horizon, double theoretical_rate, const DecayOptions& options);

// Synchronous coupling of two particle systems on identical noise; decay of
// the mean of |X_i - Y_i|^2 (or of rho(X_i - Y_i) with the weights given).
struct ContractionOptions {
  bool use_rho = false;
  double r = 1.0, r0 = 0.0;
};
struct ContractionReport {
  DecayReport decay;
  bool monotone = false;  // the averaged functional never increases between snapshots
};
ContractionReport synchronous_contraction(const MeanFieldModel& model, const RowMat& mu, const RowMat& nu,
                                          double horizon, double theoretical_rate, const DecayOptions& options,
                                          const ContractionOptions& contraction = {});

}  // namespace mvlab
