#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mvlab/measure.hpp"
#include "mvlab/model.hpp"
#include "mvlab/simulate.hpp"
#include "mvlab/stats.hpp"
#include "mvlab/steering.hpp"
#include "mvlab/test_functions.hpp"

namespace mvlab {

// |log R| above this marks a run as an outlier; such runs are counted and
// reported, never dropped.
inline constexpr double kLogWeightOutlier = 50.0;

// Noise addresses of one coupled pair: its own W (particle 0, `replica`) and
// the shared W~ path `path`.
struct CouplingNoise {
  std::uint64_t replica = 0;
  std::uint64_t path = 0;
};

struct CouplingRun {
  bool degenerate = false;
  double t0 = 0.0;
  double h = 0.0;
  long steps = 0;
  double lambda = 0.0;
  Vec x0, y0;
  Vec x_final, y_final;
  // Paths, filled when recording is requested. eta and dW have `steps` entries,
  // the others steps + 1.
  std::vector<Vec> x, y, eta, dW, xi_mu, xi_nu;
  double log_weight = 0.0;
  double eta_energy = 0.0;         // (1/2) lambda^-2 int |eta|^2 dt
  double terminal_gap = 0.0;       // |Y_t0 - X_t0|
  double identity_residual = 0.0;  // max over steps of the interpolation identity residual
  bool outlier = false;
};

// Y follows b(X, mu) + (xi^mu_t0 - xi^nu_t0 + x0 - y0)/t0 with diffusion
// lambda dW + sigma~(nu) dW~; eta = b(Y, nu) - b(X, mu) - (that constant).
CouplingRun couple_nondegenerate(const MeanFieldModel& model, const LawFlow& flow_mu, const LawFlow& flow_nu,
                                 const Vec& x0, const Vec& y0, double t0, const CouplingNoise& noise,
                                 bool record_paths = true);

// Gramian-steered coupling of a Hamiltonian model. `plan` may be shared across
// replicas; it is built on the fly when null.
CouplingRun couple_degenerate(const MeanFieldModel& model, const LawFlow& flow_mu, const LawFlow& flow_nu,
                              const Vec& x0, const Vec& y0, double t0, const CouplingNoise& noise,
                              const SteeringPlan* plan = nullptr, bool record_paths = true);

CouplingRun couple(const MeanFieldModel& model, const LawFlow& flow_mu, const LawFlow& flow_nu, const Vec& x0,
                   const Vec& y0, double t0, const CouplingNoise& noise, const SteeringPlan* plan = nullptr,
                   bool record_paths = true);

// sum <eta_j / lambda, dW_j> - (1/2) sum |eta_j / lambda|^2 h.
double girsanov_logweight(const std::vector<Vec>& eta, const std::vector<Vec>& dW, double lambda, double h);

// Pairs of starting points for replicas: (mu_i, nu_pi(i)) with pi optimal for
// clouds up to the assignment limit and the index pairing beyond it.
struct StartPairs {
  RowMat x0, y0;
};
StartPairs start_pairs(const RowMat& mu0, const RowMat& nu0);

// Many replicas with fresh W and fresh W~ per replica.
struct CouplingBatch {
  std::vector<CouplingRun> runs;  // without paths
  MeanEstimate weight;            // exp(log R)
  MeanEstimate gap;
  MeanEstimate energy;
  double max_abs_log_weight = 0.0;
  long outliers = 0;
};

struct BatchOptions {
  long replicas = 1000;
  std::uint64_t first_replica = 0;
  bool fresh_paths = true;       // false: every replica uses `path`
  std::uint64_t path = 0;
  Execution exec;
};

CouplingBatch coupling_batch(const MeanFieldModel& model, const LawFlow& flow_mu, const LawFlow& flow_nu,
                             const StartPairs& pairs, double t0, const BatchOptions& options);

// Martingale check: mean of exp(log R) within 3 SE of 1.
struct MartingaleReport {
  double t0 = 0.0;
  MeanEstimate weight;
  double z_score = 0.0;
  long outliers = 0;
  bool pass = false;
};
MartingaleReport martingale_report(const CouplingBatch& batch, double t0);

struct TransferRow {
  std::string f;
  MeanEstimate weighted;  // R f(X_t0)
  MeanEstimate direct;    // f(X^nu_t0)
  double combined_se = 0.0;
  bool pass = false;
  std::optional<double> closed_form;  // nu-side Gaussian value when available
  bool closed_form_pass = true;
};
struct TransferReport {
  std::vector<TransferRow> rows;
  bool pass = false;
};

// |mean(R f(X_t0)) - mean(f(X^nu_t0))| <= 3 combined SE for each f; with
// nu_law, the direct side is also compared to its exact expectation.
TransferReport weighted_law_transfer_check(const std::vector<CouplingRun>& runs,
                                           const std::vector<TestFunction>& battery, const RowMat& direct,
                                           const std::optional<GaussianLaw>& nu_law = std::nullopt);

// Law of X_t given the W~ path for a linear model started at x0, driven by the
// recorded flow coefficients (exact for the Euler chain).
GaussianLaw conditional_gaussian(const LinearFeatureModel& model, const LawFlow& flow, const Vec& x0,
                                 std::uint64_t path, long steps);

struct EntropyProbe {
  double t0 = 0.0;
  double w2sq = 0.0;
  MeanEstimate energy;  // (1/2) lambda^-2 int |eta|^2
  double c2 = 0.0;      // energy / (W2^2 (1 + 1/t0))
};
EntropyProbe entropy_bound_probe(const std::vector<CouplingRun>& runs, double w2sq, double t0);
// energy = a + b / t0 by least squares.
LinearFit fit_inverse_t0(const std::vector<EntropyProbe>& probes);

struct ExactHitLevel {
  double h = 0.0;
  MeanEstimate gap;
  MeanEstimate residual;
};
struct ExactHitStudy {
  std::vector<ExactHitLevel> levels;  // coarsest first
  std::vector<double> ratios;         // gap(h) / gap(h/2)
  bool roundoff_floor = false;        // all gaps below 1e-12
  bool pass = false;
};

// Terminal gap of the coupling under h-halving on nested Brownian paths.
// Step sizes are finest_h * 2^(levels-1), ..., finest_h.
ExactHitStudy exact_hit_study(const MeanFieldModel& model, const RowMat& mu0, const RowMat& nu0, const Vec& x0,
                              const Vec& y0, double t0, double finest_h, int levels, long replicas,
                              std::uint64_t seed, const Execution& exec = {});

}  // namespace mvlab
