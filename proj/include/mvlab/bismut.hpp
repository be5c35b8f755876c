#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mvlab/model.hpp"
#include "mvlab/parallel.hpp"
#include "mvlab/simulate.hpp"
#include "mvlab/stats.hpp"
#include "mvlab/steering.hpp"
#include "mvlab/test_functions.hpp"

namespace mvlab {

// Per-step processes of one tagged replica. N has steps + 1 entries, M has
// `steps`. gamma is the W~ integral of the law-tangent noise E_r.
struct BismutProcesses {
  double t = 0.0;
  double h = 0.0;
  long steps = 0;
  std::vector<Vec> gamma;
  std::vector<Vec> N;
  std::vector<Vec> M;
  // Degenerate pieces.
  Vec V;
  Vec a, w;  // alpha(s) = (s/t) a - (s(t-s)/t^2) M^T e^{-sA^T} w
  std::vector<Vec> alpha;
};

// gamma_{j+1} = gamma_j + E_j dW~_j along the shared path `path`.
std::vector<Vec> law_tangent_noise(const LawFlow& flow, std::uint64_t path, long steps);

// N_s = ((t-s)/t) phi0 + gamma_s - (s/t) gamma_t and
// M_s = dz b(X_s) g_s + (phi0 + gamma_t) / t along the replica path `x`.
BismutProcesses build_NM_nondegenerate(const MeanFieldModel& model, const LawFlow& flow, const std::vector<Vec>& x,
                                       const Vec& phi0, double t, const std::vector<Vec>& gamma);

// Gramian-steered processes: N2 = alpha + phi0^(2) + gamma, N1 = e^{sA}(phi0^(1) + int e^{-rA} M N2),
// M = dz b(X_s) g_s - alpha'(s).
BismutProcesses build_bismut_degenerate(const MeanFieldModel& model, const LawFlow& flow, const std::vector<Vec>& x,
                                        const Vec& phi0, double t, const std::vector<Vec>& gamma,
                                        const SteeringPlan* plan = nullptr);

struct BismutOptions {
  double t = 1.0;
  double h = 0.01;
  long replicas = 10000;
  std::uint64_t seed = 0;
  std::uint64_t flow_id = 0;
  Execution exec;
};

struct BismutEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long replicas = 0;
  double t = 0.0;
  double weight_l2 = 0.0;        // sqrt(mean weight^2)
  double max_abs_weight = 0.0;
  double payoff_l2 = 0.0;        // (P_t |f|^2)^{1/2} from the replicas
};

// Two passes: a tangent-carrying particle flow of `initial` fixes the law
// coefficients, then independent tagged replicas (start: initial row r mod N)
// accumulate f(X_t) (1/lambda) sum <grad_N b + M, dW>.
BismutEstimate bismut_estimate(const MeanFieldModel& model, const RowMat& initial, const Perturbation& phi,
                               const TestFunction& f, const BismutOptions& options);
BismutEstimate bismut_nondegenerate(const MeanFieldModel& model, const RowMat& initial, const Perturbation& phi,
                                    const TestFunction& f, const BismutOptions& options);
BismutEstimate bismut_degenerate(const MeanFieldModel& model, const RowMat& initial, const Perturbation& phi,
                                 const TestFunction& f, const BismutOptions& options);

struct FdOptions {
  double t = 1.0;
  double h = 0.01;
  double eps = 1e-2;
  bool richardson = true;  // combine eps and eps/2
  int repeats = 1;         // independent particle flows averaged
  std::uint64_t seed = 0;
  Execution exec;
};

struct FdEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double quotient_eps = 0.0;       // quotient at eps
  double quotient_half = 0.0;      // quotient at eps/2 (when Richardson is on)
  double extrapolation_gap = 0.0;  // |q(eps) - q(eps/2)|
};

// Difference quotient (P_t f(mu o (id + eps phi)^-1) - P_t f(mu)) / eps from
// two particle systems driven by identical noise.
FdEstimate lions_fd_oracle(const MeanFieldModel& model, const RowMat& initial, const Perturbation& phi,
                           const TestFunction& f, const FdOptions& options);

struct RateProbe {
  std::vector<double> t;
  std::vector<BismutEstimate> estimates;
  LinearFit value_fit;   // log |estimate| vs log t
  LinearFit weight_fit;  // log weight L2 norm vs log t
  double bound_slope = 0.0;  // -1/2 - 0.2, or -(2l - 1/2) - 0.3
  bool pass = false;         // weight_fit.slope >= bound_slope
};

RateProbe derivative_rate_probe(const MeanFieldModel& model, const RowMat& initial, const Perturbation& phi,
                                const TestFunction& f, const std::vector<double>& t_grid,
                                const BismutOptions& options);

}  // namespace mvlab
