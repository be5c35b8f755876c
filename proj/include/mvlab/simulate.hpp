#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mvlab/measure.hpp"
#include "mvlab/model.hpp"
#include "mvlab/parallel.hpp"
#include "mvlab/rng.hpp"

namespace mvlab {

// Flow simulations draw their noise from replica ids at and above this tag so
// they never reuse the increments of a coupled pair or a tagged replica.
inline constexpr std::uint64_t kFlowReplicaBase = std::uint64_t{1} << 31;

enum class NoiseSharing {
  PerParticle,  // each particle has its own W~ (law-flow estimation)
  Shared,       // one W~ path for all particles (conditioned runs)
};

struct ParticleEnsemble {
  RowMat states;
  long step = 0;

  EmpiricalMeasure empirical_measure() const { return EmpiricalMeasure(states); }
};

// x_i <- x_i + b(t, x_i, mu_hat) h + lambda dW_i + sigma~(t, mu_hat) dW~_i with
// mu_hat the pre-step empirical measure. dWt has one row per particle or a
// single shared row.
void euler_maruyama_step(const MeanFieldModel& model, ParticleEnsemble& ensemble, const RowMat& dW,
                         const RowMat& dWt, double h, const Execution& exec = {});

// Block 1 moves by (A x1 + M x2) h, block 2 as in euler_maruyama_step.
void hamiltonian_step(const MeanFieldModel& model, ParticleEnsemble& ensemble, const RowMat& dW,
                      const RowMat& dWt, double h, const Execution& exec = {});

// Dispatches on the presence of a Hamiltonian structure.
void particle_step(const MeanFieldModel& model, ParticleEnsemble& ensemble, const RowMat& dW, const RowMat& dWt,
                   double h, const Execution& exec = {});

// Noise for one ensemble step.
void draw_step_noise(const NoisePlan& plan, long step, Eigen::Index particles, Eigen::Index d,
                     NoiseSharing sharing, std::uint64_t replica, std::uint64_t shared_path, RowMat& dW,
                     RowMat& dWt);

// A named perturbation direction phi: R^n -> R^n.
struct Perturbation {
  std::string name;
  std::function<Vec(const Vec&)> map;
};

// Battery: "constant" (e_0), "coordinate" (x_0 e_0), "contraction" (-x), "zero".
Perturbation make_perturbation(const std::string& name, Eigen::Index n);

struct FlowOptions {
  long snapshot_every = 0;    // 0 keeps only the initial and final clouds
  bool record_paths = false;  // keep every state (and tangent) for small runs
  std::uint64_t flow_id = 0;  // selects the per-particle noise of the flow
  std::uint64_t xi_path = 0;  // shared W~ path used for the xi record
  NoiseSharing sharing = NoiseSharing::PerParticle;
  Execution exec;
};

// Per-step record of a simulated law flow t -> P_t^* mu.
struct LawFlow {
  double h = 0.0;
  long steps = 0;
  NoisePlan plan;
  FlowOptions options;
  std::vector<Vec> features;  // z_j, j = 0..steps
  std::vector<Mat> sigma;     // sigma~(z_j)
  std::vector<Vec> xi;        // xi along options.xi_path
  std::vector<long> snapshot_steps;
  std::vector<RowMat> snapshots;
  // Tangent records, present when a perturbation was supplied.
  bool has_tangent = false;
  std::vector<Vec> tangent_features;  // g_j = mean_i Jpsi(x_i) v_i
  std::vector<Mat> tangent_sigma;     // E_j = sum_k d sigma~/dz_k g_j[k]
  RowMat initial_tangents;
  RowMat final_tangents;
  std::vector<RowMat> state_path;
  std::vector<RowMat> tangent_path;

  const RowMat& initial() const { return snapshots.front(); }
  const RowMat& final_states() const { return snapshots.back(); }
  EmpiricalMeasure measure_at(long step) const;
};

// Simulates the particle system from the given initial cloud (one particle per
// row) over plan.steps() steps. With phi, the tangent system v_i(0) = phi(x_i(0))
// is integrated alongside on the same noise.
LawFlow simulate_law_flow(const MeanFieldModel& model, const RowMat& initial, const NoisePlan& plan,
                          const FlowOptions& options = {}, const Perturbation* phi = nullptr);

// Convenience form: N particles resampled uniformly from `initial` (or taken
// as-is when the sizes agree), horizon T, step h.
LawFlow simulate_law_flow(const MeanFieldModel& model, const EmpiricalMeasure& initial, double T, double h,
                          Eigen::Index N, std::uint64_t seed, const FlowOptions& options = {});

// xi_j = sum_{k<j} sigma~_k dW~_k along the shared path `path`.
std::vector<Vec> xi_path(const LawFlow& flow, std::uint64_t path, long steps = -1);

// sup_j |xi^mu_j - xi^nu_j|.
double xi_gap(const LawFlow& flow_mu, const LawFlow& flow_nu);

// Tangent part of a flow computed with phi (convenience wrapper).
LawFlow tangent_flow(const MeanFieldModel& model, const RowMat& initial, const NoisePlan& plan,
                     const Perturbation& phi, const FlowOptions& options = {});

// One particle driven by precomputed flow coefficients: own W (particle 0,
// `replica`) and the shared W~ path `path`. Returns the state after `steps`.
Vec simulate_decoupled(const MeanFieldModel& model, const LawFlow& flow, const Vec& x0, std::uint64_t replica,
                       std::uint64_t path, long steps);

// Shared-noise check of the tangent flow: for each eps the sup over steps and
// particles of |v - (X^eps - X) / eps|, X^eps started at x + eps phi(x).
struct TangentFdLevel {
  double eps = 0.0;
  double sup_error = 0.0;
};
struct TangentFdStudy {
  std::vector<TangentFdLevel> levels;
  std::vector<double> ratios;  // error(eps) / error(eps / 2)
  bool pass = false;           // every ratio in [1.7, 2.3]
};
TangentFdStudy tangent_fd_study(const MeanFieldModel& model, const RowMat& initial, const NoisePlan& plan,
                                const Perturbation& phi, const std::vector<double>& eps_grid,
                                const FlowOptions& options = {});

}  // namespace mvlab
