#include "mvlab/simulate.hpp"

#include <cmath>

#include "mvlab/errors.hpp"
#include "mvlab/stats.hpp"

namespace mvlab {

namespace {

struct StepCoefficients {
  Vec z;
  Mat sigma;
  Vec g;  // tangent feature mean
  Mat E;  // tangent diffusion matrix
};

StepCoefficients coefficients(const MeanFieldModel& model, double t, const RowMat& states, const RowMat* tangents) {
  StepCoefficients c;
  c.z = feature_mean(model, states);
  c.sigma.resize(model.noise_dim(), model.noise_dim());
  model.sigma_tilde(t, c.z, c.sigma);
  if (tangents) {
    const Eigen::Index n = states.rows(), p = model.feature_dim();
    RowMat pushed(n, p);
    Mat jac(p, model.dim());
    for (Eigen::Index i = 0; i < n; ++i) {
      model.feature_jacobian(states.row(i).transpose(), jac);
      pushed.row(i) = (jac * tangents->row(i).transpose()).transpose();
    }
    c.g = cloud_mean(pushed);
    c.E = sigma_tilde_directional(model, t, c.z, c.g);
  }
  return c;
}

// Advances states (and tangents) by one step from pre-step coefficients.
void advance(const MeanFieldModel& model, RowMat& states, RowMat* tangents, const StepCoefficients& c,
             const RowMat& dW, const RowMat& dWt, double h, double t, long step, const Execution& exec) {
  const Eigen::Index n = states.rows(), dim = model.dim(), d = model.noise_dim(), m = dim - d;
  const bool shared = dWt.rows() == 1;
  if (dW.rows() != n || dW.cols() != d || dWt.cols() != d || (!shared && dWt.rows() != n)) {
    throw SizeMismatch("noise increments do not match the ensemble");
  }
  const auto& structure = model.structure();
  const double lambda = model.lambda();
  parallel_for(static_cast<std::size_t>(n), exec, [&](std::size_t idx) {
    const auto i = static_cast<Eigen::Index>(idx);
    const Vec x = states.row(i).transpose();
    Vec b(d);
    model.drift(t, x, c.z, b);
    Vec noise = lambda * dW.row(i).transpose() + c.sigma * dWt.row(shared ? 0 : i).transpose();
    Vec next = x;
    if (structure) {
      next.head(m) += h * (structure->A * x.head(m) + structure->M * x.tail(d));
    }
    next.tail(d) += h * b + noise;
    states.row(i) = next.transpose();
    if (tangents) {
      const Vec v = tangents->row(i).transpose();
      Mat jx(d, dim), jz(d, model.feature_dim());
      model.drift_dx(t, x, c.z, jx);
      model.drift_dz(t, x, c.z, jz);
      Vec vn = v;
      if (structure) vn.head(m) += h * (structure->A * v.head(m) + structure->M * v.tail(d));
      vn.tail(d) += h * (jx * v + jz * c.g) + c.E * dWt.row(shared ? 0 : i).transpose();
      tangents->row(i) = vn.transpose();
    }
  });
  if (!states.allFinite() || (tangents && !tangents->allFinite())) throw NonFiniteState(step);
}

}  // namespace

void euler_maruyama_step(const MeanFieldModel& model, ParticleEnsemble& ensemble, const RowMat& dW,
                         const RowMat& dWt, double h, const Execution& exec) {
  if (model.degenerate()) throw ParameterOutOfRange("euler_maruyama_step needs a model without structure");
  const double t = static_cast<double>(ensemble.step) * h;
  const auto c = coefficients(model, t, ensemble.states, nullptr);
  advance(model, ensemble.states, nullptr, c, dW, dWt, h, t, ensemble.step, exec);
  ++ensemble.step;
}

void hamiltonian_step(const MeanFieldModel& model, ParticleEnsemble& ensemble, const RowMat& dW,
                      const RowMat& dWt, double h, const Execution& exec) {
  if (!model.degenerate()) throw ParameterOutOfRange("hamiltonian_step needs a Hamiltonian structure");
  const double t = static_cast<double>(ensemble.step) * h;
  const auto c = coefficients(model, t, ensemble.states, nullptr);
  advance(model, ensemble.states, nullptr, c, dW, dWt, h, t, ensemble.step, exec);
  ++ensemble.step;
}

void particle_step(const MeanFieldModel& model, ParticleEnsemble& ensemble, const RowMat& dW, const RowMat& dWt,
                   double h, const Execution& exec) {
  if (model.degenerate()) {
    hamiltonian_step(model, ensemble, dW, dWt, h, exec);
  } else {
    euler_maruyama_step(model, ensemble, dW, dWt, h, exec);
  }
}

void draw_step_noise(const NoisePlan& plan, long step, Eigen::Index particles, Eigen::Index d, NoiseSharing sharing,
                     std::uint64_t replica, std::uint64_t shared_path, RowMat& dW, RowMat& dWt) {
  dW.resize(particles, d);
  Vec buf(d);
  for (Eigen::Index i = 0; i < particles; ++i) {
    plan.increment(Stream::W, static_cast<std::uint64_t>(i), step, replica, buf);
    dW.row(i) = buf.transpose();
  }
  if (sharing == NoiseSharing::Shared) {
    dWt.resize(1, d);
    plan.increment(Stream::SharedWTilde, 0, step, shared_path, buf);
    dWt.row(0) = buf.transpose();
  } else {
    dWt.resize(particles, d);
    for (Eigen::Index i = 0; i < particles; ++i) {
      plan.increment(Stream::WTilde, static_cast<std::uint64_t>(i), step, replica, buf);
      dWt.row(i) = buf.transpose();
    }
  }
}

Perturbation make_perturbation(const std::string& name, Eigen::Index n) {
  if (name == "constant") {
    return {name, [n](const Vec&) {
              Vec v = Vec::Zero(n);
              v(0) = 1.0;
              return v;
            }};
  }
  if (name == "coordinate") {
    return {name, [n](const Vec& x) {
              Vec v = Vec::Zero(n);
              v(0) = x(0);
              return v;
            }};
  }
  if (name == "contraction") return {name, [](const Vec& x) { return Vec(-x); }};
  if (name == "zero") return {name, [n](const Vec&) { return Vec(Vec::Zero(n)); }};
  throw ConfigInvalid("phi", "unknown perturbation '" + name + "'");
}

EmpiricalMeasure LawFlow::measure_at(long step) const {
  for (std::size_t k = 0; k < snapshot_steps.size(); ++k) {
    if (snapshot_steps[k] == step) return EmpiricalMeasure(snapshots[k]);
  }
  throw GridMismatch("no snapshot stored at step " + std::to_string(step));
}

LawFlow simulate_law_flow(const MeanFieldModel& model, const RowMat& initial, const NoisePlan& plan,
                          const FlowOptions& options, const Perturbation* phi) {
  const Eigen::Index n = initial.rows(), d = model.noise_dim();
  if (n < 2) throw TooFewParticles("a law flow needs at least two particles");
  if (initial.cols() != model.dim()) throw SizeMismatch("initial cloud does not match the model dimension");
  LawFlow flow;
  flow.h = plan.h();
  flow.steps = plan.steps();
  flow.plan = plan;
  flow.options = options;
  const std::uint64_t replica = kFlowReplicaBase + options.flow_id;

  RowMat states = initial;
  RowMat tangents;
  if (phi) {
    tangents.resize(n, model.dim());
    for (Eigen::Index i = 0; i < n; ++i) tangents.row(i) = phi->map(initial.row(i).transpose()).transpose();
    flow.has_tangent = true;
    flow.initial_tangents = tangents;
  }
  flow.snapshot_steps.push_back(0);
  flow.snapshots.push_back(states);
  if (options.record_paths) {
    flow.state_path.push_back(states);
    if (phi) flow.tangent_path.push_back(tangents);
  }
  Vec xi = Vec::Zero(d);
  flow.xi.push_back(xi);
  RowMat dW, dWt;
  Vec shared(d);
  for (long j = 0; j < flow.steps; ++j) {
    const double t = static_cast<double>(j) * flow.h;
    const auto c = coefficients(model, t, states, phi ? &tangents : nullptr);
    flow.features.push_back(c.z);
    flow.sigma.push_back(c.sigma);
    if (phi) {
      flow.tangent_features.push_back(c.g);
      flow.tangent_sigma.push_back(c.E);
    }
    plan.increment(Stream::SharedWTilde, 0, j, options.xi_path, shared);
    xi += c.sigma * shared;
    flow.xi.push_back(xi);
    draw_step_noise(plan, j, n, d, options.sharing, replica, options.xi_path, dW, dWt);
    advance(model, states, phi ? &tangents : nullptr, c, dW, dWt, flow.h, t, j, options.exec);
    if (options.record_paths) {
      flow.state_path.push_back(states);
      if (phi) flow.tangent_path.push_back(tangents);
    }
    const long done = j + 1;
    if (options.snapshot_every > 0 && done % options.snapshot_every == 0 && done != flow.steps) {
      flow.snapshot_steps.push_back(done);
      flow.snapshots.push_back(states);
    }
  }
  // Coefficients at the final time close the records at index `steps`.
  const auto c = coefficients(model, static_cast<double>(flow.steps) * flow.h, states, phi ? &tangents : nullptr);
  flow.features.push_back(c.z);
  flow.sigma.push_back(c.sigma);
  if (phi) {
    flow.tangent_features.push_back(c.g);
    flow.tangent_sigma.push_back(c.E);
    flow.final_tangents = tangents;
  }
  if (flow.steps > 0) {
    flow.snapshot_steps.push_back(flow.steps);
    flow.snapshots.push_back(states);
  }
  return flow;
}

LawFlow simulate_law_flow(const MeanFieldModel& model, const EmpiricalMeasure& initial, double T, double h,
                          Eigen::Index N, std::uint64_t seed, const FlowOptions& options) {
  const NoisePlan plan(seed, h, T);
  RowMat start;
  if (initial.size() == N) {
    start = initial.points();
  } else {
    start.resize(N, initial.dim());
    Vec u(1);
    const Vec cumulative = [&] {
      Vec c(initial.size());
      double acc = 0.0;
      for (Eigen::Index i = 0; i < initial.size(); ++i) c(i) = (acc += initial.weights()(i));
      return c;
    }();
    for (Eigen::Index i = 0; i < N; ++i) {
      plan.uniforms(Stream::Initial, static_cast<std::uint64_t>(i), 0, options.flow_id, u);
      const double target = u(0) * cumulative(cumulative.size() - 1);
      Eigen::Index k = 0;
      while (k + 1 < cumulative.size() && cumulative(k) < target) ++k;
      start.row(i) = initial.points().row(k);
    }
  }
  return simulate_law_flow(model, start, plan, options);
}

std::vector<Vec> xi_path(const LawFlow& flow, std::uint64_t path, long steps) {
  if (steps < 0) steps = flow.steps;
  if (steps > flow.steps) throw FlowHorizonTooShort("xi path beyond the flow horizon");
  const Eigen::Index d = flow.sigma.empty() ? 0 : flow.sigma.front().rows();
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  Vec xi = Vec::Zero(d), inc(d);
  out.push_back(xi);
  for (long j = 0; j < steps; ++j) {
    flow.plan.increment(Stream::SharedWTilde, 0, j, path, inc);
    xi += flow.sigma[static_cast<std::size_t>(j)] * inc;
    out.push_back(xi);
  }
  return out;
}

double xi_gap(const LawFlow& flow_mu, const LawFlow& flow_nu) {
  if (!flow_mu.plan.same_path(flow_nu.plan) || flow_mu.steps != flow_nu.steps ||
      flow_mu.options.xi_path != flow_nu.options.xi_path) {
    throw StreamMismatch("flows do not share the same W~ stream and grid");
  }
  double gap = 0.0;
  for (std::size_t j = 0; j < flow_mu.xi.size(); ++j) gap = std::max(gap, (flow_mu.xi[j] - flow_nu.xi[j]).norm());
  return gap;
}

LawFlow tangent_flow(const MeanFieldModel& model, const RowMat& initial, const NoisePlan& plan,
                     const Perturbation& phi, const FlowOptions& options) {
  return simulate_law_flow(model, initial, plan, options, &phi);
}

Vec simulate_decoupled(const MeanFieldModel& model, const LawFlow& flow, const Vec& x0, std::uint64_t replica,
                       std::uint64_t path, long steps) {
  if (steps > flow.steps) throw FlowHorizonTooShort("decoupled run beyond the flow horizon");
  const Eigen::Index dim = model.dim(), d = model.noise_dim(), m = dim - d;
  const auto& structure = model.structure();
  Vec x = x0, b(d), dw(d), dwt(d);
  for (long j = 0; j < steps; ++j) {
    const double t = static_cast<double>(j) * flow.h;
    const auto& z = flow.features[static_cast<std::size_t>(j)];
    model.drift(t, x, z, b);
    flow.plan.increment(Stream::W, 0, j, replica, dw);
    flow.plan.increment(Stream::SharedWTilde, 0, j, path, dwt);
    Vec next = x;
    if (structure) next.head(m) += flow.h * (structure->A * x.head(m) + structure->M * x.tail(d));
    next.tail(d) += flow.h * b + model.lambda() * dw + flow.sigma[static_cast<std::size_t>(j)] * dwt;
    x = std::move(next);
    if (!x.allFinite()) throw NonFiniteState(j);
  }
  return x;
}

TangentFdStudy tangent_fd_study(const MeanFieldModel& model, const RowMat& initial, const NoisePlan& plan,
                                const Perturbation& phi, const std::vector<double>& eps_grid,
                                const FlowOptions& options) {
  if (eps_grid.empty()) throw ParameterOutOfRange("empty eps grid");
  FlowOptions opts = options;
  opts.record_paths = true;
  const LawFlow base = simulate_law_flow(model, initial, plan, opts, &phi);
  RowMat direction(initial.rows(), initial.cols());
  for (Eigen::Index i = 0; i < initial.rows(); ++i) direction.row(i) = phi.map(initial.row(i).transpose()).transpose();

  TangentFdStudy study;
  for (double eps : eps_grid) {
    if (!(eps > 0.0)) throw ParameterOutOfRange("eps must be positive");
    const LawFlow moved = simulate_law_flow(model, initial + eps * direction, plan, opts);
    double sup = 0.0;
    for (std::size_t j = 0; j < base.state_path.size(); ++j) {
      const RowMat quotient = (moved.state_path[j] - base.state_path[j]) / eps;
      sup = std::max(sup, (quotient - base.tangent_path[j]).cwiseAbs().maxCoeff());
    }
    study.levels.push_back({eps, sup});
  }
  study.pass = study.levels.size() > 1;
  for (std::size_t k = 1; k < study.levels.size(); ++k) {
    const double r = study.levels[k - 1].sup_error / study.levels[k].sup_error;
    study.ratios.push_back(r);
    if (!(r >= 1.7 && r <= 2.3)) study.pass = false;
  }
  return study;
}

}  // namespace mvlab
