#include "mvlab/bismut.hpp"

#include <cmath>

#include "mvlab/errors.hpp"

namespace mvlab {

namespace {

long grid_steps(double t, double h) {
  if (!(t > 0.0) || !(h > 0.0)) throw ParameterOutOfRange("Bismut weights need t > 0 and h > 0");
  const long n = std::lround(t / h);
  if (n < 1 || std::abs(static_cast<double>(n) * h - t) > 1e-9 * t) throw GridMismatch("t must be a multiple of h");
  return n;
}

void check_records(const LawFlow& flow, const std::vector<Vec>& x, const std::vector<Vec>& gamma, long steps) {
  if (!flow.has_tangent) throw ParameterOutOfRange("the law flow carries no tangent");
  if (steps > flow.steps) throw FlowHorizonTooShort("Bismut horizon beyond the flow");
  if (static_cast<long>(x.size()) != steps + 1 || static_cast<long>(gamma.size()) != steps + 1) {
    throw GridMismatch("replica path does not match the step grid");
  }
}

// Tagged particle driven by the flow coefficients; stores the states and W increments.
void replica_path(const MeanFieldModel& model, const LawFlow& flow, const Vec& x0, std::uint64_t replica, long steps,
                  std::vector<Vec>& x, std::vector<Vec>& dW) {
  const Eigen::Index d = model.noise_dim(), m = model.dim() - d;
  const auto& s = model.structure();
  x.assign(1, x0);
  dW.clear();
  Vec b(d), dw(d), dwt(d);
  for (long j = 0; j < steps; ++j) {
    const auto js = static_cast<std::size_t>(j);
    const Vec& cur = x.back();
    model.drift(static_cast<double>(j) * flow.h, cur, flow.features[js], b);
    flow.plan.increment(Stream::W, 0, j, replica, dw);
    flow.plan.increment(Stream::SharedWTilde, 0, j, replica, dwt);
    Vec next = cur;
    if (s) next.head(m) += flow.h * (s->A * cur.head(m) + s->M * cur.tail(d));
    next.tail(d) += flow.h * b + model.lambda() * dw + flow.sigma[js] * dwt;
    if (!next.allFinite()) throw NonFiniteState(j);
    x.push_back(std::move(next));
    dW.push_back(dw);
  }
}

}  // namespace

std::vector<Vec> law_tangent_noise(const LawFlow& flow, std::uint64_t path, long steps) {
  if (!flow.has_tangent) throw ParameterOutOfRange("the law flow carries no tangent");
  if (steps > flow.steps) throw FlowHorizonTooShort("gamma path beyond the flow horizon");
  const Eigen::Index d = flow.tangent_sigma.front().rows();
  std::vector<Vec> gamma;
  gamma.reserve(static_cast<std::size_t>(steps) + 1);
  Vec g = Vec::Zero(d), dwt(d);
  gamma.push_back(g);
  for (long j = 0; j < steps; ++j) {
    flow.plan.increment(Stream::SharedWTilde, 0, j, path, dwt);
    g += flow.tangent_sigma[static_cast<std::size_t>(j)] * dwt;
    gamma.push_back(g);
  }
  return gamma;
}

BismutProcesses build_NM_nondegenerate(const MeanFieldModel& model, const LawFlow& flow, const std::vector<Vec>& x,
                                       const Vec& phi0, double t, const std::vector<Vec>& gamma) {
  if (model.degenerate()) throw ParameterOutOfRange("build_NM_nondegenerate needs a model without structure");
  const long n = grid_steps(t, flow.h);
  check_records(flow, x, gamma, n);
  const Eigen::Index d = model.noise_dim();
  BismutProcesses p;
  p.t = t;
  p.h = flow.h;
  p.steps = n;
  p.gamma = gamma;
  const Vec& gt = gamma.back();
  const Vec drift_shift = (phi0 + gt) / t;
  Mat jz(d, model.feature_dim());
  for (long j = 0; j <= n; ++j) {
    const auto js = static_cast<std::size_t>(j);
    const double s = static_cast<double>(j) * flow.h;
    p.N.push_back(((t - s) / t) * phi0 + gamma[js] - (s / t) * gt);
    if (j < n) {
      model.drift_dz(s, x[js], flow.features[js], jz);
      p.M.push_back(jz * flow.tangent_features[js] + drift_shift);
    }
  }
  return p;
}

BismutProcesses build_bismut_degenerate(const MeanFieldModel& model, const LawFlow& flow, const std::vector<Vec>& x,
                                        const Vec& phi0, double t, const std::vector<Vec>& gamma,
                                        const SteeringPlan* plan) {
  if (!model.degenerate()) throw ParameterOutOfRange("build_bismut_degenerate needs a Hamiltonian structure");
  const long n = grid_steps(t, flow.h);
  check_records(flow, x, gamma, n);
  std::optional<SteeringPlan> own;
  if (!plan) {
    own.emplace(*model.structure(), t, flow.h);
    plan = &*own;
  }
  if (plan->steps() != n) throw GridMismatch("steering plan grid differs");
  const Eigen::Index d = model.noise_dim(), m = model.dim() - d;
  const Vec phi1 = phi0.head(m), phi2 = phi0.tail(d);
  const Vec& gt = gamma.back();

  BismutProcesses p;
  p.t = t;
  p.h = flow.h;
  p.steps = n;
  p.gamma = gamma;
  p.V = plan->V(phi2, -gt, gamma);
  p.a = -(phi2 + gt);
  p.w = plan->solve_gramian(phi1 + p.V);

  Vec J = Vec::Zero(m);
  Mat jz(d, model.feature_dim());
  for (long j = 0; j <= n; ++j) {
    const auto js = static_cast<std::size_t>(j);
    const double s = static_cast<double>(j) * flow.h;
    Vec alpha = plan->alpha(j, p.a, p.w);
    Vec N(model.dim());
    N.head(m) = plan->exp_grid(j) * (phi1 + J);
    N.tail(d) = alpha + phi2 + gamma[js];
    p.N.push_back(std::move(N));
    p.alpha.push_back(std::move(alpha));
    if (j < n) {
      model.drift_dz(s, x[js], flow.features[js], jz);
      p.M.push_back(jz * flow.tangent_features[js] - plan->alpha_prime(j, p.a, p.w));
      J += plan->step_integral(j, phi2, p.a, p.w, gamma[js]);
    }
  }
  return p;
}

BismutEstimate bismut_estimate(const MeanFieldModel& model, const RowMat& initial, const Perturbation& phi,
                               const TestFunction& f, const BismutOptions& options) {
  if (!(model.lambda() > 0.0)) throw ParameterOutOfRange("Bismut weights need lambda > 0");
  if (options.replicas < 2) throw ParameterOutOfRange("need at least two replicas");
  const long n = grid_steps(options.t, options.h);
  const NoisePlan noise(options.seed, options.h, options.t);
  FlowOptions fopts;
  fopts.flow_id = options.flow_id;
  fopts.exec = options.exec;
  const LawFlow flow = simulate_law_flow(model, initial, noise, fopts, &phi);
  std::optional<SteeringPlan> plan;
  if (model.degenerate()) plan.emplace(*model.structure(), options.t, options.h);

  const auto R = static_cast<std::size_t>(options.replicas);
  std::vector<double> values(R), weights(R), payoffs(R);
  const Eigen::Index d = model.noise_dim(), N = initial.rows();
  parallel_for(R, options.exec, [&](std::size_t r) {
    const Vec x0 = initial.row(static_cast<Eigen::Index>(r % static_cast<std::size_t>(N))).transpose();
    std::vector<Vec> x, dW;
    replica_path(model, flow, x0, r, n, x, dW);
    const auto gamma = law_tangent_noise(flow, r, n);
    const Vec phi0 = phi.map(x0);
    const BismutProcesses p = plan ? build_bismut_degenerate(model, flow, x, phi0, options.t, gamma, &*plan)
                                   : build_NM_nondegenerate(model, flow, x, phi0, options.t, gamma);
    Mat jx(d, model.dim());
    double ito = 0.0;
    for (long j = 0; j < n; ++j) {
      const auto js = static_cast<std::size_t>(j);
      model.drift_dx(static_cast<double>(j) * options.h, x[js], flow.features[js], jx);
      ito += (jx * p.N[js] + p.M[js]).dot(dW[js]);
    }
    const double weight = ito / model.lambda();
    const double fx = f.f(x.back());
    weights[r] = weight;
    payoffs[r] = fx;
    values[r] = fx * weight;
  });

  const MeanEstimate v = mean_estimate(values);
  BismutEstimate out;
  out.value = v.mean;
  out.std_error = v.std_error;
  out.replicas = options.replicas;
  out.t = options.t;
  std::vector<double> w2(R), f2(R);
  for (std::size_t r = 0; r < R; ++r) {
    w2[r] = weights[r] * weights[r];
    f2[r] = payoffs[r] * payoffs[r];
    out.max_abs_weight = std::max(out.max_abs_weight, std::abs(weights[r]));
  }
  out.weight_l2 = std::sqrt(pairwise_sum(w2) / static_cast<double>(R));
  out.payoff_l2 = std::sqrt(pairwise_sum(f2) / static_cast<double>(R));
  return out;
}

BismutEstimate bismut_nondegenerate(const MeanFieldModel& model, const RowMat& initial, const Perturbation& phi,
                                    const TestFunction& f, const BismutOptions& options) {
  if (model.degenerate()) throw ParameterOutOfRange("bismut_nondegenerate needs a model without structure");
  return bismut_estimate(model, initial, phi, f, options);
}

BismutEstimate bismut_degenerate(const MeanFieldModel& model, const RowMat& initial, const Perturbation& phi,
                                 const TestFunction& f, const BismutOptions& options) {
  if (!model.degenerate()) throw ParameterOutOfRange("bismut_degenerate needs a Hamiltonian structure");
  return bismut_estimate(model, initial, phi, f, options);
}

FdEstimate lions_fd_oracle(const MeanFieldModel& model, const RowMat& initial, const Perturbation& phi,
                           const TestFunction& f, const FdOptions& options) {
  if (!(options.eps > 0.0) || options.eps > 1.0) throw ParameterOutOfRange("eps must lie in (0, 1]");
  if (options.repeats < 1) throw ParameterOutOfRange("need at least one repeat");
  grid_steps(options.t, options.h);
  const NoisePlan noise(options.seed, options.h, options.t);
  const Eigen::Index N = initial.rows();
  RowMat shift(N, initial.cols());
  for (Eigen::Index i = 0; i < N; ++i) shift.row(i) = phi.map(initial.row(i).transpose()).transpose();

  std::vector<double> per_eps, per_half, combined;
  for (int k = 0; k < options.repeats; ++k) {
    FlowOptions fopts;
    fopts.flow_id = static_cast<std::uint64_t>(k);
    fopts.exec = options.exec;
    const RowMat base = simulate_law_flow(model, initial, noise, fopts).final_states();
    auto quotients = [&](double eps) {
      const RowMat moved = simulate_law_flow(model, (initial + eps * shift).eval(), noise, fopts).final_states();
      std::vector<double> q(static_cast<std::size_t>(N));
      for (Eigen::Index i = 0; i < N; ++i) {
        q[static_cast<std::size_t>(i)] = (f.f(moved.row(i).transpose()) - f.f(base.row(i).transpose())) / eps;
      }
      return q;
    };
    const auto qa = quotients(options.eps);
    per_eps.insert(per_eps.end(), qa.begin(), qa.end());
    if (options.richardson) {
      const auto qb = quotients(0.5 * options.eps);
      per_half.insert(per_half.end(), qb.begin(), qb.end());
      for (std::size_t i = 0; i < qa.size(); ++i) combined.push_back(2.0 * qb[i] - qa[i]);
    } else {
      combined.insert(combined.end(), qa.begin(), qa.end());
    }
  }
  FdEstimate out;
  const MeanEstimate c = mean_estimate(combined);
  out.value = c.mean;
  out.std_error = c.std_error;
  out.quotient_eps = mean_estimate(per_eps).mean;
  out.quotient_half = options.richardson ? mean_estimate(per_half).mean : out.quotient_eps;
  out.extrapolation_gap = std::abs(out.quotient_eps - out.quotient_half);
  return out;
}

RateProbe derivative_rate_probe(const MeanFieldModel& model, const RowMat& initial, const Perturbation& phi,
                                const TestFunction& f, const std::vector<double>& t_grid,
                                const BismutOptions& options) {
  if (t_grid.size() < 2) throw GridMismatch("rate probe needs at least two times");
  RateProbe probe;
  std::vector<double> lt, lv, lw;
  for (double t : t_grid) {
    BismutOptions o = options;
    o.t = t;
    const auto e = bismut_estimate(model, initial, phi, f, o);
    probe.t.push_back(t);
    probe.estimates.push_back(e);
    lt.push_back(std::log(t));
    lv.push_back(std::log(std::max(std::abs(e.value), 1e-300)));
    lw.push_back(std::log(e.weight_l2));
  }
  probe.value_fit = fit_line(lt, lv);
  probe.weight_fit = fit_line(lt, lw);
  if (model.degenerate()) {
    probe.bound_slope = -(2.0 * model.structure()->l - 0.5) - 0.3;
  } else {
    probe.bound_slope = -0.5 - 0.2;
  }
  probe.pass = probe.weight_fit.slope >= probe.bound_slope;
  return probe;
}

}  // namespace mvlab
