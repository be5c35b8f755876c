#include "mvlab/coupling.hpp"

#include <cmath>

#include "mvlab/errors.hpp"

namespace mvlab {

namespace {

long coupling_steps(const LawFlow& flow_mu, const LawFlow& flow_nu, double t0) {
  if (!flow_mu.plan.same_path(flow_nu.plan)) throw StreamMismatch("flows use different noise plans");
  if (!(t0 > 0.0)) throw ParameterOutOfRange("t0 must be positive");
  const double h = flow_mu.h;
  const long n0 = std::lround(t0 / h);
  if (std::abs(static_cast<double>(n0) * h - t0) > 1e-9 * t0) throw GridMismatch("t0 must be a multiple of h");
  if (n0 > flow_mu.steps || n0 > flow_nu.steps) throw FlowHorizonTooShort("flows end before t0");
  return n0;
}

void finish(CouplingRun& run, bool record) {
  run.terminal_gap = (run.y_final - run.x_final).norm();
  run.outlier = std::abs(run.log_weight) > kLogWeightOutlier;
  if (!record) {
    run.eta.clear();
    run.dW.clear();
  }
}

}  // namespace

double girsanov_logweight(const std::vector<Vec>& eta, const std::vector<Vec>& dW, double lambda, double h) {
  if (eta.size() != dW.size()) throw LengthMismatch("eta and dW must have equal lengths");
  if (!(lambda > 0.0)) throw ParameterOutOfRange("Girsanov weights need lambda > 0");
  double ito = 0.0, quad = 0.0;
  for (std::size_t j = 0; j < eta.size(); ++j) {
    if (eta[j].size() != dW[j].size()) throw LengthMismatch("eta and dW dimensions differ");
    ito += eta[j].dot(dW[j]) / lambda;
    quad += eta[j].squaredNorm() / (lambda * lambda);
  }
  return ito - 0.5 * quad * h;
}

CouplingRun couple_nondegenerate(const MeanFieldModel& model, const LawFlow& flow_mu, const LawFlow& flow_nu,
                                 const Vec& x0, const Vec& y0, double t0, const CouplingNoise& noise,
                                 bool record_paths) {
  if (model.degenerate()) throw ParameterOutOfRange("couple_nondegenerate needs a model without structure");
  if (!(model.lambda() > 0.0)) throw ParameterOutOfRange("coupling needs lambda > 0");
  const long n0 = coupling_steps(flow_mu, flow_nu, t0);
  const double h = flow_mu.h, lambda = model.lambda();
  const Eigen::Index d = model.noise_dim();
  const NoisePlan& plan = flow_mu.plan;

  CouplingRun run;
  run.t0 = t0;
  run.h = h;
  run.steps = n0;
  run.lambda = lambda;
  run.x0 = x0;
  run.y0 = y0;
  run.xi_mu = xi_path(flow_mu, noise.path, n0);
  run.xi_nu = xi_path(flow_nu, noise.path, n0);
  const Vec& xm = run.xi_mu.back();
  const Vec& xn = run.xi_nu.back();
  const Vec steer = (xm - xn + x0 - y0) / t0;

  Vec x = x0, y = y0, bx(d), by(d), dw(d), dwt(d);
  if (record_paths) {
    run.x.push_back(x);
    run.y.push_back(y);
  }
  double ito = 0.0, quad = 0.0, residual = 0.0;
  for (long j = 0; j < n0; ++j) {
    const double t = static_cast<double>(j) * h;
    const auto js = static_cast<std::size_t>(j);
    // Interpolation identity at s_j.
    const Vec predicted = ((t0 - t) / t0) * (y0 - x0) + (t / t0) * (xm - xn) + run.xi_nu[js] - run.xi_mu[js];
    residual = std::max(residual, ((y - x) - predicted).norm());

    model.drift(t, x, flow_mu.features[js], bx);
    model.drift(t, y, flow_nu.features[js], by);
    const Vec eta = by - bx - steer;
    plan.increment(Stream::W, 0, j, noise.replica, dw);
    plan.increment(Stream::SharedWTilde, 0, j, noise.path, dwt);
    ito += eta.dot(dw) / lambda;
    quad += eta.squaredNorm() / (lambda * lambda);
    if (record_paths) {
      run.eta.push_back(eta);
      run.dW.push_back(dw);
    }
    x += h * bx + lambda * dw + flow_mu.sigma[js] * dwt;
    y += h * (bx + steer) + lambda * dw + flow_nu.sigma[js] * dwt;
    if (!x.allFinite() || !y.allFinite()) throw NonFiniteState(j);
    if (record_paths) {
      run.x.push_back(x);
      run.y.push_back(y);
    }
  }
  const Vec predicted_end = (xm - xn) + run.xi_nu.back() - run.xi_mu.back();
  residual = std::max(residual, ((y - x) - predicted_end).norm());
  run.log_weight = ito - 0.5 * quad * h;
  run.eta_energy = 0.5 * quad * h;
  run.identity_residual = residual;
  run.x_final = x;
  run.y_final = y;
  if (!record_paths) {
    run.xi_mu.clear();
    run.xi_nu.clear();
  }
  finish(run, record_paths);
  return run;
}

CouplingRun couple_degenerate(const MeanFieldModel& model, const LawFlow& flow_mu, const LawFlow& flow_nu,
                              const Vec& x0, const Vec& y0, double t0, const CouplingNoise& noise,
                              const SteeringPlan* plan, bool record_paths) {
  if (!model.degenerate()) throw ParameterOutOfRange("couple_degenerate needs a Hamiltonian structure");
  if (!(model.lambda() > 0.0)) throw ParameterOutOfRange("coupling needs lambda > 0");
  const long n0 = coupling_steps(flow_mu, flow_nu, t0);
  const double h = flow_mu.h, lambda = model.lambda();
  const Eigen::Index n = model.dim(), d = model.noise_dim(), m = n - d;
  const auto& hs = *model.structure();
  std::optional<SteeringPlan> own;
  if (!plan) {
    own.emplace(hs, t0, h);
    plan = &*own;
  }
  if (plan->steps() != n0 || std::abs(plan->h() - h) > 1e-15) throw GridMismatch("steering plan grid differs");
  const NoisePlan& noise_plan = flow_mu.plan;

  CouplingRun run;
  run.degenerate = true;
  run.t0 = t0;
  run.h = h;
  run.steps = n0;
  run.lambda = lambda;
  run.x0 = x0;
  run.y0 = y0;
  run.xi_mu = xi_path(flow_mu, noise.path, n0);
  run.xi_nu = xi_path(flow_nu, noise.path, n0);

  const Vec v = y0 - x0;
  const Vec v1 = v.head(m), v2 = v.tail(d);
  const Vec dxi = run.xi_mu.back() - run.xi_nu.back();
  std::vector<Vec> p(static_cast<std::size_t>(n0));
  for (long j = 0; j < n0; ++j) {
    p[static_cast<std::size_t>(j)] = run.xi_nu[static_cast<std::size_t>(j)] - run.xi_mu[static_cast<std::size_t>(j)];
  }
  const Vec V = plan->V(v2, dxi, p);
  const Vec w = plan->solve_gramian(v1 + V);
  const Vec a = dxi - v2;

  Vec x = x0, y = y0, bx(d), by(d), dw(d), dwt(d);
  Vec J = Vec::Zero(m);
  if (record_paths) {
    run.x.push_back(x);
    run.y.push_back(y);
  }
  double ito = 0.0, quad = 0.0, residual = 0.0;
  auto check_identity = [&](long j) {
    const Vec gap = y - x;
    const Vec d2 = v2 + plan->alpha(j, a, w) + run.xi_nu[static_cast<std::size_t>(j)] - run.xi_mu[static_cast<std::size_t>(j)];
    const Vec d1 = plan->exp_grid(j) * (v1 + J);
    residual = std::max(residual, std::max((gap.tail(d) - d2).norm(), (gap.head(m) - d1).norm()));
  };
  for (long j = 0; j < n0; ++j) {
    const double t = static_cast<double>(j) * h;
    const auto js = static_cast<std::size_t>(j);
    check_identity(j);
    model.drift(t, x, flow_mu.features[js], bx);
    model.drift(t, y, flow_nu.features[js], by);
    const Vec ap = plan->alpha_prime(j, a, w);
    const Vec eta = by - bx - ap;  // lambda times the normalised control
    noise_plan.increment(Stream::W, 0, j, noise.replica, dw);
    noise_plan.increment(Stream::SharedWTilde, 0, j, noise.path, dwt);
    ito += eta.dot(dw) / lambda;
    quad += eta.squaredNorm() / (lambda * lambda);
    if (record_paths) {
      run.eta.push_back(eta);
      run.dW.push_back(dw);
    }
    Vec xn = x, yn = y;
    xn.head(m) += h * (hs.A * x.head(m) + hs.M * x.tail(d));
    yn.head(m) += h * (hs.A * y.head(m) + hs.M * y.tail(d));
    xn.tail(d) += h * bx + lambda * dw + flow_mu.sigma[js] * dwt;
    yn.tail(d) += h * (bx + ap) + lambda * dw + flow_nu.sigma[js] * dwt;
    x = std::move(xn);
    y = std::move(yn);
    if (!x.allFinite() || !y.allFinite()) throw NonFiniteState(j);
    J += plan->step_integral(j, v2, a, w, p[js]);
    if (record_paths) {
      run.x.push_back(x);
      run.y.push_back(y);
    }
  }
  check_identity(n0);
  run.log_weight = ito - 0.5 * quad * h;
  run.eta_energy = 0.5 * quad * h;
  run.identity_residual = residual;
  run.x_final = x;
  run.y_final = y;
  if (!record_paths) {
    run.xi_mu.clear();
    run.xi_nu.clear();
  }
  finish(run, record_paths);
  return run;
}

CouplingRun couple(const MeanFieldModel& model, const LawFlow& flow_mu, const LawFlow& flow_nu, const Vec& x0,
                   const Vec& y0, double t0, const CouplingNoise& noise, const SteeringPlan* plan,
                   bool record_paths) {
  if (model.degenerate()) return couple_degenerate(model, flow_mu, flow_nu, x0, y0, t0, noise, plan, record_paths);
  return couple_nondegenerate(model, flow_mu, flow_nu, x0, y0, t0, noise, record_paths);
}

StartPairs start_pairs(const RowMat& mu0, const RowMat& nu0) {
  if (mu0.rows() != nu0.rows() || mu0.cols() != nu0.cols()) throw SizeMismatch("start clouds differ in shape");
  StartPairs out{mu0, nu0};
  if (mu0.rows() <= kMaxAssignmentSize || mu0.cols() == 1) {
    const auto pi = optimal_initial_coupling(EmpiricalMeasure(mu0), EmpiricalMeasure(nu0));
    for (Eigen::Index i = 0; i < mu0.rows(); ++i) out.y0.row(i) = nu0.row(pi[static_cast<std::size_t>(i)]);
  }
  return out;
}

CouplingBatch coupling_batch(const MeanFieldModel& model, const LawFlow& flow_mu, const LawFlow& flow_nu,
                             const StartPairs& pairs, double t0, const BatchOptions& options) {
  if (options.replicas < 1) throw ParameterOutOfRange("need at least one replica");
  std::optional<SteeringPlan> plan;
  if (model.degenerate()) plan.emplace(*model.structure(), t0, flow_mu.h);
  CouplingBatch batch;
  batch.runs.resize(static_cast<std::size_t>(options.replicas));
  const Eigen::Index np = pairs.x0.rows();
  parallel_for(batch.runs.size(), options.exec, [&](std::size_t r) {
    const std::uint64_t id = options.first_replica + r;
    const auto i = static_cast<Eigen::Index>(id % static_cast<std::uint64_t>(np));
    const CouplingNoise noise{id, options.fresh_paths ? id : options.path};
    batch.runs[r] = couple(model, flow_mu, flow_nu, pairs.x0.row(i).transpose(), pairs.y0.row(i).transpose(), t0,
                           noise, plan ? &*plan : nullptr, false);
  });
  std::vector<double> w, g, e;
  for (const auto& run : batch.runs) {
    w.push_back(std::exp(run.log_weight));
    g.push_back(run.terminal_gap);
    e.push_back(run.eta_energy);
    batch.max_abs_log_weight = std::max(batch.max_abs_log_weight, std::abs(run.log_weight));
    batch.outliers += run.outlier ? 1 : 0;
  }
  batch.weight = mean_estimate(w);
  batch.gap = mean_estimate(g);
  batch.energy = mean_estimate(e);
  return batch;
}

MartingaleReport martingale_report(const CouplingBatch& batch, double t0) {
  MartingaleReport r;
  r.t0 = t0;
  r.weight = batch.weight;
  r.outliers = batch.outliers;
  r.z_score = batch.weight.std_error > 0.0 ? (batch.weight.mean - 1.0) / batch.weight.std_error
                                           : (batch.weight.mean == 1.0 ? 0.0 : INFINITY);
  r.pass = std::abs(r.z_score) <= 3.0;
  return r;
}

TransferReport weighted_law_transfer_check(const std::vector<CouplingRun>& runs,
                                           const std::vector<TestFunction>& battery, const RowMat& direct,
                                           const std::optional<GaussianLaw>& nu_law) {
  TransferReport report;
  report.pass = true;
  for (const auto& tf : battery) {
    std::vector<double> lhs, rhs;
    lhs.reserve(runs.size());
    for (const auto& run : runs) lhs.push_back(std::exp(run.log_weight) * tf.f(run.x_final));
    for (Eigen::Index i = 0; i < direct.rows(); ++i) rhs.push_back(tf.f(direct.row(i).transpose()));
    TransferRow row;
    row.f = tf.name;
    row.weighted = mean_estimate(lhs);
    row.direct = mean_estimate(rhs);
    row.combined_se = combined_std_error(row.weighted, row.direct);
    const double diff = std::abs(row.weighted.mean - row.direct.mean);
    // Constant payoffs give zero spread on the direct side; allow round-off.
    row.pass = diff <= 3.0 * row.combined_se + 1e-12;
    if (nu_law && tf.gaussian_mean) {
      row.closed_form = tf.gaussian_mean(*nu_law);
      row.closed_form_pass = std::abs(row.direct.mean - *row.closed_form) <= 3.0 * row.direct.std_error + 1e-12;
    }
    report.pass = report.pass && row.pass && row.closed_form_pass;
    report.rows.push_back(row);
  }
  return report;
}

GaussianLaw conditional_gaussian(const LinearFeatureModel& model, const LawFlow& flow, const Vec& x0,
                                 std::uint64_t path, long steps) {
  if (steps > flow.steps) throw FlowHorizonTooShort("conditional law beyond the flow horizon");
  const Eigen::Index n = model.dim(), d = model.noise_dim(), m = n - d;
  Mat F = Mat::Zero(n, n);
  if (const auto& s = model.structure()) {
    F.topLeftCorner(m, m) = s->A;
    F.topRightCorner(m, d) = s->M;
  }
  F.bottomRows(d) = model.B();
  const double h = flow.h, lambda = model.lambda();
  const Mat step = Mat::Identity(n, n) + h * F;
  Mat E = Mat::Zero(n, d);
  E.bottomRows(d).setIdentity();
  Vec mean = x0, dwt(d);
  Mat cov = Mat::Zero(n, n);
  for (long j = 0; j < steps; ++j) {
    const auto js = static_cast<std::size_t>(j);
    flow.plan.increment(Stream::SharedWTilde, 0, j, path, dwt);
    mean = step * mean + E * (h * (model.C() * flow.features[js]) + flow.sigma[js] * dwt);
    cov = step * cov * step.transpose() + (lambda * lambda * h) * (E * E.transpose());
  }
  return GaussianLaw{mean, SymMatrix(0.5 * (cov + cov.transpose()))};
}

EntropyProbe entropy_bound_probe(const std::vector<CouplingRun>& runs, double w2sq, double t0) {
  if (runs.empty()) throw ParameterOutOfRange("entropy probe needs runs");
  std::vector<double> e;
  for (const auto& r : runs) e.push_back(r.eta_energy);
  EntropyProbe p;
  p.t0 = t0;
  p.w2sq = w2sq;
  p.energy = mean_estimate(e);
  p.c2 = w2sq > 0.0 ? p.energy.mean / (w2sq * (1.0 + 1.0 / t0)) : 0.0;
  return p;
}

LinearFit fit_inverse_t0(const std::vector<EntropyProbe>& probes) {
  std::vector<double> x, y;
  for (const auto& p : probes) {
    x.push_back(1.0 / p.t0);
    y.push_back(p.energy.mean);
  }
  return fit_line(x, y);
}

ExactHitStudy exact_hit_study(const MeanFieldModel& model, const RowMat& mu0, const RowMat& nu0, const Vec& x0,
                              const Vec& y0, double t0, double finest_h, int levels, long replicas,
                              std::uint64_t seed, const Execution& exec) {
  if (levels < 2) throw ParameterOutOfRange("need at least two step sizes");
  const NoisePlan fine(seed, finest_h, t0);
  ExactHitStudy study;
  FlowOptions fopts;
  fopts.exec = exec;
  for (int k = 0; k < levels; ++k) {
    const int factor = 1 << (levels - 1 - k);
    const NoisePlan plan = fine.coarsened(factor);
    const LawFlow fm = simulate_law_flow(model, mu0, plan, fopts);
    const LawFlow fn = simulate_law_flow(model, nu0, plan, fopts);
    std::optional<SteeringPlan> sp;
    if (model.degenerate()) sp.emplace(*model.structure(), t0, plan.h());
    std::vector<double> gaps(static_cast<std::size_t>(replicas)), res(static_cast<std::size_t>(replicas));
    parallel_for(gaps.size(), exec, [&](std::size_t r) {
      const auto run = couple(model, fm, fn, x0, y0, t0, CouplingNoise{r, r}, sp ? &*sp : nullptr, false);
      gaps[r] = run.terminal_gap;
      res[r] = run.identity_residual;
    });
    study.levels.push_back(ExactHitLevel{plan.h(), mean_estimate(gaps), mean_estimate(res)});
  }
  study.roundoff_floor = true;
  for (const auto& l : study.levels) study.roundoff_floor = study.roundoff_floor && l.gap.mean < 1e-12;
  bool ratios_ok = true;
  for (std::size_t k = 1; k < study.levels.size(); ++k) {
    const double r = study.levels[k - 1].gap.mean / study.levels[k].gap.mean;
    study.ratios.push_back(r);
    ratios_ok = ratios_ok && r >= 1.5 && r <= 2.5;
  }
  study.pass = study.roundoff_floor || ratios_ok;
  return study;
}

}  // namespace mvlab
