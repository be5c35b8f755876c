#include "mvlab/ergodicity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mvlab/errors.hpp"
#include "mvlab/gaussian_path.hpp"
#include "mvlab/rng.hpp"
#include "mvlab/simulate.hpp"

namespace mvlab {

namespace {

struct Probe {
  Vec x, y;
  RowMat mu, nu;
};

// Probe kinds cycle through: mu = nu, x = y, and x - y aligned with the
// difference of the cloud means (the worst direction for mean couplings).
Probe draw_probe(const NoisePlan& rng, long i, Eigen::Index n, Eigen::Index cloud) {
  Vec g(n);
  auto normal = [&](std::uint64_t slot) {
    rng.normals(Stream::User, static_cast<std::uint64_t>(i), slot, 0, g);
    return g;
  };
  Vec u(3);
  rng.uniforms(Stream::User, static_cast<std::uint64_t>(i), 1000, 0, u);
  const double scale = 0.1 + 2.0 * u(0), spread = 0.05 + 1.5 * u(1);
  Probe p;
  p.x = scale * normal(0);
  p.mu.resize(cloud, n);
  p.nu.resize(cloud, n);
  const Vec cm = scale * normal(1), cn = scale * normal(2);
  for (Eigen::Index k = 0; k < cloud; ++k) {
    p.mu.row(k) = (cm + spread * normal(10 + k)).transpose();
    p.nu.row(k) = (cn + spread * normal(100 + k)).transpose();
  }
  switch (i % 3) {
    case 0:
      p.nu = p.mu;
      p.y = p.x + scale * normal(3);
      break;
    case 1:
      p.y = p.x;
      break;
    default: {
      const Vec dm = (p.mu.colwise().mean() - p.nu.colwise().mean()).transpose();
      p.y = p.x - (2.0 * u(2) - 1.0) * 2.0 * dm;
      break;
    }
  }
  return p;
}

struct ProbeTerms {
  Vec db;       // b(x, mu) - b(y, nu)
  double hs2;   // ||sigma~(mu) - sigma~(nu)||_HS^2
  double w2sq;  // W2(mu, nu)^2
};

ProbeTerms probe_terms(const MeanFieldModel& model, const Probe& p) {
  const EmpiricalMeasure mu(p.mu), nu(p.nu);
  ProbeTerms t;
  t.db = drift_at(model, 0.0, p.x, mu) - drift_at(model, 0.0, p.y, nu);
  t.hs2 = (sigma_tilde_at(model, 0.0, mu) - sigma_tilde_at(model, 0.0, nu)).squaredNorm();
  const double w = wasserstein_k(mu, nu, 2.0);
  t.w2sq = w * w;
  return t;
}

template <typename Lhs>
DissipativityReport run_probes(const MeanFieldModel& model, double theta1, double theta2, const ProbeOptions& o,
                               Lhs&& lhs) {
  if (o.samples < 3 || o.cloud_size < 1) throw ParameterOutOfRange("need probes and non-empty clouds");
  const NoisePlan rng(o.seed, 1.0, 1.0);
  DissipativityReport r;
  r.theta1 = theta1;
  r.theta2 = theta2;
  r.margin = INFINITY;
  r.implied_theta2 = INFINITY;
  r.implied_theta1 = 0.0;
  for (long i = 0; i < o.samples; ++i) {
    const Probe p = draw_probe(rng, i, model.dim(), o.cloud_size);
    const ProbeTerms t = probe_terms(model, p);
    const double value = lhs(p, t);
    const double dsq = (p.x - p.y).squaredNorm();
    const double scale = dsq + t.w2sq;
    if (!(scale > 1e-14)) continue;
    ++r.probes;
    r.margin = std::min(r.margin, (theta1 * t.w2sq - theta2 * dsq - value) / scale);
    if (i % 3 == 0 && dsq > 1e-14) r.implied_theta2 = std::min(r.implied_theta2, -value / dsq);
    if (i % 3 == 1 && t.w2sq > 1e-14) r.implied_theta1 = std::max(r.implied_theta1, value / t.w2sq);
  }
  r.satisfied = r.margin >= -1e-12 && theta2 > theta1;
  return r;
}

std::vector<double> snapshot_times(const LawFlow& flow) {
  std::vector<double> t;
  for (long s : flow.snapshot_steps) t.push_back(static_cast<double>(s) * flow.h);
  return t;
}

double w2sq_leading(const RowMat& a, const RowMat& b, Eigen::Index k) {
  const double w = wasserstein_k(EmpiricalMeasure(RowMat(a.topRows(k))), EmpiricalMeasure(RowMat(b.topRows(k))), 2.0);
  return w * w;
}

// Fit of log(value - floor) against t over the leading window where the
// excess stays above kFloorMultiple times the floor. Close to the floor the
// first-crossing rule keeps points that happen to sit high, which flattens
// the slope; a wide margin keeps that selection bias small.
void fit_decay(DecayReport& r, const std::vector<double>& values, double t_min = 0.0) {
  std::vector<double> x, y;
  bool started = false;
  for (std::size_t k = 0; k < r.t.size(); ++k) {
    if (r.t[k] < t_min) continue;
    const double excess = values[k] - r.floor;
    const double threshold = std::max(kFloorMultiple * r.floor, 1e-12 * std::abs(values.front()));
    if (!(excess > threshold)) {
      if (started) break;
      continue;
    }
    if (!started) r.fit_from = r.t[k];
    started = true;
    x.push_back(r.t[k]);
    y.push_back(std::log(excess));
  }
  if (x.size() < 3) {
    r.fitted_rate = 0.0;
    r.pass = false;
    return;
  }
  r.fit = fit_line(x, y);
  r.fitted_rate = -r.fit.slope;
  r.rate_ci = student_t_quantile_95(x.size() - 2) * r.fit.slope_std_error;
  r.pass = r.fitted_rate >= (1.0 - kRateTolerance) * r.theoretical_rate;
}

}  // namespace

DissipativityReport check_dissipativity_E(const MeanFieldModel& model, double theta1, double theta2,
                                          const ProbeOptions& options) {
  if (model.degenerate()) throw ParameterOutOfRange("(E) is stated for models without structure");
  return run_probes(model, theta1, theta2, options, [](const Probe& p, const ProbeTerms& t) {
    return 2.0 * t.db.dot(p.x - p.y) + t.hs2;
  });
}

DissipativityReport check_dissipativity_F(const MeanFieldModel& model, double r, double r0, double theta1,
                                          double theta2, const ProbeOptions& options) {
  if (!model.degenerate()) throw ParameterOutOfRange("(F) needs a Hamiltonian structure");
  const auto& s = *model.structure();
  if (!(r > 0.0) || !(std::abs(r0) * s.M.norm() < 1.0)) throw ParameterOutOfRange("need r > 0 and |r0| ||M|| < 1");
  const Eigen::Index m = model.degenerate_dim(), d = model.noise_dim();
  return run_probes(model, theta1, theta2, options, [&](const Probe& p, const ProbeTerms& t) {
    const Vec D = p.x - p.y;
    const Vec D1 = D.head(m), D2 = D.tail(d);
    return 0.5 * t.hs2 + t.db.dot(D2 + r * r0 * s.M.transpose() * D1) +
           (r * r * D1 + r * r0 * s.M * D2).dot(s.A * D1 + s.M * D2);
  });
}

double lyapunov_rho(ConstVecRef x, double r, double r0, const Mat& M) {
  const Eigen::Index m = M.rows(), d = M.cols();
  if (x.size() != m + d) throw SizeMismatch("rho: point does not match M");
  if (!(r > 0.0) || !(std::abs(r0) * M.norm() < 1.0)) throw ParameterOutOfRange("need r > 0 and |r0| ||M|| < 1");
  const auto x1 = x.head(m), x2 = x.tail(d);
  return 0.5 * r * r * x1.squaredNorm() + 0.5 * x2.squaredNorm() + r * r0 * x1.dot(M * x2);
}

double sandwich_constant(double r, double r0, const Mat& M) {
  const Eigen::Index m = M.rows(), d = M.cols();
  if (!(r > 0.0) || !(std::abs(r0) * M.norm() < 1.0)) throw ParameterOutOfRange("need r > 0 and |r0| ||M|| < 1");
  Mat P = Mat::Zero(m + d, m + d);
  P.topLeftCorner(m, m) = 0.5 * r * r * Mat::Identity(m, m);
  P.bottomRightCorner(d, d) = 0.5 * Mat::Identity(d, d);
  P.topRightCorner(m, d) = 0.5 * r * r0 * M;
  P.bottomLeftCorner(d, m) = 0.5 * r * r0 * M.transpose();
  const Vec ev = SymMatrix(P).eigenvalues();
  return std::min(ev(0), 1.0 / ev(ev.size() - 1));
}

InvariantEstimate estimate_invariant_measure(const MeanFieldModel& model, const RowMat& initial, double burn_in,
                                             const DecayOptions& options) {
  if (initial.rows() < 4) throw TooFewParticles("stationarity check needs at least four particles");
  const long n0 = std::lround(burn_in / options.h), n1 = std::lround(1.0 / options.h);
  if (n0 < 1 || n1 < 1) throw ParameterOutOfRange("burn-in and h must give at least one step");
  const NoisePlan plan(options.seed, options.h, static_cast<double>(n0 + n1) * options.h);
  FlowOptions fo;
  fo.flow_id = options.flow_id;
  fo.exec = options.exec;
  fo.snapshot_every = std::gcd(n0, n0 + n1);
  const LawFlow flow = simulate_law_flow(model, initial, plan, fo);
  const RowMat at = flow.measure_at(n0).points();
  const RowMat later = flow.measure_at(n0 + n1).points();
  const Eigen::Index half = initial.rows() / 2;
  const Eigen::Index k = std::min<Eigen::Index>(half, kMaxAssignmentSize);
  const RowMat a = at.topRows(half), b = at.bottomRows(half), b_later = later.bottomRows(half);
  InvariantEstimate e;
  e.cloud = at;
  e.burn_in = static_cast<double>(n0) * options.h;
  e.w2sq_split = w2sq_leading(a, b, k);
  e.w2sq_shifted = w2sq_leading(a, b_later, k);
  e.stationary = e.w2sq_shifted <= 2.0 * e.w2sq_split + 1e-14;
  if (!e.stationary) throw NotConverged("ensemble still drifting after burn-in");
  return e;
}

DecayReport w2_decay_rate(const MeanFieldModel& model, const RowMat& initial, const RowMat& reference,
                          double horizon, double theoretical_rate, const DecayOptions& options) {
  if (reference.rows() < 2) throw TooFewParticles("reference cloud too small");
  const long steps = std::lround(horizon / options.h);
  const NoisePlan plan(options.seed, options.h, static_cast<double>(steps) * options.h);
  FlowOptions fo;
  fo.flow_id = options.flow_id;
  fo.exec = options.exec;
  fo.snapshot_every = options.snapshot_every;
  const LawFlow flow = simulate_law_flow(model, initial, plan, fo);
  const Eigen::Index k = std::min<Eigen::Index>({reference.rows(), initial.rows(), kMaxAssignmentSize});
  DecayReport r;
  r.path_tag = "particles";
  r.theoretical_rate = theoretical_rate;
  r.t = snapshot_times(flow);

  // Floor: a stationary companion system started on the reference with its
  // own noise, compared with the reference once the two have decorrelated.
  // Halves of one cloud would miss the independent fluctuation of the mean.
  fo.flow_id = options.flow_id + 1;
  const Eigen::Index nc = std::min(initial.rows(), reference.rows());
  const LawFlow companion = simulate_law_flow(model, RowMat(reference.topRows(nc)), plan, fo);
  std::vector<double> tail;
  for (std::size_t s = 0; s < companion.snapshots.size(); ++s)
    if (2 * companion.snapshot_steps[s] >= steps)
      tail.push_back(w2sq_leading(companion.snapshots[s], reference, std::min(k, nc)));
  r.floor = mean_estimate(tail).mean;

  for (const auto& snap : flow.snapshots) r.w2sq.push_back(w2sq_leading(snap, reference, k));
  fit_decay(r, r.w2sq, options.fit_from);
  return r;
}

ReplicatedDecay replicated_w2_decay(const MeanFieldModel& model, const RowMat& initial,
                                    const RowMat& reference_start, double burn_in, double horizon,
                                    double theoretical_rate, const DecayOptions& options, int replications) {
  if (replications < 2) throw ParameterOutOfRange("need at least two replications");
  ReplicatedDecay out;
  for (int rep = 0; rep < replications; ++rep) {
    DecayOptions o = options;
    o.flow_id = options.flow_id + 4 * static_cast<std::uint64_t>(rep);
    const RowMat reference = estimate_invariant_measure(model, reference_start, burn_in, o).cloud;
    o.flow_id += 1;
    out.runs.push_back(w2_decay_rate(model, initial, reference, horizon, theoretical_rate, o));
    out.rates.push_back(out.runs.back().fitted_rate);
  }
  const MeanEstimate m = mean_estimate(out.rates);
  out.fitted_rate = m.mean;
  out.rate_ci = student_t_quantile_95(out.rates.size() - 1) * m.std_error;
  out.theoretical_rate = theoretical_rate;
  out.pass = out.fitted_rate >= (1.0 - kRateTolerance) * theoretical_rate;
  return out;
}

GaussianLaw stationary_gaussian(const MeanFieldModel& model) {
  const auto form = model.linear_form();
  if (!form) throw ParameterOutOfRange("stationary Gaussian needs a linear model");
  const Mat F = form->B + form->C;
  Eigen::FullPivLU<Mat> lu(F);
  if (!lu.isInvertible()) throw NotConverged("mean dynamics have no unique equilibrium");
  const Vec mean = Vec::Zero(F.rows());
  return GaussianLaw{mean, SymMatrix(stationary_covariance(*form, mean))};
}

DecayReport gaussian_w2_decay(const MeanFieldModel& model, const GaussianLaw& initial, const std::vector<double>& t,
                              double theoretical_rate) {
  const auto form = model.linear_form();
  if (!form) throw ParameterOutOfRange("Gaussian decay needs a linear model");
  const GaussianLaw bar = stationary_gaussian(model);
  DecayReport r;
  r.path_tag = "gaussian";
  r.theoretical_rate = theoretical_rate;
  r.t = t;
  for (const auto& law : gaussian_path(*form, initial, t)) r.w2sq.push_back(gaussian_w2_squared(law, bar));
  fit_decay(r, r.w2sq);
  return r;
}

DecayReport entropy_decay_rate(const MeanFieldModel& model, const GaussianLaw& initial,
                               const std::vector<double>& t, double theoretical_rate) {
  const auto form = model.linear_form();
  if (!form) throw ParameterOutOfRange("entropy decay needs a linear model");
  const GaussianLaw bar = stationary_gaussian(model);
  DecayReport r;
  r.path_tag = "gaussian";
  r.theoretical_rate = theoretical_rate;
  r.t = t;
  for (const auto& law : gaussian_path(*form, initial, t)) {
    r.entropy.push_back(gaussian_kl(law, bar));
    r.w2sq.push_back(gaussian_w2_squared(law, bar));
  }
  fit_decay(r, r.entropy, 1.0);
  return r;
}

DecayReport degenerate_decay_rate(const MeanFieldModel& model, const RowMat& initial, const RowMat& reference,
                                  double horizon, double theoretical_rate, const DecayOptions& options) {
  if (!model.degenerate()) throw ParameterOutOfRange("degenerate decay needs a Hamiltonian structure");
  return w2_decay_rate(model, initial, reference, horizon, theoretical_rate, options);
}

ContractionReport synchronous_contraction(const MeanFieldModel& model, const RowMat& mu, const RowMat& nu,
                                          double horizon, double theoretical_rate, const DecayOptions& options,
                                          const ContractionOptions& contraction) {
  if (mu.rows() != nu.rows()) throw SizeMismatch("coupled clouds must have equal sizes");
  const long steps = std::lround(horizon / options.h);
  const NoisePlan plan(options.seed, options.h, static_cast<double>(steps) * options.h);
  FlowOptions fo;
  fo.flow_id = options.flow_id;
  fo.exec = options.exec;
  fo.snapshot_every = options.snapshot_every;
  const LawFlow fm = simulate_law_flow(model, mu, plan, fo);
  const LawFlow fn = simulate_law_flow(model, nu, plan, fo);
  Mat M;
  if (contraction.use_rho) {
    if (!model.degenerate()) throw ParameterOutOfRange("rho needs a Hamiltonian structure");
    M = model.structure()->M;
  }
  ContractionReport out;
  DecayReport& r = out.decay;
  r.path_tag = contraction.use_rho ? "particles-rho" : "particles";
  r.theoretical_rate = theoretical_rate;
  r.t = snapshot_times(fm);
  out.monotone = true;
  for (std::size_t s = 0; s < fm.snapshots.size(); ++s) {
    const RowMat diff = fm.snapshots[s] - fn.snapshots[s];
    std::vector<double> v(static_cast<std::size_t>(diff.rows()));
    for (Eigen::Index i = 0; i < diff.rows(); ++i) {
      const Vec dx = diff.row(i).transpose();
      v[static_cast<std::size_t>(i)] =
          contraction.use_rho ? lyapunov_rho(dx, contraction.r, contraction.r0, M) : dx.squaredNorm();
    }
    r.w2sq.push_back(pairwise_sum(v) / static_cast<double>(v.size()));
    if (s > 0 && r.w2sq[s] > r.w2sq[s - 1] * (1.0 + 1e-9)) out.monotone = false;
  }
  fit_decay(r, r.w2sq);
  return out;
}

}  // namespace mvlab
