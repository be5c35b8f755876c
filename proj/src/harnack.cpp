#include "mvlab/harnack.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mvlab/errors.hpp"
#include "mvlab/gaussian_path.hpp"
#include "mvlab/simulate.hpp"

namespace mvlab {

namespace {

LinearGaussianForm require_form(const MeanFieldModel& model) {
  auto form = model.linear_form();
  if (!form) throw ParameterOutOfRange("the Gaussian entropy path needs a linear model");
  return *form;
}

std::vector<double> sorted_grid(const std::vector<double>& t_grid) {
  if (t_grid.empty()) throw GridMismatch("empty time grid");
  std::vector<double> t = t_grid;
  std::sort(t.begin(), t.end());
  if (!(t.front() > 0.0)) throw GridMismatch("grid times must be positive");
  return t;
}

// Fitted constant, spread and flags from the ratio column.
void summarise(HarnackReport& r) {
  double lo = INFINITY, hi = 0.0;
  for (auto& row : r.rows) {
    r.noise_floor_ok = r.noise_floor_ok && row.entropy >= kEntropyNoiseFloor;
    if (row.ratio > 0.0) {
      lo = std::min(lo, row.ratio);
      hi = std::max(hi, row.ratio);
    }
  }
  r.fitted_c = hi;
  r.ratio_spread = (hi > 0.0 && std::isfinite(lo)) ? hi / lo : 1.0;
  r.stable = std::isfinite(hi) && r.ratio_spread < 2.0;
  for (auto& row : r.rows) row.violation = row.ratio > r.fitted_c * (1.0 + 1e-12);
}

std::vector<GaussianLaw> laws_at(const LinearGaussianForm& form, const GaussianLaw& start,
                                 const std::vector<double>& t) {
  return gaussian_path(form, start, t);
}

}  // namespace

std::string to_string(EntropyPath path) { return path == EntropyPath::Gaussian ? "gaussian" : "knn"; }

HarnackReport entropy_cost_gaussian(const MeanFieldModel& model, const GaussianLaw& mu, const GaussianLaw& nu,
                                    const std::vector<double>& t_grid) {
  const auto form = require_form(model);
  const auto t = sorted_grid(t_grid);
  const auto pm = laws_at(form, mu, t);
  const auto pn = laws_at(form, nu, t);
  const double w2sq = gaussian_w2_squared(mu, nu);
  HarnackReport r;
  r.path = EntropyPath::Gaussian;
  r.exponent = 1.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    HarnackRow row;
    row.t = t[k];
    row.entropy = gaussian_kl(pn[k], pm[k]);
    row.w2sq = w2sq;
    row.w2tsq = w2sq;
    row.ratio = w2sq > 0.0 ? t[k] * row.entropy / w2sq : 0.0;
    r.rows.push_back(row);
  }
  summarise(r);
  return r;
}

HarnackReport entropy_cost_knn(const MeanFieldModel& model, const RowMat& mu, const RowMat& nu,
                               const std::vector<double>& t_grid, const KnnOptions& options) {
  const auto t = sorted_grid(t_grid);
  if (mu.rows() != nu.rows()) throw SizeMismatch("clouds must have equal sizes");
  const double T = t.back();
  if (t.front() < kKnnTimeFloor * T) throw EstimatorDegenerate("k-NN entropy requested below 0.05 T");
  // Snapshots at every grid time: the grid must sit on the step grid.
  const long steps = std::lround(T / options.h);
  std::vector<long> idx;
  for (double s : t) {
    const long j = std::lround(s / options.h);
    if (std::abs(static_cast<double>(j) * options.h - s) > 1e-9 * s) throw GridMismatch("grid time off the step grid");
    idx.push_back(j);
  }
  long every = idx.front();
  for (long j : idx) every = std::gcd(every, j);
  const NoisePlan plan(options.seed, options.h, static_cast<double>(steps) * options.h);
  FlowOptions fo;
  fo.snapshot_every = every;
  fo.exec = options.exec;
  const LawFlow fm = simulate_law_flow(model, mu, plan, fo);
  const LawFlow fn = simulate_law_flow(model, nu, plan, fo);

  const Eigen::Index k_w = std::min<Eigen::Index>(mu.rows(), kMaxAssignmentSize);
  const EmpiricalMeasure em(RowMat(mu.topRows(k_w))), en(RowMat(nu.topRows(k_w)));
  const double w2 = wasserstein_k(em, en, 2.0);
  const Eigen::Index m = model.degenerate_dim();

  HarnackReport r;
  r.path = EntropyPath::Knn;
  r.exponent = 1.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    HarnackRow row;
    row.t = t[k];
    row.entropy = knn_relative_entropy(fn.measure_at(idx[k]).points(), fm.measure_at(idx[k]).points(), options.k_nn,
                                       options.seed, nullptr, options.exec);
    row.w2sq = w2 * w2;
    const double w2t = m > 0 ? wasserstein_2_modified(em, en, t[k], m) : w2;
    row.w2tsq = w2t * w2t;
    row.ratio = row.w2sq > 0.0 ? t[k] * std::max(row.entropy, 0.0) / row.w2sq : 0.0;
    r.rows.push_back(row);
  }
  summarise(r);
  return r;
}

HarnackReport entropy_cost_experiment(const MeanFieldModel& model, const GaussianLaw& mu, const GaussianLaw& nu,
                                      const std::vector<double>& t_grid) {
  if (model.degenerate()) return degenerate_entropy_cost_experiment(model, mu, nu, t_grid);
  return entropy_cost_gaussian(model, mu, nu, t_grid);
}

HarnackReport degenerate_entropy_cost_experiment(const MeanFieldModel& model, const GaussianLaw& mu,
                                                 const GaussianLaw& nu, const std::vector<double>& t_grid) {
  if (!model.degenerate()) throw ParameterOutOfRange("degenerate entropy cost needs a Hamiltonian structure");
  const auto form = require_form(model);
  const auto t = sorted_grid(t_grid);
  const int l = model.structure()->l;
  const Eigen::Index m = model.degenerate_dim();
  const auto pm = laws_at(form, mu, t);
  const auto pn = laws_at(form, nu, t);
  const double w2sq = gaussian_w2_squared(mu, nu);
  const double T = t.back();
  HarnackReport r;
  r.path = EntropyPath::Gaussian;
  r.modified_form = true;
  r.exponent = 4.0 * l - 3.0;
  r.exponent_plain = 4.0 * l - 1.0;
  std::vector<double> lt, le, lm;
  for (std::size_t k = 0; k < t.size(); ++k) {
    HarnackRow row;
    row.t = t[k];
    row.entropy = gaussian_kl(pn[k], pm[k]);
    row.w2sq = w2sq;
    row.w2tsq = gaussian_w2_modified_squared(mu, nu, t[k], m);
    row.ratio = row.w2tsq > 0.0 ? std::pow(t[k], r.exponent) * row.entropy / row.w2tsq : 0.0;
    if (w2sq > 0.0) {
      r.fitted_c_plain = std::max(r.fitted_c_plain,
                                  std::pow(t[k], r.exponent_plain) * row.entropy / (std::max(1.0, T * T) * w2sq));
    }
    if (row.entropy > 0.0 && row.w2tsq > 0.0) {
      lt.push_back(std::log(t[k]));
      le.push_back(std::log(row.entropy));
      lm.push_back(std::log(row.entropy / row.w2tsq));
    }
    r.rows.push_back(row);
  }
  summarise(r);
  if (lt.size() >= 2) {
    r.entropy_fit = fit_line(lt, le);
    r.modified_fit = fit_line(lt, lm);
  }
  return r;
}

void check_holdout(HarnackReport& report, const MeanFieldModel& model, const GaussianLaw& mu,
                   const GaussianLaw& nu) {
  const auto form = require_form(model);
  std::vector<double> t;
  for (const auto& row : report.rows) t.push_back(row.t);
  const auto pm = laws_at(form, mu, t);
  const auto pn = laws_at(form, nu, t);
  const Eigen::Index m = model.degenerate_dim();
  report.holdout.clear();
  report.holdout_pass = true;
  for (std::size_t k = 0; k < t.size(); ++k) {
    HoldoutRow h;
    h.t = t[k];
    h.entropy = gaussian_kl(pn[k], pm[k]);
    const double dist = report.modified_form ? gaussian_w2_modified_squared(mu, nu, t[k], m)
                                             : gaussian_w2_squared(mu, nu);
    h.bound = report.fitted_c / std::pow(t[k], report.exponent) * dist;
    h.pass = h.entropy <= h.bound * (1.0 + 1e-9) + 1e-12;
    report.holdout_pass = report.holdout_pass && h.pass;
    report.holdout.push_back(h);
  }
}

LogHarnackReport log_harnack_check(const MeanFieldModel& model, const RowMat& mu, const RowMat& nu, double t,
                                   const std::vector<TestFunction>& battery, const LogHarnackOptions& options) {
  if (mu.rows() != nu.rows()) throw SizeMismatch("clouds must have equal sizes");
  const NoisePlan plan(options.seed, options.h, t);
  FlowOptions fo;
  fo.exec = options.exec;
  const RowMat xm = simulate_law_flow(model, mu, plan, fo).final_states();
  const RowMat xn = simulate_law_flow(model, nu, plan, fo).final_states();
  const Eigen::Index k_w = std::min<Eigen::Index>(mu.rows(), kMaxAssignmentSize);
  const double w2 = wasserstein_k(EmpiricalMeasure(RowMat(mu.topRows(k_w))),
                                  EmpiricalMeasure(RowMat(nu.topRows(k_w))), 2.0);
  LogHarnackReport r;
  r.t = t;
  r.cost = options.c / t * w2 * w2;
  r.pass = true;
  for (const auto& f : battery) {
    if (!f.positive) throw ParameterOutOfRange("log-Harnack payoffs must be strictly positive");
    std::vector<double> lf, ff;
    for (Eigen::Index i = 0; i < xn.rows(); ++i) lf.push_back(std::log(f.f(xn.row(i).transpose())));
    for (Eigen::Index i = 0; i < xm.rows(); ++i) ff.push_back(f.f(xm.row(i).transpose()));
    LogHarnackRow row;
    row.f = f.name;
    row.log_side = mean_estimate(lf);
    row.f_side = mean_estimate(ff);
    row.rhs = std::log(row.f_side.mean) + r.cost;
    row.excess = row.log_side.mean - row.rhs;
    // Delta method for the log of the mean.
    row.combined_se = std::hypot(row.log_side.std_error, row.f_side.std_error / row.f_side.mean);
    row.violation = row.excess > 3.0 * row.combined_se + 1e-12;
    r.pass = r.pass && !row.violation;
    r.rows.push_back(row);
  }
  return r;
}

GaussianHarnackSides gaussian_log_harnack(const MeanFieldModel& model, const GaussianLaw& mu, const GaussianLaw& nu,
                                          double t, double a, double c) {
  const auto form = require_form(model);
  const GaussianLaw pm = propagate_gaussian(form, mu, t);
  const GaussianLaw pn = propagate_gaussian(form, nu, t);
  GaussianHarnackSides s;
  s.log_side = -a * (pn.mean.squaredNorm() + pn.cov.matrix().trace());
  const Eigen::Index n = pm.mean.size();
  const Mat K = Mat::Identity(n, n) + 2.0 * a * pm.cov.matrix();
  Eigen::LLT<Mat> llt(K);
  const double logdet = 2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
  const double log_pf = -0.5 * logdet - a * pm.mean.dot(llt.solve(pm.mean));
  s.rhs = log_pf + c / t * gaussian_w2_squared(mu, nu);
  s.pass = s.log_side <= s.rhs + 1e-12;
  return s;
}

}  // namespace mvlab
