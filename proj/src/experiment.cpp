#include "mvlab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mvlab/bismut.hpp"
#include "mvlab/coupling.hpp"
#include "mvlab/ergodicity.hpp"
#include "mvlab/errors.hpp"
#include "mvlab/gaussian_path.hpp"
#include "mvlab/harnack.hpp"
#include "mvlab/linalg.hpp"
#include "mvlab/presets.hpp"
#include "mvlab/simulate.hpp"

#ifndef MVLAB_VERSION
#define MVLAB_VERSION "0.0.0"
#endif

namespace mvlab {

using json = nlohmann::json;

std::string code_version() { return MVLAB_VERSION; }

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string exact(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<double> log_grid(double a, double b, int n) {
  std::vector<double> t;
  for (int k = 0; k < n; ++k) t.push_back(a * std::pow(b / a, k / double(n - 1)));
  return t;
}

bool is_multiple(double t, double h) {
  const double q = t / h;
  return std::abs(q - std::round(q)) <= 1e-9 * std::max(1.0, q);
}

long steps_for(double t, double h) { return std::lround(t / h); }

GaussianLaw isotropic(const Vec& mean, double var) {
  return {mean, SymMatrix(var * Mat::Identity(mean.size(), mean.size()))};
}

GaussianLaw dirac(const Vec& x) { return {x, SymMatrix(Mat::Zero(x.size(), x.size()))}; }

bool uses_time_steps(const RunConfig& c) {
  if (c.kind == "gramian") return false;
  if (c.kind == "harnack") return !make_preset(c.preset)->linear_form().has_value();
  return true;
}

// Long-format table: every row is (series, x, value, std_error).
class Table {
 public:
  void add(const std::string& series, double x, double value, double se = 0.0) {
    out_ << series << ',' << exact(x) << ',' << exact(value) << ',' << exact(se) << '\n';
  }
  std::string str() const { return "series,x,value,std_error\n" + out_.str(); }

 private:
  std::ostringstream out_;
};

struct Context {
  RunConfig config;
  std::shared_ptr<const MeanFieldModel> model;
  const PresetInfo* info = nullptr;
  Execution exec;
  Table table;
  RunManifest* manifest = nullptr;

  void check(const std::string& name, bool pass, const std::string& detail) {
    manifest->checks.push_back({name, pass, detail});
  }
  void fit(const std::string& name, double value) { manifest->fitted[name] = value; }
  void warn(const std::string& w) { manifest->warnings.push_back(w); }
  double h() const { return *config.h; }
  double T() const { return *config.T; }
  double shift() const { return *config.shift; }
  Vec shift_vec() const { return Vec::Constant(model->dim(), shift()); }
};

void run_simulate(Context& c) {
  const auto& grid = c.config.t_grid;
  long every = 0;
  for (double t : grid) every = std::gcd(every, steps_for(t, c.h()));
  const GaussianLaw start = isotropic(c.shift_vec(), 1.0);
  const RowMat initial = gaussian_sample(start, c.config.N, c.config.seed);
  const NoisePlan plan(c.config.seed, c.h(), c.T());
  FlowOptions opts;
  opts.snapshot_every = every;
  opts.exec = c.exec;
  const LawFlow flow = simulate_law_flow(*c.model, initial, plan, opts);
  const auto form = c.model->linear_form();
  std::vector<GaussianLaw> exact_laws;
  if (form) exact_laws = gaussian_path(*form, start, grid);
  bool finite = true, close = true;
  double worst = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto fit = gaussian_fit(flow.measure_at(steps_for(grid[k], c.h())));
    finite = finite && fit.mean.allFinite() && fit.cov.matrix().allFinite();
    for (Eigen::Index i = 0; i < fit.mean.size(); ++i) {
      const double var = fit.cov.matrix()(i, i);
      const std::string idx = std::to_string(i);
      c.table.add("mean" + idx, grid[k], fit.mean(i), std::sqrt(var / static_cast<double>(c.config.N)));
      c.table.add("var" + idx, grid[k], var);
      if (form) {
        const double m = exact_laws[k].mean(i);
        c.table.add("exact_mean" + idx, grid[k], m);
        c.table.add("exact_var" + idx, grid[k], exact_laws[k].cov.matrix()(i, i));
        // 5 SE of the particle mean plus an O(h) allowance for the Euler bias.
        const double tol = 5.0 * std::sqrt(var / static_cast<double>(c.config.N)) + c.h() * (1.0 + std::abs(m));
        worst = std::max(worst, std::abs(fit.mean(i) - m) / tol);
        if (std::abs(fit.mean(i) - m) > tol) close = false;
      }
    }
  }
  c.check("finite_states", finite, "all snapshot moments finite");
  if (form) c.check("mean_matches_gaussian", close, "max error / tolerance = " + num(worst));
}

void run_gramian(Context& c) {
  const auto& s = c.model->structure();
  if (!s) throw ConfigInvalid("preset", "'" + c.config.preset + "' has no degenerate block");
  const auto scaling = gramian_inverse_norm_slope(s->A, s->M, s->l, c.config.t_grid);
  for (std::size_t k = 0; k < scaling.t.size(); ++k) c.table.add("inv_norm", scaling.t[k], scaling.inverse_norm[k]);
  c.fit("slope", scaling.fit.slope);
  c.fit("bound_slope", scaling.bound_slope);
  c.check("inverse_norm_slope", scaling.within_bound,
          "slope " + num(scaling.fit.slope) + " >= " + num(scaling.bound_slope) + " - 0.1");
}

void run_coupling(Context& c) {
  const Eigen::Index n = c.model->dim();
  const RowMat mu0 = gaussian_sample(isotropic(Vec::Zero(n), 1.0), c.config.N, c.config.seed);
  const RowMat nu0 = (mu0.rowwise() + c.shift_vec().transpose()).eval();
  const StartPairs pairs = start_pairs(mu0, nu0);

  // Gap under h-halving from one pair of starting points; the coarsest step is h.
  const double t_hit = c.config.t_grid.front();
  const auto study = exact_hit_study(*c.model, mu0, nu0, pairs.x0.row(0).transpose(),
                                     pairs.y0.row(0).transpose(), t_hit,
                                     c.h() / 4.0, 3, 20, c.config.seed, c.exec);
  for (const auto& level : study.levels) {
    c.table.add("hit_gap", level.h, level.gap.mean, level.gap.std_error);
    c.table.add("hit_residual", level.h, level.residual.mean, level.residual.std_error);
  }
  std::string ratios;
  for (double r : study.ratios) ratios += (ratios.empty() ? "" : ", ") + num(r);
  c.check("exact_hit", study.pass,
          study.roundoff_floor ? "gap at roundoff for every h" : "gap ratios per halving: " + ratios);

  for (double t0 : c.config.t_grid) {
    const NoisePlan plan(c.config.seed, c.h(), t0);
    FlowOptions fo;
    fo.exec = c.exec;
    const LawFlow fm = simulate_law_flow(*c.model, mu0, plan, fo);
    const LawFlow fn = simulate_law_flow(*c.model, nu0, plan, fo);
    BatchOptions bo;
    bo.replicas = c.config.replicas;
    bo.exec = c.exec;
    const auto batch = coupling_batch(*c.model, fm, fn, pairs, t0, bo);
    const auto rep = martingale_report(batch, t0);
    c.table.add("weight_mean", t0, rep.weight.mean, rep.weight.std_error);
    c.table.add("terminal_gap", t0, batch.gap.mean, batch.gap.std_error);
    c.table.add("energy", t0, batch.energy.mean, batch.energy.std_error);
    c.table.add("max_abs_log_weight", t0, batch.max_abs_log_weight);
    c.fit("z_score_t0_" + num(t0), rep.z_score);
    if (rep.outliers > 0) c.warn(std::to_string(rep.outliers) + " replicas with |log R| > 50 at t0 = " + num(t0));
    c.check("martingale_t0_" + num(t0), rep.pass, "E[R] = " + num(rep.weight.mean) + " +- " + num(rep.weight.std_error));
  }
}

void run_bismut(Context& c) {
  const Eigen::Index n = c.model->dim();
  const RowMat initial = gaussian_sample(isotropic(c.shift_vec(), 0.49), c.config.N, c.config.seed);
  const auto f = make_test_function(c.config.f, n);
  const auto phi = make_perturbation(c.config.phi, n);
  const double rel = c.model->degenerate() ? 0.07 : 0.05;
  for (double t : c.config.t_grid) {
    BismutOptions bo;
    bo.t = t;
    bo.h = c.h();
    bo.replicas = c.config.replicas;
    bo.seed = c.config.seed;
    bo.exec = c.exec;
    const auto b = bismut_estimate(*c.model, initial, phi, f, bo);
    FdOptions fo;
    fo.t = t;
    fo.h = c.h();
    fo.eps = c.config.eps;
    fo.repeats = 2;
    fo.seed = c.config.seed;
    fo.exec = c.exec;
    const auto fd = lions_fd_oracle(*c.model, initial, phi, f, fo);
    c.table.add("bismut", t, b.value, b.std_error);
    c.table.add("fd", t, fd.value, fd.std_error);
    c.table.add("weight_l2", t, b.weight_l2);
    const double tol = std::max(rel * std::abs(fd.value), 3.0 * std::hypot(b.std_error, fd.std_error));
    const double err = std::abs(b.value - fd.value);
    c.check("bismut_vs_fd_t_" + num(t), err <= tol,
            "|" + num(b.value) + " - " + num(fd.value) + "| = " + num(err) + " vs tolerance " + num(tol));
  }
}

void run_harnack(Context& c) {
  const Eigen::Index n = c.model->dim();
  const auto& grid = c.config.t_grid;
  const Vec delta = c.shift_vec();
  HarnackReport report;
  if (c.model->linear_form()) {
    report = c.model->degenerate() ? degenerate_entropy_cost_experiment(*c.model, dirac(Vec::Zero(n)), dirac(delta), grid)
                                   : entropy_cost_gaussian(*c.model, dirac(Vec::Zero(n)), dirac(delta), grid);
    check_holdout(report, *c.model, isotropic(Vec::Constant(n, 0.1), 0.1), isotropic(-0.5 * delta, 0.1));
  } else {
    KnnOptions ko;
    ko.h = c.h();
    ko.k_nn = c.config.k_nn;
    ko.seed = c.config.seed;
    ko.exec = c.exec;
    const RowMat mu = gaussian_sample(isotropic(Vec::Zero(n), 1.0), c.config.N, c.config.seed);
    const RowMat nu = gaussian_sample(isotropic(delta, 1.0), c.config.N, c.config.seed + 1);
    report = entropy_cost_knn(*c.model, mu, nu, grid, ko);
  }
  for (const auto& row : report.rows) {
    c.table.add("entropy", row.t, row.entropy);
    c.table.add("ratio", row.t, row.ratio);
  }
  for (const auto& row : report.holdout) c.table.add("holdout_entropy", row.t, row.entropy);
  c.fit("fitted_c", report.fitted_c);
  c.fit("exponent", report.exponent);
  c.fit("ratio_spread", report.ratio_spread);
  c.check("noise_floor", report.noise_floor_ok, "entropies above " + num(kEntropyNoiseFloor));
  if (c.model->degenerate()) {
    const double bound = -(4.0 * c.model->structure()->l - 3.0) - 0.5;
    c.fit("entropy_slope", report.entropy_fit.slope);
    c.fit("modified_slope", report.modified_fit.slope);
    c.check("entropy_slope", report.entropy_fit.slope >= bound,
            "slope " + num(report.entropy_fit.slope) + " >= " + num(bound));
    c.check("modified_slope", report.modified_fit.slope >= bound,
            "slope " + num(report.modified_fit.slope) + " >= " + num(bound));
  } else {
    c.check("ratio_stable", report.stable, "max/min of t Ent / W2^2 = " + num(report.ratio_spread));
  }
  if (!report.holdout.empty()) c.check("holdout", report.holdout_pass, "held-out pair obeys the fitted bound");
}

void record_decay(Context& c, const std::string& series, const DecayReport& d) {
  for (std::size_t k = 0; k < d.t.size(); ++k) {
    if (!d.w2sq.empty()) c.table.add(series + "_w2sq", d.t[k], d.w2sq[k]);
    if (!d.entropy.empty()) c.table.add(series + "_entropy", d.t[k], d.entropy[k]);
  }
  c.fit(series + "_rate", d.fitted_rate);
  c.fit(series + "_rate_ci", d.rate_ci);
  c.check(series + "_rate", d.pass,
          "fitted " + num(d.fitted_rate) + " +- " + num(d.rate_ci) + ", theory " + num(d.theoretical_rate));
}

void run_ergodicity(Context& c) {
  const auto& info = *c.info;
  if (info.assumption == Dissipativity::None)
    throw ConfigInvalid("preset", "'" + info.name + "' has no certified dissipativity constants");
  const Eigen::Index n = c.model->dim();
  const double rate = info.theoretical_rate();
  ProbeOptions po;
  po.seed = c.config.seed;
  const auto diss = info.assumption == Dissipativity::E
                        ? check_dissipativity_E(*c.model, info.theta1, info.theta2, po)
                        : check_dissipativity_F(*c.model, info.r, info.r0, info.theta1, info.theta2, po);
  c.fit("dissipativity_margin", diss.margin);
  c.fit("implied_theta2", diss.implied_theta2);
  c.fit("implied_theta1", diss.implied_theta1);
  c.check("dissipativity", diss.satisfied, "margin " + num(diss.margin) + " over " + std::to_string(diss.probes) + " probes");

  std::optional<DecayReport> entropy;
  if (c.model->linear_form()) {
    const GaussianLaw bar = stationary_gaussian(*c.model);
    const GaussianLaw start{bar.mean + c.shift_vec(), bar.cov};
    std::vector<double> t;
    for (double s = 0.0; s <= c.T() + 1e-12; s += 0.2) t.push_back(s);
    const auto w = gaussian_w2_decay(*c.model, start, t, rate);
    record_decay(c, "gaussian", w);
    if (!c.model->degenerate()) entropy = entropy_decay_rate(*c.model, start, t, rate);
  }

  DecayOptions o;
  o.h = c.h();
  o.snapshot_every = std::max(1L, std::lround(0.2 / c.h()));
  o.seed = c.config.seed;
  o.exec = c.exec;
  const RowMat ref_start = gaussian_sample(isotropic(Vec::Zero(n), 1.0), c.config.N, c.config.seed);
  const RowMat start = gaussian_sample(isotropic(c.shift_vec(), 1.0), c.config.N, c.config.seed + 1);
  const auto rep = replicated_w2_decay(*c.model, start, ref_start, 20.0, c.T(), rate, o, c.config.replications);
  const DecayReport& first = rep.runs.front();
  for (std::size_t k = 0; k < first.t.size(); ++k) c.table.add("particles_w2sq", first.t[k], first.w2sq[k]);
  for (std::size_t r = 0; r < rep.rates.size(); ++r) c.table.add("particles_rate", static_cast<double>(r), rep.rates[r]);
  c.fit("particles_floor", first.floor);
  c.fit("particles_rate", rep.fitted_rate);
  c.fit("particles_rate_ci", rep.rate_ci);
  c.check("particles_rate", rep.pass,
          "fitted " + num(rep.fitted_rate) + " +- " + num(rep.rate_ci) + " over " + std::to_string(rep.rates.size()) +
              " systems, theory " + num(rate));
  if (entropy) {
    record_decay(c, "entropy", *entropy);
    // The entropy curve is exact, so the particle W2 fit carries the uncertainty.
    const double diff = std::abs(entropy->fitted_rate - rep.fitted_rate);
    c.check("entropy_matches_w2", diff <= entropy->rate_ci + rep.rate_ci,
            "|" + num(entropy->fitted_rate) + " - " + num(rep.fitted_rate) + "| vs " + num(entropy->rate_ci + rep.rate_ci));
  }
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigInvalid("config", std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigInvalid("config", "expected a JSON object");
  static const std::set<std::string> known{"kind", "preset", "N", "h", "T", "t_grid", "replicas", "eps", "k_nn",
                                           "replications", "shift", "f", "phi", "seed", "out", "workers"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigInvalid(key, "unknown field");
  RunConfig c;
  auto get = [&](const char* key, auto& target) {
    if (!j.contains(key)) return;
    try {
      target = j.at(key).get<std::remove_reference_t<decltype(target)>>();
    } catch (const json::exception& e) {
      throw ConfigInvalid(key, std::string("wrong type: ") + e.what());
    }
  };
  auto get_opt = [&](const char* key, std::optional<double>& target) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number()) throw ConfigInvalid(key, "expected a number");
    target = j.at(key).get<double>();
  };
  get("kind", c.kind);
  get("preset", c.preset);
  get("N", c.N);
  get_opt("h", c.h);
  get_opt("T", c.T);
  get("t_grid", c.t_grid);
  get("replicas", c.replicas);
  get("eps", c.eps);
  get("k_nn", c.k_nn);
  get("replications", c.replications);
  get_opt("shift", c.shift);
  get("f", c.f);
  get("phi", c.phi);
  if (j.contains("seed") && !j.at("seed").is_number_unsigned()) throw ConfigInvalid("seed", "expected an unsigned integer");
  get("seed", c.seed);
  get("out", c.out);
  get("workers", c.workers);
  return c;
}

namespace {

json config_json(const RunConfig& c, bool with_runtime) {
  json j;
  j["kind"] = c.kind;
  j["preset"] = c.preset;
  j["N"] = c.N;
  if (c.h) j["h"] = *c.h;
  if (c.T) j["T"] = *c.T;
  j["t_grid"] = c.t_grid;
  j["replicas"] = c.replicas;
  j["eps"] = c.eps;
  j["k_nn"] = c.k_nn;
  j["replications"] = c.replications;
  if (c.shift) j["shift"] = *c.shift;
  j["f"] = c.f;
  j["phi"] = c.phi;
  j["seed"] = c.seed;
  if (with_runtime) {
    j["out"] = c.out;
    j["workers"] = c.workers;
  }
  return j;
}

}  // namespace

std::string config_to_json(const RunConfig& config) { return config_json(config, true).dump(2); }

void validate_config(const RunConfig& c) {
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), c.kind) == kinds.end()) throw ConfigInvalid("kind", "unknown kind '" + c.kind + "'");
  const auto model = make_preset(c.preset);
  if (c.N <= 0) throw ConfigInvalid("N", "must be positive");
  if (c.replicas <= 0) throw ConfigInvalid("replicas", "must be positive");
  if (!(c.eps > 0.0 && c.eps <= 1.0)) throw ConfigInvalid("eps", "must lie in (0, 1]");
  if (c.k_nn < 1) throw ConfigInvalid("k_nn", "must be at least 1");
  if (c.replications < 2) throw ConfigInvalid("replications", "must be at least 2");
  if (c.workers < 1) throw ConfigInvalid("workers", "must be at least 1");
  if (c.t_grid.empty()) throw ConfigInvalid("t_grid", "must not be empty");
  for (double t : c.t_grid)
    if (!(t > 0.0) || !std::isfinite(t)) throw ConfigInvalid("t_grid", "times must be positive and finite");
  if (!c.h || !(*c.h > 0.0) || !std::isfinite(*c.h)) throw ConfigInvalid("h", "must be positive");
  if (!c.T || !(*c.T > 0.0) || !std::isfinite(*c.T)) throw ConfigInvalid("T", "must be positive");
  if (!c.shift || !std::isfinite(*c.shift)) throw ConfigInvalid("shift", "must be finite");
  make_test_function(c.f, model->dim());
  make_perturbation(c.phi, model->dim());
  if (uses_time_steps(c)) {
    const double t_min = *std::min_element(c.t_grid.begin(), c.t_grid.end());
    if (*c.h > t_min / 10.0) throw ConfigInvalid("h", "must not exceed min(t_grid) / 10 = " + num(t_min / 10.0));
    if (c.kind != "harnack")
      for (double t : c.t_grid)
        if (!is_multiple(t, *c.h)) throw ConfigInvalid("t_grid", "time " + num(t) + " is not a multiple of h");
  }
}

RunConfig resolve_config(const RunConfig& config) {
  RunConfig c = config;
  const auto model = make_preset(c.preset);
  const bool degenerate = model->degenerate();
  if (c.t_grid.empty()) {
    if (c.kind == "gramian") {
      for (int k = 1; k <= 8; ++k) c.t_grid.push_back(std::ldexp(1.0, -k));
    } else if (c.kind == "coupling") {
      c.t_grid = {0.25, 0.5, 1.0};
    } else if (c.kind == "harnack") {
      c.t_grid = degenerate ? log_grid(0.1, 1.0, 12) : log_grid(0.05, 1.0, 12);
    } else if (c.kind == "ergodicity") {
      c.t_grid = {8.0};
    } else {
      c.t_grid = {0.25, 0.5, 1.0};
    }
  }
  if (!c.h) {
    if (c.kind == "ergodicity") {
      c.h = 0.02;
    } else if (c.kind == "harnack" && !c.t_grid.empty()) {
      c.h = *std::min_element(c.t_grid.begin(), c.t_grid.end()) / 10.0;
    } else {
      c.h = 0.01;
    }
  }
  if (!c.T) c.T = c.t_grid.empty() ? 1.0 : *std::max_element(c.t_grid.begin(), c.t_grid.end());
  if (!c.shift) {
    if (c.kind == "coupling") {
      c.shift = degenerate ? 0.001 : 0.5;
    } else if (c.kind == "ergodicity") {
      c.shift = 3.0;
    } else {
      c.shift = 0.5;
    }
  }
  validate_config(c);
  return c;
}

std::uint64_t config_hash(const RunConfig& config) {
  const std::string text = config_json(config, false).dump();
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

bool RunResult::all_pass() const { return failed_checks().empty(); }

std::vector<std::string> RunResult::failed_checks() const {
  std::vector<std::string> failed;
  for (const auto& c : manifest.checks)
    if (!c.pass) failed.push_back(c.name);
  return failed;
}

int exit_status(const RunResult& result) { return result.all_pass() ? 0 : 1; }

RunResult run(const RunConfig& input) {
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  Context c;
  c.config = resolve_config(input);
  c.model = make_preset(c.config.preset);
  c.info = &preset_info(c.config.preset);
  c.exec.workers = c.config.workers;
  c.manifest = &result.manifest;
  const std::string hash = hash_hex(config_hash(c.config));
  result.manifest.config_hash = hash;
  result.manifest.seed = c.config.seed;
  result.manifest.code_version = code_version();
  result.manifest.config_json = config_json(c.config, false).dump();

  const std::string& kind = c.config.kind;
  if (kind == "simulate") run_simulate(c);
  else if (kind == "gramian") run_gramian(c);
  else if (kind == "coupling") run_coupling(c);
  else if (kind == "bismut") run_bismut(c);
  else if (kind == "harnack") run_harnack(c);
  else run_ergodicity(c);

  namespace fs = std::filesystem;
  const fs::path out(c.config.out);
  fs::create_directories(out);
  const std::string csv_name = kind + "_" + hash + ".csv";
  const std::string manifest_name = "manifest_" + hash + ".json";
  result.csv_path = (out / csv_name).string();
  result.manifest_path = (out / manifest_name).string();
  {
    std::ofstream f(result.csv_path, std::ios::binary);
    f << c.table.str();
    if (!f) throw Error("cannot write " + result.csv_path);
  }
  result.manifest.outputs = {csv_name};
  result.manifest.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json m;
  m["config_hash"] = hash;
  m["seed"] = result.manifest.seed;
  m["code_version"] = result.manifest.code_version;
  m["wall_time_seconds"] = result.manifest.wall_time;
  m["config"] = json::parse(result.manifest.config_json);
  m["workers"] = c.config.workers;
  m["checks"] = json::array();
  for (const auto& ch : result.manifest.checks)
    m["checks"].push_back({{"name", ch.name}, {"status", ch.pass ? "PASS" : "FAIL"}, {"detail", ch.detail}});
  m["fitted"] = result.manifest.fitted;
  m["warnings"] = result.manifest.warnings;
  m["outputs"] = result.manifest.outputs;
  m["status"] = result.all_pass() ? "PASS" : "FAIL";
  std::ofstream f(result.manifest_path, std::ios::binary);
  f << m.dump(2) << '\n';
  if (!f) throw Error("cannot write " + result.manifest_path);
  return result;
}

std::string list_presets() {
  std::ostringstream out;
  for (const auto& p : preset_catalogue()) {
    out << p.name << "\n  " << p.description << "\n  dim = " << p.dim << ", noise_dim = " << p.noise_dim
        << ", lambda = " << num(p.lambda) << ", l = " << p.l << "\n  assumption = "
        << (p.assumption == Dissipativity::E ? "E" : p.assumption == Dissipativity::F ? "F" : "none");
    if (p.assumption != Dissipativity::None)
      out << ", theta1 = " << num(p.theta1) << ", theta2 = " << num(p.theta2) << ", rate = " << num(p.theoretical_rate());
    if (p.assumption == Dissipativity::F) out << ", r = " << num(p.r) << ", r0 = " << num(p.r0) << ", c0 = " << num(p.c0);
    out << "\n  parameters:";
    for (const auto& [k, v] : p.parameters) out << ' ' << k << '=' << num(v);
    out << '\n';
  }
  out << "\nconfig defaults (JSON keys):\n"
         "  preset = linear-ou, N = 500, replicas = 10000, eps = 0.01, k_nn = 5, replications = 5,\n"
         "  f = coord0, phi = constant,\n"
         "  seed = 0, out = ., workers = 1\n"
         "  h: 0.02 for ergodicity, min(t_grid)/10 for harnack, 0.01 otherwise\n"
         "  t_grid: gramian 2^-1..2^-8; coupling, bismut, simulate {0.25, 0.5, 1};\n"
         "          harnack 12 log-spaced points on [0.05, 1] ([0.1, 1] for degenerate presets); ergodicity {8}\n"
         "  T: max(t_grid)\n"
         "  shift: coupling 0.5 (0.001 degenerate), ergodicity 3, otherwise 0.5\n";
  return out.str();
}

}  // namespace mvlab
