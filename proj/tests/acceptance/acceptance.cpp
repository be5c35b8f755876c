// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 if any fails.
// Usage: mvlab_acceptance [output_dir] [workers]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mvlab/coupling.hpp"
#include "mvlab/experiment.hpp"
#include "mvlab/harnack.hpp"
#include "mvlab/linalg.hpp"
#include "mvlab/measure.hpp"
#include "mvlab/presets.hpp"
#include "mvlab/simulate.hpp"
#include "mvlab/test_functions.hpp"

using namespace mvlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct Settings {
  fs::path out;
  int workers = 1;
};

Settings settings;

RunConfig base_config(const std::string& kind, const std::string& preset, const std::string& dir) {
  RunConfig c;
  c.kind = kind;
  c.preset = preset;
  c.seed = 2024;
  c.workers = settings.workers;
  c.out = (settings.out / dir).string();
  return c;
}

// Collects the named checks of a run; missing names count as failures.
Outcome require_checks(const RunResult& r, const std::vector<std::string>& prefixes, const std::string& label) {
  Outcome o{true, ""};
  std::size_t matched = 0;
  for (const auto& c : r.manifest.checks) {
    const bool wanted = std::any_of(prefixes.begin(), prefixes.end(),
                                    [&](const std::string& p) { return c.name.rfind(p, 0) == 0; });
    if (!wanted) continue;
    ++matched;
    o.pass = o.pass && c.pass;
    if (!c.pass || c.name.find("t0_") == std::string::npos) o.detail += label + "/" + c.name + " [" + c.detail + "]; ";
  }
  if (matched == 0) {
    o.pass = false;
    o.detail += label + ": no matching checks; ";
  }
  return o;
}

Outcome merge(const std::vector<Outcome>& parts) {
  Outcome o{true, ""};
  for (const auto& p : parts) {
    o.pass = o.pass && p.pass;
    o.detail += p.detail;
  }
  return o;
}

RowMat cloud(std::uint64_t seed, Eigen::Index n, Eigen::Index d, double mean, double var) {
  return gaussian_sample({Vec::Constant(d, mean), SymMatrix(var * Mat::Identity(d, d))}, n, seed);
}

// 1. sigma~^2 + lambda^2 I = a on random matrices above 2 lambda^2 I.
Outcome noise_round_trip() {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> dim(1, 16);
  std::uniform_real_distribution<double> lam(0.1, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = dim(gen);
    const double lambda = lam(gen);
    Mat b(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) b(i, j) = g(gen);
    const Mat a = b * b.transpose() + 2.0 * lambda * lambda * Mat::Identity(d, d);
    const Mat s = decompose_noise(SymMatrix(a), lambda).matrix();
    const Mat back = s * s + lambda * lambda * Mat::Identity(d, d);
    worst = std::max(worst, (back - a).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-9, "max entry error " + num(worst)};
}

// 2. Gramian inverse-norm scaling.
Outcome gramian_scaling() {
  const auto kinetic = make_preset("kinetic-langevin");
  const auto& s = *kinetic->structure();
  std::vector<double> t;
  for (int k = 1; k <= 8; ++k) t.push_back(std::ldexp(1.0, -k));
  const auto scaling = gramian_inverse_norm_slope(s.A, s.M, s.l, t);
  const bool slope_ok = std::abs(scaling.fit.slope + 3.0) <= 0.1;
  double worst = 0.0;
  for (int d : {1, 3}) {
    const Mat A = Mat::Zero(d, d), M = Mat::Identity(d, d);
    for (double tk : t) {
      const Mat q = gramian(A, M, tk).matrix();
      const double inv_norm = 1.0 / q.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff();
      worst = std::max(worst, std::abs(inv_norm - 6.0 / tk) / (6.0 / tk));
    }
  }
  return {slope_ok && worst <= 1e-8,
          "kinetic slope " + num(scaling.fit.slope) + ", A=0/M=I relative error " + num(worst)};
}

// 3. Terminal gap of the coupling under h-halving, t0 = 0.5, one starting pair.
// The flows need two particles, so the Dirac laws are two coincident points.
Outcome exact_hit() {
  Outcome o{true, ""};
  for (const std::string name : {"linear-ou", "kinetic-langevin"}) {
    const auto model = make_preset(name);
    const Eigen::Index n = model->dim();
    const RowMat mu0 = RowMat::Zero(2, n);
    const RowMat nu0 = RowMat::Constant(2, n, 0.5);
    const auto study = exact_hit_study(*model, mu0, nu0, mu0.row(0).transpose(), nu0.row(0).transpose(), 0.5,
                                       2.5e-3, 3, 20, 7, Execution{settings.workers});
    o.pass = o.pass && study.pass;
    o.detail += name + ": gaps";
    for (const auto& level : study.levels) o.detail += " " + num(level.gap.mean);
    if (study.roundoff_floor) {
      o.detail += " (roundoff); ";
    } else {
      o.detail += ", ratios";
      for (double r : study.ratios) o.detail += " " + num(r);
      o.detail += "; ";
    }
  }
  return o;
}

RunResult coupling_ou, coupling_kinetic;

// 4. E[exp(log R)] = 1 within 3 SE, both couplings, three t0.
Outcome girsanov_martingale() {
  RunConfig ou = base_config("coupling", "linear-ou", "c4_ou");
  ou.replicas = 10000;
  coupling_ou = run(ou);
  RunConfig kin = base_config("coupling", "kinetic-langevin", "c4_kinetic");
  kin.replicas = 10000;
  coupling_kinetic = run(kin);
  Outcome o = merge({require_checks(coupling_ou, {"martingale"}, "ou"),
                     require_checks(coupling_kinetic, {"martingale"}, "kinetic")});
  for (const auto* r : {&coupling_ou, &coupling_kinetic})
    for (const auto& [k, v] : r->manifest.fitted)
      if (k.rfind("z_score", 0) == 0) o.detail += k + "=" + num(v) + " ";
  return o;
}

// 5. R f(X_t0) against f(X^nu_t0), plus the Gaussian closed form of the nu side.
Outcome weighted_transfer() {
  const auto ou = std::static_pointer_cast<const LinearFeatureModel>(make_preset("linear-ou"));
  const double t0 = 0.5, h = 0.01;
  const long steps = std::lround(t0 / h);
  const NoisePlan plan(55, h, t0);
  const RowMat mu0 = cloud(11, 500, 2, 0.0, 1.0), nu0 = cloud(12, 500, 2, 0.5, 1.0);
  FlowOptions fo;
  fo.exec = Execution{settings.workers};
  const LawFlow fm = simulate_law_flow(*ou, mu0, plan, fo);
  const LawFlow fn = simulate_law_flow(*ou, nu0, plan, fo);
  const Vec x0 = (Vec(2) << 0.0, 0.0).finished(), y0 = (Vec(2) << 0.5, 0.5).finished();
  const std::uint64_t path = 3;
  const long n = 10000;
  std::vector<CouplingRun> runs(static_cast<std::size_t>(n));
  RowMat direct(n, 2);
  parallel_for(static_cast<std::size_t>(n), Execution{settings.workers}, [&](std::size_t r) {
    runs[r] = couple_nondegenerate(*ou, fm, fn, x0, y0, t0, CouplingNoise{r, path}, false);
    direct.row(static_cast<Eigen::Index>(r)) =
        simulate_decoupled(*ou, fn, y0, r + static_cast<std::size_t>(n), path, steps).transpose();
  });
  const GaussianLaw nu_law = conditional_gaussian(*ou, fn, y0, path, steps);
  const auto report = weighted_law_transfer_check(runs, transfer_battery(2), direct, nu_law);
  Outcome o{report.pass, ""};
  for (const auto& row : report.rows) {
    o.detail += row.f + " z=" + num((row.weighted.mean - row.direct.mean) / std::max(row.combined_se, 1e-300));
    if (!row.closed_form_pass) o.detail += " (closed form off)";
    o.detail += "; ";
  }
  return o;
}

std::vector<RunResult> bismut_runs;

// 6. Bismut estimator against the finite-difference oracle.
Outcome bismut_vs_fd() {
  std::vector<Outcome> parts;
  for (const std::string preset : {"linear-ou", "kinetic-langevin"})
    for (const std::string f : {"coord0", "bump"}) {
      RunConfig c = base_config("bismut", preset, "c6_" + preset + "_" + f);
      c.N = 2000;
      c.replicas = 10000;
      c.f = f;
      bismut_runs.push_back(run(c));
      Outcome part = require_checks(bismut_runs.back(), {"bismut_vs_fd"}, preset + "/" + f);
      if (part.pass) part.detail = preset + "/" + f + " ok; ";
      parts.push_back(part);
    }
  return merge(parts);
}

// 7. Tangent flow against shared-noise difference quotients.
Outcome tangent_fd() {
  Outcome o{true, ""};
  for (const std::string name : {"linear-ou", "mean-repelled", "kinetic-langevin"}) {
    const auto model = make_preset(name);
    const RowMat initial = cloud(21, 40, model->dim(), 0.3, 0.5);
    const NoisePlan plan(21, 0.01, 0.5);
    const auto phi = make_perturbation("coordinate", model->dim());
    const auto study = tangent_fd_study(*model, initial, plan, phi, {1e-2, 5e-3, 2.5e-3});
    o.pass = o.pass && study.pass;
    o.detail += name + " ratios";
    for (double r : study.ratios) o.detail += " " + num(r);
    o.detail += "; ";
  }
  return o;
}

// 8. Stable t Ent / W2^2 on the Gaussian path and the held-out pair.
Outcome entropy_cost() {
  const auto r = run(base_config("harnack", "linear-ou", "c8"));
  return require_checks(r, {"ratio_stable", "holdout", "noise_floor"}, "ou");
}

// 9. Degenerate entropy envelope slope.
Outcome degenerate_envelope() {
  const auto r = run(base_config("harnack", "kinetic-langevin", "c9"));
  Outcome o = require_checks(r, {"modified_slope"}, "kinetic");
  o.detail += "entropy slope " + num(r.manifest.fitted.at("entropy_slope"));
  return o;
}

// 10. Jensen: P_t log f <= log P_t f with mu = nu.
Outcome jensen() {
  Outcome o{true, ""};
  for (const std::string name : {"linear-ou", "mean-repelled", "kinetic-langevin"}) {
    const auto model = make_preset(name);
    const RowMat mu = cloud(31, 2000, model->dim(), 0.2, 0.5);
    double worst = -1e300;
    for (double t : {0.25, 0.5, 1.0}) {
      LogHarnackOptions lo;
      lo.h = 0.01;
      lo.seed = 31;
      lo.exec = Execution{settings.workers};
      const auto rep = log_harnack_check(*model, mu, mu, t, harnack_battery(model->dim()), lo);
      o.pass = o.pass && rep.pass;
      for (const auto& row : rep.rows) worst = std::max(worst, row.excess - 3.0 * row.combined_se);
    }
    o.detail += name + " max(excess - 3SE) " + num(worst) + "; ";
  }
  return o;
}

// 11. Ergodic decay rates.
Outcome ergodicity() {
  RunConfig ou = base_config("ergodicity", "linear-ou", "c11_ou");
  ou.N = 300;
  RunConfig kin = base_config("ergodicity", "kinetic-langevin", "c11_kinetic");
  kin.N = 300;
  const auto a = run(ou);
  const auto b = run(kin);
  Outcome o = merge({require_checks(a, {"particles_rate", "entropy_matches_w2"}, "ou"),
                     require_checks(b, {"particles_rate"}, "kinetic")});
  return o;
}

// 12. Assignment W2 against every permutation.
Outcome wasserstein_exact() {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> size(1, 6), dim(1, 3);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = size(gen), d = dim(gen);
    RowMat x(n, d), y(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) {
        x(i, j) = g(gen);
        y(i, j) = g(gen);
      }
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
      double cost = 0.0;
      for (int i = 0; i < n; ++i) cost += (x.row(i) - y.row(perm[static_cast<std::size_t>(i)])).squaredNorm();
      best = std::min(best, cost / n);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const double w = wasserstein_k(EmpiricalMeasure(x), EmpiricalMeasure(y), 2.0);
    worst = std::max(worst, std::abs(w * w - best) / std::max(1.0, best));
  }
  return {worst <= 1e-12, "max relative gap " + num(worst)};
}

// 13. Reruns with a different worker count give byte-identical CSVs.
Outcome reproducibility() {
  const int other = settings.workers == 1 ? 3 : 1;
  Outcome o{true, ""};
  auto compare = [&](const RunResult& first, RunConfig c, const std::string& label) {
    c.workers = other;
    c.out = (settings.out / ("c13_" + label)).string();
    const auto again = run(c);
    const bool same = !slurp(first.csv_path).empty() && slurp(first.csv_path) == slurp(again.csv_path) &&
                      fs::path(first.csv_path).filename() == fs::path(again.csv_path).filename();
    o.pass = o.pass && same;
    o.detail += label + (same ? " identical; " : " DIFFERS; ");
  };
  RunConfig cou = base_config("coupling", "kinetic-langevin", "");
  cou.replicas = 10000;
  compare(coupling_kinetic, cou, "coupling-kinetic");
  RunConfig bis = base_config("bismut", "linear-ou", "");
  bis.N = 2000;
  bis.replicas = 10000;
  bis.f = "coord0";
  compare(bismut_runs.front(), bis, "bismut-ou-coord0");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  settings.out = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "mvlab_acceptance";
  settings.workers = argc > 2 ? std::max(1, std::atoi(argv[2])) : 1;
  fs::create_directories(settings.out);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"noise decomposition round trip", noise_round_trip},
      {"gramian scaling", gramian_scaling},
      {"exact-hit coupling", exact_hit},
      {"girsanov martingale", girsanov_martingale},
      {"weighted-law transfer", weighted_transfer},
      {"bismut vs finite differences", bismut_vs_fd},
      {"tangent-flow FD convergence", tangent_fd},
      {"entropy-cost boundedness", entropy_cost},
      {"degenerate entropy envelope", degenerate_envelope},
      {"jensen / log-harnack sanity", jensen},
      {"ergodicity rates", ergodicity},
      {"wasserstein exactness", wasserstein_exact},
      {"reproducibility", reproducibility},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("%s %2zu %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
