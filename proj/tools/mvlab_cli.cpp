#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mvlab/errors.hpp"
#include "mvlab/experiment.hpp"

namespace {

// Exit codes beyond the 0/1 pass/fail contract.
constexpr int kExitConfig = 2;
constexpr int kExitError = 3;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<std::string> preset, f, phi;
  std::optional<long> N, replicas;
  std::optional<double> h, T, eps, shift;
  std::optional<int> k_nn, replications;
  std::vector<double> t_grid;
};

void add_common(CLI::App* sub, Overrides& o, const std::string& grid_flag) {
  // --h is the time step, so help is long-form only.
  sub->set_help_flag("--help", "print this help message and exit");
  sub->add_option("--config", o.config_path, "JSON run configuration");
  sub->add_option("--seed", o.seed, "master seed (u64)");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--workers", o.workers, "worker threads; never changes results")->check(CLI::PositiveNumber);
  sub->add_option("--preset", o.preset, "model preset (see list-presets)");
  sub->add_option("--N", o.N, "particles");
  sub->add_option("--h", o.h, "time step");
  sub->add_option("--T", o.T, "horizon");
  sub->add_option(grid_flag, o.t_grid, "time grid")->delimiter(',');
  sub->add_option("--replicas", o.replicas, "Monte Carlo replicas");
  sub->add_option("--eps", o.eps, "finite-difference step");
  sub->add_option("--k-nn", o.k_nn, "neighbours for the k-NN entropy");
  sub->add_option("--replications", o.replications, "independent particle systems in decay fits");
  sub->add_option("--shift", o.shift, "per-coordinate mean shift of the second law");
  sub->add_option("--f", o.f, "test function");
  sub->add_option("--phi", o.phi, "perturbation direction");
}

mvlab::RunConfig build_config(const std::string& kind, const Overrides& o) {
  mvlab::RunConfig c;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw mvlab::ConfigInvalid("config", "cannot read " + o.config_path);
    std::stringstream buf;
    buf << in.rdbuf();
    c = mvlab::parse_config(buf.str());
    if (!c.kind.empty() && c.kind != kind)
      throw mvlab::ConfigInvalid("kind", "config is for '" + c.kind + "', subcommand is '" + kind + "'");
  }
  c.kind = kind;
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out = *o.out;
  if (o.workers) c.workers = *o.workers;
  if (o.preset) c.preset = *o.preset;
  if (o.N) c.N = *o.N;
  if (o.h) c.h = *o.h;
  if (o.T) c.T = *o.T;
  if (!o.t_grid.empty()) c.t_grid = o.t_grid;
  if (o.replicas) c.replicas = *o.replicas;
  if (o.eps) c.eps = *o.eps;
  if (o.k_nn) c.k_nn = *o.k_nn;
  if (o.replications) c.replications = *o.replications;
  if (o.shift) c.shift = *o.shift;
  if (o.f) c.f = *o.f;
  if (o.phi) c.phi = *o.phi;
  return c;
}

int run_kind(const std::string& kind, const Overrides& o) {
  const auto result = mvlab::run(build_config(kind, o));
  for (const auto& check : result.manifest.checks)
    std::cout << (check.pass ? "PASS " : "FAIL ") << check.name << ": " << check.detail << '\n';
  for (const auto& w : result.manifest.warnings) std::cout << "WARN " << w << '\n';
  std::cout << "csv: " << result.csv_path << "\nmanifest: " << result.manifest_path << '\n';
  for (const auto& failed : result.failed_checks())
    std::cerr << mvlab::ExperimentFailed(failed).what() << '\n';
  return mvlab::exit_status(result);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field SDE coupling, Bismut and ergodicity experiments"};
  app.require_subcommand(1);
  std::vector<Overrides> overrides(mvlab::experiment_kinds().size());
  for (std::size_t k = 0; k < mvlab::experiment_kinds().size(); ++k) {
    const auto& kind = mvlab::experiment_kinds()[k];
    auto* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
    add_common(sub, overrides[k], kind == "coupling" ? "--t0" : "--t");
  }
  app.add_subcommand("list-presets", "print the preset catalogue and config defaults");
  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("list-presets")) {
      std::cout << mvlab::list_presets();
      return 0;
    }
    for (std::size_t k = 0; k < mvlab::experiment_kinds().size(); ++k) {
      const auto& kind = mvlab::experiment_kinds()[k];
      if (app.got_subcommand(kind)) return run_kind(kind, overrides[k]);
    }
  } catch (const mvlab::ConfigInvalid& e) {
    std::cerr << "ConfigInvalid: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
