#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mvlab {

std::string code_version();

// Experiment kinds, one per CLI subcommand that produces data.
inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"simulate", "gramian", "coupling", "bismut", "harnack", "ergodicity"};
  return kinds;
}

// Everything a run depends on. Unset optionals take kind- and preset-dependent
// defaults in resolve_config; `out` and `workers` never change the results and
// are left out of the hash.
struct RunConfig {
  std::string kind;
  std::string preset = "linear-ou";
  long N = 500;
  std::optional<double> h;
  std::optional<double> T;
  std::vector<double> t_grid;  // times, t0 values for coupling
  long replicas = 10000;
  double eps = 1e-2;
  int k_nn = 5;
  int replications = 5;  // independent particle systems in decay fits
  std::optional<double> shift;  // per-coordinate mean shift of nu against mu
  std::string f = "coord0";
  std::string phi = "constant";
  std::uint64_t seed = 0;
  std::string out = ".";
  int workers = 1;
};

// Parses a JSON object. Unknown keys and wrongly typed values are ConfigInvalid.
RunConfig parse_config(const std::string& json_text);
std::string config_to_json(const RunConfig& config);

// Fills the defaults and validates; throws ConfigInvalid naming the field.
RunConfig resolve_config(const RunConfig& config);
void validate_config(const RunConfig& config);

// FNV-1a over the canonical JSON of the resolved config without out/workers.
std::uint64_t config_hash(const RunConfig& config);
std::string hash_hex(std::uint64_t hash);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string code_version;
  double wall_time = 0.0;
  std::string config_json;
  std::vector<CheckResult> checks;
  std::map<std::string, double> fitted;
  std::vector<std::string> warnings;
  std::vector<std::string> outputs;  // file names relative to the output directory
};

struct RunResult {
  RunManifest manifest;
  std::string csv_path;
  std::string manifest_path;
  bool all_pass() const;
  std::vector<std::string> failed_checks() const;
};

// Runs one experiment and writes <out>/<kind>_<hash>.csv and
// <out>/manifest_<hash>.json.
RunResult run(const RunConfig& config);

// Exit status: 0 when every check passes, 1 otherwise.
int exit_status(const RunResult& result);

// Text catalogue of the presets with their stored constants and the config
// defaults, in a fixed order.
std::string list_presets();

}  // namespace mvlab
