#pragma once
// Config-driven runner behind the command-line tool: run configuration,
// reproducible CSV/JSON outputs, a run manifest and the five commands.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "diracloc/fields.hpp"
#include "diracloc/operators.hpp"
#include "diracloc/spectral.hpp"

namespace diracloc::runner {

struct ProfileSpec {
  std::string family = "linear";
  std::vector<double> params{1.0, 0.3};
  // Tabulated family: radii plus exactly one of A or B, V optional.
  std::vector<double> r, A, B, V;
  // Composite family: the parts are summed.
  std::vector<ProfileSpec> parts;
};

struct GridSpec {
  bool automatic = true;
  double R_max = 0.0;
  int n = 0;  // n or h, whichever is given; n wins when both are
  double h = 0.0;
};

struct RunConfig {
  ProfileSpec profile;
  int j_min = 0;
  int j_max = 0;
  int j_step = 1;
  GridSpec grid;
  spectral::Window window{-2.0, 2.0};
  double kappa = 2.0;
  double delta0 = 0.1;
  double gamma = 0.1;
  std::optional<double> bargmann_eps;  // default from the hypothesis probe
  std::optional<double> bargmann_E;    // default max(|lo|, |hi|)
  double t0 = 0.1, t1 = 200.0;
  int per_decade = 64;
  std::string decay = "geometric";
  double decay_q = 0.5;
  double decay_s = 4.0;
  int J_max = 20;
  double shape_center = 0.0;
  double shape_width = 1.0;
  bool normalize_projected = true;
  double verify_R_start = 10.0;
  double verify_R_end = 1e4;
  int verify_probes = 64;
  double margin = 0.05;
  // Regime verify must find for exit 0; nullopt ("any") accepts either
  // determinate regime.
  std::optional<fields::Regime> expected_regime = fields::Regime::localized;
  bool allow_small_grid = true;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  int jobs = 0;
};

// JSON text <-> config. Unknown keys and type mismatches raise ConfigError
// naming the field; syntax errors name line and column.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string to_json(const RunConfig& cfg, bool include_run_fields = true);

// key=value with a dotted key path; the value is parsed as JSON when it is
// valid JSON, otherwise taken as a string.
std::string apply_overrides(const std::string& json_text, const std::vector<std::string>& kv);

// SHA-256 (hex) of the canonical JSON without output_dir and jobs.
std::string config_hash(const RunConfig& cfg);

fields::FieldProfile build_profile(const ProfileSpec& spec);
operators::RadialGrid resolve_grid(const RunConfig& cfg, const fields::FieldProfile& profile,
                                   int j_abs_max);
std::vector<int> channel_list(const RunConfig& cfg);

// Runs fn(i) for i in [0, n) on `jobs` workers (<= 0: hardware threads).
// Every index runs; the lowest-index exception is rethrown afterwards.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// Worker count: explicit > DIRACLOC_JOBS > config > hardware threads.
int resolve_jobs(std::optional<int> cli_jobs, const RunConfig& cfg);

struct CommandResult {
  int exit_code = 0;
  std::vector<std::string> outputs;   // file names inside the output dir
  std::vector<std::string> warnings;
  std::string summary;                // one-line human summary
};

struct RunContext {
  RunConfig config;
  std::filesystem::path out_dir;
  int jobs = 1;
  std::string hash;
};

CommandResult cmd_verify(const RunContext& ctx);
CommandResult cmd_spectrum(const RunContext& ctx);
CommandResult cmd_localize(const RunContext& ctx);
CommandResult cmd_agmon(const RunContext& ctx);
CommandResult cmd_selftest(const RunContext& ctx);

// Records a finished command in <out>/manifest.json (replaced when the
// config hash changes).
void update_manifest(const RunContext& ctx, const std::string& command,
                     const CommandResult& result, double wall_seconds);

}  // namespace diracloc::runner
