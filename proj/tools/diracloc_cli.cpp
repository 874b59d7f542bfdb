// diracloc: command-line front end for the verification and transport runs.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "diracloc/error.hpp"
#include "diracloc/runner.hpp"

namespace rn = diracloc::runner;

namespace {

struct Options {
  std::string config;
  std::string out;
  int jobs = 0;
  std::vector<std::string> overrides;
};

int run(const std::string& command, const Options& opt) {
  std::string text = "{}";
  if (!opt.config.empty()) {
    std::ifstream in(opt.config);
    if (!in) throw diracloc::ConfigError("--config", "cannot read '" + opt.config + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  if (!opt.overrides.empty()) text = rn::apply_overrides(text, opt.overrides);

  rn::RunContext ctx;
  ctx.config = rn::parse_config(text);
  if (!opt.out.empty()) ctx.config.output_dir = opt.out;
  ctx.out_dir = ctx.config.output_dir;
  ctx.jobs = rn::resolve_jobs(opt.jobs > 0 ? std::optional<int>(opt.jobs) : std::nullopt, ctx.config);
  ctx.hash = rn::config_hash(ctx.config);
  // A bare selftest audits an existing run: adopt the configuration it recorded.
  if (command == "selftest" && opt.config.empty()) {
    if (std::ifstream in(ctx.out_dir / "manifest.json"); in) {
      const auto man = nlohmann::json::parse(in, nullptr, false);
      if (man.is_object() && man.contains("config")) {
        ctx.config = rn::parse_config(man["config"].dump());
        ctx.config.output_dir = ctx.out_dir.string();
        ctx.hash = rn::config_hash(ctx.config);
      }
    }
  }
  std::filesystem::create_directories(ctx.out_dir);

  const auto t0 = std::chrono::steady_clock::now();
  rn::CommandResult res;
  if (command == "verify") res = rn::cmd_verify(ctx);
  else if (command == "spectrum") res = rn::cmd_spectrum(ctx);
  else if (command == "localize") res = rn::cmd_localize(ctx);
  else if (command == "agmon") res = rn::cmd_agmon(ctx);
  else res = rn::cmd_selftest(ctx);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rn::update_manifest(ctx, command, res, secs);

  for (const auto& w : res.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::printf("%s: %s\n", command.c_str(), res.summary.c_str());
  for (const auto& f : res.outputs) std::printf("  %s\n", (ctx.out_dir / f).string().c_str());
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamical localization checks for 2D Dirac operators with radial fields"};
  app.set_version_flag("--version", std::string(DIRACLOC_VERSION));
  app.require_subcommand(1);

  Options opt;
  std::string chosen;
  for (const char* name : {"verify", "spectrum", "localize", "agmon", "selftest"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config,-c", opt.config, "JSON run configuration");
    sub->add_option("--out,-o", opt.out, "output directory (overrides output_dir)");
    sub->add_option("--jobs,-j", opt.jobs, "worker threads (default: DIRACLOC_JOBS, then config)");
    sub->add_option("--override", opt.overrides, "key.path=value, repeatable")->allow_extra_args(false);
    sub->callback([&chosen, name] { chosen = name; });
  }
  app.get_subcommand("verify")->description("probe the field conditions; exit 0 localized, 2 otherwise");
  app.get_subcommand("spectrum")->description("windowed eigenvalues and the Bargmann count bound");
  app.get_subcommand("localize")->description("windowed wave-packet dynamics and transport moments");
  app.get_subcommand("agmon")->description("weighted decay ratios of windowed eigenfunctions");
  app.get_subcommand("selftest")->description("manifest cross-check, kernel equivalence, Landau levels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return run(chosen, opt);
  } catch (const diracloc::ConfigError& e) {
    std::fprintf(stderr, "config error [%s]: %s\n", e.field().c_str(), e.what());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
  }
  return 1;
}
