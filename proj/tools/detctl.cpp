// detctl: closed-loop Chafee-Infante runs, rank sweeps and inequality suites.

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "detctl/cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace detctl::cli;

  CLI::App app{"Finite-rank feedback stabilization of the 1D Chafee-Infante equation"};
  app.require_subcommand(1);

  Context ctx;
  ctx.preset_dir = DETCTL_PRESET_DIR;
  if (const char* env = std::getenv("DETCTL_OUT_DIR"); env && *env) ctx.out_dir = env;
  std::string out_dir = ctx.out_dir.string();
  app.add_option("--out-dir", out_dir, "Directory for CSV/JSON outputs (default $DETCTL_OUT_DIR or ./out)");
  app.add_option("--jobs", ctx.jobs, "Concurrent sweep cells")->check(CLI::PositiveNumber);
  app.add_option("--preset-dir", ctx.preset_dir, "Where preset names are looked up");

  std::string config;
  auto* sim = app.add_subcommand("simulate", "Run one config, preset name or manifest");
  sim->add_option("config", config, "config.json, manifest.json or preset name")->required();

  auto* sweep = app.add_subcommand("sweep", "Minimal stabilizing rank sweep");
  sweep->add_option("config", config, "sweep config or preset name")->required();

  std::string suite;
  std::uint64_t seed = 1;
  auto* verify = app.add_subcommand("verify", "Property suites: interpolation, energy, oracle, all");
  verify->add_option("suite", suite, "Suite name")->required();
  verify->add_option("--seed", seed, "Base seed for random trials");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }
  ctx.out_dir = out_dir;

  try {
    if (*sim) return cmd_simulate(config, ctx);
    if (*sweep) return cmd_sweep(config, ctx);
    if (*verify) return cmd_verify(suite, seed, ctx);
  } catch (const detctl::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kScientificFailure;
  }
  return kUsageError;
}
