// Command-line front end for the stochastic inertial dynamics laboratory.
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "isihd/harness.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string preset;
  std::string out_dir = "out";
  uint64_t seed = 0;
  bool seed_set = false;
  int paths = 0;
  int threads = 1;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_source) {
  auto* cfg = cmd->add_option("--config", o.config_path, "experiment config file (JSON)");
  auto* pre = cmd->add_option("--preset", o.preset, "built-in preset name");
  if (needs_source) {
    cfg->excludes(pre);
    pre->excludes(cfg);
  }
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--seed", o.seed, "master seed override")
      ->each([&o](const std::string&) { o.seed_set = true; });
  cmd->add_option("--paths", o.paths, "path count override");
  cmd->add_option("--threads", o.threads, "worker threads (speed only, never results)");
  cmd->add_option("--format", o.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
}

isihd::ExperimentConfig resolve(const CommonOpts& o) {
  if (o.config_path.empty() && o.preset.empty())
    throw isihd::config_error("either --config or --preset is required");
  auto cfg = o.config_path.empty() ? isihd::preset_config(o.preset)
                                   : isihd::load_config_file(o.config_path);
  if (o.seed_set) cfg.master_seed = o.seed;
  if (o.paths > 0) cfg.n_paths = o.paths;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for stochastic inertial gradient dynamics"};
  app.require_subcommand(1);

  CommonOpts sim_o, ens_o, ver_o, rat_o;
  auto* sim = app.add_subcommand("simulate", "run paths and write per-path files");
  add_common(sim, sim_o, true);
  auto* ens = app.add_subcommand("ensemble", "run paths and write ensemble statistics");
  add_common(ens, ens_o, true);
  auto* ver = app.add_subcommand("verify-lyapunov", "check the coefficient system on a grid");
  add_common(ver, ver_o, true);
  auto* rat = app.add_subcommand("rates", "fit decay rates against the expected band");
  add_common(rat, rat_o, true);
  auto* pre = app.add_subcommand("presets", "list built-in presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (pre->parsed()) {
      for (const auto& name : isihd::list_presets()) std::printf("%s\n", name.c_str());
      return 0;
    }
    if (sim->parsed())
      return isihd::cli_simulate(resolve(sim_o), sim_o.out_dir, sim_o.threads, sim_o.format);
    if (ens->parsed())
      return isihd::cli_ensemble(resolve(ens_o), ens_o.out_dir, ens_o.threads, ens_o.format);
    if (ver->parsed()) return isihd::cli_verify_lyapunov(resolve(ver_o), ver_o.out_dir);
    if (rat->parsed()) return isihd::cli_rates(resolve(rat_o), rat_o.out_dir, rat_o.threads);
  } catch (const isihd::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
