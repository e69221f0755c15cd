// nvqpe: photodynamics, Monte Carlo sensitivity sweeps and self-checks.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "nvqpe/errors.hpp"

using namespace nvqpe;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string preset_name;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  std::optional<std::string> format;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config_path, "JSON run configuration");
  app->add_option("--preset", f.preset_name, "named parameter set: default, fig2-threshold, fig2-batching, fig2-smu, fig4");
  app->add_option("--seed", f.seed, "master seed");
  app->add_option("--trials", f.trials, "Monte Carlo trials per row");
  app->add_option("--out", f.out_dir, "output directory");
  app->add_option("--threads", f.threads, "OpenMP threads (0: runtime default)");
  app->add_option("--format", f.format, "sweep output format")->check(CLI::IsMember({"csv", "json"}));
}

RunConfig resolve(const CommonFlags& f) {
  if (!f.config_path.empty() && !f.preset_name.empty())
    throw ConfigError("--config", "give either --config or --preset, not both");
  RunConfig cfg = !f.config_path.empty()   ? load_config(f.config_path)
                  : !f.preset_name.empty() ? preset(f.preset_name)
                                           : preset("default");
  if (f.seed) cfg.trials.seed = *f.seed;
  if (f.trials) cfg.trials.n_trials = *f.trials;
  if (f.out_dir) cfg.output.dir = *f.out_dir;
  if (f.threads) cfg.output.threads = *f.threads;
  if (f.format) cfg.output.format = *f.format;
  validate_config(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian phase-estimation magnetometry with averaged NV readout"};
  app.require_subcommand(1);

  CommonFlags photo_flags, sim_flags, val_flags;
  cli::SimulateFlags sim_extra;
  auto* photo = app.add_subcommand("photodynamics", "five-level PL curves, polarization, t_opt, bin probabilities");
  add_common(photo, photo_flags);
  auto* sim = app.add_subcommand("simulate", "Monte Carlo sensitivity for one point or a sweep");
  add_common(sim, sim_flags);
  sim->add_flag("--dump-schedule", sim_extra.dump_schedule, "write schedule_<row>.csv");
  sim->add_flag("--dump-posterior", sim_extra.dump_posterior, "write posterior_<row>.csv of trial 0");
  auto* val = app.add_subcommand("validate", "closed-form and invariant self-checks");
  add_common(val, val_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitConfig;
  }

  try {
    if (photo->parsed()) return cli::cmd_photodynamics(resolve(photo_flags), std::cout, std::cerr);
    if (sim->parsed()) return cli::cmd_simulate(resolve(sim_flags), sim_extra, std::cout, std::cerr);
    if (val->parsed()) return cli::cmd_validate(resolve(val_flags), std::cout, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitRuntime;
  }
  return cli::kExitRuntime;
}
