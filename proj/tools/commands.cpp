#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "nvqpe/csv_io.hpp"
#include "nvqpe/errors.hpp"
#include "nvqpe/pipeline.hpp"
#include "nvqpe/simulator.hpp"

namespace nvqpe::cli {

namespace fs = std::filesystem;

namespace {

Provenance provenance(const RunConfig& cfg) { return {config_hash(cfg), cfg.trials.seed}; }

std::ofstream open_output(const RunConfig& cfg, const std::string& name, std::ostream& out) {
  fs::create_directories(cfg.output.dir);
  const fs::path path = fs::path(cfg.output.dir) / name;
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  out << "wrote " << path.string() << '\n';
  return f;
}

std::string line(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

}  // namespace

int cmd_photodynamics(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const PhotodynamicsReport rep = photodynamics_report(cfg);
  for (const auto& w : rep.warnings) err << "warning: " << w << '\n';

  out << line("initial polarization: m0 = %.4f, m1 = %.4f\n", rep.polarization.first, rep.polarization.second);
  if (rep.t_cut)
    out << line("t_opt = %.0f ns", *rep.t_cut * 1e9) << (cfg.photodynamics.t_cut_ns ? "  (configured)" : "") << '\n';
  else
    out << "t_opt = undefined (no detections)\n";
  out << line("P_d(1|m0) = %.5f, P_d(1|m1) = %.5f\n", rep.p_click_m0, rep.p_click_m1);
  if (rep.binned) {
    out << "arrival-time bins:\n";
    for (const auto& b : *rep.binned->binned)
      out << line("  [%4.0f, %4.0f] ns", b.bin.start * 1e9, b.bin.end * 1e9)
          << line("  p_m0 = %.5f  p_m1 = %.5f\n", b.p_m0, b.p_m1);
  }
  std::ofstream f = open_output(cfg, "pl_curve.csv", out);
  write_pl_curve_csv(f, rep.curve, provenance(cfg));
  return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, const SimulateFlags& flags, std::ostream& out, std::ostream& err) {
  const ObservationModels models = observation_models(cfg);
  const std::vector<SweepSpec> specs = sweep_specs(cfg);
  for (const auto& s : specs)
    if (s.base.exceeds_coherence()) err << "warning: 2^K tau0 exceeds T2* for a run\n";
  const TrialConfig trials = trial_config(cfg);

  SimOptions opts;
  opts.trial.grid_size = cfg.grid_size;
  opts.threads = cfg.output.threads;

  out << line("counting model: P_d(1|m0) = %.5f, P_d(1|m1) = %.5f\n", models.counting.p_click_m0,
              models.counting.p_click_m1);
  const auto t0 = std::chrono::steady_clock::now();
  const SweepResult result = run_sweeps(specs, trials, models, opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  out << "mode          K   G   F       R    T_tot[s]   eta[uT/sqrtHz]  fails\n";
  for (const auto& r : result.rows) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%-12s %2d %3d %3d %7ld %11.4g %14.4g %6zu\n",
                  std::string(to_string(r.params.mode)).c_str(), r.params.K, r.params.G, r.params.F,
                  r.params.R, r.T_tot, r.eta_B * 1e6, r.fail_count);
    out << buf;
  }
  out << line("%.0f trials per row, %.1f s\n", static_cast<double>(trials.n_trials), secs);

  const Provenance prov = provenance(cfg);
  if (cfg.output.format == "json") {
    std::ofstream f = open_output(cfg, "sweep.json", out);
    f << sweep_to_json(result, prov).dump(2) << '\n';
  } else {
    std::ofstream f = open_output(cfg, "sweep.csv", out);
    write_sweep_csv(f, result, prov);
  }

  if (flags.dump_schedule || flags.dump_posterior) {
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
      const SweepRow& row = result.rows[i];
      const std::string suffix = std::to_string(i) + ".csv";
      if (flags.dump_schedule) {
        std::ofstream f = open_output(cfg, "schedule_" + suffix, out);
        write_schedule_csv(f, schedule(row.params), prov);
      }
      if (flags.dump_posterior) {
        Rng rng = trial_rng(row.seed, 0);
        TrialOptions topts = opts.trial;
        topts.keep_posterior = true;
        const Mode mode = row.params.mode;
        auto outcome = run_trial_modes(row.params, std::span<const Mode>(&mode, 1), truth_for_trial(trials, 0),
                                       models, rng, topts);
        std::ofstream f = open_output(cfg, "posterior_" + suffix, out);
        write_posterior_csv(f, *outcome.front().posterior, prov);
      }
    }
  }
  return kExitOk;
}

int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const auto checks = run_self_checks(cfg);
  bool all = true;
  for (const auto& c : checks) {
    out << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.detail << '\n';
    all = all && c.passed;
  }
  out << (all ? "all checks passed\n" : "validation failed\n");
  return all ? kExitOk : kExitValidation;
}

}  // namespace nvqpe::cli
