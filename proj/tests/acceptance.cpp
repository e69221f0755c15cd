// Acceptance run: one PASS/FAIL line per criterion.
//   nvqpe_acceptance [--trials N] [--threads N] [--seed S]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "nvqpe/config.hpp"
#include "nvqpe/photodynamics.hpp"
#include "nvqpe/pipeline.hpp"
#include "nvqpe/protocol.hpp"
#include "nvqpe/simulator.hpp"

using namespace nvqpe;

namespace {

using Clock = std::chrono::steady_clock;

int n_failed = 0;

void report(const char* name, bool ok, const std::string& detail) {
  std::printf("%s  %s: %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++n_failed;
}

template <class... A>
std::string fmt(const char* f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool in(double x, double lo, double hi) { return x >= lo && x <= hi; }

double uT(double eta_b) { return eta_b * 1e6; }

void time_accounting() {
  const auto t0 = Clock::now();
  struct Anchor { int G, F; long R; double ref; };
  const Anchor anchors[] = {{15, 1, 2500, 1.008}, {9, 9, 3000, 2.35}, {9, 9, 50000, 39.2}};
  bool ok = true;
  std::string detail;
  for (const auto& a : anchors) {
    ProtocolParams p;
    p.G = a.G;
    p.F = a.F;
    p.R = a.R;
    const double t = total_time(p);
    ok = ok && std::abs(t / a.ref - 1.0) <= 0.005;
    detail += fmt("%.4g s (ref %.4g) ", t, a.ref);
  }
  detail += fmt("in %.2g ms", seconds_since(t0) * 1e3);
  report("closed-form time accounting", ok, detail);
}

void photodynamics() {
  const auto t0 = Clock::now();
  const RateConstants c;
  const auto pol = initial_polarization(c);
  const PLCurve curve = pl_curve(c);
  const double t_opt = optimize_cutoff(curve);
  const double p0 = detection_probability(curve, SpinPreparation::m0, t_opt);
  const double p1 = detection_probability(curve, SpinPreparation::m1, t_opt);
  const double secs = seconds_since(t0);
  const bool ok = std::abs(pol.first - 0.85) <= 0.02 && std::abs(pol.second - 0.15) <= 0.02 &&
                  std::abs(t_opt - 320e-9) <= 20e-9 && std::abs(p0 - 0.03) <= 0.005 &&
                  std::abs(p1 - 0.02) <= 0.005 && secs < 1.0;
  report("photodynamics", ok,
         fmt("polarization (%.4f, %.4f), t_opt = %.0f ns, P_d = %.5f / %.5f, %.2f s", pol.first,
             pol.second, t_opt * 1e9, p0, p1, secs));
}

struct MonteCarlo {
  SweepResult result;
  double seconds = 0.0;
  const SweepRow& row(Mode m, int G, int F, long R) const {
    for (const auto& r : result.rows)
      if (r.params.mode == m && r.params.G == G && r.params.F == F && r.params.R == R) return r;
    std::fprintf(stderr, "missing row\n");
    std::exit(2);
  }
};

MonteCarlo run_monte_carlo(std::size_t trials, int threads, std::uint64_t seed) {
  ProtocolParams base;  // K=6, tau0=12.5 ns, T2*=1.3 us, F=1
  std::vector<SweepSpec> specs;

  ProtocolParams batch = base;
  batch.G = 15;
  batch.R = 2500;
  specs.push_back({batch, {Mode::batch, Mode::threshold}, SweepAxis::R, {}});

  ProtocolParams smu = base;
  smu.R = 700;
  specs.push_back({smu, {Mode::smu}, SweepAxis::G, {30, 45}});
  smu.G = 61;
  specs.push_back({smu, {Mode::smu, Mode::smu_timed}, SweepAxis::G, {}});

  ProtocolParams g9f9_threshold = base;
  g9f9_threshold.G = 9;
  g9f9_threshold.F = 9;
  g9f9_threshold.R = 50000;
  specs.push_back({g9f9_threshold, {Mode::threshold}, SweepAxis::R, {}});

  ProtocolParams large = batch;
  large.R = 20000;
  specs.push_back({large, {Mode::batch, Mode::batch_timed}, SweepAxis::R, {}});

  RunConfig cfg = preset("default");
  const ObservationModels models = observation_models(cfg);
  TrialConfig tc = trial_config(cfg);
  tc.n_trials = trials;
  tc.seed = seed;
  SimOptions opts;
  opts.threads = threads;

  const auto t0 = Clock::now();
  MonteCarlo mc{run_sweeps(specs, tc, models, opts), 0.0};
  mc.seconds = seconds_since(t0);
  std::printf("# Monte Carlo: %zu trials per row, %zu rows, %.1f s\n", trials, mc.result.rows.size(),
              mc.seconds);
  for (const auto& r : mc.result.rows)
    std::printf("#   %-12s G=%-3d F=%d R=%-6ld T_tot=%.4g s  eta=%.3f uT/sqrtHz  fails=%zu\n",
                std::string(to_string(r.params.mode)).c_str(), r.params.G, r.params.F, r.params.R,
                r.T_tot, uT(r.eta_B), r.fail_count);
  return mc;
}

constexpr std::size_t kResamples = 2000;

void desk_scale(const MonteCarlo& mc, std::size_t trials) {
  const SweepRow& batch = mc.row(Mode::batch, 15, 1, 2500);
  double best = INFINITY;
  int best_g = 0;
  for (int g : {30, 45, 61}) {
    const double eta = uT(mc.row(Mode::smu, g, 1, 700).eta_B);
    if (eta < best) {
      best = eta;
      best_g = g;
    }
  }
  const bool ok = trials >= 500 && in(uT(batch.eta_B), 1.3, 2.0) && in(best, 1.2, 1.9) &&
                  mc.seconds < 600.0;
  report("desk-scale Monte Carlo", ok,
         fmt("batching %.3f uT/sqrtHz in [1.3, 2.0]; SMU best %.3f (G=%d) in [1.2, 1.9]; %zu trials, %.0f s",
             uT(batch.eta_B), best, best_g, trials, mc.seconds));
}

void ordering(const MonteCarlo& mc) {
  const SweepRow& smu = mc.row(Mode::smu, 61, 1, 700);
  const SweepRow& batch = mc.row(Mode::batch, 15, 1, 2500);
  const SweepRow& thr = mc.row(Mode::threshold, 15, 1, 2500);
  const SweepRow& g9f9_threshold = mc.row(Mode::threshold, 9, 9, 50000);

  const auto d1 = bootstrap_eta_difference(batch, smu, kResamples, 11);
  const auto r2 = bootstrap_eta_ratio_paired(thr, batch, kResamples, 12);
  const double z1 = d1.mean / d1.stddev;
  const double z2 = (r2.mean - 1.0) / r2.stddev;
  const double ratio = g9f9_threshold.eta_B / batch.eta_B;
  const bool ok = z1 >= 2.0 && z2 >= 2.0 && in(ratio, 2.5, 4.5);
  report("ordering at matched T_tot", ok,
         fmt("T_tot %.4g / %.4g / %.4g s; eta smu %.3f <= batch %.3f (%.1f sigma) <= threshold %.3f "
             "(%.1f sigma); threshold(G=F=9, R=5e4)/batch = %.2f in [2.5, 4.5]",
             smu.T_tot, batch.T_tot, thr.T_tot, uT(smu.eta_B), uT(batch.eta_B), z1, uT(thr.eta_B), z2,
             ratio));
}

void timing_information(const MonteCarlo& mc) {
  const SweepRow& smu = mc.row(Mode::smu, 61, 1, 700);
  const SweepRow& smu_t = mc.row(Mode::smu_timed, 61, 1, 700);
  const SweepRow& batch = mc.row(Mode::batch, 15, 1, 20000);
  const SweepRow& batch_t = mc.row(Mode::batch_timed, 15, 1, 20000);
  const double ratio = smu_t.eta_B / smu.eta_B;
  const auto rb = bootstrap_eta_ratio_paired(batch_t, batch, kResamples, 13);
  const double z = (rb.mean - 1.0) / rb.stddev;
  const bool ok = in(ratio, 0.85, 1.0) && z <= 2.0;
  report("timing information", ok,
         fmt("smu-timed/smu = %.3f in [0.85, 1.0]; batch-timed/batch at R=2e4 = %.3f +- %.3f (%.1f sigma)",
             ratio, rb.mean, rb.stddev, z));
}

void dynamic_range(const MonteCarlo& mc) {
  const SweepRow& batch = mc.row(Mode::batch, 15, 1, 2500);
  const double b_max = frequency_to_field(39e6);
  const double dr = b_max / batch.eta_B;
  report("dynamic range", in(dr, 650.0, 1050.0),
         fmt("B_max = %.3f mT, B_max/eta = %.0f Hz^1/2 in [650, 1050]", b_max * 1e3, dr));
}

void property_suites(int threads) {
  RunConfig cfg = preset("default");
  bool ok = true;
  std::string failed;
  for (const auto& c : run_self_checks(cfg)) {
    if (!c.passed) failed += c.name + "; ";
    ok = ok && c.passed;
  }

  ProtocolParams p;
  p.K = 4;
  p.G = 4;
  p.R = 300;
  const SweepSpec spec{p, {Mode::threshold, Mode::batch, Mode::smu, Mode::batch_timed, Mode::smu_timed},
                       SweepAxis::R, {300}};
  TrialConfig tc = trial_config(cfg);
  tc.n_trials = 24;
  SimOptions opts;
  opts.trial.grid_size = 1024;
  const ObservationModels models = observation_models(cfg);
  std::vector<SweepResult> runs;
  for (int t : {1, 2, std::max(threads, 4)}) {
    opts.threads = t;
    runs.push_back(run_sweeps(std::span<const SweepSpec>(&spec, 1), tc, models, opts));
  }
  bool same = true;
  for (const auto& r : runs)
    for (std::size_t i = 0; i < r.rows.size(); ++i)
      same = same && std::memcmp(r.rows[i].errors.data(), runs[0].rows[i].errors.data(),
                                 r.rows[i].errors.size() * sizeof(double)) == 0;
  if (!same) failed += "thread-count reproducibility; ";
  report("property suites", ok && same,
         failed.empty() ? "normalization, R=1 reduction, sequential=batch, single-bin reduction, "
                          "rate-matrix conservation, schedule lattice, bitwise reproducibility over 1/2/4 threads"
                        : failed);
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t trials = 1000;
  int threads = 0;
  std::uint64_t seed = 20240101;
  for (int i = 1; i + 1 < argc; i += 2) {
    if (!std::strcmp(argv[i], "--trials")) trials = std::strtoull(argv[i + 1], nullptr, 10);
    else if (!std::strcmp(argv[i], "--threads")) threads = std::atoi(argv[i + 1]);
    else if (!std::strcmp(argv[i], "--seed")) seed = std::strtoull(argv[i + 1], nullptr, 10);
  }

  time_accounting();
  photodynamics();
  const MonteCarlo mc = run_monte_carlo(trials, threads, seed);
  desk_scale(mc, trials);
  ordering(mc);
  timing_information(mc);
  dynamic_range(mc);
  property_suites(threads);

  std::printf("%d criteria failed\n", n_failed);
  return n_failed == 0 ? 0 : 1;
}
