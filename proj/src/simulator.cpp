#include "nvqpe/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include <omp.h>

#include "nvqpe/errors.hpp"

namespace nvqpe {

namespace {

constexpr std::uint64_t kTruthStream = 0x7472757468ULL;  // "truth"
constexpr std::uint64_t kRowStream = 0x726f77ULL;        // "row"
constexpr std::uint64_t kTrialStream = 0x747269616cULL;  // "trial"

double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

double mean_square(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index);
}

Rng trial_rng(std::uint64_t row_seed, std::size_t index) {
  return Rng(derive_seed(row_seed, kTrialStream, index));
}

void TrialConfig::validate(double tau0) const {
  const double half = 0.5 / tau0;
  if (!(f_min <= f_max)) throw RangeError("TrialConfig: f_min must not exceed f_max");
  if (!(f_min > -half && f_max < half))
    throw RangeError("TrialConfig: frequency range must lie inside (-1/(2 tau0), 1/(2 tau0))");
  if (n_trials < 1) throw RangeError("TrialConfig: n_trials must be >= 1");
  if (truth_mode == TruthMode::fixed_list) {
    if (fixed_truths.empty()) throw RangeError("TrialConfig: fixed_list truth mode needs truths");
    for (double f : fixed_truths)
      if (!(f > -half && f < half))
        throw RangeError("TrialConfig: fixed truth outside (-1/(2 tau0), 1/(2 tau0))");
  }
}

double sample_truth(const TrialConfig& cfg, Rng& rng) {
  return cfg.f_min + (cfg.f_max - cfg.f_min) * unit_interval(rng());
}

double truth_for_trial(const TrialConfig& cfg, std::size_t index) {
  if (cfg.truth_mode == TruthMode::fixed_list)
    return cfg.fixed_truths[index % cfg.fixed_truths.size()];
  Rng rng(derive_seed(cfg.seed, kTruthStream, index));
  return sample_truth(cfg, rng);
}

long sample_binomial(long n, double p, Rng& rng) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::binomial_distribution<long> dist(n, p);
  return dist(rng);
}

std::vector<long> sample_multinomial(long n, std::span<const double> probs, Rng& rng) {
  std::vector<long> counts(probs.size(), 0);
  double remaining_mass = 1.0;
  long remaining = n;
  for (std::size_t i = 0; i < probs.size() && remaining > 0; ++i) {
    const double q = remaining_mass > 0.0 ? std::clamp(probs[i] / remaining_mass, 0.0, 1.0) : 0.0;
    counts[i] = sample_binomial(remaining, q, rng);
    remaining -= counts[i];
    remaining_mass -= probs[i];
  }
  return counts;
}

BatchRecord simulate_batch(double f_hz, const RamseySetting& s, long R, const DetectionModel& m,
                           Rng& rng) {
  return {sample_binomial(R, click_probability(f_hz, s, m), rng), R, s};
}

BinnedBatchRecord simulate_binned_batch(double f_hz, const RamseySetting& s, long R,
                                        const DetectionModel& m, Rng& rng) {
  if (!m.binned) throw UnconfiguredBinsError();
  std::vector<double> probs(m.binned->size());
  for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = binned_click_probability(i, f_hz, s, m);
  return {sample_multinomial(R, probs, rng), R, s};
}

ObservationModels ObservationModels::counting_only(const DetectionModel& counting) {
  counting.validate();
  ObservationModels o;
  o.counting = DetectionModel::totals(counting.p_click_m0, counting.p_click_m1);
  o.joint = DetectionModel::from_bins(
      {{{0.0, std::numeric_limits<double>::infinity()}, counting.p_click_m0, counting.p_click_m1}});
  o.counting_intervals = 1;
  o.timed_bin = {npos};
  return o;
}

ObservationModels ObservationModels::from_curve(const PLCurve& curve, double t_cut,
                                                const TimeBinning& binning) {
  binning.validate();
  if (!(t_cut > 0.0)) throw RangeError("ObservationModels: t_cut must be positive");
  std::vector<double> edges = binning.edges;
  edges.push_back(t_cut);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](double a, double b) { return std::abs(a - b) <= 1e-15; }),
              edges.end());
  const DetectionModel joint = bin_probabilities(curve, TimeBinning{edges});

  ObservationModels o;
  o.joint = joint;
  const auto& jb = *joint.binned;
  o.counting_intervals = 0;
  double c0 = 0.0, c1 = 0.0;
  for (const auto& b : jb) {
    if (b.bin.end > t_cut + 1e-15) break;
    c0 += b.p_m0;
    c1 += b.p_m1;
    ++o.counting_intervals;
  }
  o.counting = DetectionModel::totals(c0, c1);

  std::vector<BinProbabilities> timed(binning.bin_count());
  for (std::size_t b = 0; b < timed.size(); ++b) timed[b].bin = {binning.edges[b], binning.edges[b + 1]};
  o.timed_bin.assign(jb.size(), npos);
  for (std::size_t i = 0; i < jb.size(); ++i) {
    const double mid = 0.5 * (jb[i].bin.start + jb[i].bin.end);
    for (std::size_t b = 0; b < timed.size(); ++b) {
      if (mid > timed[b].bin.start && mid < timed[b].bin.end) {
        o.timed_bin[i] = b;
        timed[b].p_m0 += jb[i].p_m0;
        timed[b].p_m1 += jb[i].p_m1;
        break;
      }
    }
  }
  o.timed = DetectionModel::from_bins(std::move(timed));
  return o;
}

Observation simulate_observation(double f_hz, const RamseySetting& s, long R,
                                 const ObservationModels& models, Rng& rng) {
  const auto& jb = *models.joint.binned;
  const double decay = decay_factor(s);
  const double fr = fringe(f_hz, s);
  std::vector<double> probs(jb.size());
  for (std::size_t i = 0; i < jb.size(); ++i)
    probs[i] = mixture_click(jb[i].p_m0, jb[i].p_m1, decay, fr);
  const std::vector<long> counts = sample_multinomial(R, probs, rng);

  Observation obs{{0, R, s}, std::nullopt};
  for (std::size_t i = 0; i < models.counting_intervals; ++i) obs.counting.r += counts[i];
  if (models.timed) {
    BinnedBatchRecord rec{std::vector<long>(models.timed->bin_count(), 0), R, s};
    for (std::size_t i = 0; i < counts.size(); ++i)
      if (models.timed_bin[i] != ObservationModels::npos) rec.counts[models.timed_bin[i]] += counts[i];
    obs.timed = std::move(rec);
  }
  return obs;
}

namespace {

struct ModeState {
  Mode mode;
  FrequencyDistribution dist;
  TrialFailure failure = TrialFailure::none;
  std::string message;
};

void apply_mode(ModeState& st, const Observation& obs, const RamseySetting& s,
                const ObservationModels& models, std::span<const double> fr,
                const TrialOptions& opts) {
  const BatchRecord& rec = obs.counting;
  switch (st.mode) {
    case Mode::threshold:
      update_threshold(st.dist, threshold_outcome(rec.r, rec.R, models.counting), s, fr);
      break;
    case Mode::batch:
      // One shot carries no variance estimate; use the exact likelihood.
      if (rec.R == 1)
        update_batch_exact(st.dist, rec, models.counting, fr);
      else
        update_batch_gaussian(st.dist, rec, models.counting, fr);
      break;
    case Mode::smu:
      if (opts.sequential_smu) {
        for (long i = 0; i < rec.r; ++i) update_click(st.dist, 1, s, models.counting, fr);
        for (long i = rec.r; i < rec.R; ++i) update_click(st.dist, 0, s, models.counting, fr);
      } else {
        update_batch_exact(st.dist, rec, models.counting, fr);
      }
      break;
    case Mode::batch_timed:
      update_binned_gaussian(st.dist, *obs.timed, *models.timed, fr);
      break;
    case Mode::smu_timed:
      if (opts.sequential_smu) {
        const auto& t = *obs.timed;
        for (std::size_t b = 0; b < t.counts.size(); ++b)
          for (long i = 0; i < t.counts[b]; ++i) update_binned_click(st.dist, b, s, *models.timed, fr);
        for (long i = t.clicks(); i < t.R; ++i)
          update_binned_click(st.dist, std::nullopt, s, *models.timed, fr);
      } else {
        update_binned_exact(st.dist, *obs.timed, *models.timed, fr);
      }
      break;
  }
}

}  // namespace

std::vector<TrialOutcome> run_trial_modes(const ProtocolParams& p, std::span<const Mode> modes,
                                          double f_hz, const ObservationModels& models, Rng& rng,
                                          const TrialOptions& opts) {
  p.validate();
  if (modes.empty()) throw RangeError("run_trial_modes: no modes requested");
  for (Mode m : modes)
    if (is_timed(m) && !models.timed)
      throw UnconfiguredBinsError();

  std::vector<ModeState> states;
  states.reserve(modes.size());
  for (Mode m : modes) states.push_back({m, uniform_prior(p.tau0, opts.grid_size), TrialFailure::none, {}});

  const Schedule sched = schedule(p);
  std::optional<PhaseBasis> basis;
  std::vector<double> fr;
  for (const ScheduleEntry& e : sched) {
    if (!basis || basis->tau() != e.tau) basis.emplace(states.front().dist, e.tau);
    basis->fringe(e.theta, fr);
    const RamseySetting s = ramsey_setting(e, p.t2_star);
    const Observation obs = simulate_observation(f_hz, s, e.repetitions, models, rng);
    for (ModeState& st : states) {
      if (st.failure != TrialFailure::none) continue;
      try {
        apply_mode(st, obs, s, models, fr, opts);
      } catch (const DegeneratePosteriorError& ex) {
        st.failure = TrialFailure::degenerate_posterior;
        st.message = ex.what();
      }
    }
  }

  std::vector<TrialOutcome> out;
  out.reserve(states.size());
  for (ModeState& st : states) {
    TrialOutcome o;
    o.mode = st.mode;
    if (st.failure != TrialFailure::none) {
      o.failure = st.failure;
      o.message = st.message;
    } else {
      try {
        o.estimate = estimate(st.dist);
      } catch (const AmbiguousEstimateError& ex) {
        o.failure = TrialFailure::ambiguous_estimate;
        o.message = ex.what();
      }
    }
    if (opts.keep_posterior) o.posterior = std::move(st.dist);
    out.push_back(std::move(o));
  }
  return out;
}

double run_trial(const ProtocolParams& p, double f_hz, const ObservationModels& models, Rng& rng,
                 const TrialOptions& opts) {
  const Mode mode = p.mode;
  const auto outcomes = run_trial_modes(p, std::span<const Mode>(&mode, 1), f_hz, models, rng, opts);
  const TrialOutcome& o = outcomes.front();
  if (o.failure == TrialFailure::ambiguous_estimate) throw AmbiguousEstimateError(o.message);
  if (o.failure == TrialFailure::degenerate_posterior) throw DegeneratePosteriorError(o.message);
  return o.estimate;
}

double mse(std::span<const double> estimates, std::span<const double> truths) {
  if (estimates.empty()) throw RangeError("mse: empty input");
  if (estimates.size() != truths.size()) throw RangeError("mse: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double d = estimates[i] - truths[i];
    s += d * d;
  }
  return s / static_cast<double>(estimates.size());
}

Sensitivity sensitivity(double v_b, double t_tot) {
  const double eta_f = std::sqrt(v_b * t_tot);
  return {eta_f, frequency_to_field(eta_f)};
}

SweepResult run_sweeps(std::span<const SweepSpec> specs, const TrialConfig& cfg,
                       const ObservationModels& models, const SimOptions& opts) {
  SweepResult result;
  std::uint64_t point = 0;
  const int threads = opts.threads > 0 ? opts.threads : omp_get_max_threads();
  for (const SweepSpec& spec : specs) {
    if (spec.modes.empty()) throw RangeError("sweep: no modes requested");
    spec.base.validate();
    cfg.validate(spec.base.tau0);
    std::vector<long> values = spec.values;
    if (values.empty()) values.push_back(spec.axis == SweepAxis::R ? spec.base.R : spec.base.G);

    for (long value : values) {
      ProtocolParams params = spec.base;
      if (spec.axis == SweepAxis::R)
        params.R = value;
      else
        params.G = static_cast<int>(value);
      params.validate();
      const std::uint64_t row_seed = derive_seed(cfg.seed, kRowStream, point++);

      const std::size_t n = cfg.n_trials;
      const std::size_t nm = spec.modes.size();
      std::vector<double> errors(n * nm, 0.0);
      std::vector<char> failed(n * nm, 0);
      std::exception_ptr first_error;
      const double worst = 0.5 / params.tau0;

#pragma omp parallel for schedule(dynamic) num_threads(threads)
      for (std::ptrdiff_t ti = 0; ti < static_cast<std::ptrdiff_t>(n); ++ti) {
        const auto t = static_cast<std::size_t>(ti);
        try {
          const double truth = truth_for_trial(cfg, t);
          Rng rng = trial_rng(row_seed, t);
          const auto outcomes = run_trial_modes(params, spec.modes, truth, models, rng, opts.trial);
          for (std::size_t k = 0; k < nm; ++k) {
            failed[t * nm + k] = outcomes[k].failed() ? 1 : 0;
            errors[t * nm + k] = outcomes[k].failed() ? worst : outcomes[k].estimate - truth;
          }
        } catch (...) {
#pragma omp critical(nvqpe_sweep_error)
          if (!first_error) first_error = std::current_exception();
        }
      }
      if (first_error) std::rethrow_exception(first_error);

      for (std::size_t k = 0; k < nm; ++k) {
        SweepRow row;
        row.params = params;
        row.params.mode = spec.modes[k];
        row.T_tot = total_time(row.params);
        row.n_trials = n;
        row.seed = row_seed;
        row.errors.resize(n);
        for (std::size_t t = 0; t < n; ++t) {
          row.errors[t] = errors[t * nm + k];
          row.fail_count += static_cast<std::size_t>(failed[t * nm + k]);
        }
        row.V_B = mean_square(row.errors);
        const Sensitivity s = sensitivity(row.V_B, row.T_tot);
        row.eta_f = s.eta_f;
        row.eta_B = s.eta_B;
        result.rows.push_back(std::move(row));
      }
    }
  }
  return result;
}

SweepResult sweep(const ProtocolParams& base, SweepAxis axis, std::span<const long> values,
                  const TrialConfig& cfg, const ObservationModels& models, const SimOptions& opts) {
  const SweepSpec spec{base, {base.mode}, axis, std::vector<long>(values.begin(), values.end())};
  return run_sweeps(std::span<const SweepSpec>(&spec, 1), cfg, models, opts);
}

namespace {

double eta_of(std::span<const double> errors, std::span<const std::size_t> idx, double t_tot) {
  double s = 0.0;
  for (std::size_t i : idx) s += errors[i] * errors[i];
  return sensitivity(s / static_cast<double>(idx.size()), t_tot).eta_B;
}

BootstrapSummary summarize(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - m) * (x - m);
  var /= static_cast<double>(v.size() > 1 ? v.size() - 1 : 1);
  return {m, std::sqrt(var)};
}

void resample(std::vector<std::size_t>& idx, std::size_t n, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  idx.resize(n);
  for (auto& i : idx) i = pick(rng);
}

}  // namespace

BootstrapSummary bootstrap_eta(std::span<const double> errors, double t_tot,
                               std::size_t resamples, std::uint64_t seed) {
  if (errors.empty() || resamples == 0) throw RangeError("bootstrap_eta: empty input");
  Rng rng(seed);
  std::vector<std::size_t> idx;
  std::vector<double> etas(resamples);
  for (auto& e : etas) {
    resample(idx, errors.size(), rng);
    e = eta_of(errors, idx, t_tot);
  }
  return summarize(etas);
}

BootstrapSummary bootstrap_eta_difference(const SweepRow& a, const SweepRow& b,
                                          std::size_t resamples, std::uint64_t seed) {
  if (a.errors.empty() || b.errors.empty() || resamples == 0)
    throw RangeError("bootstrap_eta_difference: empty input");
  Rng rng(seed);
  std::vector<std::size_t> ia, ib;
  std::vector<double> diffs(resamples);
  for (auto& d : diffs) {
    resample(ia, a.errors.size(), rng);
    resample(ib, b.errors.size(), rng);
    d = eta_of(a.errors, ia, a.T_tot) - eta_of(b.errors, ib, b.T_tot);
  }
  return summarize(diffs);
}

BootstrapSummary bootstrap_eta_ratio_paired(const SweepRow& a, const SweepRow& b,
                                            std::size_t resamples, std::uint64_t seed) {
  if (a.errors.size() != b.errors.size() || a.errors.empty() || resamples == 0)
    throw RangeError("bootstrap_eta_ratio_paired: rows must have equal, non-zero trial counts");
  Rng rng(seed);
  std::vector<std::size_t> idx;
  std::vector<double> ratios(resamples);
  for (auto& r : ratios) {
    resample(idx, a.errors.size(), rng);
    r = eta_of(a.errors, idx, a.T_tot) / eta_of(b.errors, idx, b.T_tot);
  }
  return summarize(ratios);
}

}  // namespace nvqpe
