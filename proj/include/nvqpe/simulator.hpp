#pragma once

// Monte Carlo harness: ground-truth sampling, stochastic photon records,
// end-to-end estimation trials and sensitivity sweeps.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nvqpe/inference.hpp"
#include "nvqpe/photodynamics.hpp"
#include "nvqpe/physics.hpp"
#include "nvqpe/protocol.hpp"

namespace nvqpe {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);
/// Stream seed for (master, stream, index); independent of thread layout.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

/// Photon-record stream of trial `index` in a sweep row.
Rng trial_rng(std::uint64_t row_seed, std::size_t index);

enum class TruthMode { uniform_random, fixed_list };

struct TrialConfig {
  double f_min = -39e6;  ///< [Hz]
  double f_max = 39e6;   ///< [Hz]
  std::size_t n_trials = 1000;
  std::uint64_t seed = 1;
  TruthMode truth_mode = TruthMode::uniform_random;
  std::vector<double> fixed_truths;  ///< cycled when truth_mode is fixed_list

  /// Throws RangeError unless the range lies strictly inside +-1/(2 tau0),
  /// f_min <= f_max and n_trials >= 1.
  void validate(double tau0) const;
};

/// Uniform draw on [f_min, f_max].
double sample_truth(const TrialConfig& cfg, Rng& rng);
/// Truth of trial `index`; shared by every row of a sweep.
double truth_for_trial(const TrialConfig& cfg, std::size_t index);

long sample_binomial(long n, double p, Rng& rng);
/// Counts for each outcome in `probs`; the remaining probability mass is an
/// implicit "no event" outcome that is not returned.
std::vector<long> sample_multinomial(long n, std::span<const double> probs, Rng& rng);

/// r ~ Binomial(R, P_d(1 | f_B)).
BatchRecord simulate_batch(double f_hz, const RamseySetting& s, long R, const DetectionModel& m,
                           Rng& rng);
/// counts ~ Multinomial(R; P_i(1 | f_B), no-click remainder).
BinnedBatchRecord simulate_binned_batch(double f_hz, const RamseySetting& s, long R,
                                        const DetectionModel& m, Rng& rng);

/// Detection models used by a trial. Photon records are always drawn on a
/// joint partition of the arrival-time axis that refines both the counting
/// window and the timing bins, so one record can be analysed with and
/// without arrival times.
struct ObservationModels {
  DetectionModel counting;             ///< clicks inside the counting window
  std::optional<DetectionModel> timed; ///< arrival-time-binned model
  DetectionModel joint;                ///< sampling partition (always binned)
  std::size_t counting_intervals = 1;  ///< leading joint intervals inside the window
  std::vector<std::size_t> timed_bin;  ///< joint interval -> timed bin, npos if none

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  static ObservationModels counting_only(const DetectionModel& counting);
  /// Counting window (0, t_cut] plus `binning` from the curves.
  static ObservationModels from_curve(const PLCurve& curve, double t_cut, const TimeBinning& binning);
};

struct Observation {
  BatchRecord counting;
  std::optional<BinnedBatchRecord> timed;
};

Observation simulate_observation(double f_hz, const RamseySetting& s, long R,
                                 const ObservationModels& models, Rng& rng);

struct TrialOptions {
  std::size_t grid_size = kDefaultGridSize;
  /// Apply SMU modes as R individual click updates instead of the
  /// equivalent aggregated likelihood. Much slower; for cross-checks.
  bool sequential_smu = false;
  /// Keep the final posterior of each mode.
  bool keep_posterior = false;
};

enum class TrialFailure { none, degenerate_posterior, ambiguous_estimate };

struct TrialOutcome {
  Mode mode = Mode::batch;
  double estimate = 0.0;
  TrialFailure failure = TrialFailure::none;
  std::string message;
  bool failed() const { return failure != TrialFailure::none; }
  std::optional<FrequencyDistribution> posterior;
};

/// Walks the schedule of `p` once and feeds the same photon records to one
/// posterior per entry of `modes` (p.mode is ignored). Failures are
/// recorded per mode.
std::vector<TrialOutcome> run_trial_modes(const ProtocolParams& p, std::span<const Mode> modes,
                                          double f_hz, const ObservationModels& models, Rng& rng,
                                          const TrialOptions& opts = {});

/// Single-mode trial using p.mode; estimation failures propagate as exceptions.
double run_trial(const ProtocolParams& p, double f_hz, const ObservationModels& models, Rng& rng,
                 const TrialOptions& opts = {});

/// Mean squared error; throws RangeError on empty or mismatched input.
double mse(std::span<const double> estimates, std::span<const double> truths);

struct Sensitivity {
  double eta_f = 0.0;  ///< [Hz s^1/2]
  double eta_B = 0.0;  ///< [T s^1/2]
};

Sensitivity sensitivity(double v_b, double t_tot);

enum class SweepAxis { R, G };

struct SweepSpec {
  ProtocolParams base;
  std::vector<Mode> modes;    ///< evaluated on shared photon records
  SweepAxis axis = SweepAxis::R;
  std::vector<long> values;   ///< empty: just the base point
};

struct SweepRow {
  ProtocolParams params;
  double T_tot = 0.0;
  double V_B = 0.0;
  double eta_f = 0.0;
  double eta_B = 0.0;
  std::size_t n_trials = 0;
  std::uint64_t seed = 0;  ///< row sub-seed
  std::size_t fail_count = 0;
  std::vector<double> errors;  ///< estimate - truth per trial
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

struct SimOptions {
  TrialOptions trial;
  int threads = 0;  ///< 0: OpenMP default
};

/// Runs every spec; rows are ordered spec, value, mode. The sub-seed of a
/// row is derived from (cfg.seed, point index), where the point index
/// counts (spec, value) pairs, so modes of one point share photon records.
SweepResult run_sweeps(std::span<const SweepSpec> specs, const TrialConfig& cfg,
                       const ObservationModels& models, const SimOptions& opts = {});

/// One axis sweep of base.mode.
SweepResult sweep(const ProtocolParams& base, SweepAxis axis, std::span<const long> values,
                  const TrialConfig& cfg, const ObservationModels& models,
                  const SimOptions& opts = {});

struct BootstrapSummary {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Bootstrap over trials of eta_B = sqrt(mean(err^2) T_tot) / gamma.
BootstrapSummary bootstrap_eta(std::span<const double> errors, double t_tot,
                               std::size_t resamples, std::uint64_t seed);

/// Bootstrap of eta_B(a) - eta_B(b) with independent resampling of the rows.
BootstrapSummary bootstrap_eta_difference(const SweepRow& a, const SweepRow& b,
                                          std::size_t resamples, std::uint64_t seed);

/// Bootstrap of eta_B(a) / eta_B(b) with paired resampling (same trial
/// indices), for rows evaluated on shared truths and photon records.
BootstrapSummary bootstrap_eta_ratio_paired(const SweepRow& a, const SweepRow& b,
                                            std::size_t resamples, std::uint64_t seed);

}  // namespace nvqpe
