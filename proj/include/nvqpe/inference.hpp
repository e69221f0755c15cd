#pragma once

// Posterior over the Larmor frequency on a dense periodic grid, with the
// threshold, single-click, batch (Gaussian and exact binomial) and
// arrival-time-binned update rules, and the circular-mean estimator.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nvqpe/errors.hpp"
#include "nvqpe/kernels.hpp"
#include "nvqpe/physics.hpp"

namespace nvqpe {

using kernels::Exec;

inline constexpr std::size_t kDefaultGridSize = 8192;
/// Floor on the Gaussian batch variance r (R - r) / R.
inline constexpr double kVarianceFloor = 0.25;

/// Discretized P(f_B) on N points f_j = -1/(2 tau0) + j / (N tau0), a
/// uniform sampling of one period of the tau0 fringe. Stored as log weights
/// normalized so that sum_j exp(log_mass_j) = 1.
class FrequencyDistribution {
 public:
  static FrequencyDistribution uniform(double tau0, std::size_t n = kDefaultGridSize);
  /// Normalizes `masses`; throws RangeError on negative or all-zero input.
  static FrequencyDistribution from_masses(double tau0, std::span<const double> masses);

  std::size_t size() const { return grid_.size(); }
  double tau0() const { return tau0_; }
  double spacing() const { return 1.0 / (static_cast<double>(size()) * tau0_); }
  const std::vector<double>& grid() const { return grid_; }
  double frequency(std::size_t j) const { return grid_[j]; }

  double mass(std::size_t j) const;
  std::vector<double> masses() const;
  std::span<const double> log_masses() const { return log_mass_; }

  /// Multiplies the distribution by exp(loglik(j)) and renormalizes. On a
  /// degenerate product the distribution is left unchanged and
  /// DegeneratePosteriorError is thrown.
  template <class LogLik>
  void apply(LogLik&& loglik, Exec exec = Exec::serial) {
    scratch_.resize(log_mass_.size());
    if (exec == Exec::parallel)
      kernels::accumulate_parallel(log_mass_, scratch_, loglik);
    else
      kernels::accumulate_serial(log_mass_, scratch_, loglik);
    if (!kernels::normalize_log(scratch_, exec))
      throw DegeneratePosteriorError("posterior has no remaining mass after update");
    log_mass_.swap(scratch_);
  }

  /// As apply(), with fill(lo, buf) writing the log likelihood of points
  /// lo .. lo + buf.size() - 1 into the aligned block buf.
  template <class Fill>
  void apply_blocks(Fill&& fill, Exec exec = Exec::serial) {
    scratch_.resize(log_mass_.size());
    if (exec == Exec::parallel)
      kernels::accumulate_blocks_parallel(log_mass_, scratch_, fill);
    else
      kernels::accumulate_blocks_serial(log_mass_, scratch_, fill);
    if (!kernels::normalize_log(scratch_, exec))
      throw DegeneratePosteriorError("posterior has no remaining mass after update");
    log_mass_.swap(scratch_);
  }

 private:
  FrequencyDistribution(double tau0, std::size_t n);

  double tau0_ = 0.0;
  std::vector<double> grid_;
  std::vector<double> log_mass_;
  std::vector<double> scratch_;
};

/// Photon count of one batch of R identical Ramseys.
struct BatchRecord {
  long r = 0;
  long R = 1;
  RamseySetting setting;
  void validate() const;
};

/// Per-bin photon counts of one batch.
struct BinnedBatchRecord {
  std::vector<long> counts;
  long R = 1;
  RamseySetting setting;
  long clicks() const;
  void validate() const;
};

/// cos(2 pi f_j tau - theta) on the grid.
std::vector<double> fringe_values(const FrequencyDistribution& dist, const RamseySetting& s);

/// cos/sin of 2 pi f_j tau cached for one interaction time, so the fringe at
/// any theta costs one multiply-add per point.
class PhaseBasis {
 public:
  PhaseBasis(const FrequencyDistribution& dist, double tau);
  double tau() const { return tau_; }
  void fringe(double theta, std::vector<double>& out) const;

 private:
  double tau_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

FrequencyDistribution uniform_prior(double tau0, std::size_t n = kDefaultGridSize);

// Each update has a convenience form and a form taking precomputed fringe
// values (fringe_values() or PhaseBasis::fringe() for the same setting).

/// Multiply by the ideal-readout likelihood P_m(u | f).
void update_threshold(FrequencyDistribution& dist, int u, const RamseySetting& s,
                      Exec exec = Exec::serial);
void update_threshold(FrequencyDistribution& dist, int u, const RamseySetting& s,
                      std::span<const double> fringe, Exec exec = Exec::serial);

/// Binarize a batch count: 0 if r > R * alpha, else 1 (ties go to 1).
int threshold_outcome(long r, long R, const DetectionModel& m);

/// Single Ramsey with click (d = 1) or no click (d = 0).
void update_click(FrequencyDistribution& dist, int d, const RamseySetting& s,
                  const DetectionModel& m, Exec exec = Exec::serial);
void update_click(FrequencyDistribution& dist, int d, const RamseySetting& s,
                  const DetectionModel& m, std::span<const double> fringe,
                  Exec exec = Exec::serial);

/// Gaussian approximation of the binomial count likelihood with variance
/// max(r (R - r) / R, kVarianceFloor).
void update_batch_gaussian(FrequencyDistribution& dist, const BatchRecord& rec,
                           const DetectionModel& m, Exec exec = Exec::serial);
void update_batch_gaussian(FrequencyDistribution& dist, const BatchRecord& rec,
                           const DetectionModel& m, std::span<const double> fringe,
                           Exec exec = Exec::serial);

/// Exact binomial likelihood, evaluated as r log p + (R - r) log(1 - p).
void update_batch_exact(FrequencyDistribution& dist, const BatchRecord& rec,
                        const DetectionModel& m, Exec exec = Exec::serial);
void update_batch_exact(FrequencyDistribution& dist, const BatchRecord& rec,
                        const DetectionModel& m, std::span<const double> fringe,
                        Exec exec = Exec::serial);

/// Product over bins of Gaussian factors with means R P_i(f).
void update_binned_gaussian(FrequencyDistribution& dist, const BinnedBatchRecord& rec,
                            const DetectionModel& m, Exec exec = Exec::serial);
void update_binned_gaussian(FrequencyDistribution& dist, const BinnedBatchRecord& rec,
                            const DetectionModel& m, std::span<const double> fringe,
                            Exec exec = Exec::serial);

/// Single Ramsey with a click in bin `bin`, or no click when `bin` is empty.
/// The no-click likelihood uses the click probability built from the summed
/// bin probabilities.
void update_binned_click(FrequencyDistribution& dist, std::optional<std::size_t> bin,
                         const RamseySetting& s, const DetectionModel& m,
                         Exec exec = Exec::serial);
void update_binned_click(FrequencyDistribution& dist, std::optional<std::size_t> bin,
                         const RamseySetting& s, const DetectionModel& m,
                         std::span<const double> fringe, Exec exec = Exec::serial);

/// Multinomial likelihood of a binned batch; equal to R sequential
/// update_binned_click() calls with the same outcomes.
void update_binned_exact(FrequencyDistribution& dist, const BinnedBatchRecord& rec,
                         const DetectionModel& m, Exec exec = Exec::serial);
void update_binned_exact(FrequencyDistribution& dist, const BinnedBatchRecord& rec,
                         const DetectionModel& m, std::span<const double> fringe,
                         Exec exec = Exec::serial);

/// Circular mean (1 / (2 pi tau0)) arg sum_j exp(i 2 pi f_j tau0) P_j, in
/// (-1/(2 tau0), 1/(2 tau0)]. Throws AmbiguousEstimateError when the
/// resultant length is below `min_resultant`.
double estimate(const FrequencyDistribution& dist, double min_resultant = 1e-12);

/// Length of the circular resultant, in [0, 1].
double resultant_length(const FrequencyDistribution& dist);

}  // namespace nvqpe
