#pragma once

// Ramsey outcome model and photon-click probabilities.
//
// Units are SI throughout: seconds for durations, Hz for frequencies,
// radians for angles.

#include <cstddef>
#include <optional>
#include <vector>

namespace nvqpe {

/// Electron gyromagnetic ratio over 2*pi, 28 MHz/mT expressed in Hz/T.
inline constexpr double kGyromagneticOverTwoPi = 28.0e9;

inline double field_to_frequency(double tesla) { return kGyromagneticOverTwoPi * tesla; }
inline double frequency_to_field(double hz) { return hz / kGyromagneticOverTwoPi; }

/// Settings of one Ramsey interrogation.
struct RamseySetting {
  double tau = 0.0;      ///< interaction time [s]
  double theta = 0.0;    ///< readout-basis rotation [rad], in [0, 2pi)
  double t2_star = 0.0;  ///< Gaussian dephasing time [s]

  /// Throws RangeError unless tau > 0, t2_star > 0 and theta in [0, 2pi).
  void validate() const;
};

struct TimeBin {
  double start = 0.0;  ///< [s]
  double end = 0.0;    ///< [s]
};

/// Click probabilities of one arrival-time bin for the two spin states.
struct BinProbabilities {
  TimeBin bin;
  double p_m0 = 0.0;
  double p_m1 = 0.0;
};

/// Per-shot probability of a detector click for each spin state, optionally
/// resolved into arrival-time bins.
struct DetectionModel {
  double p_click_m0 = 0.0;
  double p_click_m1 = 0.0;
  std::optional<std::vector<BinProbabilities>> binned;

  /// Unbinned model; validated.
  static DetectionModel totals(double p_m0, double p_m1);
  /// Binned model whose totals are the per-state bin sums; validated.
  static DetectionModel from_bins(std::vector<BinProbabilities> bins);

  std::size_t bin_count() const { return binned ? binned->size() : 0; }

  /// Throws RangeError unless 0 < p_click_m1 <= p_click_m0 < 1 and, when
  /// binned, each bin probability lies in [0, 1] and the per-state bin sums
  /// match the totals within 1e-12.
  void validate() const;
};

/// Gaussian coherence factor exp(-(tau/T2*)^2).
double decay_factor(const RamseySetting& s);

/// cos(2 pi f tau - theta).
double fringe(double f_hz, const RamseySetting& s);

/// Ideal-readout probability of spin outcome u in {0, 1}.
double spin_probability(int u, double f_hz, const RamseySetting& s);

/// Mean click probability (p0 + p1) / 2.
double alpha(const DetectionModel& m);

/// Fringe visibility: contrast ratio times the dephasing factor.
double visibility(const DetectionModel& m, const RamseySetting& s);

/// Click probability of a two-state mixture with spin-conditional click
/// probabilities p_m0, p_m1, written as alpha * (1 + V * fringe). Every click
/// likelihood in the library funnels through this one expression so that
/// degenerate reductions (one bin, one shot) agree bit for bit.
inline double mixture_click(double p_m0, double p_m1, double decay, double fringe_value) {
  const double sum = p_m0 + p_m1;
  if (sum == 0.0) return 0.0;
  const double a = 0.5 * sum;
  const double v = (p_m0 - p_m1) / sum * decay;
  return a * (1.0 + v * fringe_value);
}

/// P_d(1 | f_B) = alpha * (1 + V cos(2 pi f tau - theta)).
double click_probability(double f_hz, const RamseySetting& s, const DetectionModel& m);

/// P_d(0 | f_B) = 1 - P_d(1 | f_B).
double no_click_probability(double f_hz, const RamseySetting& s, const DetectionModel& m);

/// Probability of a click in arrival-time bin `bin_index`. Throws
/// UnconfiguredBinsError without bins and RangeError for a bad index.
double binned_click_probability(std::size_t bin_index, double f_hz, const RamseySetting& s,
                                const DetectionModel& m);

}  // namespace nvqpe
