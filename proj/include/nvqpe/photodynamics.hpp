#pragma once

// Five-level NV rate-equation model: ground m=0, ground m=1, metastable
// singlet, excited m=0, excited m=1. Rates are in 1/s, times in s.

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include "nvqpe/physics.hpp"

namespace nvqpe {

struct RateConstants {
  double gamma_rad = 66.08e6;   ///< excited -> ground radiative decay
  double k0s = 11.1e6;          ///< excited m=0 -> singlet
  double k1s = 91.9e6;          ///< excited m=1 -> singlet
  double ks0 = 4.9e6;           ///< singlet -> ground m=0
  double ks1 = 2.03e6;          ///< singlet -> ground m=1
  double epsilon = 0.0;         ///< non-spin-conserving branching
  double k_exc = 20.0e6;        ///< optical excitation rate
  double collection_eff = 0.01; ///< detected fraction of emitted photons

  /// Throws RangeError if a rate is negative, epsilon is outside [0, 1] or
  /// collection_eff is outside [0, 1]. A zero efficiency is accepted so that
  /// dark curves can be computed.
  void validate() const;
};

/// Level populations, ordered (p0g, p1g, ps, p0e, p1e).
struct LevelPopulations {
  double p0g = 0.0;
  double p1g = 0.0;
  double ps = 0.0;
  double p0e = 0.0;
  double p1e = 0.0;

  std::array<double, 5> as_array() const { return {p0g, p1g, ps, p0e, p1e}; }
  static LevelPopulations from_array(const std::array<double, 5>& v) {
    return {v[0], v[1], v[2], v[3], v[4]};
  }
  double total() const { return p0g + p1g + ps + p0e + p1e; }
};

using RateMatrix = std::array<std::array<double, 5>, 5>;

/// dP/dt = M P with P = (p0g, p1g, ps, p0e, p1e).
RateMatrix build_rate_matrix(const RateConstants& c);

/// Default RK4 step.
inline constexpr double kDefaultDt = 0.1e-9;

/// Fixed-step RK4 trajectory, one sample every dt starting with p0.
/// Throws IntegrationError on a non-finite state and RangeError on bad
/// step arguments.
std::vector<LevelPopulations> evolve(const LevelPopulations& p0, const RateConstants& c,
                                     double horizon, double dt = kDefaultDt);

/// Final state only; same integrator as evolve().
LevelPopulations evolve_to(const LevelPopulations& p0, const RateConstants& c, double horizon,
                           double dt = kDefaultDt);

/// Populations after optical pumping: equal ground populations, 10 us with
/// the laser on, then 10 us dark so excited and singlet levels relax.
LevelPopulations optically_pumped_state(const RateConstants& c, double dt = kDefaultDt);

/// Ground-state (m0, m1) shares of optically_pumped_state().
std::pair<double, double> initial_polarization(const RateConstants& c, double dt = kDefaultDt);

enum class SpinPreparation { m0, m1 };

/// Expected detected photons after the readout laser switches on, for both
/// spin preparations. The m1 preparation swaps the pumped ground
/// populations (ideal pi pulse).
struct PLCurve {
  double bin_width = 20e-9;
  double horizon = 0.0;
  double dt = kDefaultDt;
  std::vector<double> counts_m0;      ///< per bin_width bin
  std::vector<double> counts_m1;
  std::vector<double> cumulative_m0;  ///< every dt, first entry 0 at t=0
  std::vector<double> cumulative_m1;

  std::size_t bin_count() const { return counts_m0.size(); }
  /// Cumulative expected detections up to t, linearly interpolated on the dt
  /// grid. Throws RangeError for t outside [0, horizon].
  double cumulative(SpinPreparation prep, double t) const;
};

inline constexpr double kDefaultPLHorizon = 2.0e-6;

/// Throws RangeError unless horizon >= 700 ns and the horizon is a whole
/// number of bins.
PLCurve pl_curve(const RateConstants& c, double horizon = kDefaultPLHorizon,
                 double bin_width = 20e-9, double dt = kDefaultDt);

/// Expected detections in (0, t_cut] for one preparation.
double detection_probability(const PLCurve& curve, SpinPreparation prep, double t_cut);

/// (N0 - N1) / sqrt((N0 + N1) / 2) with N the cumulative counts up to t_det.
double snr(double n0, double n1);
double snr(const PLCurve& curve, double t_det);

/// Bin edge maximizing snr(); resolution one bin width, first maximum wins.
double optimize_cutoff(const PLCurve& curve);

/// Ordered arrival-time bin edges.
struct TimeBinning {
  std::vector<double> edges;

  /// n equal bins on [0, end].
  static TimeBinning equal(std::size_t n, double end);
  /// The default 4 equal bins over [0, 700 ns].
  static TimeBinning default_bins() { return equal(4, 700e-9); }
  std::size_t bin_count() const { return edges.empty() ? 0 : edges.size() - 1; }
  void validate() const;
};

/// Binned detection model from the curves; totals equal the cumulative
/// counts at the last edge.
DetectionModel bin_probabilities(const PLCurve& curve, const TimeBinning& binning);

}  // namespace nvqpe
