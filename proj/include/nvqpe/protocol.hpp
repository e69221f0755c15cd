#pragma once

// Phase-estimation schedules with exponentially decreasing interaction
// times 2^k tau0 and closed-form time accounting.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nvqpe/physics.hpp"

namespace nvqpe {

enum class Mode { threshold, batch, smu, batch_timed, smu_timed };

std::string_view to_string(Mode m);
/// Accepts "threshold", "batch", "smu", "batch-timed", "smu-timed".
std::optional<Mode> parse_mode(std::string_view s);
inline bool is_timed(Mode m) { return m == Mode::batch_timed || m == Mode::smu_timed; }

struct ProtocolParams {
  int K = 6;                          ///< largest exponent
  int G = 15;                         ///< repetitions at the longest time
  int F = 1;                          ///< extra repetitions per halving
  long R = 2500;                      ///< Ramseys per setting
  double tau0 = 12.5e-9;              ///< shortest interaction time [s]
  double t2_star = 1.3e-6;            ///< [s]
  double overhead_per_ramsey = 3e-6;  ///< initialization + readout [s]
  Mode mode = Mode::batch;

  /// Settings at level k: M_k = G + (K - k) F.
  int settings_at(int k) const { return G + (K - k) * F; }
  /// Throws RangeError unless K >= 0, G >= 1, F >= 0, R >= 1, tau0 > 0, t2_star > 0,
  /// overhead >= 0.
  void validate() const;
  /// 2^K tau0 > T2*.
  bool exceeds_coherence() const;

  bool operator==(const ProtocolParams&) const = default;
};

struct ScheduleEntry {
  int k = 0;
  double tau = 0.0;
  double theta = 0.0;
  long repetitions = 0;
};

using Schedule = std::vector<ScheduleEntry>;

/// k from K down to 0; within a level theta_m = m pi / M_k for m = 0 .. M_k - 1.
Schedule schedule(const ProtocolParams& p);

/// sum_k M_k = (K + 1)(2G + KF) / 2.
std::int64_t setting_count(const ProtocolParams& p);

/// Free-evolution time in units of tau0 * R: 2^(K+1)(G+F) - (K+2)F - G.
std::int64_t evolution_ticks(const ProtocolParams& p);

/// overhead * R (1 + K)(KF + 2G) / 2.
double total_overhead(const ProtocolParams& p);

/// evolution_ticks * tau0 * R + total_overhead.
double total_time(const ProtocolParams& p);

/// Brute-force sum over a schedule of (tau + overhead) * repetitions.
double schedule_time(const Schedule& s, double overhead_per_ramsey);

RamseySetting ramsey_setting(const ScheduleEntry& e, double t2_star);

}  // namespace nvqpe
