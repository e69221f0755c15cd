#include "nvqpe/protocol.hpp"

#include <numbers>

#include "nvqpe/errors.hpp"

namespace nvqpe {

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::threshold: return "threshold";
    case Mode::batch: return "batch";
    case Mode::smu: return "smu";
    case Mode::batch_timed: return "batch-timed";
    case Mode::smu_timed: return "smu-timed";
  }
  return "unknown";
}

std::optional<Mode> parse_mode(std::string_view s) {
  for (Mode m : {Mode::threshold, Mode::batch, Mode::smu, Mode::batch_timed, Mode::smu_timed})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

void ProtocolParams::validate() const {
  if (K < 0 || K > 30) throw RangeError("ProtocolParams: K must lie in [0, 30]");
  if (G < 1) throw RangeError("ProtocolParams: G must be >= 1");
  if (F < 0) throw RangeError("ProtocolParams: F must be >= 0");
  if (R < 1) throw RangeError("ProtocolParams: R must be >= 1");
  if (!(tau0 > 0.0)) throw RangeError("ProtocolParams: tau0 must be positive");
  if (!(t2_star > 0.0)) throw RangeError("ProtocolParams: t2_star must be positive");
  if (!(overhead_per_ramsey >= 0.0)) throw RangeError("ProtocolParams: overhead must be >= 0");
}

bool ProtocolParams::exceeds_coherence() const {
  return static_cast<double>(std::int64_t{1} << K) * tau0 > t2_star;
}

Schedule schedule(const ProtocolParams& p) {
  p.validate();
  Schedule s;
  s.reserve(static_cast<std::size_t>(setting_count(p)));
  for (int k = p.K; k >= 0; --k) {
    const int mk = p.settings_at(k);
    const double tau = static_cast<double>(std::int64_t{1} << k) * p.tau0;
    for (int m = 0; m < mk; ++m)
      s.push_back({k, tau, static_cast<double>(m) * std::numbers::pi / static_cast<double>(mk), p.R});
  }
  return s;
}

std::int64_t setting_count(const ProtocolParams& p) {
  const std::int64_t K = p.K, G = p.G, F = p.F;
  return (K + 1) * (2 * G + K * F) / 2;
}

std::int64_t evolution_ticks(const ProtocolParams& p) {
  const std::int64_t K = p.K, G = p.G, F = p.F;
  return (std::int64_t{1} << (K + 1)) * (G + F) - (K + 2) * F - G;
}

double total_overhead(const ProtocolParams& p) {
  const std::int64_t K = p.K, G = p.G, F = p.F;
  const std::int64_t ramseys_times_two = static_cast<std::int64_t>(p.R) * (1 + K) * (K * F + 2 * G);
  return p.overhead_per_ramsey * static_cast<double>(ramseys_times_two) / 2.0;
}

double total_time(const ProtocolParams& p) {
  return static_cast<double>(evolution_ticks(p)) * p.tau0 * static_cast<double>(p.R) +
         total_overhead(p);
}

double schedule_time(const Schedule& s, double overhead_per_ramsey) {
  double t = 0.0;
  for (const auto& e : s) t += (e.tau + overhead_per_ramsey) * static_cast<double>(e.repetitions);
  return t;
}

RamseySetting ramsey_setting(const ScheduleEntry& e, double t2_star) {
  return {e.tau, e.theta, t2_star};
}

}  // namespace nvqpe
