#include "nvqpe/physics.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "nvqpe/errors.hpp"

namespace nvqpe {

void RamseySetting::validate() const {
  if (!(tau > 0.0)) throw RangeError("RamseySetting: tau must be positive");
  if (!(t2_star > 0.0)) throw RangeError("RamseySetting: t2_star must be positive");
  if (!(theta >= 0.0 && theta < 2.0 * std::numbers::pi))
    throw RangeError("RamseySetting: theta must lie in [0, 2pi)");
}

DetectionModel DetectionModel::totals(double p_m0, double p_m1) {
  DetectionModel m;
  m.p_click_m0 = p_m0;
  m.p_click_m1 = p_m1;
  m.validate();
  return m;
}

DetectionModel DetectionModel::from_bins(std::vector<BinProbabilities> bins) {
  DetectionModel m;
  for (const auto& b : bins) {
    m.p_click_m0 += b.p_m0;
    m.p_click_m1 += b.p_m1;
  }
  m.binned = std::move(bins);
  m.validate();
  return m;
}

void DetectionModel::validate() const {
  if (!(p_click_m1 > 0.0 && p_click_m1 <= p_click_m0 && p_click_m0 < 1.0))
    throw RangeError("DetectionModel: require 0 < p_click_m1 <= p_click_m0 < 1");
  if (!binned) return;
  if (binned->empty()) throw RangeError("DetectionModel: empty bin list");
  double s0 = 0.0, s1 = 0.0;
  for (std::size_t i = 0; i < binned->size(); ++i) {
    const auto& b = (*binned)[i];
    if (!(b.p_m0 >= 0.0 && b.p_m0 <= 1.0 && b.p_m1 >= 0.0 && b.p_m1 <= 1.0))
      throw RangeError("DetectionModel: bin " + std::to_string(i) + " probability outside [0,1]");
    if (!(b.bin.end > b.bin.start))
      throw RangeError("DetectionModel: bin " + std::to_string(i) + " has non-positive width");
    s0 += b.p_m0;
    s1 += b.p_m1;
  }
  if (std::abs(s0 - p_click_m0) > 1e-12 || std::abs(s1 - p_click_m1) > 1e-12)
    throw RangeError("DetectionModel: bin sums do not match totals");
}

double decay_factor(const RamseySetting& s) {
  const double x = s.tau / s.t2_star;
  return std::exp(-x * x);
}

double fringe(double f_hz, const RamseySetting& s) {
  return std::cos(2.0 * std::numbers::pi * f_hz * s.tau - s.theta);
}

double spin_probability(int u, double f_hz, const RamseySetting& s) {
  if (u != 0 && u != 1) throw RangeError("spin_probability: outcome must be 0 or 1");
  const double sign = (u == 0) ? 1.0 : -1.0;
  return 0.5 * (1.0 + sign * decay_factor(s) * fringe(f_hz, s));
}

double alpha(const DetectionModel& m) { return 0.5 * (m.p_click_m0 + m.p_click_m1); }

double visibility(const DetectionModel& m, const RamseySetting& s) {
  const double sum = m.p_click_m0 + m.p_click_m1;
  if (sum == 0.0) return 0.0;
  return (m.p_click_m0 - m.p_click_m1) / sum * decay_factor(s);
}

double click_probability(double f_hz, const RamseySetting& s, const DetectionModel& m) {
  return mixture_click(m.p_click_m0, m.p_click_m1, decay_factor(s), fringe(f_hz, s));
}

double no_click_probability(double f_hz, const RamseySetting& s, const DetectionModel& m) {
  return 1.0 - click_probability(f_hz, s, m);
}

double binned_click_probability(std::size_t bin_index, double f_hz, const RamseySetting& s,
                                const DetectionModel& m) {
  if (!m.binned) throw UnconfiguredBinsError();
  if (bin_index >= m.binned->size())
    throw RangeError("binned_click_probability: bin index " + std::to_string(bin_index) +
                     " out of range");
  const auto& b = (*m.binned)[bin_index];
  return mixture_click(b.p_m0, b.p_m1, decay_factor(s), fringe(f_hz, s));
}

}  // namespace nvqpe
