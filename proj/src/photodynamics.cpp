#include "nvqpe/photodynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nvqpe/errors.hpp"

namespace nvqpe {

namespace {

constexpr double kPumpDuration = 10e-6;
constexpr double kRelaxDuration = 10e-6;

// State of the rate equations augmented with the running detected-photon
// integral: y = (P, N), dN/dt = eff * gamma_rad * (p0e + p1e).
using Augmented = std::array<double, 6>;

Augmented derivative(const RateMatrix& m, double emission_gain, const Augmented& y) {
  Augmented dy{};
  for (std::size_t i = 0; i < 5; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < 5; ++j) acc += m[i][j] * y[j];
    dy[i] = acc;
  }
  dy[5] = emission_gain * (y[3] + y[4]);
  return dy;
}

void rk4_step(const RateMatrix& m, double emission_gain, Augmented& y, double dt) {
  auto axpy = [](const Augmented& a, double h, const Augmented& b) {
    Augmented r{};
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = a[i] + h * b[i];
    return r;
  };
  const Augmented k1 = derivative(m, emission_gain, y);
  const Augmented k2 = derivative(m, emission_gain, axpy(y, 0.5 * dt, k1));
  const Augmented k3 = derivative(m, emission_gain, axpy(y, 0.5 * dt, k2));
  const Augmented k4 = derivative(m, emission_gain, axpy(y, dt, k3));
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  for (double v : y)
    if (!std::isfinite(v)) throw IntegrationError("rate-equation state became non-finite");
}

std::size_t step_count(double horizon, double dt) {
  if (!(dt > 0.0)) throw RangeError("evolve: dt must be positive");
  if (!(horizon >= dt)) throw RangeError("evolve: horizon must be at least dt");
  return static_cast<std::size_t>(std::llround(horizon / dt));
}

Augmented augment(const LevelPopulations& p) {
  const auto a = p.as_array();
  return {a[0], a[1], a[2], a[3], a[4], 0.0};
}

LevelPopulations populations(const Augmented& y) { return {y[0], y[1], y[2], y[3], y[4]}; }

// Cumulative detections on the dt grid for one starting state.
std::vector<double> cumulative_emission(const LevelPopulations& start, const RateConstants& c,
                                        std::size_t steps, double dt) {
  const RateMatrix m = build_rate_matrix(c);
  const double gain = c.collection_eff * c.gamma_rad;
  Augmented y = augment(start);
  std::vector<double> out;
  out.reserve(steps + 1);
  out.push_back(0.0);
  for (std::size_t i = 0; i < steps; ++i) {
    rk4_step(m, gain, y, dt);
    out.push_back(y[5]);
  }
  return out;
}

}  // namespace

void RateConstants::validate() const {
  const double rates[] = {gamma_rad, k0s, k1s, ks0, ks1, k_exc};
  for (double r : rates)
    if (!(r >= 0.0) || !std::isfinite(r)) throw RangeError("RateConstants: rates must be >= 0");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw RangeError("RateConstants: epsilon outside [0,1]");
  if (!(collection_eff >= 0.0 && collection_eff <= 1.0))
    throw RangeError("RateConstants: collection_eff outside [0,1]");
}

RateMatrix build_rate_matrix(const RateConstants& c) {
  const double k = c.k_exc;
  const double e = c.epsilon;
  const double g = c.gamma_rad;
  RateMatrix m{};
  m[0] = {-k - e * k, 0.0, c.ks0, g, e * g};
  m[1] = {0.0, -k - e * k, c.ks1, e * g, g};
  m[2] = {0.0, 0.0, -c.ks1 - c.ks0, c.k0s, c.k1s};
  m[3] = {k, e * k, 0.0, -c.k0s - g - e * g, 0.0};
  m[4] = {e * k, k, 0.0, 0.0, -c.k1s - g - e * g};
  return m;
}

std::vector<LevelPopulations> evolve(const LevelPopulations& p0, const RateConstants& c,
                                     double horizon, double dt) {
  const std::size_t steps = step_count(horizon, dt);
  const RateMatrix m = build_rate_matrix(c);
  Augmented y = augment(p0);
  std::vector<LevelPopulations> traj;
  traj.reserve(steps + 1);
  traj.push_back(p0);
  for (std::size_t i = 0; i < steps; ++i) {
    rk4_step(m, 0.0, y, dt);
    traj.push_back(populations(y));
  }
  return traj;
}

LevelPopulations evolve_to(const LevelPopulations& p0, const RateConstants& c, double horizon,
                           double dt) {
  const std::size_t steps = step_count(horizon, dt);
  const RateMatrix m = build_rate_matrix(c);
  Augmented y = augment(p0);
  for (std::size_t i = 0; i < steps; ++i) rk4_step(m, 0.0, y, dt);
  return populations(y);
}

LevelPopulations optically_pumped_state(const RateConstants& c, double dt) {
  c.validate();
  const LevelPopulations unpolarized{0.5, 0.5, 0.0, 0.0, 0.0};
  const LevelPopulations pumped = evolve_to(unpolarized, c, kPumpDuration, dt);
  RateConstants dark = c;
  dark.k_exc = 0.0;
  return evolve_to(pumped, dark, kRelaxDuration, dt);
}

std::pair<double, double> initial_polarization(const RateConstants& c, double dt) {
  const LevelPopulations p = optically_pumped_state(c, dt);
  const double ground = p.p0g + p.p1g;
  return {p.p0g / ground, p.p1g / ground};
}

double PLCurve::cumulative(SpinPreparation prep, double t) const {
  const auto& cum = (prep == SpinPreparation::m0) ? cumulative_m0 : cumulative_m1;
  if (!(t >= 0.0) || t > horizon * (1.0 + 1e-12))
    throw RangeError("PLCurve: time " + std::to_string(t) + " s outside [0, horizon]");
  double pos = t / dt;
  const double nearest = std::round(pos);
  if (std::abs(pos - nearest) < 1e-9) pos = nearest;
  const auto last = static_cast<double>(cum.size() - 1);
  pos = std::min(pos, last);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (static_cast<double>(i) == pos) return cum[i];
  const double frac = pos - static_cast<double>(i);
  return cum[i] + frac * (cum[i + 1] - cum[i]);
}

PLCurve pl_curve(const RateConstants& c, double horizon, double bin_width, double dt) {
  c.validate();
  if (!(horizon >= 700e-9 * (1.0 - 1e-12)))
    throw RangeError("pl_curve: horizon must be at least 700 ns");
  const double bins_real = horizon / bin_width;
  const auto bins = static_cast<std::size_t>(std::llround(bins_real));
  if (bins == 0 || std::abs(bins_real - static_cast<double>(bins)) > 1e-6)
    throw RangeError("pl_curve: horizon must be a whole number of bins");
  const double steps_real = bin_width / dt;
  const auto steps_per_bin = static_cast<std::size_t>(std::llround(steps_real));
  if (steps_per_bin == 0 || std::abs(steps_real - static_cast<double>(steps_per_bin)) > 1e-6)
    throw RangeError("pl_curve: bin width must be a whole number of integration steps");

  const LevelPopulations pumped0 = optically_pumped_state(c, dt);
  LevelPopulations pumped1 = pumped0;
  std::swap(pumped1.p0g, pumped1.p1g);

  PLCurve curve;
  curve.bin_width = bin_width;
  curve.horizon = static_cast<double>(bins) * bin_width;
  curve.dt = dt;
  const std::size_t steps = bins * steps_per_bin;
  curve.cumulative_m0 = cumulative_emission(pumped0, c, steps, dt);
  curve.cumulative_m1 = cumulative_emission(pumped1, c, steps, dt);
  curve.counts_m0.resize(bins);
  curve.counts_m1.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t lo = b * steps_per_bin, hi = (b + 1) * steps_per_bin;
    curve.counts_m0[b] = curve.cumulative_m0[hi] - curve.cumulative_m0[lo];
    curve.counts_m1[b] = curve.cumulative_m1[hi] - curve.cumulative_m1[lo];
  }
  return curve;
}

double detection_probability(const PLCurve& curve, SpinPreparation prep, double t_cut) {
  if (!(t_cut > 0.0)) throw RangeError("detection_probability: t_cut must be positive");
  return curve.cumulative(prep, t_cut);
}

double snr(double n0, double n1) {
  const double mean = 0.5 * (n0 + n1);
  if (!(mean > 0.0)) throw RangeError("snr: undefined for N0 + N1 = 0");
  return (n0 - n1) / std::sqrt(mean);
}

double snr(const PLCurve& curve, double t_det) {
  return snr(curve.cumulative(SpinPreparation::m0, t_det),
             curve.cumulative(SpinPreparation::m1, t_det));
}

double optimize_cutoff(const PLCurve& curve) {
  double best_t = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  double n0 = 0.0, n1 = 0.0;
  for (std::size_t b = 0; b < curve.bin_count(); ++b) {
    n0 += curve.counts_m0[b];
    n1 += curve.counts_m1[b];
    if (!(n0 + n1 > 0.0)) continue;
    const double s = snr(n0, n1);
    if (s > best) {
      best = s;
      best_t = static_cast<double>(b + 1) * curve.bin_width;
    }
  }
  if (best_t == 0.0) throw RangeError("optimize_cutoff: curves carry no detections");
  return best_t;
}

TimeBinning TimeBinning::equal(std::size_t n, double end) {
  if (n == 0 || !(end > 0.0)) throw RangeError("TimeBinning::equal: need n >= 1 and end > 0");
  TimeBinning b;
  b.edges.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) b.edges[i] = end * static_cast<double>(i) / static_cast<double>(n);
  return b;
}

void TimeBinning::validate() const {
  if (edges.size() < 2) throw RangeError("TimeBinning: need at least two edges");
  if (edges.front() != 0.0) throw RangeError("TimeBinning: first edge must be 0");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw RangeError("TimeBinning: edges must strictly increase");
}

DetectionModel bin_probabilities(const PLCurve& curve, const TimeBinning& binning) {
  binning.validate();
  if (binning.edges.back() > curve.horizon * (1.0 + 1e-12))
    throw RangeError("bin_probabilities: binning extends beyond the curve horizon");
  std::vector<BinProbabilities> bins;
  bins.reserve(binning.bin_count());
  for (std::size_t i = 0; i + 1 < binning.edges.size(); ++i) {
    const double lo = binning.edges[i], hi = binning.edges[i + 1];
    bins.push_back({{lo, hi},
                    curve.cumulative(SpinPreparation::m0, hi) - curve.cumulative(SpinPreparation::m0, lo),
                    curve.cumulative(SpinPreparation::m1, hi) - curve.cumulative(SpinPreparation::m1, lo)});
  }
  return DetectionModel::from_bins(std::move(bins));
}

}  // namespace nvqpe
