#include "nvqpe/inference.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace nvqpe {

namespace {

void check_fringe(const FrequencyDistribution& dist, std::span<const double> fringe) {
  if (fringe.size() != dist.size()) throw RangeError("fringe table size does not match the grid");
}

void check_binary(int v, const char* what) {
  if (v != 0 && v != 1) throw RangeError(std::string(what) + " must be 0 or 1");
}

const std::vector<BinProbabilities>& require_bins(const DetectionModel& m) {
  if (!m.binned) throw UnconfiguredBinsError();
  return *m.binned;
}

using kernels::Block;

// Click probability alpha (1 + V fringe) over one block, with alpha and V
// formed as in mixture_click().
struct ClickLine {
  double a = 0.0;
  double av = 0.0;
  ClickLine(double p_m0, double p_m1, double decay) {
    const double sum = p_m0 + p_m1;
    if (sum == 0.0) return;
    a = 0.5 * sum;
    av = a * ((p_m0 - p_m1) / sum * decay);
  }
  void eval(std::span<const double> fringe, std::size_t lo, Block& out) const {
    out = a + av * kernels::ConstMap(fringe.data() + lo, out.size());
  }
};

// buf += r log p + (R - r) log(1 - p) for p in `p`, skipping zero-count
// terms so that p in {0, 1} with a zero count contributes nothing.
void add_binomial_log(Block& buf, const Block& p, long r, long misses) {
  if (r > 0) buf += static_cast<double>(r) * p.log();
  if (misses > 0) buf += static_cast<double>(misses) * (1.0 - p).log();
}

double gaussian_variance(long r, long R) {
  const double rr = static_cast<double>(r);
  const double n = static_cast<double>(R);
  return std::max(rr * (n - rr) / n, kVarianceFloor);
}

}  // namespace

FrequencyDistribution::FrequencyDistribution(double tau0, std::size_t n) : tau0_(tau0) {
  if (!(tau0 > 0.0)) throw RangeError("FrequencyDistribution: tau0 must be positive");
  if (n < 2) throw RangeError("FrequencyDistribution: need at least 2 grid points");
  grid_.resize(n);
  const double df = 1.0 / (static_cast<double>(n) * tau0);
  const double lo = -0.5 / tau0;
  for (std::size_t j = 0; j < n; ++j) grid_[j] = lo + static_cast<double>(j) * df;
  log_mass_.assign(n, -std::log(static_cast<double>(n)));
}

FrequencyDistribution FrequencyDistribution::uniform(double tau0, std::size_t n) {
  return FrequencyDistribution(tau0, n);
}

FrequencyDistribution FrequencyDistribution::from_masses(double tau0, std::span<const double> masses) {
  FrequencyDistribution d(tau0, masses.size());
  for (std::size_t j = 0; j < masses.size(); ++j) {
    if (!(masses[j] >= 0.0) || !std::isfinite(masses[j]))
      throw RangeError("from_masses: masses must be finite and non-negative");
    d.log_mass_[j] = std::log(masses[j]);
  }
  if (!kernels::normalize_log(d.log_mass_, Exec::serial))
    throw RangeError("from_masses: total mass must be positive");
  return d;
}

double FrequencyDistribution::mass(std::size_t j) const { return std::exp(log_mass_[j]); }

std::vector<double> FrequencyDistribution::masses() const {
  std::vector<double> out(log_mass_.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::exp(log_mass_[j]);
  return out;
}

void BatchRecord::validate() const {
  if (R < 1) throw RangeError("BatchRecord: R must be >= 1");
  if (r < 0 || r > R) throw RangeError("BatchRecord: r must lie in [0, R]");
}

long BinnedBatchRecord::clicks() const {
  long s = 0;
  for (long c : counts) s += c;
  return s;
}

void BinnedBatchRecord::validate() const {
  if (R < 1) throw RangeError("BinnedBatchRecord: R must be >= 1");
  for (long c : counts)
    if (c < 0) throw RangeError("BinnedBatchRecord: negative bin count");
  if (clicks() > R) throw RangeError("BinnedBatchRecord: more clicks than repetitions");
}

std::vector<double> fringe_values(const FrequencyDistribution& dist, const RamseySetting& s) {
  std::vector<double> out(dist.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = fringe(dist.frequency(j), s);
  return out;
}

PhaseBasis::PhaseBasis(const FrequencyDistribution& dist, double tau)
    : tau_(tau), cos_(dist.size()), sin_(dist.size()) {
  for (std::size_t j = 0; j < dist.size(); ++j) {
    const double phase = 2.0 * std::numbers::pi * dist.frequency(j) * tau;
    cos_[j] = std::cos(phase);
    sin_[j] = std::sin(phase);
  }
}

void PhaseBasis::fringe(double theta, std::vector<double>& out) const {
  const double c = std::cos(theta), s = std::sin(theta);
  out.resize(cos_.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = cos_[j] * c + sin_[j] * s;
}

FrequencyDistribution uniform_prior(double tau0, std::size_t n) {
  return FrequencyDistribution::uniform(tau0, n);
}

void update_threshold(FrequencyDistribution& dist, int u, const RamseySetting& s, Exec exec) {
  update_threshold(dist, u, s, fringe_values(dist, s), exec);
}

void update_threshold(FrequencyDistribution& dist, int u, const RamseySetting& s,
                      std::span<const double> fringe, Exec exec) {
  check_binary(u, "threshold outcome");
  check_fringe(dist, fringe);
  const double signed_decay = (u == 0 ? 1.0 : -1.0) * decay_factor(s);
  dist.apply_blocks(
      [&](std::size_t lo, Block& buf) {
        buf = (0.5 + (0.5 * signed_decay) * kernels::ConstMap(fringe.data() + lo, buf.size())).log();
      },
      exec);
}

int threshold_outcome(long r, long R, const DetectionModel& m) {
  if (R < 1 || r < 0 || r > R) throw RangeError("threshold_outcome: require 0 <= r <= R, R >= 1");
  return static_cast<double>(r) > static_cast<double>(R) * alpha(m) ? 0 : 1;
}

void update_click(FrequencyDistribution& dist, int d, const RamseySetting& s,
                  const DetectionModel& m, Exec exec) {
  update_click(dist, d, s, m, fringe_values(dist, s), exec);
}

void update_click(FrequencyDistribution& dist, int d, const RamseySetting& s,
                  const DetectionModel& m, std::span<const double> fringe, Exec exec) {
  check_binary(d, "click outcome");
  check_fringe(dist, fringe);
  const ClickLine line(m.p_click_m0, m.p_click_m1, decay_factor(s));
  dist.apply_blocks(
      [&](std::size_t lo, Block& buf) {
        Block p(buf.size());
        line.eval(fringe, lo, p);
        buf.setZero();
        add_binomial_log(buf, p, d, 1 - d);
      },
      exec);
}

void update_batch_gaussian(FrequencyDistribution& dist, const BatchRecord& rec,
                           const DetectionModel& m, Exec exec) {
  update_batch_gaussian(dist, rec, m, fringe_values(dist, rec.setting), exec);
}

void update_batch_gaussian(FrequencyDistribution& dist, const BatchRecord& rec,
                           const DetectionModel& m, std::span<const double> fringe, Exec exec) {
  rec.validate();
  check_fringe(dist, fringe);
  const ClickLine line(m.p_click_m0, m.p_click_m1, decay_factor(rec.setting));
  const double r = static_cast<double>(rec.r), n = static_cast<double>(rec.R);
  const double inv_two_var = 0.5 / gaussian_variance(rec.r, rec.R);
  dist.apply_blocks(
      [&](std::size_t lo, Block& buf) {
        Block p(buf.size());
        line.eval(fringe, lo, p);
        buf = -(r - n * p).square() * inv_two_var;
      },
      exec);
}

void update_batch_exact(FrequencyDistribution& dist, const BatchRecord& rec,
                        const DetectionModel& m, Exec exec) {
  update_batch_exact(dist, rec, m, fringe_values(dist, rec.setting), exec);
}

void update_batch_exact(FrequencyDistribution& dist, const BatchRecord& rec,
                        const DetectionModel& m, std::span<const double> fringe, Exec exec) {
  rec.validate();
  check_fringe(dist, fringe);
  const ClickLine line(m.p_click_m0, m.p_click_m1, decay_factor(rec.setting));
  dist.apply_blocks(
      [&](std::size_t lo, Block& buf) {
        Block p(buf.size());
        line.eval(fringe, lo, p);
        buf.setZero();
        add_binomial_log(buf, p, rec.r, rec.R - rec.r);
      },
      exec);
}

void update_binned_gaussian(FrequencyDistribution& dist, const BinnedBatchRecord& rec,
                            const DetectionModel& m, Exec exec) {
  update_binned_gaussian(dist, rec, m, fringe_values(dist, rec.setting), exec);
}

void update_binned_gaussian(FrequencyDistribution& dist, const BinnedBatchRecord& rec,
                            const DetectionModel& m, std::span<const double> fringe, Exec exec) {
  const auto& bins = require_bins(m);
  rec.validate();
  if (rec.counts.size() != bins.size())
    throw RangeError("update_binned_gaussian: count vector length does not match the bins");
  check_fringe(dist, fringe);
  const double decay = decay_factor(rec.setting);
  const double n = static_cast<double>(rec.R);
  std::vector<ClickLine> lines;
  std::vector<double> inv_two_var(bins.size());
  for (std::size_t i = 0; i < bins.size(); ++i) {
    lines.emplace_back(bins[i].p_m0, bins[i].p_m1, decay);
    inv_two_var[i] = 0.5 / gaussian_variance(rec.counts[i], rec.R);
  }
  dist.apply_blocks(
      [&](std::size_t lo, Block& buf) {
        Block p(buf.size());
        buf.setZero();
        for (std::size_t i = 0; i < bins.size(); ++i) {
          lines[i].eval(fringe, lo, p);
          buf += -(static_cast<double>(rec.counts[i]) - n * p).square() * inv_two_var[i];
        }
      },
      exec);
}

void update_binned_click(FrequencyDistribution& dist, std::optional<std::size_t> bin,
                         const RamseySetting& s, const DetectionModel& m, Exec exec) {
  update_binned_click(dist, bin, s, m, fringe_values(dist, s), exec);
}

void update_binned_click(FrequencyDistribution& dist, std::optional<std::size_t> bin,
                         const RamseySetting& s, const DetectionModel& m,
                         std::span<const double> fringe, Exec exec) {
  const auto& bins = require_bins(m);
  check_fringe(dist, fringe);
  const double decay = decay_factor(s);
  if (bin && *bin >= bins.size()) throw RangeError("update_binned_click: bin index out of range");
  const ClickLine line = bin ? ClickLine(bins[*bin].p_m0, bins[*bin].p_m1, decay)
                             : ClickLine(m.p_click_m0, m.p_click_m1, decay);
  dist.apply_blocks(
      [&](std::size_t lo, Block& buf) {
        Block p(buf.size());
        line.eval(fringe, lo, p);
        buf.setZero();
        add_binomial_log(buf, p, bin ? 1 : 0, bin ? 0 : 1);
      },
      exec);
}

void update_binned_exact(FrequencyDistribution& dist, const BinnedBatchRecord& rec,
                         const DetectionModel& m, Exec exec) {
  update_binned_exact(dist, rec, m, fringe_values(dist, rec.setting), exec);
}

void update_binned_exact(FrequencyDistribution& dist, const BinnedBatchRecord& rec,
                         const DetectionModel& m, std::span<const double> fringe, Exec exec) {
  const auto& bins = require_bins(m);
  rec.validate();
  if (rec.counts.size() != bins.size())
    throw RangeError("update_binned_exact: count vector length does not match the bins");
  check_fringe(dist, fringe);
  const double decay = decay_factor(rec.setting);
  std::vector<ClickLine> lines;
  for (const auto& b : bins) lines.emplace_back(b.p_m0, b.p_m1, decay);
  const ClickLine total(m.p_click_m0, m.p_click_m1, decay);
  const long misses = rec.R - rec.clicks();
  dist.apply_blocks(
      [&](std::size_t lo, Block& buf) {
        Block p(buf.size());
        buf.setZero();
        for (std::size_t i = 0; i < bins.size(); ++i) {
          if (rec.counts[i] == 0) continue;
          lines[i].eval(fringe, lo, p);
          add_binomial_log(buf, p, rec.counts[i], 0);
        }
        total.eval(fringe, lo, p);
        add_binomial_log(buf, p, 0, misses);
      },
      exec);
}

namespace {
std::complex<double> resultant(const FrequencyDistribution& dist) {
  std::complex<double> acc{0.0, 0.0};
  const double w = 2.0 * std::numbers::pi * dist.tau0();
  for (std::size_t j = 0; j < dist.size(); ++j) {
    const double p = dist.mass(j);
    if (p == 0.0) continue;
    const double phase = w * dist.frequency(j);
    acc += p * std::complex<double>(std::cos(phase), std::sin(phase));
  }
  return acc;
}
}  // namespace

double resultant_length(const FrequencyDistribution& dist) { return std::abs(resultant(dist)); }

double estimate(const FrequencyDistribution& dist, double min_resultant) {
  const auto z = resultant(dist);
  if (std::abs(z) < min_resultant)
    throw AmbiguousEstimateError("circular resultant vanishes; estimate undefined");
  return std::arg(z) / (2.0 * std::numbers::pi * dist.tau0());
}

}  // namespace nvqpe
