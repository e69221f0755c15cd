#pragma once

// Grid kernels behind the posterior updates. Each kernel has a serial
// reference and an OpenMP version. Work is split into fixed blocks of
// kReductionBlock points that do not depend on the thread count; the block
// kernels evaluate into aligned scratch, so every point takes the same
// code path in the serial and the parallel version and results are
// bit-identical for any number of threads.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace nvqpe::kernels {

enum class Exec { serial, parallel };

inline constexpr std::size_t kReductionBlock = 1024;

/// Aligned scratch for one block.
using Block = Eigen::Array<double, Eigen::Dynamic, 1, Eigen::ColMajor, static_cast<int>(kReductionBlock), 1>;
using ConstMap = Eigen::Map<const Eigen::ArrayXd>;
using Map = Eigen::Map<Eigen::ArrayXd>;

inline std::size_t block_count(std::size_t n) { return (n + kReductionBlock - 1) / kReductionBlock; }

inline ConstMap block_of(std::span<const double> v, std::size_t b) {
  const std::size_t lo = b * kReductionBlock;
  return ConstMap(v.data() + lo, static_cast<Eigen::Index>(std::min(kReductionBlock, v.size() - lo)));
}

// out = in + fill(lo, scratch) over block b.
template <class Fill>
void accumulate_block(std::span<const double> in, std::span<double> out, std::size_t b, Fill& fill) {
  const std::size_t lo = b * kReductionBlock;
  const auto n = static_cast<Eigen::Index>(std::min(kReductionBlock, in.size() - lo));
  Block buf(n);
  fill(lo, buf);
  Map(out.data() + lo, n) = ConstMap(in.data() + lo, n) + buf;
}

/// out = in + loglik over the grid, where fill(lo, buf) writes the log
/// likelihood of points lo .. lo + buf.size() - 1 into buf.
template <class Fill>
void accumulate_blocks_serial(std::span<const double> in, std::span<double> out, Fill&& fill) {
  for (std::size_t b = 0; b < block_count(in.size()); ++b) accumulate_block(in, out, b, fill);
}

template <class Fill>
void accumulate_blocks_parallel(std::span<const double> in, std::span<double> out, Fill&& fill) {
  const auto nb = static_cast<std::ptrdiff_t>(block_count(in.size()));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b) accumulate_block(in, out, static_cast<std::size_t>(b), fill);
}

/// out[j] = in[j] + loglik(j).
template <class LogLik>
void accumulate_serial(std::span<const double> in, std::span<double> out, LogLik&& loglik) {
  for (std::size_t j = 0; j < in.size(); ++j) out[j] = in[j] + loglik(j);
}

template <class LogLik>
void accumulate_parallel(std::span<const double> in, std::span<double> out, LogLik&& loglik) {
  const auto n = static_cast<std::ptrdiff_t>(in.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    const auto u = static_cast<std::size_t>(j);
    out[u] = in[u] + loglik(u);
  }
}

/// Largest entry; NaN entries propagate as NaN.
inline double max_serial(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < block_count(v.size()); ++b) {
    const double x = block_of(v, b).maxCoeff<Eigen::PropagateNaN>();
    if (std::isnan(x)) return x;
    m = std::max(m, x);
  }
  return m;
}

inline double max_parallel(std::span<const double> v) {
  const std::size_t blocks = block_count(v.size());
  std::vector<double> partial(blocks);
  const auto nb = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b)
    partial[static_cast<std::size_t>(b)] = block_of(v, static_cast<std::size_t>(b)).maxCoeff<Eigen::PropagateNaN>();
  return max_serial(partial);
}

/// sum_j exp(v[j] - shift), accumulated per block.
inline double sum_exp_block(std::span<const double> v, double shift, std::size_t b) {
  const ConstMap x = block_of(v, b);
  Block buf(x.size());
  buf = (x - shift).exp();
  return buf.sum();
}

inline double sum_exp_serial(std::span<const double> v, double shift) {
  double s = 0.0;
  for (std::size_t b = 0; b < block_count(v.size()); ++b) s += sum_exp_block(v, shift, b);
  return s;
}

inline double sum_exp_parallel(std::span<const double> v, double shift) {
  const std::size_t blocks = block_count(v.size());
  std::vector<double> partial(blocks);
  const auto nb = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b)
    partial[static_cast<std::size_t>(b)] = sum_exp_block(v, shift, static_cast<std::size_t>(b));
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

inline void subtract_serial(std::span<double> v, double c) {
  for (double& x : v) x -= c;
}

inline void subtract_parallel(std::span<double> v, double c) {
  const auto n = static_cast<std::ptrdiff_t>(v.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < n; ++j) v[static_cast<std::size_t>(j)] -= c;
}

/// Shifts log weights so that logsumexp(v) = 0. Returns false, leaving v
/// untouched, when no entry is finite (the distribution has no mass).
inline bool normalize_log(std::span<double> v, Exec exec) {
  const double m = (exec == Exec::parallel) ? max_parallel(v) : max_serial(v);
  if (!std::isfinite(m)) return false;
  const double s = (exec == Exec::parallel) ? sum_exp_parallel(v, m) : sum_exp_serial(v, m);
  if (!std::isfinite(s) || !(s > 0.0)) return false;
  const double shift = m + std::log(s);
  if (exec == Exec::parallel)
    subtract_parallel(v, shift);
  else
    subtract_serial(v, shift);
  return true;
}

}  // namespace nvqpe::kernels
