#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nvqpe/errors.hpp"
#include "nvqpe/inference.hpp"

using namespace nvqpe;
using std::numbers::pi;

namespace {

constexpr double kTau0 = 12.5e-9;
const DetectionModel kModel = DetectionModel::totals(0.03, 0.02);

double total_mass(const FrequencyDistribution& d) {
  double s = 0.0;
  for (double m : d.masses()) s += m;
  return s;
}

double max_abs_diff(const FrequencyDistribution& a, const FrequencyDistribution& b) {
  double md = 0.0;
  const auto ma = a.masses(), mb = b.masses();
  for (std::size_t j = 0; j < ma.size(); ++j) md = std::max(md, std::abs(ma[j] - mb[j]));
  return md;
}

// Normalized prior * likelihood(f) computed directly in linear space.
template <class L>
std::vector<double> brute_posterior(const FrequencyDistribution& prior, L&& lik) {
  std::vector<double> out(prior.size());
  double s = 0.0;
  for (std::size_t j = 0; j < out.size(); ++j) s += out[j] = prior.mass(j) * lik(prior.frequency(j));
  for (double& x : out) x /= s;
  return out;
}

void check_matches(const FrequencyDistribution& d, const std::vector<double>& expect, double tol) {
  for (std::size_t j = 0; j < expect.size(); ++j) REQUIRE(std::abs(d.mass(j) - expect[j]) <= tol * expect[j] + 1e-300);
}

FrequencyDistribution point_mass(std::size_t n, std::size_t at) {
  std::vector<double> m(n, 0.0);
  m[at] = 1.0;
  return FrequencyDistribution::from_masses(kTau0, m);
}

}  // namespace

TEST_CASE("uniform prior") {
  const auto d = uniform_prior(kTau0, 4096);
  CHECK(d.size() == 4096);
  CHECK(d.mass(17) == doctest::Approx(1.0 / 4096));
  CHECK(d.frequency(0) == doctest::Approx(-40e6));
  CHECK(d.frequency(4095) == doctest::Approx(40e6 - 1.0 / (4096 * kTau0)));
  CHECK(d.spacing() == doctest::Approx(80e6 / 4096));
  CHECK(std::abs(total_mass(d) - 1.0) < 1e-12);

  const auto two = uniform_prior(kTau0, 2);
  CHECK(two.mass(0) == doctest::Approx(0.5));
  CHECK(two.mass(1) == doctest::Approx(0.5));
  CHECK_THROWS_AS(uniform_prior(kTau0, 1), RangeError);
  CHECK_THROWS_AS(uniform_prior(0.0, 16), RangeError);
}

TEST_CASE("estimator") {
  CHECK_THROWS_AS(estimate(uniform_prior(kTau0)), AmbiguousEstimateError);
  CHECK(resultant_length(uniform_prior(kTau0)) < 1e-12);

  // Symmetric prior about 0 but broken symmetry through a bump: estimate 0.
  auto d = uniform_prior(kTau0, 1024);
  update_threshold(d, 0, {kTau0, 0.0, 1.3e-6});
  CHECK(std::abs(estimate(d)) < 1e-3);

  const std::size_t n = 8192;
  const auto grid = uniform_prior(kTau0, n).grid();
  const std::size_t j10 = static_cast<std::size_t>(std::lround((10e6 + 40e6) * n * kTau0));
  CHECK(estimate(point_mass(n, j10)) == doctest::Approx(grid[j10]).epsilon(1e-12));

  std::vector<double> g(n);
  const double sd = 200e3;
  for (std::size_t j = 0; j < n; ++j) g[j] = std::exp(-0.5 * std::pow((grid[j] - 39e6) / sd, 2));
  const auto gauss = FrequencyDistribution::from_masses(kTau0, g);
  CHECK(std::abs(estimate(gauss) - 39e6) <= gauss.spacing());

  // Scaling the masses before normalization does not move the estimate.
  for (double& x : g) x *= 1e-200;
  CHECK(estimate(FrequencyDistribution::from_masses(kTau0, g)) == doctest::Approx(estimate(gauss)).epsilon(1e-12));
}

TEST_CASE("threshold update") {
  const RamseySetting s{4 * kTau0, 0.0, 1.3e-6};
  auto d = uniform_prior(kTau0, 4096);
  update_threshold(d, 0, s);
  const double decay = std::exp(-std::pow(s.tau / s.t2_star, 2));
  check_matches(d, brute_posterior(uniform_prior(kTau0, 4096),
                                   [&](double f) { return 1 + decay * std::cos(2 * pi * f * s.tau); }),
                1e-12);

  auto flat = uniform_prior(kTau0, 512);
  update_threshold(flat, 1, {200e-6, 0.0, 1.3e-6});
  CHECK(max_abs_diff(flat, uniform_prior(kTau0, 512)) < 1e-15);

  auto pm = point_mass(512, 300);
  update_threshold(pm, 1, {2 * kTau0, 0.4, 1.3e-6});
  CHECK(pm.mass(300) == doctest::Approx(1.0));

  CHECK_THROWS_AS(update_threshold(pm, 3, s), RangeError);
}

TEST_CASE("threshold outcome") {
  CHECK(threshold_outcome(30, 1000, kModel) == 0);
  CHECK(threshold_outcome(20, 1000, kModel) == 1);
  CHECK(threshold_outcome(25, 1000, kModel) == 1);
  CHECK_THROWS_AS(threshold_outcome(5, 4, kModel), RangeError);
}

TEST_CASE("click update") {
  const RamseySetting s{8 * kTau0, 0.0, 1.3e-6};
  auto d = uniform_prior(kTau0, 4096);
  update_click(d, 1, s, kModel);
  const double v = visibility(kModel, s);
  check_matches(d, brute_posterior(uniform_prior(kTau0, 4096), [&](double f) { return 1 + v * std::cos(2 * pi * f * s.tau); }),
                1e-12);

  auto flat = uniform_prior(kTau0, 256);
  update_click(flat, 1, s, DetectionModel::totals(0.03, 0.03));
  CHECK(max_abs_diff(flat, uniform_prior(kTau0, 256)) < 1e-15);

  auto rare = uniform_prior(kTau0, 256);
  update_click(rare, 0, s, DetectionModel::totals(2e-6, 1e-6));
  CHECK(max_abs_diff(rare, uniform_prior(kTau0, 256)) < 1e-8);
}

TEST_CASE("Gaussian batch update") {
  const RamseySetting s{16 * kTau0, 0.0, 1.3e-6};
  auto flat = uniform_prior(kTau0, 512);
  update_batch_gaussian(flat, {625, 25000, s}, DetectionModel::totals(0.025, 0.025));
  CHECK(max_abs_diff(flat, uniform_prior(kTau0, 512)) < 1e-15);

  auto d = uniform_prior(kTau0, 8192);
  const long R = 2500;
  const long r = std::lround(R * alpha(kModel) * (1 + visibility(kModel, s)));
  update_batch_gaussian(d, {r, R, s}, kModel);
  std::size_t best = 0;
  for (std::size_t j = 0; j < d.size(); ++j)
    if (d.mass(j) > d.mass(best)) best = j;
  const double period = 1.0 / s.tau;
  const double phase = std::remainder(d.frequency(best), period);
  CHECK(std::abs(phase) < 0.02 * period);

  auto floor = uniform_prior(kTau0, 512);
  update_batch_gaussian(floor, {0, 10, s}, kModel);
  CHECK(std::abs(total_mass(floor) - 1.0) < 1e-12);
  CHECK_THROWS_AS(update_batch_gaussian(floor, {11, 10, s}, kModel), RangeError);
}

TEST_CASE("exact batch update") {
  const RamseySetting s{4 * kTau0, 0.9, 1.3e-6};
  auto d = uniform_prior(kTau0, 4096);
  update_batch_exact(d, {3, 100, s}, kModel);
  check_matches(d,
                brute_posterior(uniform_prior(kTau0, 4096),
                                [&](double f) {
                                  const double p = click_probability(f, s, kModel);
                                  return std::pow(p, 3) * std::pow(1 - p, 97);
                                }),
                1e-11);

  // KL(exact || gaussian) near r = R alpha.
  auto ex = uniform_prior(kTau0, 8192), ga = uniform_prior(kTau0, 8192);
  const BatchRecord rec{63, 2500, {32 * kTau0, 0.0, 1.3e-6}};
  update_batch_exact(ex, rec, kModel);
  update_batch_gaussian(ga, rec, kModel);
  double kl = 0.0;
  for (std::size_t j = 0; j < ex.size(); ++j)
    if (ex.mass(j) > 0) kl += ex.mass(j) * (ex.log_masses()[j] - ga.log_masses()[j]);
  CHECK(kl < 0.01);

  // Large R stays finite in log space.
  auto big = uniform_prior(kTau0, 2048);
  update_batch_exact(big, {1250, 50000, s}, kModel);
  CHECK(std::abs(total_mass(big) - 1.0) < 1e-9);
}

TEST_CASE("binned updates") {
  const RamseySetting s{8 * kTau0, 0.0, 1.3e-6};
  auto plain = uniform_prior(kTau0, 512);
  CHECK_THROWS_AS(update_binned_gaussian(plain, {{1, 2}, 10, s}, kModel), UnconfiguredBinsError);
  CHECK_THROWS_AS(update_binned_click(plain, 0, s, kModel), UnconfiguredBinsError);

  const DetectionModel flat = DetectionModel::from_bins({{{0, 1e-7}, 0.01, 0.01}, {{1e-7, 2e-7}, 0.02, 0.02}});
  auto a = uniform_prior(kTau0, 512);
  update_binned_gaussian(a, {{30, 60}, 3000, s}, flat);
  update_binned_click(a, std::nullopt, s, flat);
  update_binned_click(a, 1, s, flat);
  CHECK(max_abs_diff(a, uniform_prior(kTau0, 512)) < 1e-15);

  const DetectionModel single = DetectionModel::from_bins({{{0, 3.2e-7}, 0.03, 0.02}});
  auto g1 = uniform_prior(kTau0, 4096), g2 = uniform_prior(kTau0, 4096);
  update_binned_gaussian(g1, {{70}, 2500, s}, single);
  update_batch_gaussian(g2, {70, 2500, s}, kModel);
  CHECK(max_abs_diff(g1, g2) == 0.0);

  const DetectionModel four = DetectionModel::from_bins({{{0, 100e-9}, 0.012, 0.006},
                                                         {{100e-9, 200e-9}, 0.008, 0.005},
                                                         {{200e-9, 450e-9}, 0.009, 0.008},
                                                         {{450e-9, 700e-9}, 0.006, 0.006}});
  auto c = uniform_prior(kTau0, 4096);
  update_binned_click(c, 1, s, four);
  // The click favours frequencies where the m0 population is larger.
  for (std::size_t j = 0; j < c.size(); j += 37) {
    const double pm0 = spin_probability(0, c.frequency(j), s);
    if (pm0 > 0.55) CHECK(c.mass(j) > 1.0 / 4096);
    if (pm0 < 0.45) CHECK(c.mass(j) < 1.0 / 4096);
  }

  auto e = uniform_prior(kTau0, 2048), q = uniform_prior(kTau0, 2048);
  const BinnedBatchRecord rec{{3, 1, 0, 2}, 40, s};
  update_binned_exact(e, rec, four);
  for (std::size_t b = 0; b < 4; ++b)
    for (long i = 0; i < rec.counts[b]; ++i) update_binned_click(q, b, s, four);
  for (long i = 0; i < rec.R - rec.clicks(); ++i) update_binned_click(q, std::nullopt, s, four);
  CHECK(max_abs_diff(e, q) < 1e-9);
  CHECK_THROWS_AS(update_binned_exact(e, {{1, 2}, 40, s}, four), RangeError);
}

TEST_CASE("binned Gaussian sequence concentrates near the truth") {
  const DetectionModel four = DetectionModel::from_bins({{{0, 175e-9}, 0.01817, 0.01055},
                                                         {{175e-9, 350e-9}, 0.01681, 0.01233},
                                                         {{350e-9, 525e-9}, 0.01628, 0.01456},
                                                         {{525e-9, 700e-9}, 0.01612, 0.01550}});
  const double truth = 5e6;
  const int K = 6, G = 15, F = 1;
  const long R = 20000;
  auto d = uniform_prior(kTau0);
  for (int k = K; k >= 0; --k) {
    const int M = G + (K - k) * F;
    for (int m = 0; m < M; ++m) {
      const RamseySetting s{std::ldexp(kTau0, k), m * pi / M, 1.3e-6};
      BinnedBatchRecord rec{{}, R, s};
      for (std::size_t b = 0; b < 4; ++b)
        rec.counts.push_back(std::lround(R * binned_click_probability(b, truth, s, four)));
      update_binned_gaussian(d, rec, four);
    }
  }
  const double half_width = 1.0 / (2 * std::ldexp(kTau0, K));
  double inside = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j)
    if (std::abs(d.frequency(j) - truth) <= half_width) inside += d.mass(j);
  CHECK(inside > 0.99);
  CHECK(std::abs(estimate(d) - truth) < half_width);
}

TEST_CASE("reduction identities") {
  const RamseySetting s{32 * kTau0, 1.7, 1.3e-6};
  for (int outcome : {0, 1}) {
    auto a = uniform_prior(kTau0), b = uniform_prior(kTau0);
    update_click(a, outcome, s, kModel);
    update_batch_exact(b, {outcome, 1, s}, kModel);
    CHECK(max_abs_diff(a, b) == 0.0);
  }

  auto seq = uniform_prior(kTau0), batch = uniform_prior(kTau0);
  for (int i = 0; i < 4; ++i) update_click(seq, 1, s, kModel);
  for (int i = 0; i < 146; ++i) update_click(seq, 0, s, kModel);
  update_batch_exact(batch, {4, 150, s}, kModel);
  CHECK(max_abs_diff(seq, batch) < 1e-9);
}

TEST_CASE("property: normalization after random updates") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> kdist(0, 6);
  std::uniform_real_distribution<double> theta(0.0, 2 * pi);
  const DetectionModel four = DetectionModel::from_bins({{{0, 175e-9}, 0.01817, 0.01055},
                                                         {{175e-9, 350e-9}, 0.01681, 0.01233},
                                                         {{350e-9, 525e-9}, 0.01628, 0.01456},
                                                         {{525e-9, 700e-9}, 0.01612, 0.01550}});
  auto d = uniform_prior(kTau0, 4096);
  for (int step = 0; step < 300; ++step) {
    const RamseySetting s{std::ldexp(kTau0, kdist(rng)), theta(rng), 1.3e-6};
    const long R = 1 + static_cast<long>(rng() % 3000);
    const long r = static_cast<long>(rng() % static_cast<unsigned long>(R / 20 + 1));
    switch (step % 7) {
      case 0: update_threshold(d, static_cast<int>(rng() % 2), s); break;
      case 1: update_click(d, static_cast<int>(rng() % 2), s, kModel); break;
      case 2: update_batch_gaussian(d, {r, R, s}, kModel); break;
      case 3: update_batch_exact(d, {r, R, s}, kModel); break;
      case 4: update_binned_gaussian(d, {{r / 4, r / 4, r / 4, r / 4}, R, s}, four); break;
      case 5: update_binned_click(d, static_cast<std::size_t>(rng() % 4), s, four); break;
      default: update_binned_exact(d, {{r / 4, 0, r / 4, r / 4}, R, s}, four); break;
    }
    REQUIRE(std::abs(total_mass(d) - 1.0) < 1e-9);
    for (double m : d.masses()) REQUIRE(m >= 0.0);
  }
}

TEST_CASE("degenerate posterior keeps the distribution") {
  auto d = uniform_prior(kTau0, 64);
  update_click(d, 1, {kTau0, 0.0, 1.3e-6}, kModel);
  const auto before = d.masses();
  CHECK_THROWS_AS(d.apply([](std::size_t) { return -std::numeric_limits<double>::infinity(); }),
                  DegeneratePosteriorError);
  CHECK(d.masses() == before);

  auto pm = point_mass(64, 32);
  REQUIRE(pm.frequency(32) == 0.0);
  CHECK_THROWS_AS(update_threshold(pm, 1, {kTau0, 0.0, 1e9}), DegeneratePosteriorError);
  CHECK(pm.mass(32) == 1.0);
}

TEST_CASE("serial and parallel kernels agree bitwise") {
  const RamseySetting s{16 * kTau0, 0.3, 1.3e-6};
  auto a = uniform_prior(kTau0, 10000), b = uniform_prior(kTau0, 10000);
  update_batch_exact(a, {70, 2500, s}, kModel, Exec::serial);
  update_batch_exact(b, {70, 2500, s}, kModel, Exec::parallel);
  update_threshold(a, 1, s, Exec::serial);
  update_threshold(b, 1, s, Exec::parallel);
  for (std::size_t j = 0; j < a.size(); ++j) REQUIRE(a.log_masses()[j] == b.log_masses()[j]);
}

TEST_CASE("PhaseBasis matches direct fringe values") {
  const auto d = uniform_prior(kTau0, 2048);
  const PhaseBasis basis(d, 8 * kTau0);
  std::vector<double> out;
  basis.fringe(2.2, out);
  const auto direct = fringe_values(d, {8 * kTau0, 2.2, 1.3e-6});
  for (std::size_t j = 0; j < out.size(); ++j) REQUIRE(out[j] == doctest::Approx(direct[j]).epsilon(1e-12));
}
