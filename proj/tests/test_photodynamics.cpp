#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "nvqpe/errors.hpp"
#include "nvqpe/photodynamics.hpp"

using namespace nvqpe;

namespace {

Eigen::Matrix<double, 5, 5> to_eigen(const RateMatrix& m) {
  Eigen::Matrix<double, 5, 5> e;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) e(i, j) = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return e;
}

const PLCurve& default_curve() {
  static const PLCurve c = pl_curve(RateConstants{});
  return c;
}

}  // namespace

TEST_CASE("rate matrix layout and conservation") {
  RateConstants zero{0, 0, 0, 0, 0, 0, 0, 0.01};
  for (const auto& row : build_rate_matrix(zero))
    for (double x : row) CHECK(x == 0.0);

  const RateConstants c;
  const RateMatrix m = build_rate_matrix(c);
  CHECK(m[3][0] == doctest::Approx(20e6));
  CHECK(m[4][1] == doctest::Approx(20e6));
  for (double eps : {0.0, 0.1, 0.7}) {
    RateConstants ce = c;
    ce.epsilon = eps;
    const RateMatrix me = build_rate_matrix(ce);
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < 5; ++i) s += me[i][j];
      CHECK(std::abs(s) <= 1e-12 * 1e8);
    }
  }
}

TEST_CASE("evolve: zero matrix, relaxation and conservation") {
  const LevelPopulations start{0.3, 0.2, 0.1, 0.25, 0.15};
  RateConstants zero{0, 0, 0, 0, 0, 0, 0, 0.01};
  for (const auto& p : evolve(start, zero, 50e-9)) CHECK(p.as_array() == start.as_array());

  RateConstants dark;
  dark.k_exc = 0.0;
  const auto traj = evolve({0, 0, 0, 1, 0}, dark, 200e-9);
  const double rate = dark.gamma_rad + dark.k0s;
  for (std::size_t i = 0; i < traj.size(); i += 97) {
    const double t = static_cast<double>(i) * kDefaultDt;
    CHECK(traj[i].p0e == doctest::Approx(std::exp(-rate * t)).epsilon(1e-9));
  }

  const auto on = evolve(start, RateConstants{}, 1e-6);
  for (const auto& p : on) CHECK(std::abs(p.total() - 1.0) < 1e-9);
  CHECK(on.size() == 10001);

  CHECK_THROWS_AS(evolve(start, RateConstants{}, 1e-6, 0.0), RangeError);
}

TEST_CASE("laser-on evolution converges to the null space of M") {
  const auto m = to_eigen(build_rate_matrix(RateConstants{}));
  Eigen::FullPivLU<Eigen::Matrix<double, 5, 5>> lu(m);
  lu.setThreshold(1e-10);
  const Eigen::MatrixXd kernel = lu.kernel();
  REQUIRE(kernel.cols() == 1);
  Eigen::VectorXd ss = kernel.col(0);
  ss /= ss.sum();

  const auto end = evolve_to({0.5, 0.5, 0, 0, 0}, RateConstants{}, 20e-6).as_array();
  for (int i = 0; i < 5; ++i) CHECK(end[static_cast<std::size_t>(i)] == doctest::Approx(ss(i)).epsilon(1e-6));
}

TEST_CASE("initial polarization") {
  const auto pol = initial_polarization(RateConstants{});
  CHECK(pol.first == doctest::Approx(0.85).epsilon(0.02 / 0.85));
  CHECK(pol.second == doctest::Approx(0.15).epsilon(0.02 / 0.15));
  CHECK(pol.first + pol.second == doctest::Approx(1.0).epsilon(1e-12));

  RateConstants sym;
  sym.k1s = sym.k0s;
  sym.ks1 = sym.ks0;
  const auto half = initial_polarization(sym);
  CHECK(half.first == doctest::Approx(0.5).epsilon(1e-9));

  RateConstants no_m1;
  no_m1.ks1 = 0.0;
  CHECK(initial_polarization(no_m1).first > 0.85);
}

TEST_CASE("PL curves") {
  const PLCurve& c = default_curve();
  CHECK(c.bin_count() == 100);
  for (std::size_t i = 0; i < c.bin_count(); ++i) {
    CHECK(c.counts_m0[i] >= 0.0);
    CHECK(c.counts_m1[i] >= 0.0);
    if ((static_cast<double>(i) + 1) * 20e-9 <= 700e-9) CHECK(c.counts_m0[i] > c.counts_m1[i]);
    if (static_cast<double>(i) * 20e-9 >= 1e-6)
      CHECK(std::abs(c.counts_m0[i] - c.counts_m1[i]) / c.counts_m0[i] < 0.05);
  }

  RateConstants dark;
  dark.collection_eff = 0.0;
  const PLCurve z = pl_curve(dark);
  for (std::size_t i = 0; i < z.bin_count(); ++i) CHECK(z.counts_m0[i] == 0.0);

  CHECK_THROWS_AS(pl_curve(RateConstants{}, 600e-9), RangeError);
  CHECK_THROWS_AS(pl_curve(RateConstants{}, 1010e-9), RangeError);
}

TEST_CASE("detection probability and SNR") {
  const PLCurve& c = default_curve();
  CHECK(detection_probability(c, SpinPreparation::m0, 20e-9) == doctest::Approx(c.counts_m0[0]).epsilon(1e-12));
  CHECK(detection_probability(c, SpinPreparation::m0, 320e-9) == doctest::Approx(0.03).epsilon(0.005 / 0.03));
  CHECK(detection_probability(c, SpinPreparation::m1, 320e-9) == doctest::Approx(0.02).epsilon(0.005 / 0.02));
  CHECK_THROWS_AS(detection_probability(c, SpinPreparation::m0, 3e-6), RangeError);

  CHECK(snr(0.025, 0.025) == 0.0);
  CHECK(snr(0.03, 0.02) == doctest::Approx(0.01 / std::sqrt(0.025)).epsilon(1e-12));
  CHECK_THROWS_AS(snr(0.0, 0.0), RangeError);

  const double t = optimize_cutoff(c);
  CHECK(std::abs(t - 320e-9) <= 20e-9);

  RateConstants bright;
  bright.collection_eff = 0.02;
  CHECK(optimize_cutoff(pl_curve(bright)) == t);

  PLCurve one_sided = c;
  for (double& x : one_sided.cumulative_m1) x = 0.0;
  CHECK(optimize_cutoff(one_sided) == doctest::Approx(c.horizon));
}

TEST_CASE("integrator converges when dt is halved") {
  const double a = detection_probability(pl_curve(RateConstants{}, 1e-6, 20e-9, 0.1e-9), SpinPreparation::m0, 320e-9);
  const double b = detection_probability(pl_curve(RateConstants{}, 1e-6, 20e-9, 0.05e-9), SpinPreparation::m0, 320e-9);
  CHECK(std::abs(a - b) / b < 1e-4);
}

TEST_CASE("time bins") {
  const PLCurve& c = default_curve();
  const DetectionModel four = bin_probabilities(c, TimeBinning::default_bins());
  REQUIRE(four.bin_count() == 4);
  double s0 = 0.0, s1 = 0.0;
  for (const auto& b : *four.binned) {
    s0 += b.p_m0;
    s1 += b.p_m1;
  }
  CHECK(std::abs(s0 - detection_probability(c, SpinPreparation::m0, 700e-9)) < 1e-12);
  CHECK(std::abs(s1 - detection_probability(c, SpinPreparation::m1, 700e-9)) < 1e-12);
  CHECK(four.p_click_m0 == doctest::Approx(s0).epsilon(1e-14));

  const DetectionModel one = bin_probabilities(c, TimeBinning::equal(1, 700e-9));
  CHECK(one.bin_count() == 1);

  const DetectionModel mid = bin_probabilities(c, TimeBinning{{0.0, 100e-9, 200e-9}});
  CHECK((*mid.binned)[1].p_m0 > (*mid.binned)[1].p_m1);

  CHECK_THROWS_AS(TimeBinning({{0.0, 2e-7, 1e-7}}).validate(), RangeError);
  CHECK_THROWS_AS(TimeBinning({{1e-8, 2e-7}}).validate(), RangeError);
}
