#pragma once

// Glue between a RunConfig and the numerical modules: photodynamics
// summaries, observation models, and the self-check suite behind
// `nvqpe validate`.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nvqpe/config.hpp"
#include "nvqpe/photodynamics.hpp"
#include "nvqpe/simulator.hpp"

namespace nvqpe {

struct PhotodynamicsReport {
  PLCurve curve;
  std::pair<double, double> polarization;
  std::optional<double> t_cut;             ///< empty when the curves are dark
  std::optional<DetectionModel> counting;  ///< clicks up to t_cut
  std::optional<DetectionModel> binned;    ///< arrival-time bins
  double p_click_m0 = 0.0;                 ///< reported even when dark
  double p_click_m1 = 0.0;
  std::vector<std::string> warnings;
};

PhotodynamicsReport photodynamics_report(const RunConfig& cfg);

/// Detection models for simulation, from photodynamics or fixed totals.
ObservationModels observation_models(const RunConfig& cfg);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Closed-form timing anchors, schedule/closed-form agreement, update
/// normalization and reduction identities, rate-matrix conservation and
/// config round-trip.
std::vector<CheckResult> run_self_checks(const RunConfig& cfg);

}  // namespace nvqpe
