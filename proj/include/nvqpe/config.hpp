#pragma once

// Run configuration: a JSON document with unit-suffixed keys. The document
// is held in its own units so that it serializes back without rounding;
// the *_params() accessors convert to SI.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nvqpe/photodynamics.hpp"
#include "nvqpe/protocol.hpp"
#include "nvqpe/simulator.hpp"

namespace nvqpe {

struct ProtocolSection {
  std::string mode = "batch";
  int K = 6;
  int G = 15;
  int F = 1;
  long R = 2500;
  double tau0_ns = 12.5;
  double t2_star_us = 1.3;
  double overhead_us = 3.0;
};

/// One sweep; unset fields inherit from the protocol section.
struct RunSection {
  std::string label;
  std::vector<std::string> modes;
  std::optional<int> K, G, F;
  std::optional<long> R;
  std::string axis = "R";
  std::vector<long> values;
};

struct PhotodynamicsSection {
  double gamma_rad_MHz = 66.08;
  double k0s_MHz = 11.1;
  double k1s_MHz = 91.9;
  double ks0_MHz = 4.9;
  double ks1_MHz = 2.03;
  double epsilon = 0.0;
  double k_exc_MHz = 20.0;
  double collection_eff = 0.01;
  double horizon_ns = 2000.0;
  double bin_width_ns = 20.0;
  double dt_ns = 0.1;
  std::optional<double> t_cut_ns;  ///< unset: SNR-optimal cutoff
  std::vector<double> bin_edges_ns = {0.0, 175.0, 350.0, 525.0, 700.0};
};

struct DetectionSection {
  std::string source = "photodynamics";  ///< or "fixed"
  double p_click_m0 = 0.03;
  double p_click_m1 = 0.02;
};

struct TrialsSection {
  std::size_t n_trials = 1000;
  std::uint64_t seed = 1;
  double f_min_MHz = -39.0;
  double f_max_MHz = 39.0;
  std::string truth_mode = "uniform-random";
  std::vector<double> fixed_truths_MHz;
};

struct OutputSection {
  std::string dir = "out";
  std::string format = "csv";
  int threads = 0;
};

struct RunConfig {
  ProtocolSection protocol;
  std::vector<RunSection> runs;
  PhotodynamicsSection photodynamics;
  DetectionSection detection;
  TrialsSection trials;
  std::size_t grid_size = kDefaultGridSize;
  OutputSection output;

  bool operator==(const RunConfig&) const;
};

/// Parses and validates; throws ConfigError naming the offending key.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig parse_config_text(std::string_view text);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& cfg);

/// Field-level validation of an already-populated config.
void validate_config(const RunConfig& cfg);

/// Names accepted by preset().
std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name.
RunConfig preset(std::string_view name);

/// FNV-1a 64 of the canonical serialization, output section excluded.
std::uint64_t config_hash(const RunConfig& cfg);

ProtocolParams protocol_params(const RunConfig& cfg);
RateConstants rate_constants(const RunConfig& cfg);
TimeBinning time_binning(const RunConfig& cfg);
TrialConfig trial_config(const RunConfig& cfg);
/// Expands the run list; an empty list yields the protocol point itself.
std::vector<SweepSpec> sweep_specs(const RunConfig& cfg);

}  // namespace nvqpe
