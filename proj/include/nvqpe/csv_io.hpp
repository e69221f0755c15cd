#pragma once

// File emitters. Every CSV starts with one '#' comment line carrying the
// config hash and seed.

#include <cstdint>
#include <ostream>
#include <string>

#include <json.hpp>

#include "nvqpe/inference.hpp"
#include "nvqpe/photodynamics.hpp"
#include "nvqpe/protocol.hpp"
#include "nvqpe/simulator.hpp"

namespace nvqpe {

struct Provenance {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

std::string provenance_comment(const Provenance& prov);

/// mode,K,G,F,R,tau0_ns,T_tot_s,V_B_Hz2,eta_f,eta_uT_per_sqrtHz,n_trials,seed,fail_count
void write_sweep_csv(std::ostream& out, const SweepResult& result, const Provenance& prov);
nlohmann::json sweep_to_json(const SweepResult& result, const Provenance& prov);

/// t_ns,counts_m0,counts_m1 with t_ns the start of each bin.
void write_pl_curve_csv(std::ostream& out, const PLCurve& curve, const Provenance& prov);

/// k,tau_ns,theta_rad,repetitions
void write_schedule_csv(std::ostream& out, const Schedule& s, const Provenance& prov);

/// f_hz,mass
void write_posterior_csv(std::ostream& out, const FrequencyDistribution& dist, const Provenance& prov);

}  // namespace nvqpe
