#pragma once

#include <ostream>

#include "nvqpe/config.hpp"

namespace nvqpe::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitValidation = 3;

struct SimulateFlags {
  bool dump_schedule = false;
  bool dump_posterior = false;
};

int cmd_photodynamics(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& cfg, const SimulateFlags& flags, std::ostream& out, std::ostream& err);
int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace nvqpe::cli
