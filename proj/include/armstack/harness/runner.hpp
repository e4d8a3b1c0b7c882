#pragma once

#include <cstdint>

#include "armstack/harness/mission.hpp"
#include "armstack/harness/report.hpp"
#include "armstack/model.hpp"

namespace armstack::harness {

enum class RunMode {
  kSimulate,     // controllers driven directly
  kDistributed,  // trajectory starts routed through the host/client protocol
};

struct RunOptions {
  std::uint64_t seed = 0;
  RunMode mode = RunMode::kSimulate;
  // True runs the 8 ms control clock as fast as it computes; false paces
  // each tick against the wall clock.
  bool virtual_time = true;
  bool continue_on_fail = false;
  double speed_scale = 1.0;  // derates joint speeds during planning
};

/// Plans and executes every mission step in order against simulated
/// hardware. Execution stops at the first failed step unless
/// continue_on_fail is set; the report carries one row per step either way.
RunReport run_mission(const model::WorldModel& world, const MissionPlan& plan,
                      const RunOptions& opts = {});

}  // namespace armstack::harness
