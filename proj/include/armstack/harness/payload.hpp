#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "armstack/harness/report.hpp"
#include "armstack/model.hpp"
#include "armstack/types.hpp"

namespace armstack::harness {

struct PayloadOptions {
  std::string arm;      // empty picks the first arm in the world
  double mass = 2.27;   // kg, point load at the tool tip
  int n_poses = 300;    // boundary samples to collect
  int n_select = 10;    // highest-margin poses to execute
  double shell = 0.10;  // sample where tip radius >= (1 - shell) * reach
  std::uint64_t seed = 0;
};

struct PayloadPose {
  Joints q = Joints::Zero();
  double tip_radius = 0;  // m from the arm base origin
  double margin = 0;      // static worst-joint utilization with payload
  bool selected = false;
};

struct PayloadResult {
  std::vector<PayloadPose> poses;  // n_poses boundary samples
  std::vector<int> order;          // executed visit order into poses
  double peak_execution_margin = 0;
  double max_tracking_err = 0;  // rad
  bool collision_free = false;  // fine-grained recheck of every executed leg
  bool success = false;
  RunReport report;
};

/// Raised when the sampler cannot find enough collision-free boundary
/// configurations for the requested shell.
class InsufficientSamples : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Load test at the reach boundary: samples collision-free configurations
/// whose tip lies in the outer reach shell, scores static torque margins
/// under the payload, then plans and executes a tour of the highest-margin
/// poses while tracking the worst utilization seen.
PayloadResult validate_payload(const model::WorldModel& world,
                               const PayloadOptions& opts = {});

}  // namespace armstack::harness
