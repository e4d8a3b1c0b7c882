#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "armstack/scene.hpp"
#include "armstack/types.hpp"

namespace armstack::planning {

struct PlanOptions {
  double step = 0.1;         // rad, tree extension step (joint-space L2)
  double resolution = 0.02;  // rad, edge collision-check spacing
  // Sampling iterations before giving up. Stands in for a wall-clock timeout
  // at a fixed nominal rate so runs stay reproducible.
  int max_iterations = 15000;
  int shortcut_passes = 50;
  std::uint64_t seed = 0;

  static int iterations_from_time(double seconds);
};

struct PlanResult {
  bool success = false;
  std::vector<Joints> path;  // start .. goal waypoints, collision free
  int iterations = 0;
  std::string failure;  // empty on success
};

/// Bidirectional sampling planner between two in-limit configurations of one
/// arm. The rest of the scene stays at its stored state.
PlanResult plan_path(const scene::Scene& scene, const std::string& arm,
                     const Joints& start, const Joints& goal,
                     const PlanOptions& opts = {});

/// Random pair-collapse smoothing: repeatedly tries to replace a span of the
/// path with the straight segment between two random waypoints.
std::vector<Joints> shortcut_path(const scene::Scene& scene,
                                  const std::string& arm,
                                  std::vector<Joints> path, int passes,
                                  double resolution, std::uint64_t seed);

}  // namespace armstack::planning
