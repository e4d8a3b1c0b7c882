#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "armstack/geometry.hpp"
#include "armstack/scene.hpp"

namespace armstack::harness {

struct PerceptionConfig {
  double rate_hz = 15.0;
  double pos_noise = 0.002;             // m, 1 sigma per axis
  double rot_noise = deg_to_rad(1.0);   // rad, 1 sigma about a random axis
  std::uint64_t seed = 0;
};

struct PerceptionSample {
  double t = 0;         // virtual s
  std::string object;
  geometry::Transform pose;  // camera -> object
};

/// Fixed-rate object pose stream as a wrist camera would publish it: the
/// ground-truth camera->object transform perturbed by Gaussian noise. The
/// camera rides the named arm's wrist at the scene's current configuration.
class PerceptionSim {
 public:
  PerceptionSim(std::string camera_arm, const PerceptionConfig& cfg = {});

  /// All observations due in (previous poll, now], one per object per period.
  std::vector<PerceptionSample> poll(const scene::Scene& scene, double now);

  /// One immediate observation of a single object. Throws on unknown names.
  PerceptionSample observe(const scene::Scene& scene,
                           const std::string& object, double now);

  /// World pose of the camera at the scene's current configuration.
  geometry::Transform camera_pose(const scene::Scene& scene) const;

  const std::string& camera_arm() const { return camera_arm_; }

 private:
  geometry::Transform perturb(const geometry::Transform& t);

  std::string camera_arm_;
  PerceptionConfig cfg_;
  std::mt19937_64 rng_;
  std::uint64_t periods_ = 0;  // emitted so far
};

}  // namespace armstack::harness
