#include "armstack/harness/perception.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "armstack/kinematics.hpp"

namespace armstack::harness {

PerceptionSim::PerceptionSim(std::string camera_arm,
                             const PerceptionConfig& cfg)
    : camera_arm_(std::move(camera_arm)), cfg_(cfg), rng_(cfg.seed) {
  if (cfg_.rate_hz <= 0)
    throw std::invalid_argument("perception rate must be positive");
}

geometry::Transform PerceptionSim::camera_pose(
    const scene::Scene& scene) const {
  const model::ArmInstance& inst = scene.world().arm(camera_arm_);
  const geometry::Transform base = scene.world().mount(inst.mount).pose;
  const kinematics::FkResult fk =
      kinematics::forward(inst.arm, scene.config(camera_arm_));
  return geometry::compose(base, fk.camera);
}

geometry::Transform PerceptionSim::perturb(const geometry::Transform& t) {
  geometry::Transform out = t;
  if (cfg_.pos_noise > 0) {
    std::normal_distribution<double> d(0.0, cfg_.pos_noise);
    out.translation += Eigen::Vector3d(d(rng_), d(rng_), d(rng_));
  }
  if (cfg_.rot_noise > 0) {
    // Random axis, normally distributed angle.
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Vector3d axis(gauss(rng_), gauss(rng_), gauss(rng_));
    while (axis.norm() < 1e-9)
      axis = Eigen::Vector3d(gauss(rng_), gauss(rng_), gauss(rng_));
    axis.normalize();
    const double angle = gauss(rng_) * cfg_.rot_noise;
    out = geometry::compose(
        out, geometry::Transform::rot_axis(axis, angle));
  }
  return out;
}

PerceptionSample PerceptionSim::observe(const scene::Scene& scene,
                                        const std::string& object,
                                        double now) {
  if (!scene.world().find_object(object))
    throw std::runtime_error("unknown object: " + object);
  const geometry::Transform t_wc = camera_pose(scene);
  const geometry::Transform t_wo = scene.object_pose(object);
  PerceptionSample sample;
  sample.t = now;
  sample.object = object;
  sample.pose = perturb(geometry::compose(geometry::inverse(t_wc), t_wo));
  return sample;
}

std::vector<PerceptionSample> PerceptionSim::poll(const scene::Scene& scene,
                                                  double now) {
  std::vector<PerceptionSample> out;
  const double period = 1.0 / cfg_.rate_hz;
  while (static_cast<double>(periods_ + 1) * period <= now + 1e-12) {
    ++periods_;
    const double t = static_cast<double>(periods_) * period;
    for (const model::SceneObject& obj : scene.world().objects)
      out.push_back(observe(scene, obj.name, t));
  }
  return out;
}

}  // namespace armstack::harness
