#include "armstack/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "armstack/kinematics.hpp"

namespace armstack::scene {

using geometry::Transform;

Scene::Scene(const model::WorldModel& world) : world_(&world) {
  for (const auto& arm : world.arms) configs_[arm.name] = Joints::Zero();
  for (const auto& obj : world.objects) object_poses_[obj.name] = obj.pose;
  allowed_ = world.allowed_collisions;
}

void Scene::set_config(const std::string& arm, const Joints& q) {
  auto it = configs_.find(arm);
  if (it == configs_.end()) throw std::out_of_range("no arm named " + arm);
  it->second = q;
}

const Joints& Scene::config(const std::string& arm) const {
  auto it = configs_.find(arm);
  if (it == configs_.end()) throw std::out_of_range("no arm named " + arm);
  return it->second;
}

void Scene::move_object(const std::string& object, const Transform& pose) {
  auto it = object_poses_.find(object);
  if (it == object_poses_.end())
    throw std::out_of_range("no object named " + object);
  it->second = pose;
}

const Transform& Scene::object_pose(const std::string& object) const {
  auto it = object_poses_.find(object);
  if (it == object_poses_.end())
    throw std::out_of_range("no object named " + object);
  return it->second;
}

void Scene::attach(const std::string& arm, const std::string& object) {
  if (attachments_.count(arm))
    throw std::logic_error(arm + " already holds an object");
  const auto& inst = world_->arm(arm);
  const Transform base = world_->mount(inst.mount).pose;
  const Transform tip = geometry::compose(
      base, kinematics::tip_pose(inst.arm, config(arm)));
  const Transform offset =
      geometry::compose(geometry::inverse(tip), object_pose(object));
  attachments_[arm] = Attachment{object, offset};
}

void Scene::detach(const std::string& arm) {
  auto it = attachments_.find(arm);
  if (it == attachments_.end())
    throw std::logic_error(arm + " holds no object");
  const auto& inst = world_->arm(arm);
  const Transform base = world_->mount(inst.mount).pose;
  const Transform tip = geometry::compose(
      base, kinematics::tip_pose(inst.arm, config(arm)));
  object_poses_[it->second.object] = geometry::compose(tip, it->second.offset);
  attachments_.erase(it);
}

std::optional<std::string> Scene::attached_object(
    const std::string& arm) const {
  auto it = attachments_.find(arm);
  if (it == attachments_.end()) return std::nullopt;
  return it->second.object;
}

std::vector<Scene::Body> Scene::bodies_with(const std::string& arm,
                                            const Joints& q) const {
  std::vector<Body> bodies;
  std::map<std::string, Transform> live_object_poses = object_poses_;

  for (size_t ai = 0; ai < world_->arms.size(); ++ai) {
    const auto& inst = world_->arms[ai];
    const Joints& qa = inst.name == arm ? q : config(inst.name);
    const Transform base = world_->mount(inst.mount).pose;
    const auto fk = kinematics::forward(inst.arm, qa);
    const double margin = world_->settings.collision_margin;

    for (size_t li = 0; li < inst.arm.links.size(); ++li) {
      const Transform frame = geometry::compose(base, fk.link_frames[li]);
      for (const auto& placed : inst.arm.links[li].shapes) {
        Body b;
        b.owner = inst.name + "/" + inst.arm.links[li].name;
        b.shape = placed.shape.inflated(margin);
        b.pose = geometry::compose(frame, placed.pose);
        b.arm_index = static_cast<int>(ai);
        b.link_index = static_cast<int>(li);
        bodies.push_back(std::move(b));
      }
    }

    auto att = attachments_.find(inst.name);
    if (att != attachments_.end()) {
      const Transform tip = geometry::compose(base, fk.tip);
      live_object_poses[att->second.object] =
          geometry::compose(tip, att->second.offset);
    }
  }

  for (const auto& obs : world_->obstacles) {
    Body b;
    b.owner = obs.name;
    b.shape = obs.shape;
    b.pose = obs.pose;
    bodies.push_back(std::move(b));
  }

  for (const auto& obj : world_->objects) {
    Body b;
    b.owner = obj.name;
    b.shape = obj.shape;
    b.pose = live_object_poses.at(obj.name);
    b.is_object = true;
    b.object_name = obj.name;
    // Attached objects ride with their arm and skip checks against its wrist.
    for (size_t ai = 0; ai < world_->arms.size(); ++ai) {
      auto att = attachments_.find(world_->arms[ai].name);
      if (att != attachments_.end() && att->second.object == obj.name)
        b.arm_index = static_cast<int>(ai);
    }
    bodies.push_back(std::move(b));
  }
  return bodies;
}

bool Scene::pair_allowed(const Body& a, const Body& b) const {
  if (a.arm_index >= 0 && a.arm_index == b.arm_index) {
    if (!a.is_object && !b.is_object) {
      const int lo = std::min(a.link_index, b.link_index);
      const int hi = std::max(a.link_index, b.link_index);
      if (lo == hi) return true;
      if (hi - lo == 1) return true;       // consecutive links share a joint
      if (lo == 1 && hi == 3) return true;  // elbow dogleg pair
    } else if (a.is_object != b.is_object) {
      // Held object against its own arm: ignore the two wrist-most links,
      // flag anything further up the chain.
      const Body& link = a.is_object ? b : a;
      if (link.link_index >= 5) return true;
    }
  }
  for (const auto& [x, y] : allowed_) {
    if ((a.owner == x && b.owner == y) || (a.owner == y && b.owner == x))
      return true;
  }
  return false;
}

bool Scene::scan(const std::vector<Body>& bodies,
                 std::string* first_pair) const {
  for (size_t i = 0; i < bodies.size(); ++i) {
    for (size_t j = i + 1; j < bodies.size(); ++j) {
      const Body& a = bodies[i];
      const Body& b = bodies[j];
      // Two environment bodies never move; skip them.
      if (a.arm_index < 0 && b.arm_index < 0) continue;
      if (pair_allowed(a, b)) continue;
      const double gap = (a.pose.translation - b.pose.translation).norm() -
                         a.shape.bounding_radius() - b.shape.bounding_radius();
      if (gap > 0) continue;
      if (collision::shapes_collide(a.shape, a.pose, b.shape, b.pose)) {
        if (first_pair) *first_pair = a.owner + "|" + b.owner;
        return true;
      }
    }
  }
  return false;
}

bool Scene::in_collision(std::string* first_pair) const {
  if (world_->arms.empty()) return false;
  const auto& name = world_->arms[0].name;
  return scan(bodies_with(name, config(name)), first_pair);
}

bool Scene::state_in_collision(const std::string& arm, const Joints& q,
                               std::string* first_pair) const {
  return scan(bodies_with(arm, q), first_pair);
}

bool Scene::segment_in_collision(const std::string& arm, const Joints& q0,
                                 const Joints& q1, double resolution,
                                 std::string* first_pair) const {
  const double span = (q1 - q0).cwiseAbs().maxCoeff();
  const int steps = std::max(1, static_cast<int>(std::ceil(span / resolution)));
  for (int k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) / steps;
    if (state_in_collision(arm, q0 + t * (q1 - q0), first_pair)) return true;
  }
  return false;
}

double Scene::min_clearance(const std::string& arm, const Joints& q) const {
  const auto bodies = bodies_with(arm, q);
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < bodies.size(); ++i) {
    for (size_t j = i + 1; j < bodies.size(); ++j) {
      const Body& a = bodies[i];
      const Body& b = bodies[j];
      if (a.arm_index < 0 && b.arm_index < 0) continue;
      if (pair_allowed(a, b)) continue;
      best = std::min(best,
                      collision::shape_distance(a.shape, a.pose, b.shape,
                                                b.pose));
    }
  }
  return best;
}

}  // namespace armstack::scene
