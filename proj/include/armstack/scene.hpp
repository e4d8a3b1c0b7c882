#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "armstack/collision.hpp"
#include "armstack/geometry.hpp"
#include "armstack/model.hpp"
#include "armstack/types.hpp"

namespace armstack::scene {

/// World-level collision state: every arm at its current configuration plus
/// static obstacles and movable objects. Arm link shapes are inflated by the
/// configured collision margin; obstacles and objects are used as modeled.
///
/// Self-collision pairs between consecutive links of one arm, and between its
/// first and third moving links (they straddle the elbow dogleg), are ignored
/// by default. World files may allow further pairs by owner name.
class Scene {
 public:
  explicit Scene(const model::WorldModel& world);

  void set_config(const std::string& arm, const Joints& q);
  const Joints& config(const std::string& arm) const;

  void move_object(const std::string& object, const geometry::Transform& pose);
  const geometry::Transform& object_pose(const std::string& object) const;

  /// Rigidly attaches the object to the arm tip at their current relative
  /// pose. While attached the object moves with the tip and stops colliding
  /// against the arm's wrist and gripper links.
  void attach(const std::string& arm, const std::string& object);
  /// Releases the attached object at its current world pose.
  void detach(const std::string& arm);
  std::optional<std::string> attached_object(const std::string& arm) const;

  /// True if any non-allowed pair collides at the stored configurations.
  /// `first_pair` (optional) receives "ownerA|ownerB" of the first offender.
  bool in_collision(std::string* first_pair = nullptr) const;

  /// Checks `arm` at configuration q, everything else at stored state.
  bool state_in_collision(const std::string& arm, const Joints& q,
                          std::string* first_pair = nullptr) const;

  /// Checks the straight joint-space segment from q0 to q1 at the given
  /// resolution (max per-joint step, rad), endpoints included.
  bool segment_in_collision(const std::string& arm, const Joints& q0,
                            const Joints& q1, double resolution,
                            std::string* first_pair = nullptr) const;

  /// Smallest distance over all checked pairs with `arm` at q; negative when
  /// in collision. Audit helper.
  double min_clearance(const std::string& arm, const Joints& q) const;

  const model::WorldModel& world() const { return *world_; }

 private:
  struct Body {
    std::string owner;
    Shape shape;
    geometry::Transform pose;  // world
    int arm_index = -1;        // -1 for environment bodies
    int link_index = -1;
    bool is_object = false;
    std::string object_name;
  };

  struct Attachment {
    std::string object;
    geometry::Transform offset;  // tip frame -> object frame
  };

  std::vector<Body> bodies_with(const std::string& arm, const Joints& q) const;
  bool pair_allowed(const Body& a, const Body& b) const;
  bool scan(const std::vector<Body>& bodies, std::string* first_pair) const;

  const model::WorldModel* world_;
  std::map<std::string, Joints> configs_;
  std::map<std::string, geometry::Transform> object_poses_;
  std::map<std::string, Attachment> attachments_;  // by arm name
  std::vector<std::pair<std::string, std::string>> allowed_;
};

}  // namespace armstack::scene
