#include "armstack/world_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <yaml-cpp/yaml.h>

#include "armstack/geometry.hpp"

namespace armstack::world_io {
namespace {

using model::WorldModel;

[[noreturn]] void fail(const std::string& origin, const YAML::Node& node,
                       const std::string& msg) {
  std::ostringstream out;
  out << origin;
  if (node.Mark().line >= 0)
    out << ":" << (node.Mark().line + 1) << ":" << (node.Mark().column + 1);
  out << ": " << msg;
  throw std::runtime_error(out.str());
}

void check_keys(const std::string& origin, const YAML::Node& map,
                const std::set<std::string>& allowed,
                const std::string& where) {
  if (!map.IsMap()) fail(origin, map, where + " must be a mapping");
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key))
      fail(origin, kv.first, "unknown key '" + key + "' in " + where);
  }
}

double number(const std::string& origin, const YAML::Node& node,
              const std::string& what) {
  if (!node.IsScalar()) fail(origin, node, what + " must be a number");
  try {
    return node.as<double>();
  } catch (const YAML::Exception&) {
    fail(origin, node, what + " must be a number");
  }
}

geometry::Transform parse_pose(const std::string& origin,
                               const YAML::Node& node) {
  if (!node.IsSequence() || (node.size() != 6 && node.size() != 7))
    fail(origin, node, "pose must be a sequence of 6 or 7 numbers");
  std::vector<double> fields;
  for (const auto& v : node) fields.push_back(number(origin, v, "pose field"));
  try {
    return geometry::pose_from_fields(fields);
  } catch (const std::exception& e) {
    fail(origin, node, e.what());
  }
}

Joints parse_joint_degrees(const std::string& origin, const YAML::Node& node) {
  if (!node.IsSequence() || node.size() != kNumJoints)
    fail(origin, node, "joint pose must be a sequence of 6 numbers (degrees)");
  Joints q;
  for (int i = 0; i < kNumJoints; ++i)
    q[i] = deg_to_rad(number(origin, node[i], "joint value"));
  return q;
}

// Shape entries carry exactly one of box/sphere/capsule. Box takes full
// extents, capsule takes [radius, full length].
Shape parse_shape(const std::string& origin, const YAML::Node& entry,
                  const std::string& where) {
  const bool has_box = static_cast<bool>(entry["box"]);
  const bool has_sphere = static_cast<bool>(entry["sphere"]);
  const bool has_capsule = static_cast<bool>(entry["capsule"]);
  if (has_box + has_sphere + has_capsule != 1)
    fail(origin, entry,
         where + " needs exactly one of box:, sphere:, capsule:");
  try {
    if (has_box) {
      const YAML::Node b = entry["box"];
      if (!b.IsSequence() || b.size() != 3)
        fail(origin, b, "box must be [x, y, z] full extents");
      return Shape::box({0.5 * number(origin, b[0], "box extent"),
                         0.5 * number(origin, b[1], "box extent"),
                         0.5 * number(origin, b[2], "box extent")});
    }
    if (has_sphere)
      return Shape::sphere(number(origin, entry["sphere"], "sphere radius"));
    const YAML::Node c = entry["capsule"];
    if (!c.IsSequence() || c.size() != 2)
      fail(origin, c, "capsule must be [radius, length]");
    return Shape::capsule(number(origin, c[0], "capsule radius"),
                          0.5 * number(origin, c[1], "capsule length"));
  } catch (const std::invalid_argument& e) {
    fail(origin, entry, where + ": " + e.what());
  }
}

void validate(const std::string& origin, WorldModel& world) {
  std::set<std::string> names;
  auto unique_name = [&](const std::string& n, const std::string& kind) {
    if (!names.insert(n).second)
      throw std::runtime_error(origin + ": duplicate name '" + n + "' (" +
                               kind + ")");
  };
  for (const auto& m : world.mounts) unique_name(m.name, "mount");
  for (const auto& a : world.arms) unique_name(a.name, "arm");
  for (const auto& o : world.obstacles) unique_name(o.name, "obstacle");
  for (const auto& o : world.objects) unique_name(o.name, "object");

  for (const auto& m : world.mounts) {
    const Eigen::Vector3d zb =
        m.pose.rotation.toRotationMatrix().col(2);
    const double theta =
        rad_to_deg(std::acos(std::clamp(zb.z(), -1.0, 1.0)));
    bool ok = false;
    switch (m.orientation) {
      case model::MountOrientation::kVertical:
        ok = theta <= 25.0 || theta >= 155.0;
        break;
      case model::MountOrientation::kHorizontal:
        ok = std::abs(theta - 90.0) <= 25.0;
        break;
      case model::MountOrientation::kAngled45:
        ok = std::abs(theta - 45.0) <= 25.0 || std::abs(theta - 135.0) <= 25.0;
        break;
    }
    if (!ok)
      throw std::runtime_error(origin + ": mount '" + m.name +
                               "' pose does not match its '" +
                               to_string(m.orientation) + "' orientation");
  }

  std::set<std::string> used_mounts;
  for (const auto& a : world.arms) {
    bool found = false;
    for (const auto& m : world.mounts)
      if (m.name == a.mount) found = true;
    if (!found)
      throw std::runtime_error(origin + ": arm '" + a.name +
                               "' references unknown mount '" + a.mount + "'");
    if (!used_mounts.insert(a.mount).second)
      throw std::runtime_error(origin + ": mount '" + a.mount +
                               "' is used by more than one arm");
  }

  for (const auto& [pose_name, q] : world.named_poses) {
    for (const auto& a : world.arms) {
      if (!model::within_limits(a.arm, q))
        throw std::runtime_error(origin + ": named pose '" + pose_name +
                                 "' violates joint limits of arm '" + a.name +
                                 "'");
    }
  }
}

}  // namespace

model::WorldModel parse_world(const std::string& text,
                              const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw std::runtime_error(origin + ":" + std::to_string(e.mark.line + 1) +
                             ":" + std::to_string(e.mark.column + 1) + ": " +
                             e.msg);
  }
  if (!root.IsMap())
    throw std::runtime_error(origin + ": world file must be a mapping");

  check_keys(origin, root,
             {"settings", "mounts", "arms", "obstacles", "objects",
              "named_poses", "acm"},
             "world file");

  WorldModel world;

  if (const YAML::Node s = root["settings"]) {
    if (!s.IsMap()) fail(origin, s, "settings must be a mapping");
    for (const auto& kv : s) {
      const std::string key = kv.first.as<std::string>();
      try {
        world.settings.set(key, number(origin, kv.second, "setting " + key));
      } catch (const std::invalid_argument& e) {
        fail(origin, kv.first, e.what());
      }
    }
  }

  if (const YAML::Node ms = root["mounts"]) {
    if (!ms.IsSequence()) fail(origin, ms, "mounts must be a list");
    for (const auto& entry : ms) {
      check_keys(origin, entry, {"name", "orientation", "pose"}, "mount");
      model::MountSpec m;
      if (!entry["name"]) fail(origin, entry, "mount needs a name");
      m.name = entry["name"].as<std::string>();
      if (!entry["pose"]) fail(origin, entry, "mount needs a pose");
      m.pose = parse_pose(origin, entry["pose"]);
      if (entry["orientation"]) {
        try {
          m.orientation = model::mount_orientation_from_string(
              entry["orientation"].as<std::string>());
        } catch (const std::invalid_argument& e) {
          fail(origin, entry["orientation"], e.what());
        }
      }
      world.mounts.push_back(std::move(m));
    }
  }

  if (const YAML::Node as = root["arms"]) {
    if (!as.IsSequence()) fail(origin, as, "arms must be a list");
    for (const auto& entry : as) {
      check_keys(origin, entry, {"name", "variant", "mount"}, "arm");
      model::ArmInstance a;
      if (!entry["name"]) fail(origin, entry, "arm needs a name");
      a.name = entry["name"].as<std::string>();
      if (!entry["mount"]) fail(origin, entry, "arm needs a mount");
      a.mount = entry["mount"].as<std::string>();
      model::ArmVariant variant = model::ArmVariant::kShort;
      if (entry["variant"]) {
        try {
          variant =
              model::variant_from_string(entry["variant"].as<std::string>());
        } catch (const std::invalid_argument& e) {
          fail(origin, entry["variant"], e.what());
        }
      }
      a.arm = model::build_arm(variant);
      world.arms.push_back(std::move(a));
    }
  }

  if (const YAML::Node os = root["obstacles"]) {
    if (!os.IsSequence()) fail(origin, os, "obstacles must be a list");
    for (const auto& entry : os) {
      check_keys(origin, entry,
                 {"name", "pose", "box", "sphere", "capsule"}, "obstacle");
      NamedShape n;
      if (!entry["name"]) fail(origin, entry, "obstacle needs a name");
      n.name = entry["name"].as<std::string>();
      n.shape = parse_shape(origin, entry, "obstacle '" + n.name + "'");
      if (!entry["pose"])
        fail(origin, entry, "obstacle '" + n.name + "' needs a pose");
      n.pose = parse_pose(origin, entry["pose"]);
      world.obstacles.push_back(std::move(n));
    }
  }

  if (const YAML::Node os = root["objects"]) {
    if (!os.IsSequence()) fail(origin, os, "objects must be a list");
    for (const auto& entry : os) {
      check_keys(origin, entry,
                 {"name", "pose", "box", "sphere", "capsule", "grasp", "mass"},
                 "object");
      model::SceneObject o;
      if (!entry["name"]) fail(origin, entry, "object needs a name");
      o.name = entry["name"].as<std::string>();
      o.shape = parse_shape(origin, entry, "object '" + o.name + "'");
      if (!entry["pose"])
        fail(origin, entry, "object '" + o.name + "' needs a pose");
      o.pose = parse_pose(origin, entry["pose"]);
      if (entry["grasp"]) o.grasp = parse_pose(origin, entry["grasp"]);
      if (entry["mass"]) {
        o.mass = number(origin, entry["mass"], "object mass");
        if (o.mass < 0)
          fail(origin, entry["mass"], "object mass must be >= 0");
      }
      world.objects.push_back(std::move(o));
    }
  }

  if (const YAML::Node ps = root["named_poses"]) {
    if (!ps.IsMap()) fail(origin, ps, "named_poses must be a mapping");
    for (const auto& kv : ps) {
      world.named_poses[kv.first.as<std::string>()] =
          parse_joint_degrees(origin, kv.second);
    }
  }

  if (const YAML::Node acm = root["acm"]) {
    if (!acm.IsSequence()) fail(origin, acm, "acm must be a list of pairs");
    for (const auto& entry : acm) {
      if (!entry.IsSequence() || entry.size() != 2)
        fail(origin, entry, "acm entry must be [name_a, name_b]");
      world.allowed_collisions.emplace_back(entry[0].as<std::string>(),
                                            entry[1].as<std::string>());
    }
  }

  validate(origin, world);
  return world;
}

model::WorldModel load_world(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open world file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_world(buf.str(), path);
}

std::uint64_t scenario_hash(const model::WorldModel& world) {
  std::string blob = model::serialize_parameters(
      model::snapshot_parameters(world));
  auto add_pose = [&blob](const geometry::Transform& t) {
    for (double v : geometry::pose_to_fields(t)) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g,", v);
      blob += buf;
    }
  };
  auto add_shape = [&blob](const Shape& s) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "k%d,%.17g,%.17g,%.17g,%.17g,%.17g;",
                  static_cast<int>(s.kind), s.radius, s.half_length,
                  s.half_extents.x(), s.half_extents.y(), s.half_extents.z());
    blob += buf;
  };
  for (const auto& o : world.obstacles) {
    blob += "obstacle:" + o.name + ":";
    add_shape(o.shape);
    add_pose(o.pose);
  }
  for (const auto& o : world.objects) {
    blob += "object:" + o.name + ":";
    add_shape(o.shape);
    add_pose(o.pose);
    if (o.grasp) add_pose(*o.grasp);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "m%.17g;", o.mass);
    blob += buf;
  }
  for (const auto& [a, b] : world.allowed_collisions)
    blob += "acm:" + a + "|" + b + ";";

  // FNV-1a, 64 bit.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : blob) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace armstack::world_io
