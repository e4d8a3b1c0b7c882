#include "armstack/harness/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <map>
#include <limits>
#include <set>
#include <memory>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "armstack/control.hpp"
#include "armstack/coordination/client.hpp"
#include "armstack/coordination/host.hpp"
#include "armstack/coordination/simnet.hpp"
#include "armstack/dynamics.hpp"
#include "armstack/harness/perception.hpp"
#include "armstack/kinematics.hpp"
#include "armstack/planning.hpp"
#include "armstack/scene.hpp"
#include "armstack/world_io.hpp"

namespace armstack::harness {
namespace {

struct StepError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Width an object presents between parallel fingers.
double grasp_width(const Shape& shape) {
  switch (shape.kind) {
    case ShapeKind::kSphere:
    case ShapeKind::kCapsule:
      return 2.0 * shape.radius;
    case ShapeKind::kBox:
      return 2.0 * shape.half_extents.minCoeff();
  }
  return 0.0;
}

struct Motion {
  std::string arm;
  trajectory::Trajectory traj;
  std::string file;  // report file name
};

class MissionRunner {
 public:
  MissionRunner(const model::WorldModel& world, const MissionPlan& plan,
                const RunOptions& opts)
      : world_(world),
        plan_(plan),
        opts_(opts),
        scene_(world_),
        hash_(world_io::scenario_hash(world_)),
        manager_(control::ControlConfig{world_.settings.control_period,
                                        world_.settings.path_tolerance,
                                        world_.settings.goal_tolerance}) {
    for (const model::ArmInstance& inst : world_.arms) {
      const Joints initial = initial_config(inst.name);
      manager_.add_arm(inst.name, inst.arm, initial);
      scene_.set_config(inst.name, initial);
    }
    if (opts_.mode == RunMode::kDistributed) setup_network();
  }

  RunReport run() {
    const auto wall_start = std::chrono::steady_clock::now();
    wall_next_ = wall_start;
    validate_mission(plan_, world_);

    report_.world = plan_.name;  // callers overwrite with the given paths
    report_.mission = plan_.name;
    report_.scenario = hash_;
    report_.seed = opts_.seed;
    report_.mode =
        opts_.mode == RunMode::kDistributed ? "distributed" : "simulate";

    if (opts_.mode == RunMode::kDistributed) bring_up_network();

    bool failed = false;
    for (size_t i = 0; i < plan_.steps.size(); ++i) {
      const MissionStep& step = plan_.steps[i];
      StepResult r;
      r.index = static_cast<int>(i + 1);
      r.label = step.label();
      r.arm = step.arm;
      r.t_start = now();
      if (failed && !opts_.continue_on_fail) {
        r.error = "skipped";
        r.t_end = now();
        report_.steps.push_back(std::move(r));
        continue;
      }
      try {
        dispatch(step, r);
        r.ok = true;
      } catch (const StepError& e) {
        r.error = e.what();
        if (!step.continue_on_fail) failed = true;
      }
      r.t_end = now();
      report_.steps.push_back(std::move(r));
    }

    report_.success = std::all_of(report_.steps.begin(), report_.steps.end(),
                                  [](const StepResult& s) { return s.ok; });
    report_.virtual_duration = now();
    report_.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      wall_start)
            .count();
    if (min_clearance_ < 1e17) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.9g", min_clearance_);
      report_.extra["min_clearance"] = buf;
    }
    for (const model::SceneObject& obj : world_.objects) {
      geometry::Transform pose = scene_.object_pose(obj.name);
      for (const auto& [arm, held] : held_) {
        if (held.object != obj.name) continue;
        pose = geometry::compose(
            geometry::compose(
                base_pose(arm),
                kinematics::tip_pose(world_.arm(arm).arm, scene_.config(arm))),
            held.offset);
      }
      std::string fields;
      for (double v : geometry::pose_to_fields(pose)) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.9g", v);
        fields += fields.empty() ? buf : (std::string(" ") + buf);
      }
      report_.extra["object_" + obj.name] = fields;
    }
    return std::move(report_);
  }

 private:
  double now() const { return manager_.time(); }
  double period() const { return manager_.config().period; }

  std::uint64_t next_seed() { return splitmix64(opts_.seed ^ ++seed_ctr_); }

  Joints initial_config(const std::string& arm) const {
    auto it = world_.named_poses.find(arm + "/home");
    if (it != world_.named_poses.end()) return it->second;
    it = world_.named_poses.find("home");
    if (it != world_.named_poses.end()) return it->second;
    return Joints::Zero();
  }

  geometry::Transform base_pose(const std::string& arm) const {
    return world_.mount(world_.arm(arm).mount).pose;
  }

  double held_mass(const std::string& arm) const {
    auto it = held_.find(arm);
    return it == held_.end() ? 0.0 : world_.find_object(it->second.object)->mass;
  }

  // One shared clock tick: motors step, the scene follows the encoders, and
  // the step result accumulates margins and tracking error.
  void tick(StepResult& r, bool audit_clearance = false) {
    if (opts_.mode == RunMode::kDistributed) pump_network();
    manager_.tick();
    for (const model::ArmInstance& inst : world_.arms) {
      control::ArmController& ctl = manager_.arm(inst.name);
      const Joints enc = ctl.encoders();
      scene_.set_config(inst.name, enc);
      const Eigen::Vector3d g_base =
          base_pose(inst.name).rotation.conjugate() *
          Eigen::Vector3d(0, 0, -dynamics::kGravity);
      const Joints tau = dynamics::gravity_torques(
          inst.arm, enc, held_mass(inst.name), g_base);
      r.peak_margin =
          std::max(r.peak_margin, dynamics::torque_margin(inst.arm, tau));
      r.max_tracking_err = std::max(
          r.max_tracking_err, (ctl.reference() - enc).cwiseAbs().maxCoeff());
      if (audit_clearance)
        min_clearance_ =
            std::min(min_clearance_, scene_.min_clearance(inst.name, enc));
    }
    if (!opts_.virtual_time) {
      wall_next_ += std::chrono::duration_cast<
          std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(period()));
      std::this_thread::sleep_until(wall_next_);
    }
  }

  void dispatch(const MissionStep& step, StepResult& r) {
    switch (step.kind) {
      case StepKind::kMoveNamed:
        execute_motions(single_motion(step.arm,
                                      world_.named_poses.at(step.name), r),
                        r);
        break;
      case StepKind::kMoveJoint:
        execute_motions(single_motion(step.arm, step.q, r), r);
        break;
      case StepKind::kMoveCartesian:
        execute_motions(
            single_motion(step.arm, goal_for_world_tip(step.arm, step.pose),
                          r),
            r);
        break;
      case StepKind::kPick:
        do_pick(step, r);
        break;
      case StepKind::kPlace:
        do_place(step, r);
        break;
      case StepKind::kGripper:
        do_gripper(step, r);
        break;
      case StepKind::kWait: {
        const long ticks = std::lround(std::ceil(step.wait_s / period()));
        for (long i = 0; i < ticks; ++i) tick(r);
        break;
      }
      case StepKind::kSyncGroup:
        do_sync_group(step, r);
        break;
      case StepKind::kReplay:
        execute_motions(replay_motions(step, r), r);
        break;
    }
  }

  // ---- goal resolution ----------------------------------------------------

  Joints goal_for_base_tip(const std::string& arm,
                           const geometry::Transform& target_base) {
    const model::ArmModel& spec = world_.arm(arm).arm;
    kinematics::IkOptions ik;
    ik.pos_tol = world_.settings.ik_pos_tol;
    ik.rot_tol = world_.settings.ik_rot_tol;
    ik.iteration_budget =
        kinematics::IkOptions::budget_from_time(world_.settings.ik_time_budget);
    ik.max_restarts = world_.settings.ik_max_restarts;
    const Joints seed = manager_.arm(arm).reference();
    std::string why = "unreachable pose";
    for (int attempt = 0; attempt < 8; ++attempt) {
      ik.seed = next_seed();
      const kinematics::IkResult res =
          kinematics::solve_ik(spec, target_base, seed, ik);
      if (!res.success) continue;
      std::string pair;
      if (!scene_.state_in_collision(arm, res.q, &pair)) return res.q;
      why = "goal collides: " + pair;
    }
    throw StepError("no collision-free goal configuration (" + why + ")");
  }

  Joints goal_for_world_tip(const std::string& arm,
                            const geometry::Transform& target_world) {
    return goal_for_base_tip(
        arm, geometry::object_in_base(base_pose(arm), target_world));
  }

  // ---- motion machinery ---------------------------------------------------

  std::vector<Motion> single_motion(const std::string& arm, const Joints& goal,
                                    StepResult& r) {
    std::vector<Motion> motions;
    if (auto traj = plan_to(arm, goal)) {
      motions.push_back({arm, std::move(*traj), file_name(r, arm, "")});
    }
    return motions;
  }

  std::optional<trajectory::Trajectory> plan_to(const std::string& arm,
                                                const Joints& goal) {
    const Joints start = manager_.arm(arm).reference();
    if ((goal - start).cwiseAbs().maxCoeff() < 1e-9) return std::nullopt;

    planning::PlanOptions po;
    po.step = world_.settings.planner_step;
    po.resolution = world_.settings.edge_resolution;
    // The iteration cap stands in for the planner timeout at a nominal
    // 3000 samples per second.
    po.max_iterations = std::max(
        1, static_cast<int>(world_.settings.planner_timeout * 3000.0));
    po.shortcut_passes = world_.settings.shortcut_passes;
    po.seed = next_seed();

    const planning::PlanResult res =
        planning::plan_path(scene_, arm, start, goal, po);
    if (!res.success) throw StepError("planning failed: " + res.failure);

    trajectory::Trajectory traj = trajectory::time_parameterize(
        res.path, world_.arm(arm).arm, world_.settings.max_accel,
        opts_.speed_scale);
    traj.arm = arm;
    traj.seed = po.seed;
    traj.scenario = hash_;
    return traj;
  }

  std::string file_name(const StepResult& r, const std::string& arm,
                        const std::string& suffix) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "traj_%02d_", r.index);
    return buf + arm + suffix + ".csv";
  }

  void execute_motions(std::vector<Motion> motions, StepResult& r,
                       bool audit_clearance = false) {
    // Motions for distinct arms start together; a repeated arm begins a new
    // wave that waits for the previous one (replay pre-positioning).
    size_t begin = 0;
    while (begin < motions.size()) {
      size_t end = begin;
      std::set<std::string> arms;
      while (end < motions.size() && arms.insert(motions[end].arm).second)
        ++end;
      std::vector<Motion> wave(std::make_move_iterator(motions.begin() + begin),
                               std::make_move_iterator(motions.begin() + end));
      run_wave(std::move(wave), r, audit_clearance);
      begin = end;
    }
  }

  void run_wave(std::vector<Motion> motions, StepResult& r,
                bool audit_clearance) {
    if (motions.empty()) return;
    if (opts_.mode == RunMode::kDistributed) {
      execute_remote(motions, r, audit_clearance);
    } else {
      for (const Motion& m : motions) {
        control::ArmController& ctl = manager_.arm(m.arm);
        if (!ctl.execute_trajectory(m.traj, now()))
          throw StepError(m.arm + ": " + ctl.last_error());
      }
      settle_motions(motions, r, now() + 2.0, audit_clearance);
    }
    for (Motion& m : motions) {
      if (r.trajectory_file.empty()) r.trajectory_file = m.file;
      report_.trajectories.emplace_back(m.file, std::move(m.traj));
    }
  }

  // Ticks until every involved controller is idle again.
  void settle_motions(const std::vector<Motion>& motions, StepResult& r,
                      double grace_base, bool audit_clearance) {
    double deadline = grace_base;
    for (const Motion& m : motions)
      deadline = std::max(deadline, now() + m.traj.duration() + 2.0);
    while (true) {
      bool busy = false;
      for (const Motion& m : motions) {
        const control::ArmController& ctl = manager_.arm(m.arm);
        switch (ctl.state()) {
          case control::ControllerState::kFault:
          case control::ControllerState::kEstopped:
            throw StepError(m.arm + ": " + ctl.last_error());
          case control::ControllerState::kIdle:
            break;
          default:
            busy = true;
        }
      }
      if (!busy) break;
      if (now() > deadline) throw StepError("execution timed out");
      tick(r, audit_clearance);
    }
    for (const Motion& m : motions) {
      if (!manager_.arm(m.arm).goal_reached())
        throw StepError(m.arm + ": goal not reached");
    }
  }

  // ---- manipulation -------------------------------------------------------

  PerceptionSim& perception_for(const std::string& arm) {
    auto it = perception_.find(arm);
    if (it != perception_.end()) return *it->second;
    PerceptionConfig cfg;
    cfg.rate_hz = world_.settings.perception_rate;
    cfg.pos_noise = world_.settings.perception_pos_noise;
    cfg.rot_noise = world_.settings.perception_rot_noise;
    cfg.seed = splitmix64(opts_.seed ^ 0x70657263ull ^
                          std::hash<std::string>{}(arm));
    auto sim = std::make_unique<PerceptionSim>(arm, cfg);
    PerceptionSim& ref = *sim;
    perception_.emplace(arm, std::move(sim));
    return ref;
  }

  // The closest graspable object by straight-line tip travel, restricted to
  // the arm's reach sphere. The distance metric is the one knob a picker
  // policy would swap out.
  std::string nearest_object(const std::string& arm) {
    std::set<std::string> taken;
    for (const auto& [a, held] : held_) taken.insert(held.object);
    const geometry::Transform tip_world = geometry::compose(
        base_pose(arm),
        kinematics::tip_pose(world_.arm(arm).arm, scene_.config(arm)));
    const Eigen::Vector3d base_origin = base_pose(arm).translation;
    const double reach = world_.arm(arm).arm.nominal_reach;
    std::string best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& obj : world_.objects) {
      if (!obj.grasp || taken.count(obj.name)) continue;
      const Eigen::Vector3d p =
          geometry::compose(scene_.object_pose(obj.name), *obj.grasp)
              .translation;
      if ((p - base_origin).norm() > reach) continue;
      const double d = (p - tip_world.translation).norm();
      if (d < best_d || (d == best_d && obj.name < best)) {
        best_d = d;
        best = obj.name;
      }
    }
    if (best.empty())
      throw StepError("no graspable object within reach of " + arm);
    return best;
  }

  void do_pick(const MissionStep& step, StepResult& r) {
    const std::string& arm = step.arm;
    if (held_.count(arm)) throw StepError(arm + " already holds an object");
    const std::string name =
        step.name == "nearest" ? nearest_object(arm) : step.name;
    const model::SceneObject* obj = world_.find_object(name);

    // Wrist camera estimate of the object, then the grasp frame relative to
    // the estimate.
    const PerceptionSample seen =
        perception_for(arm).observe(scene_, name, now());
    const geometry::Transform t_bc =
        kinematics::forward(world_.arm(arm).arm, scene_.config(arm)).camera;
    const geometry::Transform t_bo = geometry::goal_from_camera(t_bc, seen.pose);
    const geometry::Transform grasp_base = geometry::compose(t_bo, *obj->grasp);

    execute_motions(single_motion(arm, goal_for_base_tip(arm, grasp_base), r),
                    r);

    // Close on the object if the fingers actually ended up at it.
    const geometry::Transform tip_world = geometry::compose(
        base_pose(arm),
        kinematics::tip_pose(world_.arm(arm).arm, scene_.config(arm)));
    const geometry::Transform grasp_true =
        geometry::compose(scene_.object_pose(name), *obj->grasp);
    const auto [derr, aerr] = geometry::pose_distance(tip_world, grasp_true);
    control::ArmController& ctl = manager_.arm(arm);
    if (derr < 0.02 && aerr < deg_to_rad(10.0))
      ctl.gripper().set_obstruction(grasp_width(obj->shape));
    ctl.command_gripper(ctl.arm().gripper.stroke_min,
                        ctl.arm().gripper.max_effort);
    const double deadline = now() + 2.0;
    while (!ctl.gripper().holding() && now() < deadline) tick(r);
    if (!ctl.gripper().holding())
      throw StepError("grasp failed: fingers closed on nothing");

    scene_.attach(arm, name);
    const geometry::Transform offset =
        geometry::compose(geometry::inverse(tip_world),
                          scene_.object_pose(name));
    held_[arm] = Held{name, offset};
  }

  void do_place(const MissionStep& step, StepResult& r) {
    const std::string& arm = step.arm;
    auto it = held_.find(arm);
    if (it == held_.end()) throw StepError(arm + " holds nothing to place");
    const Held held = it->second;

    const geometry::Transform tip_goal =
        geometry::compose(step.pose, geometry::inverse(held.offset));
    execute_motions(single_motion(arm, goal_for_world_tip(arm, tip_goal), r),
                    r);

    scene_.detach(arm);
    held_.erase(arm);
    control::ArmController& ctl = manager_.arm(arm);
    ctl.gripper().set_obstruction(std::nullopt);
    ctl.command_gripper(ctl.arm().gripper.stroke_max,
                        ctl.arm().gripper.max_effort);
    settle_gripper(r);
  }

  void settle_gripper(StepResult& r) {
    const long ticks = std::lround(std::ceil(1.5 / period()));
    for (long i = 0; i < ticks; ++i) tick(r);
  }

  void do_gripper(const MissionStep& step, StepResult& r) {
    control::ArmController& ctl = manager_.arm(step.arm);
    const model::GripperSpec& spec = ctl.arm().gripper;
    if (step.name == "open") {
      if (held_.count(step.arm)) {
        scene_.detach(step.arm);
        held_.erase(step.arm);
      }
      ctl.gripper().set_obstruction(std::nullopt);
      ctl.command_gripper(spec.stroke_max, spec.max_effort);
    } else if (step.name == "close") {
      ctl.command_gripper(spec.stroke_min, spec.max_effort);
    } else {
      ctl.command_gripper(step.gripper_width, step.gripper_effort);
    }
    settle_gripper(r);
  }

  // ---- replay -------------------------------------------------------------

  std::vector<Motion> replay_motions(const MissionStep& step, StepResult& r) {
    if (step.name.empty()) throw StepError("replay has no file");
    const std::string path = step.name.front() == '/'
                                 ? step.name
                                 : plan_.base_dir + "/" + step.name;
    trajectory::Trajectory traj;
    try {
      traj = trajectory::load(path);
    } catch (const std::exception& e) {
      throw StepError(e.what());
    }
    if (traj.points.empty()) throw StepError("replay file is empty: " + path);
    traj.arm = step.arm;
    const model::ArmModel& spec = world_.arm(step.arm).arm;
    if (!trajectory::velocity_bounded(traj, spec, period()))
      throw StepError("replay exceeds joint speed limits: " + path);
    for (size_t i = 0; i + 1 < traj.points.size(); ++i) {
      std::string pair;
      if (scene_.segment_in_collision(step.arm, traj.points[i].q,
                                      traj.points[i + 1].q,
                                      world_.settings.edge_resolution, &pair))
        throw StepError("replay collides: " + pair);
    }

    std::vector<Motion> motions;
    const Joints start = manager_.arm(step.arm).reference();
    if ((traj.points.front().q - start).cwiseAbs().maxCoeff() >
        0.5 * world_.settings.path_tolerance) {
      if (auto pre = plan_to(step.arm, traj.points.front().q))
        motions.push_back(
            {step.arm, std::move(*pre), file_name(r, step.arm, "_pre")});
    }
    motions.push_back({step.arm, std::move(traj), file_name(r, step.arm, "")});
    return motions;
  }

  // ---- synchronized groups ------------------------------------------------

  void do_sync_group(const MissionStep& step, StepResult& r) {
    // Pre-positioning for replays runs sequentially; the recorded segments
    // themselves then start together.
    std::vector<Motion> motions;
    for (const MissionStep& member : step.group) {
      switch (member.kind) {
        case StepKind::kMoveNamed: {
          auto m = single_motion(member.arm,
                                 world_.named_poses.at(member.name), r);
          std::move(m.begin(), m.end(), std::back_inserter(motions));
          break;
        }
        case StepKind::kMoveJoint: {
          auto m = single_motion(member.arm, member.q, r);
          std::move(m.begin(), m.end(), std::back_inserter(motions));
          break;
        }
        case StepKind::kMoveCartesian: {
          auto m = single_motion(
              member.arm, goal_for_world_tip(member.arm, member.pose), r);
          std::move(m.begin(), m.end(), std::back_inserter(motions));
          break;
        }
        case StepKind::kReplay: {
          auto m = replay_motions(member, r);
          if (m.size() == 2) {  // run the pre-positioning now
            std::vector<Motion> pre;
            pre.push_back(std::move(m.front()));
            execute_motions(std::move(pre), r);
            m.erase(m.begin());
          }
          motions.push_back(std::move(m.front()));
          break;
        }
        default:
          throw StepError("unsupported sync_group member: " + member.label());
      }
    }
    execute_motions(std::move(motions), r, true);
  }

  // ---- distributed transport ----------------------------------------------

  struct RemoteClient {
    std::string name;
    std::string arm;
    int node = -1;
    int conn = -1;  // client side endpoint
    std::unique_ptr<coordination::ClientCore> core;
    std::map<std::string, trajectory::Trajectory> staged;
    std::uint64_t last_report_tick = 0;
  };

  void setup_network() {
    coordination::SimNetConfig cfg;
    cfg.latency = 0.002;
    cfg.jitter = 0.001;
    cfg.seed = splitmix64(opts_.seed ^ 0x6e6574ull);
    net_ = std::make_unique<coordination::SimNet>(cfg);
    host_ = std::make_unique<coordination::HostCore>(
        model::snapshot_parameters(world_));
    host_node_ = net_->add_node([this](int conn, const std::string& bytes,
                                       double local_now) {
      host_->on_bytes(conn, bytes, local_now);
    });

    for (const model::ArmInstance& inst : world_.arms) {
      auto rc = std::make_unique<RemoteClient>();
      rc->name = "client_" + inst.name;
      rc->arm = inst.name;
      rc->core = std::make_unique<coordination::ClientCore>(rc->name);
      RemoteClient* raw = rc.get();
      rc->node = net_->add_node([raw](int, const std::string& bytes,
                                      double local_now) {
        raw->core->on_bytes(bytes, local_now);
      });
      const auto [host_conn, client_conn] =
          net_->connect(host_node_, rc->node);
      host_->on_connect(host_conn);
      rc->conn = client_conn;
      clients_.push_back(std::move(rc));
    }
  }

  void flush_network() {
    for (auto& [conn, bytes] : host_->take_outbound())
      if (!bytes.empty()) net_->send(conn, bytes);
    for (auto& rc : clients_) {
      const std::string bytes = rc->core->take_outbound();
      if (!bytes.empty()) net_->send(rc->conn, bytes);
    }
  }

  // Delivers due traffic, applies client actions, and streams state reports.
  void pump_network() {
    const double t = now() + period();
    flush_network();
    net_->run_until(t);
    host_->poll(t);
    for (auto& rc : clients_) {
      control::ArmController& ctl = manager_.arm(rc->arm);
      for (const auto& action : rc->core->poll(net_->local_time(rc->node))) {
        using Kind = coordination::ClientCore::Action::Kind;
        switch (action.kind) {
          case Kind::kTrajectory:
            rc->staged[action.name] =
                trajectory::parse(rc->core->trajectories().at(action.name));
            break;
          case Kind::kStart:
            for (auto& [arm, traj] : rc->staged)
              if (!ctl.execute_trajectory(traj, action.start_time))
                rc->core->report_state(arm, "fault", action.start_time, false,
                                       ctl.encoders());
            rc->staged.clear();
            break;
          case Kind::kEstop:
            ctl.estop();
            break;
          case Kind::kParam:
            break;
        }
      }
      // Stay quiet while a load or start is pending so stale idle reports
      // cannot masquerade as completions.
      const bool pending =
          !rc->staged.empty() || rc->core->pending_start().has_value();
      if (!pending && manager_.ticks() - rc->last_report_tick >= 6) {
        rc->last_report_tick = manager_.ticks();
        rc->core->report_state(rc->arm, to_string(ctl.state()),
                               net_->local_time(rc->node), ctl.goal_reached(),
                               ctl.encoders());
      }
    }
    flush_network();
  }

  void bring_up_network() {
    StepResult scratch;
    for (auto& rc : clients_) {
      rc->core->hello();
      rc->core->register_arm(rc->arm);
    }
    for (int i = 0; i < 50; ++i) tick(scratch);
    for (auto& rc : clients_)
      if (!rc->core->handshake_done())
        throw std::runtime_error(rc->name + ": handshake failed");
    host_->begin_clock_sync(now());
    for (int i = 0; i < 250 && !host_->clock_synced(); ++i) tick(scratch);
    if (!host_->clock_synced())
      throw std::runtime_error("clock sync did not converge");
  }

  void execute_remote(const std::vector<Motion>& motions, StepResult& r,
                      bool audit_clearance) {
    std::map<std::string, std::string> plan;
    for (const Motion& m : motions)
      plan[m.arm] = trajectory::serialize(m.traj);
    if (!host_->begin_sync_execute(plan, now()))
      throw StepError("sync load failed: " + host_->last_error());

    double deadline = now() + 10.0;
    for (const Motion& m : motions)
      deadline = std::max(deadline, now() + m.traj.duration() + 10.0);
    using Phase = coordination::SyncStatus::Phase;
    while (true) {
      const Phase phase = host_->sync_status().phase;
      if (phase == Phase::kDone) break;
      if (phase == Phase::kFailed || phase == Phase::kTimeout)
        throw StepError("sync execution failed: " + host_->last_error());
      if (now() > deadline) throw StepError("sync execution timed out");
      tick(r, audit_clearance);
    }
    for (const Motion& m : motions) {
      if (!manager_.arm(m.arm).goal_reached())
        throw StepError(m.arm + ": goal not reached");
    }
  }

  struct Held {
    std::string object;
    geometry::Transform offset;  // tip -> object at grasp time
  };

  model::WorldModel world_;
  MissionPlan plan_;
  RunOptions opts_;
  scene::Scene scene_;
  std::uint64_t hash_;
  control::ControllerManager manager_;
  RunReport report_;
  std::map<std::string, Held> held_;
  std::map<std::string, std::unique_ptr<PerceptionSim>> perception_;
  std::uint64_t seed_ctr_ = 0;
  double min_clearance_ = 1e18;
  std::chrono::steady_clock::time_point wall_next_;

  std::unique_ptr<coordination::SimNet> net_;
  std::unique_ptr<coordination::HostCore> host_;
  int host_node_ = -1;
  std::vector<std::unique_ptr<RemoteClient>> clients_;
};

}  // namespace

RunReport run_mission(const model::WorldModel& world, const MissionPlan& plan,
                      const RunOptions& opts) {
  return MissionRunner(world, plan, opts).run();
}

}  // namespace armstack::harness
