// armstack: command line front end for the multi-arm manipulation stack.
//
// Subcommands: plan, run, validate-payload, place-mount, serve, client,
// report. Exit codes: 0 success, 1 a step or experiment failed, 2 invalid
// input or usage.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "armstack/control.hpp"
#include "armstack/coordination/client.hpp"
#include "armstack/coordination/host.hpp"
#include "armstack/coordination/tcp.hpp"
#include "armstack/harness/mission.hpp"
#include "armstack/harness/payload.hpp"
#include "armstack/harness/report.hpp"
#include "armstack/harness/runner.hpp"
#include "armstack/kinematics.hpp"
#include "armstack/placement.hpp"
#include "armstack/planning.hpp"
#include "armstack/scene.hpp"
#include "armstack/trajectory.hpp"
#include "armstack/world_io.hpp"

namespace fs = std::filesystem;
using namespace armstack;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::atomic<bool> g_interrupted{false};
void on_sigint(int) { g_interrupted = true; }

fs::path exe_dir() {
  std::error_code ec;
  const fs::path p = fs::read_symlink("/proc/self/exe", ec);
  if (ec) return fs::current_path();
  return p.parent_path();
}

std::vector<fs::path> scenario_dirs() {
  std::vector<fs::path> dirs;
  if (const char* env = std::getenv("ARMSTACK_SCENARIO_DIR")) {
    if (*env) dirs.emplace_back(env);
  }
  dirs.emplace_back("scenarios");
  dirs.emplace_back(exe_dir() / "scenarios");
  dirs.emplace_back(exe_dir().parent_path() / "scenarios");
  return dirs;
}

// A literal path wins; otherwise the name is looked up in the scenario
// directories, with and without the conventional suffix.
std::string resolve_input(const std::string& name, const std::string& suffix,
                          const char* what) {
  if (fs::exists(name)) return name;
  for (const fs::path& dir : scenario_dirs()) {
    const fs::path direct = dir / name;
    if (fs::exists(direct)) return direct.string();
    const fs::path with_suffix = dir / (name + suffix);
    if (fs::exists(with_suffix)) return with_suffix.string();
  }
  std::string msg = std::string(what) + " '" + name + "' not found (tried '" +
                    name + "'";
  for (const fs::path& dir : scenario_dirs())
    msg += ", '" + (dir / (name + suffix)).string() + "'";
  msg += ")";
  throw UsageError(msg);
}

model::WorldModel load_world_arg(const std::string& name) {
  const std::string path = resolve_input(name, ".yaml", "world");
  try {
    return world_io::load_world(path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

harness::MissionPlan load_mission_arg(const std::string& name) {
  const std::string path = resolve_input(name, ".mission.yaml", "mission");
  try {
    return harness::load_mission(path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

// kitchen, x/kitchen.yaml, x/sink2dw.mission.yaml -> kitchen / sink2dw
std::string short_name(const std::string& given) {
  std::string stem = fs::path(given).stem().string();
  const std::string tail = ".mission";
  if (stem.size() > tail.size() &&
      stem.compare(stem.size() - tail.size(), tail.size(), tail) == 0)
    stem.resize(stem.size() - tail.size());
  return stem;
}

void print_steps(const harness::RunReport& rep) {
  std::printf("%4s  %-30s %-8s %-4s %9s %8s  %s\n", "step", "label", "arm",
              "ok", "t_end", "margin", "error");
  for (const auto& s : rep.steps)
    std::printf("%4d  %-30s %-8s %-4s %8.3fs %8.3f  %s\n", s.index,
                s.label.c_str(), s.arm.c_str(), s.ok ? "ok" : "FAIL", s.t_end,
                s.peak_margin, s.error.c_str());
}

harness::RunReport run_checked(const model::WorldModel& world,
                               const harness::MissionPlan& plan,
                               const harness::RunOptions& opts) {
  try {
    return harness::run_mission(world, plan, opts);
  } catch (const std::exception& e) {
    // run_mission only throws on invalid inputs; step failures are recorded
    // inside the report.
    throw UsageError(e.what());
  }
}

// ---- plan / run -----------------------------------------------------------

struct RunArgs {
  std::string world;
  std::string mission;
  std::string out;
  std::uint64_t seed = 0;
  bool virtual_time = false;
  bool distributed = false;
  bool continue_on_fail = false;
  double speed_scale = 1.0;
};

int cmd_plan(const RunArgs& a) {
  const model::WorldModel world = load_world_arg(a.world);
  const harness::MissionPlan plan = load_mission_arg(a.mission);
  harness::RunOptions opts;
  opts.seed = a.seed;
  opts.virtual_time = true;
  opts.continue_on_fail = a.continue_on_fail;
  opts.speed_scale = a.speed_scale;
  harness::RunReport rep = run_checked(world, plan, opts);
  rep.world = a.world;
  rep.mission = a.mission;

  std::printf("plan '%s' on world '%s' (seed %llu)\n", a.mission.c_str(),
              a.world.c_str(), static_cast<unsigned long long>(a.seed));
  print_steps(rep);
  std::printf("%zu trajectories, %.3f s of motion\n", rep.trajectories.size(),
              rep.virtual_duration);
  if (!a.out.empty()) {
    harness::write_report(rep, a.out);
    std::printf("written to %s\n", a.out.c_str());
  }
  return rep.success ? 0 : 1;
}

int cmd_run(const RunArgs& a) {
  const model::WorldModel world = load_world_arg(a.world);
  const harness::MissionPlan plan = load_mission_arg(a.mission);
  harness::RunOptions opts;
  opts.seed = a.seed;
  opts.virtual_time = a.virtual_time;
  opts.mode = a.distributed ? harness::RunMode::kDistributed
                            : harness::RunMode::kSimulate;
  opts.continue_on_fail = a.continue_on_fail;
  opts.speed_scale = a.speed_scale;
  harness::RunReport rep = run_checked(world, plan, opts);
  rep.world = a.world;
  rep.mission = a.mission;

  std::string dir = a.out;
  if (dir.empty())
    dir = "armstack_out/" + short_name(a.world) + "_" + short_name(a.mission) +
          "_seed" + std::to_string(a.seed);
  harness::write_report(rep, dir);

  print_steps(rep);
  std::printf("%s  virtual %.3f s  wall %.3f s\nreport: %s\n",
              rep.success ? "SUCCESS" : "FAILURE", rep.virtual_duration,
              rep.wall_seconds, dir.c_str());
  return rep.success ? 0 : 1;
}

// ---- validate-payload -------------------------------------------------------

struct PayloadArgs {
  std::string world;
  std::string arm;
  std::string out;
  double mass = 2.27;
  int poses = 300;
  int select = 10;
  double shell = 0.10;
  std::uint64_t seed = 0;
};

int cmd_validate_payload(const PayloadArgs& a) {
  const model::WorldModel world = load_world_arg(a.world);
  harness::PayloadOptions opts;
  opts.arm = a.arm;
  opts.mass = a.mass;
  opts.n_poses = a.poses;
  opts.n_select = a.select;
  opts.shell = a.shell;
  opts.seed = a.seed;

  harness::PayloadResult res;
  try {
    res = harness::validate_payload(world, opts);
  } catch (const harness::InsufficientSamples& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  res.report.world = a.world;

  std::string dir = a.out;
  if (dir.empty())
    dir = "armstack_out/payload_" + short_name(a.world) + "_seed" +
          std::to_string(a.seed);
  harness::write_report(res.report, dir);

  std::printf("sampled %zu boundary poses, executed %zu (mass %.3f kg)\n",
              res.poses.size(), res.order.size(), a.mass);
  std::printf("%4s %10s %8s\n", "pose", "radius", "margin");
  for (const int idx : res.order)
    std::printf("%4d %9.3fm %8.3f\n", idx, res.poses[idx].tip_radius,
                res.poses[idx].margin);
  std::printf(
      "peak execution margin %.3f  max tracking error %.3f deg\n"
      "collision free: %s\n%s\nreport: %s\n",
      res.peak_execution_margin, rad_to_deg(res.max_tracking_err),
      res.collision_free ? "yes" : "NO",
      res.success ? "SUCCESS" : "FAILURE", dir.c_str());
  return res.success ? 0 : 1;
}

// ---- place-mount ------------------------------------------------------------

struct PlaceArgs {
  std::string world;
  std::string arm;
  std::string tasks;
  std::string candidates;
  std::string mount;
  std::string out;
  int threads = 0;
  int top = 10;
};

int cmd_place_mount(const PlaceArgs& a) {
  const model::WorldModel world = load_world_arg(a.world);
  if (world.arms.empty()) throw UsageError("world has no arms");
  const std::string arm = a.arm.empty() ? world.arms[0].name : a.arm;
  if (!world.find_arm(arm)) throw UsageError("unknown arm '" + arm + "'");
  if (a.mount.empty() && a.candidates.empty())
    throw UsageError("pass --mount and/or --candidates");

  placement::TaskPoseSet tasks;
  try {
    tasks = placement::load_task_poses(
        resolve_input(a.tasks, ".tasks", "task set"));
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  std::printf("%zu task poses, arm '%s'\n", tasks.poses.size(), arm.c_str());

  if (!a.mount.empty()) {
    const model::MountSpec* spec = nullptr;
    for (const auto& m : world.mounts)
      if (m.name == a.mount) spec = &m;
    if (!spec) throw UsageError("unknown mount '" + a.mount + "'");
    const placement::PlacementScore s =
        placement::reachability_score(world, arm, spec->pose, tasks);
    std::printf("mount '%s': fraction %.3f  mean manipulability %.6f\n",
                a.mount.c_str(), s.fraction, s.mean_manipulability);
  }

  if (!a.candidates.empty()) {
    placement::MountCandidateSpace space;
    try {
      space = placement::load_candidate_space(
          resolve_input(a.candidates, ".candidates", "candidate space"));
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    const std::vector<placement::RankedCandidate> ranked =
        placement::optimize_mount(world, arm, space, tasks, a.threads);
    std::printf("%4s %8s %8s %8s %9s %14s\n", "rank", "dx", "dy", "yaw",
                "fraction", "manipulability");
    const int n = std::min<int>(a.top, static_cast<int>(ranked.size()));
    for (int i = 0; i < n; ++i) {
      const auto& c = ranked[i];
      std::printf("%4d %7.3fm %7.3fm %7.1f° %9.3f %14.6f\n", i + 1,
                  c.offset_x, c.offset_y, rad_to_deg(c.yaw), c.score.fraction,
                  c.score.mean_manipulability);
    }
    if (!a.out.empty()) {
      fs::path out_path(a.out);
      if (out_path.has_parent_path())
        fs::create_directories(out_path.parent_path());
      std::ofstream f(a.out, std::ios::binary);
      if (!f) throw UsageError("cannot write " + a.out);
      f << placement::ranking_csv(ranked);
      std::printf("ranking: %s\n", a.out.c_str());
    }
  }
  return 0;
}

// ---- serve ------------------------------------------------------------------

std::pair<std::string, uint16_t> parse_endpoint(const std::string& text,
                                                uint16_t default_port) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) return {text, default_port};
  const std::string host = text.substr(0, colon);
  try {
    const int port = std::stoi(text.substr(colon + 1));
    if (port < 0 || port > 65535) throw std::out_of_range("port");
    return {host.empty() ? "0.0.0.0" : host, static_cast<uint16_t>(port)};
  } catch (const std::exception&) {
    throw UsageError("bad endpoint '" + text + "', expected host:port");
  }
}

struct ServeArgs {
  std::string world;
  std::string bind = "0.0.0.0:7750";
  std::string mission;
  std::uint64_t seed = 0;
  double duration = 0;  // s, 0 = until interrupted
  double wait = 30;     // s, registration timeout with --mission
};

// Plans on the host from the last reported configurations and drives the
// synchronized start protocol. Manipulation steps need local gripper and
// camera access, so a served mission is restricted to motion steps.
class ServeOrchestrator {
 public:
  ServeOrchestrator(const model::WorldModel& world,
                    const harness::MissionPlan& plan,
                    coordination::TcpHost& host, std::uint64_t seed)
      : world_(world), plan_(plan), host_(host), scene_(world), seed_(seed) {
    harness::validate_mission(plan_, world_);
    for (const auto& step : plan_.steps) {
      switch (step.kind) {
        case harness::StepKind::kMoveNamed:
        case harness::StepKind::kMoveJoint:
        case harness::StepKind::kMoveCartesian:
        case harness::StepKind::kWait:
          break;
        case harness::StepKind::kSyncGroup:
          for (const auto& m : step.group)
            if (m.kind == harness::StepKind::kReplay)
              throw UsageError("served missions cannot replay files");
          break;
        default:
          throw UsageError("served missions support motion steps only; '" +
                           step.label() + "' needs a local gripper or camera");
      }
    }
  }

  int run(double wait_s) {
    if (!await_arms(wait_s)) return 1;
    host_.with_core([](coordination::HostCore& core) {
      core.begin_clock_sync(coordination::wall_seconds());
    });
    if (!await([&] { return synced_; }, wait_s, [&] {
          host_.with_core([&](coordination::HostCore& core) {
            core.poll(coordination::wall_seconds());
            synced_ = core.clock_synced();
          });
        })) {
      std::fprintf(stderr, "error: clock sync timed out\n");
      return 1;
    }
    for (const auto& step : plan_.steps) {
      std::printf("-> %s\n", step.label().c_str());
      if (g_interrupted) return 1;
      if (!run_step(step)) return 1;
    }
    std::printf("mission complete\n");
    return 0;
  }

 private:
  template <typename Pred, typename Body>
  bool await(Pred done, double timeout, Body body) {
    const double deadline = coordination::wall_seconds() + timeout;
    while (!done()) {
      if (g_interrupted || coordination::wall_seconds() > deadline)
        return false;
      body();
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    return true;
  }

  std::vector<std::string> mission_arms() const {
    std::vector<std::string> arms;
    for (const auto& step : plan_.steps) {
      if (!step.arm.empty()) arms.push_back(step.arm);
      for (const auto& m : step.group)
        if (!m.arm.empty()) arms.push_back(m.arm);
    }
    std::sort(arms.begin(), arms.end());
    arms.erase(std::unique(arms.begin(), arms.end()), arms.end());
    return arms;
  }

  bool await_arms(double wait_s) {
    const std::vector<std::string> arms = mission_arms();
    const bool ok = await(
        [&] {
          bool all = true;
          host_.with_core([&](coordination::HostCore& core) {
            core.poll(coordination::wall_seconds());
            for (const std::string& arm : arms) {
              const auto conn = core.conn_for_arm(arm);
              if (!conn || !core.clients().at(*conn).reports.count(arm)) {
                all = false;
                return;
              }
            }
          });
          return all;
        },
        wait_s, [] {});
    if (!ok)
      std::fprintf(stderr, "error: not all arms registered and reporting\n");
    return ok;
  }

  Joints reported_q(const std::string& arm) {
    Joints q = Joints::Zero();
    host_.with_core([&](coordination::HostCore& core) {
      const auto conn = core.conn_for_arm(arm);
      if (conn) q = core.clients().at(*conn).reports.at(arm).q;
    });
    return q;
  }

  Joints goal_for(const harness::MissionStep& step, const Joints& q0) {
    switch (step.kind) {
      case harness::StepKind::kMoveNamed:
        return world_.named_poses.at(step.name);
      case harness::StepKind::kMoveJoint:
        return step.q;
      case harness::StepKind::kMoveCartesian: {
        const geometry::Transform target_base = geometry::compose(
            geometry::inverse(world_.mount(world_.arm(step.arm).mount).pose),
            step.pose);
        kinematics::IkOptions ik;
        ik.pos_tol = world_.settings.ik_pos_tol;
        ik.rot_tol = world_.settings.ik_rot_tol;
        ik.iteration_budget = kinematics::IkOptions::budget_from_time(
            world_.settings.ik_time_budget);
        ik.max_restarts = world_.settings.ik_max_restarts;
        ik.seed = ++seed_;
        const kinematics::IkResult res =
            kinematics::solve_ik(world_.arm(step.arm).arm, target_base, q0, ik);
        if (!res.success)
          throw UsageError(step.label() + ": unreachable pose");
        return res.q;
      }
      default:
        throw UsageError("unsupported step");
    }
  }

  bool run_step(const harness::MissionStep& step) {
    if (step.kind == harness::StepKind::kWait) {
      std::this_thread::sleep_for(
          std::chrono::duration<double>(step.wait_s));
      return true;
    }
    std::vector<const harness::MissionStep*> members;
    if (step.kind == harness::StepKind::kSyncGroup) {
      for (const auto& m : step.group) members.push_back(&m);
    } else {
      members.push_back(&step);
    }

    for (const std::string& arm : mission_arms())
      scene_.set_config(arm, reported_q(arm));

    std::map<std::string, std::string> plan_map;
    double longest = 0;
    for (const harness::MissionStep* m : members) {
      const Joints q0 = reported_q(m->arm);
      const Joints goal = goal_for(*m, q0);
      planning::PlanOptions po;
      po.step = world_.settings.planner_step;
      po.resolution = world_.settings.edge_resolution;
      po.max_iterations =
          planning::PlanOptions::iterations_from_time(
              world_.settings.planner_timeout);
      po.shortcut_passes = world_.settings.shortcut_passes;
      po.seed = ++seed_;
      const planning::PlanResult res =
          planning::plan_path(scene_, m->arm, q0, goal, po);
      if (!res.success) {
        std::fprintf(stderr, "error: %s: planning failed: %s\n",
                     m->label().c_str(), res.failure.c_str());
        return false;
      }
      trajectory::Trajectory traj = trajectory::time_parameterize(
          res.path, world_.arm(m->arm).arm, world_.settings.max_accel);
      traj.arm = m->arm;
      longest = std::max(longest, traj.duration());
      plan_map[m->arm] = trajectory::serialize(traj);
    }

    bool started = false;
    host_.with_core([&](coordination::HostCore& core) {
      started =
          core.begin_sync_execute(plan_map, coordination::wall_seconds());
    });
    if (!started) return false;
    coordination::SyncStatus::Phase phase =
        coordination::SyncStatus::Phase::kLoading;
    const bool done = await(
        [&] {
          return phase == coordination::SyncStatus::Phase::kDone ||
                 phase == coordination::SyncStatus::Phase::kFailed ||
                 phase == coordination::SyncStatus::Phase::kTimeout;
        },
        longest + 15.0, [&] {
          host_.with_core([&](coordination::HostCore& core) {
            core.poll(coordination::wall_seconds());
            phase = core.sync_status().phase;
          });
        });
    if (!done || phase != coordination::SyncStatus::Phase::kDone) {
      std::fprintf(stderr, "error: %s did not complete\n",
                   step.label().c_str());
      return false;
    }
    return true;
  }

  const model::WorldModel& world_;
  const harness::MissionPlan& plan_;
  coordination::TcpHost& host_;
  scene::Scene scene_;
  std::uint64_t seed_;
  bool synced_ = false;
};

int cmd_serve(const ServeArgs& a) {
  const model::WorldModel world = load_world_arg(a.world);
  const auto [addr, port] = parse_endpoint(a.bind, 7750);

  coordination::HostCore core(model::snapshot_parameters(world));
  coordination::TcpHost host(core, port, addr);
  if (!host.running()) throw UsageError("cannot bind " + a.bind);
  std::printf("serving world '%s' on %s:%u\n", a.world.c_str(), addr.c_str(),
              host.port());
  std::fflush(stdout);
  std::signal(SIGINT, on_sigint);

  if (!a.mission.empty()) {
    const harness::MissionPlan plan = load_mission_arg(a.mission);
    ServeOrchestrator orchestrator(world, plan, host, a.seed);
    return orchestrator.run(a.wait);
  }

  const double t0 = coordination::wall_seconds();
  int known = -1;
  while (!g_interrupted) {
    if (a.duration > 0 && coordination::wall_seconds() - t0 >= a.duration)
      break;
    host.with_core([&](coordination::HostCore& c) {
      c.poll(coordination::wall_seconds());
      const int n = static_cast<int>(c.clients().size());
      if (n != known) {
        known = n;
        std::printf("%d client(s) connected\n", n);
        std::fflush(stdout);
      }
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  return 0;
}

// ---- client -----------------------------------------------------------------

struct ClientArgs {
  std::string world;
  std::string arm;
  std::string host = "127.0.0.1:7750";
  double duration = 0;  // s, 0 = until interrupted
};

int cmd_client(const ClientArgs& a) {
  const model::WorldModel world = load_world_arg(a.world);
  if (!world.find_arm(a.arm)) throw UsageError("unknown arm '" + a.arm + "'");
  const auto [addr, port] = parse_endpoint(a.host, 7750);

  control::ControlConfig cfg;
  cfg.period = world.settings.control_period;
  cfg.path_tolerance = world.settings.path_tolerance;
  cfg.goal_tolerance = world.settings.goal_tolerance;
  control::ControllerManager manager(cfg);
  Joints initial = Joints::Zero();
  if (auto it = world.named_poses.find(a.arm + "/home");
      it != world.named_poses.end())
    initial = it->second;
  else if (auto home = world.named_poses.find("home");
           home != world.named_poses.end())
    initial = home->second;
  control::ArmController& ctl =
      manager.add_arm(a.arm, world.arm(a.arm).arm, initial);

  coordination::ClientCore core(a.arm);
  coordination::TcpClientLink link(core, addr, port);
  if (!link.connected())
    throw UsageError("cannot connect to " + addr + ":" + std::to_string(port));
  link.with_core([&](coordination::ClientCore& c) {
    c.hello();
    c.register_arm(a.arm);
  });
  std::printf("arm '%s' attached to %s:%u\n", a.arm.c_str(), addr.c_str(),
              port);
  std::fflush(stdout);
  std::signal(SIGINT, on_sigint);

  std::map<std::string, trajectory::Trajectory> staged;
  const auto t0 = std::chrono::steady_clock::now();
  auto next_tick = t0;
  const auto period =
      std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(cfg.period));
  std::uint64_t tick = 0;
  while (!g_interrupted && link.connected()) {
    if (a.duration > 0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count() >= a.duration)
      break;
    manager.tick();
    ++tick;

    for (const auto& action : link.poll_actions()) {
      using Kind = coordination::ClientCore::Action::Kind;
      switch (action.kind) {
        case Kind::kTrajectory: {
          std::string text;
          link.with_core([&](coordination::ClientCore& c) {
            text = c.trajectories().at(action.name);
          });
          try {
            staged[action.name] = trajectory::parse(text);
          } catch (const std::exception& e) {
            std::fprintf(stderr, "bad trajectory for %s: %s\n",
                         action.name.c_str(), e.what());
          }
          break;
        }
        case Kind::kStart: {
          const double delay =
              action.start_time - coordination::wall_seconds();
          for (auto& [arm, traj] : staged) {
            if (arm != a.arm) continue;
            if (!ctl.execute_trajectory(traj,
                                        ctl.time() + std::max(delay, 0.0)))
              std::fprintf(stderr, "start rejected: %s\n",
                           ctl.last_error().c_str());
          }
          staged.clear();
          break;
        }
        case Kind::kEstop:
          manager.estop_all();
          std::fprintf(stderr, "emergency stop\n");
          break;
        case Kind::kParam:
          break;
      }
    }

    // Roughly 20 Hz state reports; hold them while a start is pending so a
    // stale idle report cannot masquerade as completion.
    bool pending = false;
    link.with_core([&](coordination::ClientCore& c) {
      pending = c.pending_start().has_value();
    });
    if (tick % 6 == 0 && staged.empty() && !pending) {
      link.with_core([&](coordination::ClientCore& c) {
        c.report_state(a.arm, control::to_string(ctl.state()),
                       coordination::wall_seconds(), ctl.goal_reached(),
                       ctl.encoders());
      });
    }

    next_tick += period;
    std::this_thread::sleep_until(next_tick);
  }
  link.stop();
  return 0;
}

// ---- report -----------------------------------------------------------------

struct ReportArgs {
  std::string dir;
  std::string out;
  double rate = 50;  // Hz, plot sample rate
};

int cmd_report(const ReportArgs& a) {
  harness::RunReport rep;
  try {
    rep = harness::read_report(a.dir);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  std::printf("world %s  mission %s  seed %llu  mode %s  %s\n",
              rep.world.c_str(), rep.mission.c_str(),
              static_cast<unsigned long long>(rep.seed), rep.mode.c_str(),
              rep.success ? "SUCCESS" : "FAILURE");
  print_steps(rep);

  const std::string out_dir = a.out.empty() ? a.dir : a.out;
  fs::create_directories(out_dir);
  int rendered = 0;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(a.dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("traj_", 0) == 0 &&
        entry.path().extension() == ".csv" && name.rfind("plot_", 0) != 0)
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& path : files) {
    trajectory::Trajectory traj;
    try {
      traj = trajectory::load(path.string());
    } catch (const std::exception& e) {
      std::fprintf(stderr, "skipping %s: %s\n", path.c_str(), e.what());
      continue;
    }
    const fs::path out_path =
        fs::path(out_dir) / ("plot_" + path.stem().string() + ".csv");
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw UsageError("cannot write " + out_path.string());
    f << "t";
    for (int j = 1; j <= kNumJoints; ++j) f << ",q" << j << "_deg";
    for (int j = 1; j <= kNumJoints; ++j) f << ",v" << j << "_dps";
    f << "\n";
    const double dt = 1.0 / a.rate;
    const long n = std::lround(std::ceil(traj.duration() / dt));
    char buf[32];
    for (long i = 0; i <= n; ++i) {
      const double t = std::min(i * dt, traj.duration());
      const Joints q = traj.sample(t);
      const Joints v = traj.sample_velocity(t);
      std::snprintf(buf, sizeof(buf), "%.6f", t);
      f << buf;
      for (int j = 0; j < kNumJoints; ++j) {
        std::snprintf(buf, sizeof(buf), ",%.6f", rad_to_deg(q[j]));
        f << buf;
      }
      for (int j = 0; j < kNumJoints; ++j) {
        std::snprintf(buf, sizeof(buf), ",%.6f", rad_to_deg(v[j]));
        f << buf;
      }
      f << "\n";
    }
    ++rendered;
  }
  std::printf("%d trajectory plot file(s) in %s\n", rendered, out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"armstack: simulation-backed multi-arm manipulation stack"};
  app.require_subcommand(1);

  RunArgs plan_args;
  CLI::App* plan = app.add_subcommand(
      "plan", "Rehearse a mission under the virtual clock");
  plan->add_option("--world", plan_args.world, "world name or file")
      ->required();
  plan->add_option("--mission", plan_args.mission, "mission name or file")
      ->required();
  plan->add_option("--seed", plan_args.seed, "random seed");
  plan->add_option("--out", plan_args.out, "write the rehearsal report here");
  plan->add_option("--speed-scale", plan_args.speed_scale,
                   "derate joint speeds (0, 1]");
  plan->add_flag("--continue-on-fail", plan_args.continue_on_fail,
                 "keep rehearsing after a failed step");

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "Execute a mission");
  run->add_option("--world", run_args.world, "world name or file")->required();
  run->add_option("--mission", run_args.mission, "mission name or file")
      ->required();
  run->add_option("--seed", run_args.seed, "random seed");
  run->add_flag("--virtual-time", run_args.virtual_time,
                "run the control clock as fast as it computes");
  run->add_flag("--distributed", run_args.distributed,
                "route execution through the host/client protocol");
  run->add_flag("--continue-on-fail", run_args.continue_on_fail,
                "keep executing after a failed step");
  run->add_option("--speed-scale", run_args.speed_scale,
                  "derate joint speeds (0, 1]");
  run->add_option("--out", run_args.out, "report directory");

  PayloadArgs payload_args;
  CLI::App* payload = app.add_subcommand(
      "validate-payload", "Load test at the reach boundary");
  payload->add_option("--world", payload_args.world, "world name or file")
      ->required();
  payload->add_option("--arm", payload_args.arm,
                      "arm to test (default: first in the world)");
  payload->add_option("--mass", payload_args.mass, "payload mass, kg");
  payload->add_option("--poses", payload_args.poses, "boundary poses to sample");
  payload->add_option("--select", payload_args.select,
                      "highest-margin poses to execute");
  payload->add_option("--boundary-shell", payload_args.shell,
                      "outer reach fraction to sample in (0, 1)");
  payload->add_option("--seed", payload_args.seed, "random seed");
  payload->add_option("--out", payload_args.out, "report directory");

  PlaceArgs place_args;
  CLI::App* place = app.add_subcommand(
      "place-mount", "Score and rank arm mount placements");
  place->add_option("--world", place_args.world, "world name or file")
      ->required();
  place->add_option("--arm", place_args.arm,
                    "arm to place (default: first in the world)");
  place->add_option("--tasks", place_args.tasks, "task pose file")->required();
  place->add_option("--candidates", place_args.candidates,
                    "candidate space file to optimize over");
  place->add_option("--mount", place_args.mount,
                    "score this existing mount");
  place->add_option("--threads", place_args.threads,
                    "worker threads (0 = hardware)");
  place->add_option("--top", place_args.top, "ranked rows to print");
  place->add_option("--out", place_args.out, "write the full ranking CSV here");

  ServeArgs serve_args;
  CLI::App* serve = app.add_subcommand(
      "serve", "Coordinate remote arm clients over TCP");
  serve->add_option("--world", serve_args.world, "world name or file")
      ->required();
  serve->add_option("--bind", serve_args.bind, "listen endpoint host:port");
  serve->add_option("--mission", serve_args.mission,
                    "motion mission to drive once all arms report");
  serve->add_option("--seed", serve_args.seed, "random seed");
  serve->add_option("--duration", serve_args.duration,
                    "seconds to serve (0 = until interrupted)");
  serve->add_option("--wait", serve_args.wait,
                    "seconds to wait for registrations");

  ClientArgs client_args;
  CLI::App* client = app.add_subcommand(
      "client", "Run one arm's controller against a remote host");
  client->add_option("--world", client_args.world, "world name or file")
      ->required();
  client->add_option("--arm", client_args.arm, "arm to own")->required();
  client->add_option("--host", client_args.host, "host endpoint host:port");
  client->add_option("--duration", client_args.duration,
                     "seconds to run (0 = until interrupted)");

  ReportArgs report_args;
  CLI::App* report = app.add_subcommand(
      "report", "Render a report directory into plot-ready CSV");
  report->add_option("dir", report_args.dir, "report directory")->required();
  report->add_option("--out", report_args.out,
                     "plot output directory (default: the report dir)");
  report->add_option("--rate", report_args.rate, "plot sample rate, Hz");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*plan) return cmd_plan(plan_args);
    if (*run) return cmd_run(run_args);
    if (*payload) return cmd_validate_payload(payload_args);
    if (*place) return cmd_place_mount(place_args);
    if (*serve) return cmd_serve(serve_args);
    if (*client) return cmd_client(client_args);
    if (*report) return cmd_report(report_args);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
