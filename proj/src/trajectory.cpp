#include "armstack/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace armstack::trajectory {

double Trajectory::duration() const {
  return points.empty() ? 0.0 : points.back().t;
}

namespace {

// Index of the segment containing time t (points[i].t <= t < points[i+1].t).
size_t segment_index(const std::vector<TrajectoryPoint>& pts, double t) {
  size_t lo = 0, hi = pts.size() - 1;
  while (lo + 1 < hi) {
    const size_t mid = (lo + hi) / 2;
    if (pts[mid].t <= t)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace

Joints Trajectory::sample(double t) const {
  if (points.empty()) return Joints::Zero();
  if (t <= points.front().t) return points.front().q;
  if (t >= points.back().t) return points.back().q;
  const size_t i = segment_index(points, t);
  const auto& a = points[i];
  const auto& b = points[i + 1];
  const double span = b.t - a.t;
  const double u = span > 0 ? (t - a.t) / span : 0.0;
  return a.q + u * (b.q - a.q);
}

Joints Trajectory::sample_velocity(double t) const {
  if (points.empty()) return Joints::Zero();
  if (t <= points.front().t) return points.front().qdot;
  if (t >= points.back().t) return points.back().qdot;
  const size_t i = segment_index(points, t);
  const auto& a = points[i];
  const auto& b = points[i + 1];
  const double span = b.t - a.t;
  const double u = span > 0 ? (t - a.t) / span : 0.0;
  return a.qdot + u * (b.qdot - a.qdot);
}

Trajectory time_parameterize(const std::vector<Joints>& path,
                             const model::ArmModel& arm, double max_accel,
                             double speed_scale) {
  if (speed_scale <= 0 || speed_scale > 1)
    throw std::invalid_argument("speed_scale must be in (0, 1]");
  Trajectory traj;
  if (path.empty()) return traj;

  double t0 = 0;
  traj.points.push_back({0.0, path[0], Joints::Zero()});

  for (size_t s = 0; s + 1 < path.size(); ++s) {
    const Joints dq = path[s + 1] - path[s];
    const double span = dq.cwiseAbs().maxCoeff();
    if (span < 1e-12) continue;

    // Normalized path coordinate u in [0, 1]; joint j moves dq[j] * u. The
    // tightest joint bounds both the phase speed and acceleration.
    double v_u = std::numeric_limits<double>::infinity();
    double a_u = std::numeric_limits<double>::infinity();
    for (int j = 0; j < kNumJoints; ++j) {
      const double m = std::abs(dq[j]);
      if (m < 1e-12) continue;
      v_u = std::min(v_u, speed_scale * arm.joints[j].max_speed / m);
      a_u = std::min(a_u, max_accel / m);
    }

    double t_acc = v_u / a_u;
    double u_acc = 0.5 * v_u * t_acc;
    double t_total;
    if (2 * u_acc >= 1.0) {  // triangle profile, never reaches v_u
      t_acc = std::sqrt(1.0 / a_u);
      v_u = a_u * t_acc;
      u_acc = 0.5;
      t_total = 2 * t_acc;
    } else {
      t_total = 2 * t_acc + (1.0 - 2 * u_acc) / v_u;
    }

    auto u_at = [&](double t) {
      if (t <= t_acc) return 0.5 * a_u * t * t;
      if (t <= t_total - t_acc) return u_acc + v_u * (t - t_acc);
      const double r = t_total - t;
      return 1.0 - 0.5 * a_u * r * r;
    };
    auto du_at = [&](double t) {
      if (t <= t_acc) return a_u * t;
      if (t <= t_total - t_acc) return v_u;
      return a_u * (t_total - t);
    };

    // Sample at a fixed grid plus the exact phase boundaries so the stored
    // polyline hugs the quadratic ramps.
    std::vector<double> times;
    for (double t = 0.010; t < t_total; t += 0.010) times.push_back(t);
    times.push_back(t_acc);
    times.push_back(t_total - t_acc);
    times.push_back(t_total);
    std::sort(times.begin(), times.end());

    double last = 0.0;
    for (double t : times) {
      if (t <= last + 1e-9 || t > t_total + 1e-9) continue;
      last = t;
      const double u = std::min(1.0, u_at(t));
      const double du = t < t_total - 1e-12 ? du_at(t) : 0.0;
      traj.points.push_back({t0 + t, path[s] + u * dq, du * dq});
    }
    // Land exactly on the waypoint, at rest.
    traj.points.back().q = path[s + 1];
    traj.points.back().qdot = Joints::Zero();
    t0 += t_total;
  }
  return traj;
}

bool velocity_bounded(const Trajectory& traj, const model::ArmModel& arm,
                      double probe_dt, double slack) {
  if (traj.points.empty()) return true;
  if (traj.points.front().qdot.cwiseAbs().maxCoeff() > 1e-9) return false;
  if (traj.points.back().qdot.cwiseAbs().maxCoeff() > 1e-9) return false;
  const double end = traj.duration();
  Joints prev = traj.sample(0.0);
  for (double t = probe_dt; t <= end + probe_dt; t += probe_dt) {
    const Joints cur = traj.sample(std::min(t, end));
    for (int j = 0; j < kNumJoints; ++j) {
      if (std::abs(cur[j] - prev[j]) >
          arm.joints[j].max_speed * probe_dt * slack)
        return false;
    }
    prev = cur;
  }
  return true;
}

std::string serialize(const Trajectory& traj) {
  std::string out;
  char buf[512];
  std::snprintf(buf, sizeof(buf), "arm=%s\nseed=%llu\nscenario=%016llx\n",
                traj.arm.c_str(),
                static_cast<unsigned long long>(traj.seed),
                static_cast<unsigned long long>(traj.scenario));
  out += buf;
  out += "columns=t,q1,q2,q3,q4,q5,q6,qd1,qd2,qd3,qd4,qd5,qd6\n";
  for (const auto& p : traj.points) {
    int n = std::snprintf(buf, sizeof(buf), "%.12g", p.t);
    for (int j = 0; j < kNumJoints; ++j)
      n += std::snprintf(buf + n, sizeof(buf) - n, " %.12g", p.q[j]);
    for (int j = 0; j < kNumJoints; ++j)
      n += std::snprintf(buf + n, sizeof(buf) - n, " %.12g", p.qdot[j]);
    out += buf;
    out += "\n";
  }
  return out;
}

Trajectory parse(const std::string& text) {
  Trajectory traj;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (line.find('=') != std::string::npos) {
      const auto eq = line.find('=');
      const std::string key = line.substr(0, eq);
      const std::string val = line.substr(eq + 1);
      if (key == "arm") traj.arm = val;
      else if (key == "seed") traj.seed = std::stoull(val);
      else if (key == "scenario") traj.scenario = std::stoull(val, nullptr, 16);
      else if (key == "columns") { /* fixed layout, informational */ }
      else
        throw std::invalid_argument("trajectory header line " +
                                    std::to_string(lineno) +
                                    ": unknown key " + key);
      continue;
    }
    std::istringstream row(line);
    TrajectoryPoint p;
    row >> p.t;
    for (int j = 0; j < kNumJoints; ++j) row >> p.q[j];
    for (int j = 0; j < kNumJoints; ++j) row >> p.qdot[j];
    if (row.fail())
      throw std::invalid_argument("trajectory row " + std::to_string(lineno) +
                                  " is malformed");
    if (!traj.points.empty() && p.t <= traj.points.back().t)
      throw std::invalid_argument("trajectory times must increase (row " +
                                  std::to_string(lineno) + ")");
    traj.points.push_back(p);
  }
  return traj;
}

void save(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trajectory: " + path);
  out << serialize(traj);
}

Trajectory load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read trajectory: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace armstack::trajectory
