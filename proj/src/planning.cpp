#include "armstack/planning.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace armstack::planning {

namespace {

struct Tree {
  std::vector<Joints> nodes;
  std::vector<int> parent;

  int add(const Joints& q, int par) {
    nodes.push_back(q);
    parent.push_back(par);
    return static_cast<int>(nodes.size()) - 1;
  }

  int nearest(const Joints& q) const {
    int best = 0;
    double best_d = (nodes[0] - q).squaredNorm();
    for (size_t i = 1; i < nodes.size(); ++i) {
      const double d = (nodes[i] - q).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  }

  std::vector<Joints> chain_from(int idx) const {
    std::vector<Joints> out;
    for (int i = idx; i >= 0; i = parent[i]) out.push_back(nodes[i]);
    return out;
  }
};

enum class Extend { kTrapped, kAdvanced, kReached };

Extend extend_once(const scene::Scene& scene, const std::string& arm,
                   Tree& tree, const Joints& target, double step,
                   double resolution, int* new_idx) {
  const int near = tree.nearest(target);
  const Joints& q_near = tree.nodes[near];
  const Joints delta = target - q_near;
  const double dist = delta.norm();
  Joints q_new;
  bool reached = false;
  if (dist <= step) {
    q_new = target;
    reached = true;
  } else {
    q_new = q_near + delta * (step / dist);
  }
  if (scene.segment_in_collision(arm, q_near, q_new, resolution))
    return Extend::kTrapped;
  *new_idx = tree.add(q_new, near);
  return reached ? Extend::kReached : Extend::kAdvanced;
}

}  // namespace

int PlanOptions::iterations_from_time(double seconds) {
  // Nominal 3k sampling iterations per second keeps the derived cap well
  // inside the wall-clock budget it replaces.
  return std::max(100, static_cast<int>(seconds * 3000.0));
}

PlanResult plan_path(const scene::Scene& scene, const std::string& arm,
                     const Joints& start, const Joints& goal,
                     const PlanOptions& opts) {
  PlanResult result;
  const auto& inst = scene.world().arm(arm);

  if (!model::within_limits(inst.arm, start)) {
    result.failure = "start violates joint limits";
    return result;
  }
  if (!model::within_limits(inst.arm, goal)) {
    result.failure = "goal violates joint limits";
    return result;
  }
  std::string pair;
  if (scene.state_in_collision(arm, start, &pair)) {
    result.failure = "start in collision (" + pair + ")";
    return result;
  }
  if (scene.state_in_collision(arm, goal, &pair)) {
    result.failure = "goal in collision (" + pair + ")";
    return result;
  }

  // Trivial case: straight segment already works.
  if (!scene.segment_in_collision(arm, start, goal, opts.resolution)) {
    result.success = true;
    result.path = {start, goal};
    result.path = shortcut_path(scene, arm, result.path, 0, opts.resolution,
                                opts.seed);
    return result;
  }

  Tree from_start, from_goal;
  from_start.add(start, -1);
  from_goal.add(goal, -1);
  Tree* a = &from_start;
  Tree* b = &from_goal;
  bool a_is_start = true;

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto sample = [&]() {
    Joints q;
    for (int j = 0; j < kNumJoints; ++j) {
      const auto& spec = inst.arm.joints[j];
      q[j] = spec.limit_lo + unit(rng) * (spec.limit_hi - spec.limit_lo);
    }
    return q;
  };

  for (int it = 0; it < opts.max_iterations; ++it) {
    result.iterations = it + 1;
    const Joints q_rand = sample();
    int a_new = -1;
    if (extend_once(scene, arm, *a, q_rand, opts.step, opts.resolution,
                    &a_new) != Extend::kTrapped) {
      // Greedily grow the other tree toward the new node until it connects
      // or gets stuck.
      const Joints& target = a->nodes[a_new];
      int b_new = -1;
      Extend status;
      do {
        status = extend_once(scene, arm, *b, target, opts.step,
                             opts.resolution, &b_new);
      } while (status == Extend::kAdvanced);
      if (status == Extend::kReached) {
        std::vector<Joints> half_a = a->chain_from(a_new);   // node .. root
        std::vector<Joints> half_b = b->chain_from(b_new);
        std::reverse(half_a.begin(), half_a.end());          // root .. node
        // half_a ends at the meet point, half_b starts there.
        half_a.insert(half_a.end(), half_b.begin() + 1, half_b.end());
        if (!a_is_start)
          std::reverse(half_a.begin(), half_a.end());
        result.success = true;
        result.path = shortcut_path(scene, arm, std::move(half_a),
                                    opts.shortcut_passes, opts.resolution,
                                    opts.seed + 1);
        return result;
      }
    }
    std::swap(a, b);
    a_is_start = !a_is_start;
  }
  result.failure = "no path within iteration budget";
  return result;
}

std::vector<Joints> shortcut_path(const scene::Scene& scene,
                                  const std::string& arm,
                                  std::vector<Joints> path, int passes,
                                  double resolution, std::uint64_t seed) {
  // Drop exact duplicates first.
  std::vector<Joints> clean;
  for (const auto& q : path) {
    if (clean.empty() || (q - clean.back()).cwiseAbs().maxCoeff() > 1e-12)
      clean.push_back(q);
  }
  path = std::move(clean);
  if (path.size() < 3) return path;

  std::mt19937_64 rng(seed);
  for (int pass = 0; pass < passes && path.size() > 2; ++pass) {
    std::uniform_int_distribution<size_t> pick(0, path.size() - 1);
    size_t i = pick(rng);
    size_t j = pick(rng);
    if (i > j) std::swap(i, j);
    if (j - i < 2) continue;
    if (!scene.segment_in_collision(arm, path[i], path[j], resolution))
      path.erase(path.begin() + i + 1, path.begin() + j);
  }
  return path;
}

}  // namespace armstack::planning
