#pragma once

#include <algorithm>
#include <cmath>

#include <kcac/env.hpp>

namespace kcac::pilot {

// Scripted pick-and-place controller. Phases, derived from the state alone:
//   1. move the free effector onto the center of block2,
//   2. engage the grip,
//   3. lift until the carried block clears the top of block1,
//   4. translate horizontally over goal2,
//   5. release; the block settles onto block1, completing the stack.
// Motion is per-axis exact-stop: each axis commands the full remaining
// distance, which the environment clamps to its per-step limit, so targets
// are reached without overshoot.
struct ScriptedPolicy {
  static constexpr double kArrive = 1e-9;
  static constexpr double kClearance = 0.004;

  static double axis_step(double from, double to) { return to - from; }

  static bool near(const Vec3& a, const Vec3& b) {
    return std::abs(a.x - b.x) <= kArrive && std::abs(a.y - b.y) <= kArrive &&
           std::abs(a.z - b.z) <= kArrive;
  }

  ActionCommand act(const BlockWorld& env, const BlockWorldState& s) const {
    const WorldSnapshot& w = s.snapshot;
    ActionCommand cmd;
    cmd.grip = -1.0;

    if (!s.carried) {
      // Once placed, the released block sits on goal2; just hold still.
      if (goal_overlap(w.block2, w.goal2) > 0.9) return cmd;
      if (near(w.effector, w.block2.center)) {
        cmd.grip = 1.0;  // attach with (almost) zero carry offset
        return cmd;
      }
      cmd.delta = {axis_step(w.effector.x, w.block2.center.x),
                   axis_step(w.effector.y, w.block2.center.y),
                   axis_step(w.effector.z, w.block2.center.z)};
      return cmd;
    }

    cmd.grip = 1.0;
    double cruise = w.goal2.center.z + kClearance;
    if (w.block2.center.z < cruise - kArrive) {
      // Straight up; the footprint is clear of block1 by construction.
      cmd.delta = {0.0, 0.0, cruise - w.block2.center.z};
      return cmd;
    }
    if (std::abs(w.block2.center.x - w.goal2.center.x) > kArrive ||
        std::abs(w.block2.center.y - w.goal2.center.y) > kArrive) {
      cmd.delta = {axis_step(w.block2.center.x, w.goal2.center.x),
                   axis_step(w.block2.center.y, w.goal2.center.y), 0.0};
      return cmd;
    }
    cmd.grip = -1.0;  // release: the block settles onto the stack
    return cmd;
  }
};

// Runs the scripted policy for one episode; returns the final success report.
inline SuccessReport run_pilot(const BlockWorld& env, std::uint64_t seed) {
  ScriptedPolicy pi;
  BlockWorldState s = env.reset(seed);
  while (!env.is_terminal(s)) {
    s = env.step(s, pi.act(env, s)).first;
  }
  return env.fractional_success(s);
}

}  // namespace kcac::pilot
