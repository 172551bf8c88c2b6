#include "kcac/reward.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "kcac/error.hpp"

namespace kcac {

namespace {

const char* const kKindNames[kComponentKindCount] = {
    "end_effector_approach", "block_displacement_from_init",
    "vertical_to_goal",      "goal1_overlap",
    "goal2_overlap",         "effector_block_proximity",
    "horizontal_to_goal",    "velocity_smoothness",
};

const AlignedBox& focus_block(const WorldSnapshot& s, BlockFocus f) {
  return f == BlockFocus::Block1 ? s.block1 : s.block2;
}

const AlignedBox& focus_goal(const WorldSnapshot& s, BlockFocus f) {
  return f == BlockFocus::Block1 ? s.goal1 : s.goal2;
}

Vec3 entity_point(EntityRef e, const WorldSnapshot& s) {
  switch (e) {
    case EntityRef::Effector: return s.effector;
    case EntityRef::Block1: return s.block1.center;
    case EntityRef::Block2: return s.block2.center;
    case EntityRef::Goal1: return s.goal1.center;
    case EntityRef::Goal2: return s.goal2.center;
  }
  throw Error("unknown entity reference");
}

}  // namespace

const char* component_kind_name(ComponentKind k) {
  return kKindNames[static_cast<int>(k)];
}

ComponentKind component_kind_from_name(const std::string& name) {
  for (int i = 0; i < kComponentKindCount; ++i) {
    if (name == kKindNames[i]) return static_cast<ComponentKind>(i);
  }
  throw ConfigError("unknown reward component kind: " + name);
}

const char* entity_ref_name(EntityRef e) {
  switch (e) {
    case EntityRef::Effector: return "effector";
    case EntityRef::Block1: return "block1";
    case EntityRef::Block2: return "block2";
    case EntityRef::Goal1: return "goal1";
    case EntityRef::Goal2: return "goal2";
  }
  return "?";
}

EntityRef entity_ref_from_name(const std::string& name) {
  for (EntityRef e : {EntityRef::Effector, EntityRef::Block1, EntityRef::Block2,
                      EntityRef::Goal1, EntityRef::Goal2}) {
    if (name == entity_ref_name(e)) return e;
  }
  throw ConfigError("unknown entity reference: " + name);
}

bool gate_satisfied(const Gate& g, const WorldSnapshot& s) {
  switch (g.kind) {
    case GateKind::DistanceAbove:
      return distance(entity_point(g.a, s), entity_point(g.b, s)) > g.threshold;
    case GateKind::DistanceBelow:
      return distance(entity_point(g.a, s), entity_point(g.b, s)) < g.threshold;
    case GateKind::BlockAboveGoalHeight:
      return entity_point(g.a, s).z > entity_point(g.b, s).z;
  }
  throw Error("unknown gate kind");
}

void validate_compound(const CompoundReward& r) {
  if (r.components.empty()) {
    throw ConfigError("reward '" + r.name + "': needs at least one component");
  }
  for (const RewardComponent& c : r.components) {
    std::string where = "reward '" + r.name + "' component " +
                        component_kind_name(c.kind);
    if (!std::isfinite(c.weight) || c.weight == 0.0) {
      throw ConfigError(where + ": weight must be finite and nonzero");
    }
    bool needs_window = c.kind == ComponentKind::EffectorBlockProximity;
    if (needs_window && !c.proximity) {
      throw ConfigError(where + ": proximity window required");
    }
    if (!needs_window && c.proximity) {
      throw ConfigError(where + ": proximity window not applicable");
    }
    if (c.proximity && !(c.proximity->max_dist > c.proximity->min_dist &&
                         c.proximity->min_dist >= 0.0 &&
                         std::isfinite(c.proximity->max_dist))) {
      throw ConfigError(where + ": proximity window needs 0 <= min < max");
    }
    for (const Gate& g : c.gates) {
      if (g.kind != GateKind::BlockAboveGoalHeight &&
          (!(g.threshold > 0.0) || !std::isfinite(g.threshold))) {
        throw ConfigError(where + ": gate threshold must be positive");
      }
    }
  }
  for (std::size_t i = 0; i < r.components.size(); ++i) {
    for (std::size_t j = i + 1; j < r.components.size(); ++j) {
      const RewardComponent& a = r.components[i];
      const RewardComponent& b = r.components[j];
      auto key = [](const Gate& g) {
        return std::tuple(g.kind, g.a, g.b, g.threshold);
      };
      bool same_gates = a.gates.size() == b.gates.size();
      if (same_gates) {
        for (std::size_t k = 0; k < a.gates.size(); ++k) {
          if (key(a.gates[k]) != key(b.gates[k])) same_gates = false;
        }
      }
      if (a.kind == b.kind && a.focus == b.focus && same_gates) {
        throw ConfigError("reward '" + r.name + "': duplicate component " +
                          component_kind_name(a.kind));
      }
    }
  }
}

double eval_component_raw(const RewardComponent& c, const RewardContext& ctx) {
  const WorldSnapshot& prev = ctx.prev;
  const WorldSnapshot& curr = ctx.curr;
  switch (c.kind) {
    case ComponentKind::EndEffectorApproach: {
      return distance(focus_block(curr, c.focus).center, curr.effector) -
             distance(focus_block(prev, c.focus).center, prev.effector);
    }
    case ComponentKind::BlockDisplacementFromInit: {
      Vec3 from = focus_block(ctx.init, c.focus).center;
      return distance(focus_block(curr, c.focus).center, from) -
             distance(focus_block(prev, c.focus).center, from);
    }
    case ComponentKind::VerticalToGoal: {
      double gz = focus_goal(curr, c.focus).center.z;
      return std::abs(focus_block(curr, c.focus).center.z - gz) -
             std::abs(focus_block(prev, c.focus).center.z - gz);
    }
    case ComponentKind::Goal1Overlap:
      return goal_overlap(curr.block1, curr.goal1);
    case ComponentKind::Goal2Overlap:
      return goal_overlap(curr.block2, curr.goal2);
    case ComponentKind::EffectorBlockProximity: {
      const ProximityWindow& w = *c.proximity;
      double d = distance(focus_block(curr, c.focus).center, curr.effector);
      return std::min(1.0, 1.0 - (d - w.min_dist) / (w.max_dist - w.min_dist));
    }
    case ComponentKind::HorizontalToGoal: {
      Vec3 g = focus_goal(curr, c.focus).center;
      return distance_xy(focus_block(curr, c.focus).center, g) -
             distance_xy(focus_block(prev, c.focus).center, g);
    }
    case ComponentKind::VelocitySmoothness:
      return (curr.effector_velocity - prev.effector_velocity).norm();
  }
  throw Error("unknown component kind");
}

double eval_component(const RewardComponent& c, const RewardContext& ctx) {
  for (const Gate& g : c.gates) {
    if (!gate_satisfied(g, ctx.curr)) return 0.0;
  }
  return c.weight * eval_component_raw(c, ctx);
}

RewardBreakdown eval_compound(const CompoundReward& r, const RewardContext& ctx) {
  RewardBreakdown out;
  out.per_component.reserve(r.components.size());
  for (const RewardComponent& c : r.components) {
    bool active = true;
    for (const Gate& g : c.gates) {
      if (!gate_satisfied(g, ctx.curr)) {
        active = false;
        break;
      }
    }
    double v = active ? c.weight * eval_component_raw(c, ctx) : 0.0;
    out.per_component.push_back({c.kind, active, v});
    out.total += v;
  }
  return out;
}

RewardVector reward_to_vector(const CompoundReward& r) {
  RewardVector v;
  for (const RewardComponent& c : r.components) {
    if (c.weight != 0.0) v.flags[static_cast<int>(c.kind)] = 1;
  }
  return v;
}

CompoundReward baseline_stack_reward() {
  // Two distance-gated branches: while the effector is far from the floor
  // block the terms steer toward placing it; once near, the terms switch to
  // moving the stacking block. The horizontal stacking term additionally
  // waits until the carried block is above goal height.
  Gate far_gate{GateKind::DistanceAbove, EntityRef::Block1, EntityRef::Effector, 0.02};
  Gate near_gate{GateKind::DistanceBelow, EntityRef::Block1, EntityRef::Effector, 0.02};
  Gate lifted{GateKind::BlockAboveGoalHeight, EntityRef::Block2, EntityRef::Goal2, 0.0};
  CompoundReward r;
  r.name = "baseline_stack";
  r.components = {
      {ComponentKind::EndEffectorApproach, -750.0, BlockFocus::Block1, {far_gate}, {}},
      {ComponentKind::HorizontalToGoal, -250.0, BlockFocus::Block1, {far_gate}, {}},
      {ComponentKind::EndEffectorApproach, -750.0, BlockFocus::Block2, {near_gate}, {}},
      {ComponentKind::VerticalToGoal, -250.0, BlockFocus::Block2, {near_gate}, {}},
      {ComponentKind::HorizontalToGoal, -125.0, BlockFocus::Block2, {near_gate, lifted}, {}},
      {ComponentKind::Goal1Overlap, 1.0, BlockFocus::Block1, {}, {}},
      {ComponentKind::Goal2Overlap, 1.0, BlockFocus::Block2, {}, {}},
      {ComponentKind::VelocitySmoothness, 0.005, BlockFocus::Block2, {}, {}},
  };
  return r;
}

CompoundReward refined_stack_reward() {
  CompoundReward r;
  r.name = "stack";
  r.components = {
      {ComponentKind::EndEffectorApproach, -750.0, BlockFocus::Block2, {}, {}},
      {ComponentKind::VerticalToGoal, -250.0, BlockFocus::Block2, {}, {}},
      {ComponentKind::HorizontalToGoal, -125.0, BlockFocus::Block2, {}, {}},
      {ComponentKind::Goal1Overlap, 0.5, BlockFocus::Block1, {}, {}},
      {ComponentKind::Goal2Overlap, 1.0, BlockFocus::Block2, {}, {}},
      {ComponentKind::VelocitySmoothness, 0.005, BlockFocus::Block2, {}, {}},
  };
  return r;
}

CompoundReward grasp_reward(const ProximityWindow& window) {
  CompoundReward r;
  r.name = "grasp";
  r.components = {
      {ComponentKind::EndEffectorApproach, -750.0, BlockFocus::Block2, {}, {}},
      {ComponentKind::BlockDisplacementFromInit, -250.0, BlockFocus::Block2, {}, {}},
      {ComponentKind::Goal1Overlap, 0.5, BlockFocus::Block1, {}, {}},
      {ComponentKind::EffectorBlockProximity, 1.0, BlockFocus::Block2, {}, window},
  };
  return r;
}

CompoundReward pick_reward() {
  CompoundReward r;
  r.name = "pick";
  r.components = {
      {ComponentKind::EndEffectorApproach, -750.0, BlockFocus::Block2, {}, {}},
      {ComponentKind::VerticalToGoal, -250.0, BlockFocus::Block2, {}, {}},
      {ComponentKind::Goal1Overlap, 0.5, BlockFocus::Block1, {}, {}},
      {ComponentKind::Goal2Overlap, 1.0, BlockFocus::Block2, {}, {}},
  };
  return r;
}

}  // namespace kcac
