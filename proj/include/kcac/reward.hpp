#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kcac/world.hpp"

namespace kcac {

// The eight shaping-term families. Order here is the canonical component
// order used by presence vectors, so do not reorder.
enum class ComponentKind : std::uint8_t {
  EndEffectorApproach,       // step change of effector-to-block distance
  BlockDisplacementFromInit, // step change of block distance from its spawn
  VerticalToGoal,            // step change of |block z - goal z|
  Goal1Overlap,              // IoU of block1 with goal1
  Goal2Overlap,              // IoU of block2 with goal2
  EffectorBlockProximity,    // windowed closeness of effector to block
  HorizontalToGoal,          // step change of horizontal block-to-goal distance
  VelocitySmoothness,        // norm of effector velocity change
};

inline constexpr int kComponentKindCount = 8;

const char* component_kind_name(ComponentKind k);
ComponentKind component_kind_from_name(const std::string& name);

// Which block (and matching goal) a term is about. Most terms follow the
// block being manipulated; floor-block terms exist for gated variants.
enum class BlockFocus : std::uint8_t { Block1 = 1, Block2 = 2 };

enum class GateKind : std::uint8_t {
  DistanceAbove,        // d(a, b) > threshold
  DistanceBelow,        // d(a, b) < threshold
  BlockAboveGoalHeight, // block center z > goal center z
};

enum class EntityRef : std::uint8_t { Effector, Block1, Block2, Goal1, Goal2 };

const char* entity_ref_name(EntityRef e);
EntityRef entity_ref_from_name(const std::string& name);

struct Gate {
  GateKind kind = GateKind::DistanceAbove;
  EntityRef a = EntityRef::Block2;  // for BlockAboveGoalHeight: the block
  EntityRef b = EntityRef::Effector;  // for BlockAboveGoalHeight: the goal
  double threshold = 0.0;  // distances only; strict comparison either way
};

bool gate_satisfied(const Gate& g, const WorldSnapshot& s);

// Linear ramp from 1 (at or below min_dist) down to 0 at max_dist; values
// beyond max_dist keep going negative, the cap is only at the near end.
struct ProximityWindow {
  double min_dist = 0.0;
  double max_dist = 1.0;
};

struct RewardComponent {
  ComponentKind kind = ComponentKind::EndEffectorApproach;
  double weight = 1.0;
  BlockFocus focus = BlockFocus::Block2;
  std::vector<Gate> gates;  // active only when every gate holds (conjunction)
  std::optional<ProximityWindow> proximity;  // EffectorBlockProximity only
};

struct CompoundReward {
  std::string name;
  std::vector<RewardComponent> components;
};

// Throws ConfigError on empty component lists, non-finite or zero weights,
// missing/spurious proximity windows, bad gate thresholds, or duplicate
// (kind, gates) pairs.
void validate_compound(const CompoundReward& r);

struct ComponentValue {
  ComponentKind kind;
  bool active = false;
  double value = 0.0;  // weight * raw term, zero when gated off
};

struct RewardBreakdown {
  double total = 0.0;
  std::vector<ComponentValue> per_component;  // declaration order
};

// Raw (unweighted) term for one component. Gates are not consulted here.
double eval_component_raw(const RewardComponent& c, const RewardContext& ctx);

// Weighted term for one component, 0 when any gate is unsatisfied.
double eval_component(const RewardComponent& c, const RewardContext& ctx);

RewardBreakdown eval_compound(const CompoundReward& r, const RewardContext& ctx);

// Presence vector over the canonical component order: entry k is 1 iff
// some component of that kind appears (gated or not) with nonzero weight.
struct RewardVector {
  std::array<int, kComponentKindCount> flags{};

  bool operator==(const RewardVector&) const = default;
  int l1() const {
    int s = 0;
    for (int f : flags) s += f;
    return s;
  }
};

RewardVector reward_to_vector(const CompoundReward& r);

// Built-in reward definitions for the two-block stacking family.
CompoundReward baseline_stack_reward();
CompoundReward refined_stack_reward();
CompoundReward grasp_reward(const ProximityWindow& window);
CompoundReward pick_reward();

}  // namespace kcac
