#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "kcac/rng.hpp"
#include "kcac/world.hpp"

namespace kcac {

enum class Block1Init : std::uint8_t { AtGoal, Sampled };
enum class Dimensionality : std::uint8_t { TwoD, ThreeD };

struct EnvConfig {
  double arena_half_extent = 0.25;  // arena is [-a,a] x [-a,a] x [0,2a]
  double block_edge = 0.065;
  int max_steps = 200;
  double action_max_delta = 0.01;   // per-axis effector motion per step
  double grasp_radius = 0.02;
  Block1Init block1_init = Block1Init::AtGoal;
  AlignedBox spawn_region{{0.0, 0.0, 0.1}, {0.18, 0.18, 0.08}};
  Dimensionality dimensionality = Dimensionality::ThreeD;

  bool operator==(const EnvConfig&) const = default;
};

struct ActionCommand {
  Vec3 delta;
  double grip = -1.0;  // > 0 engages the grip
};

// Volume fractions of each block inside its goal region, plus the
// volume-weighted combination over both blocks.
struct SuccessReport {
  double frac_top = 0.0;     // block2 vs goal2
  double frac_bottom = 0.0;  // block1 vs goal1
  double frac_overall = 0.0;
};

struct BlockWorldState {
  WorldSnapshot snapshot;
  WorldSnapshot init;       // episode-initial snapshot, for displacement terms
  bool carried = false;
  Vec3 carry_offset;        // block2 center minus effector while attached
  RandomStream rng{0};      // per-episode stream (spawning)
};

// Deterministic kinematic world: a floor block (block1), a block to stack
// on top of it (block2), and a point effector that can grip block2 when
// close enough. All motion is command-driven, gravity acts only as an
// instant settle on release.
class BlockWorld {
 public:
  static constexpr int kObservationDim = 20;
  static constexpr int kActionDim = 4;  // delta xyz + grip

  explicit BlockWorld(const EnvConfig& cfg);

  BlockWorldState reset(std::uint64_t seed) const;

  // Advances one step. Returns the new state plus the reward context
  // (previous/current/initial snapshots) for this transition.
  std::pair<BlockWorldState, RewardContext> step(const BlockWorldState& s,
                                                 const ActionCommand& a) const;

  std::vector<double> observe(const BlockWorldState& s) const;
  SuccessReport fractional_success(const BlockWorldState& s) const;
  bool is_terminal(const BlockWorldState& s) const;

  const EnvConfig& config() const { return cfg_; }

 private:
  EnvConfig cfg_;
  double half_edge_;

  Vec3 clamp_to_arena(const Vec3& p) const;

  WorldSnapshot settle_release(WorldSnapshot snap) const;
  void resolve_block1_pushback(WorldSnapshot& snap) const;
};

}  // namespace kcac
