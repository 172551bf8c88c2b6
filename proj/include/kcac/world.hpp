#pragma once

#include "kcac/geometry.hpp"

namespace kcac {

// Instantaneous state of the two-block world as seen by reward evaluation.
struct WorldSnapshot {
  Vec3 effector;
  Vec3 effector_velocity;
  AlignedBox block1;
  AlignedBox block2;
  AlignedBox goal1;  // floor target for block1
  AlignedBox goal2;  // stacking target above goal1, for block2
  bool grip_engaged = false;
  int step_index = 0;
};

// Reward terms look at consecutive snapshots plus the episode-initial one.
struct RewardContext {
  WorldSnapshot prev;
  WorldSnapshot curr;
  WorldSnapshot init;
};

}  // namespace kcac
