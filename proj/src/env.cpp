#include "kcac/env.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "kcac/error.hpp"

namespace kcac {

namespace {

double clamp(double v, double lo, double hi) {
  return std::min(std::max(v, lo), hi);
}

double footprint_overlap_area(const AlignedBox& a, const AlignedBox& b) {
  return overlap_1d(a.min(0), a.max(0), b.min(0), b.max(0)) *
         overlap_1d(a.min(1), a.max(1), b.min(1), b.max(1));
}

}  // namespace

BlockWorld::BlockWorld(const EnvConfig& cfg) : cfg_(cfg) {
  if (!(cfg.arena_half_extent > 0.0) || !std::isfinite(cfg.arena_half_extent)) {
    throw ConfigError("env.arena_half_extent must be positive");
  }
  if (!(cfg.block_edge > 0.0) || cfg.block_edge >= cfg.arena_half_extent) {
    throw ConfigError("env.block_edge must be positive and smaller than the arena");
  }
  if (cfg.max_steps < 1) throw ConfigError("env.max_steps must be >= 1");
  if (!(cfg.action_max_delta > 0.0)) {
    throw ConfigError("env.action_max_delta must be positive");
  }
  if (!(cfg.grasp_radius > 0.0)) {
    throw ConfigError("env.grasp_radius must be positive");
  }
  validate_box(cfg.spawn_region, "env.spawn_region");
  double a = cfg.arena_half_extent;
  for (int axis = 0; axis < 2; ++axis) {
    if (cfg.spawn_region.min(axis) < -a || cfg.spawn_region.max(axis) > a) {
      throw ConfigError("env.spawn_region must lie inside the arena");
    }
  }
  if (cfg.spawn_region.min(2) < 0.0 || cfg.spawn_region.max(2) > 2.0 * a) {
    throw ConfigError("env.spawn_region must lie inside the arena");
  }
  half_edge_ = cfg.block_edge / 2.0;
}

Vec3 BlockWorld::clamp_to_arena(const Vec3& p) const {
  double a = cfg_.arena_half_extent;
  return {clamp(p.x, -a, a), clamp(p.y, -a, a), clamp(p.z, 0.0, 2.0 * a)};
}

BlockWorldState BlockWorld::reset(std::uint64_t seed) const {
  BlockWorldState s;
  s.rng = RandomStream(seed);
  bool flat = cfg_.dimensionality == Dimensionality::TwoD;
  double he = half_edge_;
  double a = cfg_.arena_half_extent;
  const AlignedBox& sp = cfg_.spawn_region;

  WorldSnapshot& w = s.snapshot;
  w.goal1 = make_cube({0.0, 0.0, he}, cfg_.block_edge);
  w.goal2 = make_cube({0.0, 0.0, cfg_.block_edge + he}, cfg_.block_edge);

  auto sample_xy = [&](double& x, double& y) {
    x = s.rng.uniform(std::max(sp.min(0), -a + he), std::min(sp.max(0), a - he));
    y = flat ? 0.0
             : s.rng.uniform(std::max(sp.min(1), -a + he), std::min(sp.max(1), a - he));
  };

  Vec3 e;
  e.x = s.rng.uniform(sp.min(0), sp.max(0));
  e.y = flat ? 0.0 : s.rng.uniform(sp.min(1), sp.max(1));
  e.z = s.rng.uniform(sp.min(2), sp.max(2));
  w.effector = clamp_to_arena(e);

  if (cfg_.block1_init == Block1Init::AtGoal) {
    w.block1 = w.goal1;
  } else {
    double x, y;
    sample_xy(x, y);
    w.block1 = make_cube({x, y, he}, cfg_.block_edge);
  }

  // Block2 spawns on the floor, footprint clear of block1.
  bool placed = false;
  for (int tries = 0; tries < 10000 && !placed; ++tries) {
    double x, y;
    sample_xy(x, y);
    AlignedBox cand = make_cube({x, y, he}, cfg_.block_edge);
    if (footprint_overlap_area(cand, w.block1) == 0.0) {
      w.block2 = cand;
      placed = true;
    }
  }
  if (!placed) {
    throw ConfigError("env.spawn_region leaves no room for block2 beside block1");
  }

  w.effector_velocity = {0.0, 0.0, 0.0};
  w.grip_engaged = false;
  w.step_index = 0;
  s.init = w;
  s.carried = false;
  s.carry_offset = {0.0, 0.0, 0.0};
  return s;
}

WorldSnapshot BlockWorld::settle_release(WorldSnapshot snap) const {
  double he = half_edge_;
  double rest_z = he;
  if (footprint_overlap_area(snap.block2, snap.block1) > 0.0) {
    rest_z = snap.block1.max(2) + he;
  }
  snap.block2.center.z = rest_z;
  return snap;
}

// A carried block2 can be driven into block1; block1 yields horizontally
// by the smallest axis-aligned motion that removes the overlap. The
// carried block itself never moves here.
void BlockWorld::resolve_block1_pushback(WorldSnapshot& snap) const {
  const AlignedBox& b2 = snap.block2;
  AlignedBox& b1 = snap.block1;
  double ox = overlap_1d(b1.min(0), b1.max(0), b2.min(0), b2.max(0));
  double oy = overlap_1d(b1.min(1), b1.max(1), b2.min(1), b2.max(1));
  double oz = overlap_1d(b1.min(2), b1.max(2), b2.min(2), b2.max(2));
  if (ox <= 0.0 || oy <= 0.0 || oz <= 0.0) return;

  double a = cfg_.arena_half_extent;
  double he = half_edge_;
  double sep = b1.half_extents.x + b2.half_extents.x;  // equal cubes: edge

  struct Candidate {
    int axis;
    double target;  // block1 center coordinate after the push
    double dist;
  };
  std::vector<Candidate> cands;
  for (int axis = 0; axis < 2; ++axis) {
    double b1c = b1.c(axis);
    double b2c = b2.c(axis);
    double away = b1c >= b2c ? 1.0 : -1.0;
    for (double dir : {away, -away}) {
      double target = b2c + dir * sep;
      if (target < -a + he || target > a - he) continue;
      cands.push_back({axis, target, std::abs(target - b1c)});
    }
  }
  if (cands.empty()) {
    // Arena corner squeeze; push inward along x regardless.
    double target = b2.center.x + (b2.center.x >= 0.0 ? -sep : sep);
    cands.push_back({0, target, std::abs(target - b1.center.x)});
  }
  const Candidate* best = &cands[0];
  for (const Candidate& c : cands) {
    if (c.dist < best->dist) best = &c;
  }
  if (best->axis == 0) {
    b1.center.x = best->target;
  } else {
    b1.center.y = best->target;
  }
}

std::pair<BlockWorldState, RewardContext> BlockWorld::step(
    const BlockWorldState& s, const ActionCommand& a) const {
  if (!a.delta.finite() || !std::isfinite(a.grip)) {
    throw InvalidActionError("action must be finite");
  }
  if (is_terminal(s)) throw Error("step called on a terminal state");

  BlockWorldState n = s;
  WorldSnapshot& w = n.snapshot;
  double lim = cfg_.action_max_delta;
  Vec3 d{clamp(a.delta.x, -lim, lim), clamp(a.delta.y, -lim, lim),
         clamp(a.delta.z, -lim, lim)};
  if (cfg_.dimensionality == Dimensionality::TwoD) d.y = 0.0;
  bool grip_on = a.grip > 0.0;

  Vec3 e_old = w.effector;
  Vec3 e_new = clamp_to_arena(e_old + d);

  if (s.carried && grip_on) {
    // Keep the carried block legal: above the floor and inside the arena.
    double he = half_edge_;
    double la = cfg_.arena_half_extent - he;
    e_new.x = clamp(e_new.x, -la - n.carry_offset.x, la - n.carry_offset.x);
    e_new.y = clamp(e_new.y, -la - n.carry_offset.y, la - n.carry_offset.y);
    e_new.z = std::max(e_new.z, he - n.carry_offset.z);
    w.effector = e_new;
    w.block2.center = e_new + n.carry_offset;
    resolve_block1_pushback(w);
  } else if (s.carried && !grip_on) {
    w.effector = e_new;
    n.carried = false;
    n.carry_offset = {0.0, 0.0, 0.0};
    w = settle_release(w);
  } else {
    w.effector = e_new;
    if (grip_on && distance(w.block2.center, e_new) <= cfg_.grasp_radius) {
      n.carried = true;
      n.carry_offset = w.block2.center - e_new;
    }
  }

  w.effector_velocity = w.effector - e_old;
  w.grip_engaged = grip_on;
  w.step_index = s.snapshot.step_index + 1;

  RewardContext ctx{s.snapshot, w, s.init};
  return {std::move(n), std::move(ctx)};
}

std::vector<double> BlockWorld::observe(const BlockWorldState& s) const {
  const WorldSnapshot& w = s.snapshot;
  std::vector<double> o;
  o.reserve(kObservationDim);
  o.push_back(1.0 - double(w.step_index) / double(cfg_.max_steps));
  for (const Vec3* v : {&w.effector, &w.effector_velocity, &w.block1.center,
                        &w.block2.center, &w.goal1.center, &w.goal2.center}) {
    o.push_back(v->x);
    o.push_back(v->y);
    o.push_back(v->z);
  }
  o.push_back(s.carried ? 1.0 : 0.0);
  return o;
}

SuccessReport BlockWorld::fractional_success(const BlockWorldState& s) const {
  const WorldSnapshot& w = s.snapshot;
  SuccessReport r;
  r.frac_top = goal_overlap(w.block2, w.goal2);
  r.frac_bottom = goal_overlap(w.block1, w.goal1);
  double v1 = w.block1.volume();
  double v2 = w.block2.volume();
  r.frac_overall = (v1 * r.frac_bottom + v2 * r.frac_top) / (v1 + v2);
  return r;
}

bool BlockWorld::is_terminal(const BlockWorldState& s) const {
  return s.snapshot.step_index >= cfg_.max_steps;
}

}  // namespace kcac
