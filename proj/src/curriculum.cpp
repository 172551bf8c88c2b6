#include "kcac/curriculum.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "kcac/error.hpp"

namespace kcac {

const char* const kPresetNames[3] = {"lr_1e-4", "lr_5e-5", "lr_1e-5"};

LearnerParams preset_params(const std::string& name) {
  LearnerParams p;
  if (name == "lr_1e-4") {
    p.learning_rate = 1e-4;
    p.tau = 1e-3;
    p.entropy_coeff = 1e-3;
    p.batch_size = 1024;
  } else if (name == "lr_5e-5") {
    p.learning_rate = 5e-5;
    p.tau = 1e-4;
    p.entropy_coeff = 1e-4;
    p.batch_size = 256;
  } else if (name == "lr_1e-5") {
    p.learning_rate = 1e-5;
    p.tau = 1e-4;
    p.entropy_coeff = 1e-4;
    p.batch_size = 256;
  } else {
    throw ConfigError("unknown hyperparameter preset: " + name);
  }
  p.buffer_size = 1000000;
  p.discount = 0.95;
  p.target_entropy = TargetEntropy::auto_target();
  return p;
}

std::vector<TaskSpec> generate_subtasks(const TaskSpec& target,
                                        const std::vector<TaskSpec>& registry,
                                        double similarity_floor) {
  validate_compound(target.reward);
  RewardVector tv = reward_to_vector(target.reward);
  struct Scored {
    const TaskSpec* task;
    double sim;
  };
  std::vector<Scored> picked;
  for (const TaskSpec& t : registry) {
    double s = cosine_similarity(reward_to_vector(t.reward), tv);
    if (s > similarity_floor) picked.push_back({&t, s});
  }
  std::stable_sort(picked.begin(), picked.end(),
                   [](const Scored& a, const Scored& b) { return a.sim < b.sim; });
  std::vector<TaskSpec> out;
  out.reserve(picked.size() + 1);
  for (const Scored& s : picked) out.push_back(*s.task);
  out.push_back(target);
  return out;
}

CurriculumPlan select_schedule(const std::vector<TaskSpec>& chain,
                               const ScheduleOptions& opts) {
  if (chain.empty()) throw ConfigError("schedule needs at least one task");
  if (!(opts.mid_band < opts.high_band)) {
    throw ConfigError("schedule bands must satisfy mid < high");
  }
  enum Band { Low, Mid, High };
  auto band_of = [&](double sim) {
    return sim < opts.mid_band ? Low : sim < opts.high_band ? Mid : High;
  };

  CurriculumPlan plan;
  plan.stages.resize(chain.size());
  std::size_t n = chain.size();
  for (std::size_t i = 0; i < n; ++i) plan.stages[i].task = chain[i];

  Band last_band = Low;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double sim = task_similarity(chain[i].reward, chain[i + 1].reward);
    Band b = band_of(sim);
    last_band = b;
    int budget = b == Low    ? opts.low_budget
                 : b == Mid  ? opts.mid_budget
                 : i == 0    ? opts.high_first_budget
                             : opts.high_budget;
    plan.stages[i].episodes = budget;
    plan.stages[i].params_preset = "lr_1e-4";
  }

  Stage& last = plan.stages[n - 1];
  last.episodes = opts.final_episodes;
  last.params_preset = (n > 1 && last_band == High) ? "lr_1e-5" : "lr_1e-4";

  for (std::size_t i = 0; i < n; ++i) {
    plan.stages[i].params = preset_params(plan.stages[i].params_preset);
  }
  if (opts.final_params_override) {
    last.params = *opts.final_params_override;
    last.params_preset.clear();
  }
  if (!opts.budget_overrides.empty()) {
    if (opts.budget_overrides.size() != n) {
      throw ConfigError("schedule budget overrides must match the chain length");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (opts.budget_overrides[i]) plan.stages[i].episodes = *opts.budget_overrides[i];
    }
  }
  for (const Stage& s : plan.stages) {
    if (s.episodes < 1) throw ConfigError("stage episode budgets must be >= 1");
  }
  return plan;
}

LearnerFactory default_learner_factory(SacConfig cfg) {
  return [cfg](int obs_dim, int act_dim, const LearnerParams& params,
               std::uint64_t seed) {
    return std::make_unique<SacLearner>(obs_dim, act_dim, params, seed, cfg);
  };
}

RunRecord run_curriculum(const CurriculumPlan& plan, const EnvFactory& make_env,
                         const LearnerFactory& make_learner, std::uint64_t seed,
                         const RunHooks& hooks) {
  if (plan.stages.empty()) throw ConfigError("plan needs at least one stage");
  for (const Stage& s : plan.stages) {
    if (s.episodes < 1) throw ConfigError("stage episode budgets must be >= 1");
    validate_compound(s.task.reward);
  }

  RunRecord record;
  ParamBlob carry;
  long global_ep = 0;
  int n = int(plan.stages.size());
  for (int si = 0; si < n; ++si) {
    const Stage& stage = plan.stages[si];
    BlockWorld env = make_env(stage.task.env);
    std::unique_ptr<SacLearner> learner =
        make_learner(BlockWorld::kObservationDim, BlockWorld::kActionDim,
                     stage.params, derive_seed(seed, "learner", std::uint64_t(si)));
    if (si > 0) learner->import_params(carry);

    for (int ep = 0; ep < stage.episodes; ++ep) {
      ++global_ep;
      auto t0 = std::chrono::steady_clock::now();
      BlockWorldState state =
          env.reset(derive_seed(seed, "episode", std::uint64_t(global_ep)));
      std::vector<double> obs = env.observe(state);
      double ep_reward = 0.0;
      while (!env.is_terminal(state)) {
        std::vector<double> a =
            learner->select_action(obs, ActionMode::Stochastic);
        ActionCommand cmd;
        double scale = env.config().action_max_delta;
        cmd.delta = {a[0] * scale, a[1] * scale, a[2] * scale};
        cmd.grip = a[3];
        auto [next_state, ctx] = env.step(state, cmd);
        double r = eval_compound(stage.task.reward, ctx).total;
        std::vector<double> next_obs = env.observe(next_state);
        learner->observe_transition(
            {obs, a, r, next_obs, env.is_terminal(next_state)});
        learner->update();
        state = std::move(next_state);
        obs = std::move(next_obs);
        ep_reward += r;
      }
      auto t1 = std::chrono::steady_clock::now();
      EpisodeRow row;
      row.stage = si + 1;
      row.episode = global_ep;
      row.episodic_reward = ep_reward;
      row.success = env.fractional_success(state);
      row.wall_ms =
          std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
      record.rows.push_back(row);
      if (hooks.on_episode) hooks.on_episode(row);

      if (hooks.eval_every > 0 && global_ep % hooks.eval_every == 0) {
        BlockWorldState es =
            env.reset(derive_seed(seed, "eval", std::uint64_t(global_ep)));
        while (!env.is_terminal(es)) {
          std::vector<double> a = learner->select_action(
              env.observe(es), ActionMode::Deterministic);
          ActionCommand cmd;
          double scale = env.config().action_max_delta;
          cmd.delta = {a[0] * scale, a[1] * scale, a[2] * scale};
          cmd.grip = a[3];
          es = env.step(es, cmd).first;
        }
        if (hooks.on_eval) hooks.on_eval(global_ep, env.fractional_success(es));
      }
    }

    carry = learner->export_params();
    if (si + 1 < n) {
      TransferEvent ev;
      ev.episode = global_ep;
      ev.from_stage = si + 1;
      ev.to_stage = si + 2;
      ev.transferred_hash = params_hash(carry);
      record.transfers.push_back(ev);
      if (hooks.on_transfer) hooks.on_transfer(ev, carry);
    } else if (hooks.on_finish) {
      hooks.on_finish(carry);
    }
  }
  return record;
}

TaskSpec builtin_task(const std::string& name, const EnvConfig& env) {
  TaskSpec t;
  t.env = env;
  t.name = name;
  if (name == "grasp") {
    // Proximity ramp peaking at the block center and going negative past
    // twice the grasp radius. The tight window matters: attaching freezes the
    // effector-block distance at the attach offset, so a wide, shallow ramp
    // leaves gripping near the boundary strictly worse than hovering, which
    // teaches grip-off and poisons the transfer into the stacking stage. With
    // this window a center grip holds the ramp at its peak.
    ProximityWindow w;
    w.min_dist = 0.0;
    w.max_dist = 2.0 * env.grasp_radius;
    t.reward = grasp_reward(w);
  } else if (name == "pick") {
    t.reward = pick_reward();
  } else if (name == "stack") {
    t.reward = refined_stack_reward();
  } else if (name == "baseline_stack") {
    t.reward = baseline_stack_reward();
  } else {
    throw ConfigError("unknown built-in task: " + name);
  }
  return t;
}

}  // namespace kcac
