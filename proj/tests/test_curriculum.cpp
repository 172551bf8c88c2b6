#include <doctest.h>

#include <kcac/curriculum.hpp>
#include <kcac/error.hpp>
#include <kcac/params_io.hpp>

#include <vector>

using namespace kcac;

namespace {

EnvConfig tiny_env() {
  EnvConfig e;
  e.max_steps = 6;
  return e;
}

// Small nets and a batch size no tiny run ever fills, so stages are pure
// rollouts and fast.
LearnerFactory tiny_factory() {
  SacConfig c;
  c.hidden = {4, 4};
  return default_learner_factory(c);
}

CurriculumPlan two_stage_plan(int eps1, int eps2) {
  EnvConfig env = tiny_env();
  CurriculumPlan plan;
  plan.stages.resize(2);
  plan.stages[0].task = builtin_task("grasp", env);
  plan.stages[0].episodes = eps1;
  plan.stages[0].params = preset_params("lr_1e-4");
  plan.stages[1].task = builtin_task("stack", env);
  plan.stages[1].episodes = eps2;
  plan.stages[1].params = preset_params("lr_1e-4");
  return plan;
}

}  // namespace

TEST_CASE("hyperparameter presets match their table") {
  LearnerParams a = preset_params("lr_1e-4");
  CHECK(a.learning_rate == 1e-4);
  CHECK(a.tau == 1e-3);
  CHECK(a.entropy_coeff == 1e-3);
  CHECK(a.batch_size == 1024);

  LearnerParams b = preset_params("lr_5e-5");
  CHECK(b.learning_rate == 5e-5);
  CHECK(b.tau == 1e-4);
  CHECK(b.entropy_coeff == 1e-4);
  CHECK(b.batch_size == 256);

  LearnerParams c = preset_params("lr_1e-5");
  CHECK(c.learning_rate == 1e-5);
  CHECK(c.tau == 1e-4);
  CHECK(c.entropy_coeff == 1e-4);
  CHECK(c.batch_size == 256);

  for (const LearnerParams& p : {a, b, c}) {
    CHECK(p.buffer_size == 1000000);
    CHECK(p.discount == 0.95);
    CHECK(p.target_entropy.kind == TargetEntropy::Kind::Auto);
  }
  CHECK(std::string(kPresetNames[0]) == "lr_1e-4");
  CHECK(std::string(kPresetNames[1]) == "lr_5e-5");
  CHECK(std::string(kPresetNames[2]) == "lr_1e-5");
  CHECK_THROWS_AS(preset_params("lr_3e-4"), ConfigError);
  CHECK_THROWS_AS(preset_params(""), ConfigError);
}

TEST_CASE("subtask generation orders by ascending similarity to the target") {
  EnvConfig env = tiny_env();
  TaskSpec stack = builtin_task("stack", env);
  TaskSpec grasp = builtin_task("grasp", env);
  TaskSpec pick = builtin_task("pick", env);

  // grasp~stack 0.41, pick~stack 0.82; registry order must not matter.
  std::vector<TaskSpec> chain = generate_subtasks(stack, {pick, grasp});
  REQUIRE(chain.size() == 3);
  CHECK(chain[0].name == "grasp");
  CHECK(chain[1].name == "pick");
  CHECK(chain[2].name == "stack");

  // A floor above a task's similarity drops it.
  chain = generate_subtasks(stack, {pick, grasp}, 0.5);
  REQUIRE(chain.size() == 2);
  CHECK(chain[0].name == "pick");
  CHECK(chain[1].name == "stack");

  chain = generate_subtasks(stack, {pick, grasp}, 0.9);
  REQUIRE(chain.size() == 1);
  CHECK(chain[0].name == "stack");

  // Equal similarities keep registry order.
  TaskSpec grasp2 = grasp;
  grasp2.name = "grasp2";
  chain = generate_subtasks(stack, {grasp, grasp2});
  REQUIRE(chain.size() == 3);
  CHECK(chain[0].name == "grasp");
  CHECK(chain[1].name == "grasp2");

  TaskSpec bad = stack;
  bad.reward.components.clear();
  CHECK_THROWS_AS(generate_subtasks(bad, {grasp}), ConfigError);
}

TEST_CASE("schedule assigns band budgets and presets from pair similarity") {
  EnvConfig env = tiny_env();
  TaskSpec stack = builtin_task("stack", env);
  TaskSpec grasp = builtin_task("grasp", env);
  TaskSpec pick = builtin_task("pick", env);

  // grasp~pick 0.5 (mid band), pick~stack 0.82 (high band, not first pair).
  CurriculumPlan plan = select_schedule({grasp, pick, stack});
  REQUIRE(plan.stages.size() == 3);
  CHECK(plan.stages[0].episodes == 300);
  CHECK(plan.stages[1].episodes == 900);
  CHECK(plan.stages[2].episodes == 1000);
  CHECK(plan.stages[0].params_preset == "lr_1e-4");
  CHECK(plan.stages[1].params_preset == "lr_1e-4");
  CHECK(plan.stages[2].params_preset == "lr_1e-5");
  CHECK(plan.stages[2].params.learning_rate == 1e-5);

  // A high-similarity pair opening the chain gets the doubled budget.
  plan = select_schedule({pick, stack});
  REQUIRE(plan.stages.size() == 2);
  CHECK(plan.stages[0].episodes == 1800);
  CHECK(plan.stages[1].params_preset == "lr_1e-5");

  // A low-similarity pair: short pretraining, fast final preset.
  plan = select_schedule({grasp, stack});
  REQUIRE(plan.stages.size() == 2);
  CHECK(plan.stages[0].episodes == 60);
  CHECK(plan.stages[1].params_preset == "lr_1e-4");

  // Single-task chain: just the final stage.
  plan = select_schedule({stack});
  REQUIRE(plan.stages.size() == 1);
  CHECK(plan.stages[0].episodes == 1000);
  CHECK(plan.stages[0].params_preset == "lr_1e-4");

  // Band edges are configurable.
  ScheduleOptions opts;
  opts.mid_band = 0.55;  // pushes grasp~pick (0.5) down into the low band
  plan = select_schedule({grasp, pick, stack}, opts);
  CHECK(plan.stages[0].episodes == 60);
}

TEST_CASE("schedule honors overrides and rejects bad options") {
  EnvConfig env = tiny_env();
  TaskSpec stack = builtin_task("stack", env);
  TaskSpec grasp = builtin_task("grasp", env);
  TaskSpec pick = builtin_task("pick", env);

  ScheduleOptions opts;
  opts.final_episodes = 40;
  opts.budget_overrides = {60, 900, std::nullopt};
  CurriculumPlan plan = select_schedule({grasp, pick, stack}, opts);
  CHECK(plan.stages[0].episodes == 60);
  CHECK(plan.stages[1].episodes == 900);
  CHECK(plan.stages[2].episodes == 40);
  CHECK(plan.stages[2].params_preset == "lr_1e-5");  // presets still band-derived

  LearnerParams custom = preset_params("lr_5e-5");
  custom.batch_size = 64;
  opts = ScheduleOptions{};
  opts.final_params_override = custom;
  plan = select_schedule({grasp, stack}, opts);
  CHECK(plan.stages[1].params.batch_size == 64);
  CHECK(plan.stages[1].params_preset.empty());

  opts = ScheduleOptions{};
  opts.budget_overrides = {10};  // wrong length for a 2-task chain
  CHECK_THROWS_AS(select_schedule({grasp, stack}, opts), ConfigError);

  opts = ScheduleOptions{};
  opts.budget_overrides = {0, std::nullopt};
  CHECK_THROWS_AS(select_schedule({grasp, stack}, opts), ConfigError);

  opts = ScheduleOptions{};
  opts.mid_band = 0.7;
  opts.high_band = 0.6;
  CHECK_THROWS_AS(select_schedule({grasp, stack}, opts), ConfigError);

  CHECK_THROWS_AS(select_schedule({}), ConfigError);
}

TEST_CASE("curriculum run produces contiguous rows and exact transfer points") {
  CurriculumPlan plan = two_stage_plan(3, 2);
  EnvFactory envf = [](const EnvConfig& e) { return BlockWorld(e); };

  std::vector<std::uint64_t> transfer_hashes;
  RunHooks hooks;
  hooks.on_transfer = [&](const TransferEvent& ev, const ParamBlob& blob) {
    CHECK(params_hash(blob) == ev.transferred_hash);
    transfer_hashes.push_back(ev.transferred_hash);
  };
  ParamBlob final_blob;
  bool finished = false;
  hooks.on_finish = [&](const ParamBlob& blob) {
    final_blob = blob;
    finished = true;
  };

  RunRecord rec = run_curriculum(plan, envf, tiny_factory(), 7, hooks);
  REQUIRE(rec.rows.size() == 5);
  for (std::size_t i = 0; i < rec.rows.size(); ++i) {
    CHECK(rec.rows[i].episode == long(i) + 1);
    CHECK(rec.rows[i].stage == (i < 3 ? 1 : 2));
    CHECK(rec.rows[i].wall_ms >= 0);
  }
  REQUIRE(rec.transfers.size() == 1);
  CHECK(rec.transfers[0].episode == 3);
  CHECK(rec.transfers[0].from_stage == 1);
  CHECK(rec.transfers[0].to_stage == 2);
  CHECK(rec.transfers[0].transferred_hash != 0);
  REQUIRE(transfer_hashes.size() == 1);
  CHECK(transfer_hashes[0] == rec.transfers[0].transferred_hash);
  CHECK(finished);
  CHECK(params_hash(final_blob) != 0);
}

TEST_CASE("curriculum runs are deterministic per seed") {
  CurriculumPlan plan = two_stage_plan(2, 2);
  EnvFactory envf = [](const EnvConfig& e) { return BlockWorld(e); };

  RunRecord a = run_curriculum(plan, envf, tiny_factory(), 7);
  RunRecord b = run_curriculum(plan, envf, tiny_factory(), 7);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].episodic_reward == b.rows[i].episodic_reward);
    CHECK(a.rows[i].success.frac_top == b.rows[i].success.frac_top);
    CHECK(a.rows[i].success.frac_overall == b.rows[i].success.frac_overall);
  }
  REQUIRE(a.transfers.size() == b.transfers.size());
  CHECK(a.transfers[0].transferred_hash == b.transfers[0].transferred_hash);

  RunRecord c = run_curriculum(plan, envf, tiny_factory(), 8);
  CHECK(c.transfers[0].transferred_hash != a.transfers[0].transferred_hash);
}

TEST_CASE("deterministic eval episodes do not perturb training") {
  CurriculumPlan plan = two_stage_plan(2, 2);
  EnvFactory envf = [](const EnvConfig& e) { return BlockWorld(e); };

  RunRecord plain = run_curriculum(plan, envf, tiny_factory(), 9);

  RunHooks hooks;
  hooks.eval_every = 1;
  std::vector<long> eval_eps;
  hooks.on_eval = [&](long ep, const SuccessReport&) { eval_eps.push_back(ep); };
  RunRecord evald = run_curriculum(plan, envf, tiny_factory(), 9, hooks);

  CHECK(eval_eps == std::vector<long>{1, 2, 3, 4});
  REQUIRE(plain.rows.size() == evald.rows.size());
  for (std::size_t i = 0; i < plain.rows.size(); ++i) {
    CHECK(plain.rows[i].episodic_reward == evald.rows[i].episodic_reward);
  }
  CHECK(plain.transfers[0].transferred_hash ==
        evald.transfers[0].transferred_hash);
}

TEST_CASE("curriculum rejects malformed plans") {
  EnvFactory envf = [](const EnvConfig& e) { return BlockWorld(e); };
  CHECK_THROWS_AS(run_curriculum(CurriculumPlan{}, envf, tiny_factory(), 1),
                  ConfigError);

  CurriculumPlan plan = two_stage_plan(1, 1);
  plan.stages[1].episodes = 0;
  CHECK_THROWS_AS(run_curriculum(plan, envf, tiny_factory(), 1), ConfigError);

  plan = two_stage_plan(1, 1);
  plan.stages[0].task.reward.components.clear();
  CHECK_THROWS_AS(run_curriculum(plan, envf, tiny_factory(), 1), ConfigError);
}

TEST_CASE("built-in tasks resolve by name") {
  EnvConfig env = tiny_env();
  CHECK(builtin_task("grasp", env).reward.name == "grasp");
  CHECK(builtin_task("pick", env).reward.name == "pick");
  CHECK(builtin_task("stack", env).reward.name == "stack");
  CHECK(builtin_task("baseline_stack", env).reward.name == "baseline_stack");
  CHECK_THROWS_AS(builtin_task("place", env), ConfigError);

  // The grasp proximity window scales with the attach radius so a center
  // grip pins the ramp at its peak.
  TaskSpec g = builtin_task("grasp", env);
  const RewardComponent* prox = nullptr;
  for (const RewardComponent& c : g.reward.components) {
    if (c.kind == ComponentKind::EffectorBlockProximity) prox = &c;
  }
  REQUIRE(prox != nullptr);
  REQUIRE(prox->proximity.has_value());
  CHECK(prox->proximity->min_dist == 0.0);
  CHECK(prox->proximity->max_dist == 2.0 * env.grasp_radius);
}
