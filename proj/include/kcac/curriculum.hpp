#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kcac/env.hpp"
#include "kcac/reward.hpp"
#include "kcac/sac.hpp"
#include "kcac/similarity.hpp"

namespace kcac {

enum class SuccessMetric : std::uint8_t { FracTop, FracOverall };

struct TaskSpec {
  std::string name;
  CompoundReward reward;
  EnvConfig env;
  SuccessMetric success_metric = SuccessMetric::FracTop;
};

// Named hyperparameter presets, keyed by their learning rate.
// Unknown names throw ConfigError.
LearnerParams preset_params(const std::string& name);
extern const char* const kPresetNames[3];  // lr_1e-4, lr_5e-5, lr_1e-5

struct Stage {
  TaskSpec task;
  int episodes = 0;
  LearnerParams params;
  std::string params_preset;  // preset name, empty for custom params
};

struct CurriculumPlan {
  std::vector<Stage> stages;
};

// Registry tasks whose reward similarity to the target exceeds the floor,
// ordered easiest-first (ascending similarity, registry order on ties),
// with the target appended last.
std::vector<TaskSpec> generate_subtasks(const TaskSpec& target,
                                        const std::vector<TaskSpec>& registry,
                                        double similarity_floor = 0.3);

// Similarity-band thresholds and the per-band budgets/presets used to turn
// a task chain into a staged plan.
struct ScheduleOptions {
  double mid_band = 0.45;   // below: low band
  double high_band = 0.65;  // at or above: high band
  int low_budget = 60;
  int mid_budget = 300;
  int high_budget = 900;
  int high_first_budget = 1800;  // high band when the pair starts the chain
  int final_episodes = 1000;
  std::optional<LearnerParams> final_params_override;
  std::vector<std::optional<int>> budget_overrides;  // per stage, optional
};

// Assigns per-stage episode budgets and hyperparameters from the pairwise
// similarities along the chain. Pretraining stages always run the fast
// preset; the final stage's preset follows the last pair's band (high
// similarity hands over to the conservative preset).
CurriculumPlan select_schedule(const std::vector<TaskSpec>& chain,
                               const ScheduleOptions& opts = {});

struct EpisodeRow {
  int stage = 0;       // 1-based stage number
  long episode = 0;    // 1-based, contiguous across stages
  double episodic_reward = 0.0;
  SuccessReport success;
  long wall_ms = 0;
};

struct TransferEvent {
  long episode = 0;  // cumulative episode count at the handover
  int from_stage = 0, to_stage = 0;  // 1-based
  std::uint64_t transferred_hash = 0;  // fingerprint of the moved parameters
};

struct RunRecord {
  std::vector<EpisodeRow> rows;
  std::vector<TransferEvent> transfers;
};

using EnvFactory = std::function<BlockWorld(const EnvConfig&)>;
using LearnerFactory = std::function<std::unique_ptr<SacLearner>(
    int obs_dim, int act_dim, const LearnerParams&, std::uint64_t seed)>;

struct RunHooks {
  // After each episode, with the freshly appended row.
  std::function<void(const EpisodeRow&)> on_episode;
  // At each stage handover, with the exported parameters.
  std::function<void(const TransferEvent&, const ParamBlob&)> on_transfer;
  // After the final stage, with the final parameters.
  std::function<void(const ParamBlob&)> on_finish;
  // When eval_every > 0, a deterministic-policy episode (no exploration, no
  // learning) runs every eval_every training episodes and is reported here.
  // It consumes no training randomness, so it never changes the run.
  int eval_every = 0;
  std::function<void(long episode, const SuccessReport&)> on_eval;
};

LearnerFactory default_learner_factory(SacConfig cfg = {});

// Runs the staged plan: each stage trains on its own task for its episode
// budget, then hands the learned parameters to a fresh learner configured
// for the next stage. Fully deterministic for a fixed seed.
RunRecord run_curriculum(const CurriculumPlan& plan, const EnvFactory& make_env,
                         const LearnerFactory& make_learner, std::uint64_t seed,
                         const RunHooks& hooks = {});

// Built-in task definitions ("grasp", "pick", "stack", "baseline_stack")
// over the given environment.
TaskSpec builtin_task(const std::string& name, const EnvConfig& env);

}  // namespace kcac
