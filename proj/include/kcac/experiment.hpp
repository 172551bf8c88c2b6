#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kcac/curriculum.hpp"

namespace kcac {

inline constexpr const char* kVersion = "0.1.0";

// A fully resolved experiment: the staged plan, the task registry it was
// built from, seeds, and output options.
struct ExperimentConfig {
  std::string name;
  EnvConfig env;
  std::vector<TaskSpec> tasks;   // registry, target last when auto-planned
  CurriculumPlan plan;
  std::vector<std::uint64_t> seeds;
  int eval_every = 0;            // >0: deterministic eval cadence (diagnostics)
  double success_threshold = 0.8;
  std::string output_dir;
  SacConfig learner;
  std::uint64_t config_hash = 0;
};

// Parses and validates a config. Errors carry the offending field path.
// The KCAC_OUT environment variable, when set, overrides output_dir.
ExperimentConfig load_config_text(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);

struct SeedRun {
  std::uint64_t seed = 0;
  RunRecord record;
};

struct ExperimentResult {
  std::filesystem::path dir;
  std::vector<SeedRun> runs;  // seed order as configured
};

// Runs every seed of the experiment and writes metrics.csv (combined and
// per seed), per-seed events.jsonl and parameter checkpoints, and
// manifest.json. Byte-identical metrics.csv for identical config + seeds.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// First episode index (1-based) at which the median of the per-seed series
// reaches the threshold, after smoothing each series with a trailing mean
// window. nullopt when never reached. Series are truncated to the shortest.
std::optional<long> episodes_to_threshold(
    const std::vector<std::vector<double>>& per_seed_series, double threshold,
    int window = 1);

struct RunStats {
  std::optional<long> episodes_to_thresh;
  double final_success_mean = 0.0;  // per-seed mean over the last tenth
  double final_success_sd = 0.0;
  long episodes = 0;
  int seed_count = 0;
};

struct ComparisonReport {
  std::string baseline_dir, candidate_dir;
  double threshold = 0.0;
  RunStats baseline, candidate;
  // 100 * (1 - candidate/baseline), present when both reached the threshold.
  std::optional<double> time_reduction_pct;
  bool candidate_reached = false, baseline_reached = false;
  double success_improvement_pts = 0.0;  // percentage points, final success
};

// Loads two completed run directories and compares learning speed toward
// the threshold and final success. Refuses to compare runs whose
// environment configs differ.
ComparisonReport compare_runs(const std::string& baseline_dir,
                              const std::string& candidate_dir,
                              double threshold, int smooth_window = 1);

std::string comparison_to_json(const ComparisonReport& r);

// Similarity matrix CSV over the config's task registry.
std::string emit_similarity(const ExperimentConfig& cfg);

}  // namespace kcac
