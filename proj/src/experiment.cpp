#include "kcac/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kcac/error.hpp"
#include "kcac/text.hpp"

namespace kcac {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kMetricsHeader =
    "run_id,seed,stage,episode,episodic_reward,frac_top,frac_bottom,frac_overall\n";

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError("config: " + path + ": " + msg);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const json* find(const json& o, const std::string& path, const char* key) {
  if (!o.is_object()) fail(path, "expected an object");
  auto it = o.find(key);
  return it == o.end() ? nullptr : &*it;
}

const json& require(const json& o, const std::string& path, const char* key) {
  const json* v = find(o, path, key);
  if (!v) fail(join(path, key), "missing required field");
  return *v;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

long as_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<long>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

double opt_number(const json& o, const std::string& path, const char* key,
                  double def) {
  const json* v = find(o, path, key);
  return v ? as_number(*v, join(path, key)) : def;
}

long opt_integer(const json& o, const std::string& path, const char* key,
                 long def) {
  const json* v = find(o, path, key);
  return v ? as_integer(*v, join(path, key)) : def;
}

Vec3 parse_vec3(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3) fail(path, "expected [x, y, z]");
  return {as_number(v[0], path + "[0]"), as_number(v[1], path + "[1]"),
          as_number(v[2], path + "[2]")};
}

EnvConfig parse_env(const json& v, const std::string& path) {
  EnvConfig e;
  if (v.is_null()) return e;
  if (!v.is_object()) fail(path, "expected an object");
  e.arena_half_extent = opt_number(v, path, "arena_half_extent", e.arena_half_extent);
  e.block_edge = opt_number(v, path, "block_edge", e.block_edge);
  e.max_steps = int(opt_integer(v, path, "max_steps", e.max_steps));
  e.action_max_delta = opt_number(v, path, "action_max_delta", e.action_max_delta);
  e.grasp_radius = opt_number(v, path, "grasp_radius", e.grasp_radius);
  if (const json* b = find(v, path, "block1_init")) {
    std::string s = as_string(*b, join(path, "block1_init"));
    if (s == "at_goal") e.block1_init = Block1Init::AtGoal;
    else if (s == "sampled") e.block1_init = Block1Init::Sampled;
    else fail(join(path, "block1_init"), "expected 'at_goal' or 'sampled'");
  }
  if (const json* sp = find(v, path, "spawn_region")) {
    std::string p = join(path, "spawn_region");
    e.spawn_region.center = parse_vec3(require(*sp, p, "center"), join(p, "center"));
    e.spawn_region.half_extents =
        parse_vec3(require(*sp, p, "half_extents"), join(p, "half_extents"));
  }
  if (const json* d = find(v, path, "dimensionality")) {
    std::string s = as_string(*d, join(path, "dimensionality"));
    if (s == "2d") e.dimensionality = Dimensionality::TwoD;
    else if (s == "3d") e.dimensionality = Dimensionality::ThreeD;
    else fail(join(path, "dimensionality"), "expected '2d' or '3d'");
  }
  return e;
}

json env_to_json(const EnvConfig& e) {
  return json{
      {"arena_half_extent", e.arena_half_extent},
      {"block_edge", e.block_edge},
      {"max_steps", e.max_steps},
      {"action_max_delta", e.action_max_delta},
      {"grasp_radius", e.grasp_radius},
      {"block1_init", e.block1_init == Block1Init::AtGoal ? "at_goal" : "sampled"},
      {"spawn_region",
       {{"center", {e.spawn_region.center.x, e.spawn_region.center.y,
                    e.spawn_region.center.z}},
        {"half_extents",
         {e.spawn_region.half_extents.x, e.spawn_region.half_extents.y,
          e.spawn_region.half_extents.z}}}},
      {"dimensionality",
       e.dimensionality == Dimensionality::TwoD ? "2d" : "3d"},
  };
}

// Preset name or a full hyperparameter object.
// Returns the params plus the preset name ("" for custom).
std::pair<LearnerParams, std::string> parse_params(const json& v,
                                                   const std::string& path) {
  if (v.is_string()) {
    std::string name = v.get<std::string>();
    try {
      return {preset_params(name), name};
    } catch (const ConfigError&) {
      fail(path, "unknown preset '" + name + "'");
    }
  }
  if (!v.is_object()) fail(path, "expected a preset name or an object");
  LearnerParams p;
  p.learning_rate = opt_number(v, path, "learning_rate", p.learning_rate);
  p.tau = opt_number(v, path, "tau", p.tau);
  p.entropy_coeff = opt_number(v, path, "entropy_coeff", p.entropy_coeff);
  p.batch_size = int(opt_integer(v, path, "batch_size", p.batch_size));
  p.buffer_size = opt_integer(v, path, "buffer_size", p.buffer_size);
  p.discount = opt_number(v, path, "discount", p.discount);
  if (const json* te = find(v, path, "target_entropy")) {
    if (te->is_string() && te->get<std::string>() == "auto") {
      p.target_entropy = TargetEntropy::auto_target();
    } else if (te->is_number()) {
      p.target_entropy = TargetEntropy::fixed(te->get<double>());
    } else {
      fail(join(path, "target_entropy"), "expected 'auto' or a number");
    }
  }
  return {p, ""};
}

Gate parse_gate(const json& v, const std::string& path) {
  Gate g;
  std::string kind = as_string(require(v, path, "kind"), join(path, "kind"));
  if (kind == "distance_above") g.kind = GateKind::DistanceAbove;
  else if (kind == "distance_below") g.kind = GateKind::DistanceBelow;
  else if (kind == "block_above_goal_height") g.kind = GateKind::BlockAboveGoalHeight;
  else fail(join(path, "kind"), "unknown gate kind '" + kind + "'");
  try {
    g.a = entity_ref_from_name(as_string(require(v, path, "a"), join(path, "a")));
    g.b = entity_ref_from_name(as_string(require(v, path, "b"), join(path, "b")));
  } catch (const ConfigError& e) {
    fail(path, e.what());
  }
  if (g.kind != GateKind::BlockAboveGoalHeight) {
    g.threshold = as_number(require(v, path, "threshold"), join(path, "threshold"));
  }
  return g;
}

RewardComponent parse_component(const json& v, const std::string& path) {
  RewardComponent c;
  std::string kind = as_string(require(v, path, "kind"), join(path, "kind"));
  try {
    c.kind = component_kind_from_name(kind);
  } catch (const ConfigError&) {
    fail(join(path, "kind"), "unknown component kind '" + kind + "'");
  }
  c.weight = as_number(require(v, path, "weight"), join(path, "weight"));
  long focus = opt_integer(v, path, "focus", 2);
  if (focus == 1) c.focus = BlockFocus::Block1;
  else if (focus == 2) c.focus = BlockFocus::Block2;
  else fail(join(path, "focus"), "expected 1 or 2");
  if (const json* gs = find(v, path, "gates")) {
    if (!gs->is_array()) fail(join(path, "gates"), "expected an array");
    for (std::size_t i = 0; i < gs->size(); ++i) {
      c.gates.push_back(
          parse_gate((*gs)[i], join(path, "gates") + "[" + std::to_string(i) + "]"));
    }
  }
  if (const json* pw = find(v, path, "proximity")) {
    std::string p = join(path, "proximity");
    c.proximity = ProximityWindow{
        as_number(require(*pw, p, "min_dist"), join(p, "min_dist")),
        as_number(require(*pw, p, "max_dist"), join(p, "max_dist"))};
  }
  return c;
}

TaskSpec parse_task(const json& v, const std::string& path, const EnvConfig& env) {
  if (v.is_string()) {
    try {
      return builtin_task(v.get<std::string>(), env);
    } catch (const ConfigError& e) {
      fail(path, e.what());
    }
  }
  if (!v.is_object()) fail(path, "expected a task name or an object");
  TaskSpec t;
  t.name = as_string(require(v, path, "name"), join(path, "name"));
  t.env = env;
  const json& rw = require(v, path, "reward");
  if (rw.is_string()) {
    try {
      t.reward = builtin_task(rw.get<std::string>(), env).reward;
    } catch (const ConfigError& e) {
      fail(join(path, "reward"), e.what());
    }
  } else if (rw.is_array()) {
    std::string p = join(path, "reward");
    CompoundReward r;
    r.name = t.name;
    for (std::size_t i = 0; i < rw.size(); ++i) {
      r.components.push_back(parse_component(rw[i], p + "[" + std::to_string(i) + "]"));
    }
    try {
      validate_compound(r);
    } catch (const ConfigError& e) {
      fail(p, e.what());
    }
    t.reward = r;
  } else {
    fail(join(path, "reward"), "expected a builder name or a component array");
  }
  if (const json* sm = find(v, path, "success_metric")) {
    std::string s = as_string(*sm, join(path, "success_metric"));
    if (s == "frac_top") t.success_metric = SuccessMetric::FracTop;
    else if (s == "frac_overall") t.success_metric = SuccessMetric::FracOverall;
    else fail(join(path, "success_metric"), "expected 'frac_top' or 'frac_overall'");
  }
  return t;
}

const TaskSpec* find_task(const std::vector<TaskSpec>& tasks, const std::string& name) {
  for (const TaskSpec& t : tasks) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

TaskSpec resolve_task(const std::vector<TaskSpec>& declared, const std::string& name,
                      const std::string& path, const EnvConfig& env) {
  if (const TaskSpec* t = find_task(declared, name)) return *t;
  try {
    return builtin_task(name, env);
  } catch (const ConfigError&) {
    fail(path, "unknown task '" + name + "' (not declared and not built in)");
  }
}

void add_unique_task(std::vector<TaskSpec>& tasks, const TaskSpec& t) {
  if (!find_task(tasks, t.name)) tasks.push_back(t);
}

}  // namespace

ExperimentConfig load_config_text(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) fail("", "top level must be an object");

  ExperimentConfig cfg;
  cfg.name = as_string(require(root, "", "name"), "name");
  if (cfg.name.empty()) fail("name", "must not be empty");
  cfg.env = parse_env(root.contains("env") ? root["env"] : json(nullptr), "env");
  try {
    BlockWorld probe(cfg.env);  // surface bad env values at load time
  } catch (const ConfigError& e) {
    fail("env", e.what());
  }

  std::vector<TaskSpec> declared;
  if (const json* ts = find(root, "", "tasks")) {
    if (!ts->is_array()) fail("tasks", "expected an array");
    for (std::size_t i = 0; i < ts->size(); ++i) {
      TaskSpec t = parse_task((*ts)[i], "tasks[" + std::to_string(i) + "]", cfg.env);
      if (find_task(declared, t.name)) {
        fail("tasks[" + std::to_string(i) + "]", "duplicate task '" + t.name + "'");
      }
      declared.push_back(std::move(t));
    }
  }
  cfg.tasks = declared;

  long top_episodes = opt_integer(root, "", "episodes", 0);

  if (const json* plan = find(root, "", "plan")) {
    std::string mode = as_string(require(*plan, "plan", "mode"), "plan.mode");
    if (mode == "direct") {
      std::string task_name =
          as_string(require(*plan, "plan", "task"), "plan.task");
      TaskSpec task = resolve_task(declared, task_name, "plan.task", cfg.env);
      Stage st;
      st.task = task;
      long eps = opt_integer(*plan, "plan", "episodes", top_episodes);
      if (eps < 1) fail("plan.episodes", "need a positive episode count");
      st.episodes = int(eps);
      if (const json* pp = find(*plan, "plan", "params")) {
        std::tie(st.params, st.params_preset) = parse_params(*pp, "plan.params");
      } else {
        st.params = preset_params("lr_1e-4");
        st.params_preset = "lr_1e-4";
      }
      cfg.plan.stages = {st};
      add_unique_task(cfg.tasks, task);
    } else if (mode == "auto") {
      std::string target_name =
          as_string(require(*plan, "plan", "target"), "plan.target");
      TaskSpec target = resolve_task(declared, target_name, "plan.target", cfg.env);
      std::vector<TaskSpec> registry;
      if (const json* reg = find(*plan, "plan", "registry")) {
        if (!reg->is_array()) fail("plan.registry", "expected an array");
        for (std::size_t i = 0; i < reg->size(); ++i) {
          std::string p = "plan.registry[" + std::to_string(i) + "]";
          registry.push_back(resolve_task(declared, as_string((*reg)[i], p), p, cfg.env));
        }
      } else {
        registry = declared;
      }
      double floor = opt_number(*plan, "plan", "similarity_floor", 0.3);
      ScheduleOptions opts;
      if (const json* bands = find(*plan, "plan", "bands")) {
        opts.mid_band = opt_number(*bands, "plan.bands", "mid", opts.mid_band);
        opts.high_band = opt_number(*bands, "plan.bands", "high", opts.high_band);
      }
      if (const json* budgets = find(*plan, "plan", "budgets")) {
        std::string p = "plan.budgets";
        opts.low_budget = int(opt_integer(*budgets, p, "low", opts.low_budget));
        opts.mid_budget = int(opt_integer(*budgets, p, "mid", opts.mid_budget));
        opts.high_budget = int(opt_integer(*budgets, p, "high", opts.high_budget));
        opts.high_first_budget =
            int(opt_integer(*budgets, p, "high_first", opts.high_first_budget));
      }
      long fin = opt_integer(*plan, "plan", "final_episodes",
                             top_episodes > 0 ? top_episodes : 1000);
      if (fin < 1) fail("plan.final_episodes", "need a positive episode count");
      opts.final_episodes = int(fin);
      if (const json* fp = find(*plan, "plan", "final_params")) {
        opts.final_params_override = parse_params(*fp, "plan.final_params").first;
      }
      if (const json* bo = find(*plan, "plan", "budget_overrides")) {
        if (!bo->is_array()) fail("plan.budget_overrides", "expected an array");
        for (std::size_t i = 0; i < bo->size(); ++i) {
          std::string p = "plan.budget_overrides[" + std::to_string(i) + "]";
          if ((*bo)[i].is_null()) {
            opts.budget_overrides.push_back(std::nullopt);
          } else {
            opts.budget_overrides.push_back(int(as_integer((*bo)[i], p)));
          }
        }
      }
      std::vector<TaskSpec> chain = generate_subtasks(target, registry, floor);
      try {
        cfg.plan = select_schedule(chain, opts);
      } catch (const ConfigError& e) {
        fail("plan", e.what());
      }
      for (const TaskSpec& t : registry) add_unique_task(cfg.tasks, t);
      add_unique_task(cfg.tasks, target);
    } else if (mode == "explicit") {
      const json& stages = require(*plan, "plan", "stages");
      if (!stages.is_array() || stages.empty()) {
        fail("plan.stages", "expected a non-empty array");
      }
      for (std::size_t i = 0; i < stages.size(); ++i) {
        std::string p = "plan.stages[" + std::to_string(i) + "]";
        const json& sv = stages[i];
        Stage st;
        std::string task_name = as_string(require(sv, p, "task"), join(p, "task"));
        st.task = resolve_task(declared, task_name, join(p, "task"), cfg.env);
        long eps = as_integer(require(sv, p, "episodes"), join(p, "episodes"));
        if (eps < 1) fail(join(p, "episodes"), "need a positive episode count");
        st.episodes = int(eps);
        if (const json* pp = find(sv, p, "params")) {
          std::tie(st.params, st.params_preset) = parse_params(*pp, join(p, "params"));
        } else {
          st.params = preset_params("lr_1e-4");
          st.params_preset = "lr_1e-4";
        }
        cfg.plan.stages.push_back(st);
        add_unique_task(cfg.tasks, st.task);
      }
    } else {
      fail("plan.mode", "expected 'direct', 'auto', or 'explicit'");
    }
  }

  if (const json* seeds = find(root, "", "seeds")) {
    if (!seeds->is_array() || seeds->empty()) {
      fail("seeds", "expected a non-empty array of integers");
    }
    for (std::size_t i = 0; i < seeds->size(); ++i) {
      std::string p = "seeds[" + std::to_string(i) + "]";
      long s = as_integer((*seeds)[i], p);
      if (s < 0) fail(p, "seeds must be non-negative");
      cfg.seeds.push_back(std::uint64_t(s));
    }
  } else {
    cfg.seeds = {1};
  }

  cfg.eval_every = int(opt_integer(root, "", "eval_every", 0));
  if (cfg.eval_every < 0) fail("eval_every", "must be >= 0");
  cfg.success_threshold = opt_number(root, "", "success_threshold", 0.8);
  if (!(cfg.success_threshold > 0.0 && cfg.success_threshold <= 1.0)) {
    fail("success_threshold", "must be in (0, 1]");
  }

  if (const json* lc = find(root, "", "learner")) {
    if (const json* hidden = find(*lc, "learner", "hidden")) {
      if (!hidden->is_array() || hidden->empty()) {
        fail("learner.hidden", "expected a non-empty array of layer widths");
      }
      cfg.learner.hidden.clear();
      for (std::size_t i = 0; i < hidden->size(); ++i) {
        std::string p = "learner.hidden[" + std::to_string(i) + "]";
        long w = as_integer((*hidden)[i], p);
        if (w < 1) fail(p, "layer widths must be >= 1");
        cfg.learner.hidden.push_back(int(w));
      }
    }
    long warm = opt_integer(*lc, "learner", "warmup", cfg.learner.warmup_transitions);
    if (warm < 0) fail("learner.warmup", "must be >= 0");
    cfg.learner.warmup_transitions = int(warm);
  }

  if (const json* od = find(root, "", "output_dir")) {
    cfg.output_dir = as_string(*od, "output_dir");
  } else {
    cfg.output_dir = "out/" + cfg.name;
  }
  if (const char* env_out = std::getenv("KCAC_OUT")) {
    if (*env_out) cfg.output_dir = env_out;
  }

  std::string canonical = root.dump();
  cfg.config_hash = fnv1a64(
      reinterpret_cast<const std::uint8_t*>(canonical.data()), canonical.size());
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return load_config_text(ss.str());
}

namespace {

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)h);
  return buf;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open for writing: " + p.string());
  f << content;
  if (!f) throw Error("write failed: " + p.string());
}

json build_manifest(const ExperimentConfig& cfg, bool complete) {
  json stages = json::array();
  for (const Stage& s : cfg.plan.stages) {
    json st{{"task", s.task.name}, {"episodes", s.episodes}};
    if (!s.params_preset.empty()) {
      st["preset"] = s.params_preset;
    } else {
      const LearnerParams& p = s.params;
      st["params"] = json{
          {"learning_rate", p.learning_rate},
          {"tau", p.tau},
          {"entropy_coeff", p.entropy_coeff},
          {"batch_size", p.batch_size},
          {"buffer_size", p.buffer_size},
          {"discount", p.discount},
          {"target_entropy",
           p.target_entropy.kind == TargetEntropy::Kind::Auto
               ? json("auto")
               : json(p.target_entropy.value)},
      };
    }
    stages.push_back(st);
  }
  json hidden = json::array();
  for (int h : cfg.learner.hidden) hidden.push_back(h);
  return json{
      {"name", cfg.name},
      {"version", kVersion},
      {"config_hash", hash_hex(cfg.config_hash)},
      {"seeds", cfg.seeds},
      {"env", env_to_json(cfg.env)},
      {"learner", {{"hidden", hidden}, {"warmup", cfg.learner.warmup_transitions}}},
      {"stages", stages},
      {"success_threshold", cfg.success_threshold},
      {"eval_every", cfg.eval_every},
      {"complete", complete},
  };
}

std::string row_csv(const std::string& run_id, std::uint64_t seed,
                    const EpisodeRow& r) {
  std::string line = run_id;
  line += "," + std::to_string(seed);
  line += "," + std::to_string(r.stage);
  line += "," + std::to_string(r.episode);
  line += "," + format_double(r.episodic_reward);
  line += "," + format_double(r.success.frac_top);
  line += "," + format_double(r.success.frac_bottom);
  line += "," + format_double(r.success.frac_overall);
  line += "\n";
  return line;
}

SeedRun run_one_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                     const fs::path& dir) {
  fs::path sdir = dir / ("seed" + std::to_string(seed));
  fs::create_directories(sdir);
  std::ofstream metrics(sdir / "metrics.csv", std::ios::binary | std::ios::trunc);
  std::ofstream events(sdir / "events.jsonl", std::ios::binary | std::ios::trunc);
  if (!metrics || !events) {
    throw Error("cannot open output files under " + sdir.string());
  }
  metrics << kMetricsHeader;

  int total_stages = int(cfg.plan.stages.size());
  RunHooks hooks;
  hooks.eval_every = cfg.eval_every;
  hooks.on_episode = [&](const EpisodeRow& r) {
    metrics << row_csv(cfg.name, seed, r);
    events << json{{"type", "episode"},
                   {"episode", r.episode},
                   {"stage", r.stage},
                   {"wall_ms", r.wall_ms}}
                  .dump()
           << "\n";
  };
  hooks.on_transfer = [&](const TransferEvent& ev, const ParamBlob& blob) {
    events << json{{"type", "transfer"},
                   {"episode", ev.episode},
                   {"from_stage", ev.from_stage},
                   {"to_stage", ev.to_stage},
                   {"params_hash", hash_hex(ev.transferred_hash)}}
                  .dump()
           << "\n";
    fs::path ckpt = sdir / ("stage" + std::to_string(ev.from_stage) + "_ep" +
                            std::to_string(ev.episode) + ".params");
    save_params(blob, ckpt.string());
  };
  long final_episode = 0;
  for (const Stage& s : cfg.plan.stages) final_episode += s.episodes;
  hooks.on_finish = [&](const ParamBlob& blob) {
    fs::path ckpt = sdir / ("stage" + std::to_string(total_stages) + "_ep" +
                            std::to_string(final_episode) + ".params");
    save_params(blob, ckpt.string());
  };
  hooks.on_eval = [&](long episode, const SuccessReport& s) {
    events << json{{"type", "eval"},
                   {"episode", episode},
                   {"frac_top", s.frac_top},
                   {"frac_bottom", s.frac_bottom},
                   {"frac_overall", s.frac_overall}}
                  .dump()
           << "\n";
  };

  EnvFactory env_factory = [](const EnvConfig& e) { return BlockWorld(e); };
  LearnerFactory learner_factory = default_learner_factory(cfg.learner);

  SeedRun out;
  out.seed = seed;
  out.record = run_curriculum(cfg.plan, env_factory, learner_factory, seed, hooks);
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.plan.stages.empty()) {
    throw ConfigError("config: plan: required to run an experiment");
  }
  if (cfg.seeds.empty()) throw ConfigError("config: seeds: need at least one");
  fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  write_file(dir / "manifest.json", build_manifest(cfg, false).dump(2) + "\n");

  int n = int(cfg.seeds.size());
  std::vector<SeedRun> runs(cfg.seeds.size());
  std::vector<std::exception_ptr> errors(cfg.seeds.size());
  // Seeds are independent runs; output merging below restores seed order.
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      runs[std::size_t(i)] = run_one_seed(cfg, cfg.seeds[std::size_t(i)], dir);
    } catch (...) {
      errors[std::size_t(i)] = std::current_exception();
    }
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::string combined = kMetricsHeader;
  for (const SeedRun& r : runs) {
    for (const EpisodeRow& row : r.record.rows) {
      combined += row_csv(cfg.name, r.seed, row);
    }
  }
  write_file(dir / "metrics.csv", combined);
  write_file(dir / "manifest.json", build_manifest(cfg, true).dump(2) + "\n");

  ExperimentResult result;
  result.dir = dir;
  result.runs = std::move(runs);
  return result;
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> trailing_mean(const std::vector<double>& v, int window) {
  if (window <= 1) return v;
  std::vector<double> out(v.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    acc += v[i];
    if (i >= std::size_t(window)) acc -= v[i - std::size_t(window)];
    out[i] = acc / double(std::min<std::size_t>(i + 1, std::size_t(window)));
  }
  return out;
}

struct LoadedRun {
  json manifest;
  std::vector<std::vector<double>> frac_top;  // per seed, per episode
};

LoadedRun load_run_dir(const std::string& dir) {
  fs::path d(dir);
  std::ifstream mf(d / "manifest.json");
  if (!mf) throw ConfigError("no manifest.json under " + dir);
  LoadedRun run;
  try {
    mf >> run.manifest;
  } catch (const json::parse_error& e) {
    throw ConfigError(dir + "/manifest.json: invalid JSON: " + e.what());
  }
  if (!run.manifest.value("complete", false)) {
    throw ConfigError(dir + ": run is incomplete");
  }

  std::ifstream f(d / "metrics.csv");
  if (!f) throw ConfigError("no metrics.csv under " + dir);
  std::string line;
  if (!std::getline(f, line)) throw ConfigError(dir + "/metrics.csv: empty");
  std::string cur_seed;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 8) {
      throw ConfigError(dir + "/metrics.csv: malformed row: " + line);
    }
    if (cells[1] != cur_seed) {
      cur_seed = cells[1];
      run.frac_top.emplace_back();
    }
    try {
      run.frac_top.back().push_back(std::stod(cells[5]));
    } catch (const std::exception&) {
      throw ConfigError(dir + "/metrics.csv: bad frac_top in row: " + line);
    }
  }
  if (run.frac_top.empty()) {
    throw ConfigError(dir + "/metrics.csv: no data rows");
  }
  return run;
}

RunStats stats_for(const LoadedRun& run, double threshold, int window) {
  RunStats st;
  st.seed_count = int(run.frac_top.size());
  std::size_t t = run.frac_top[0].size();
  for (const auto& s : run.frac_top) t = std::min(t, s.size());
  st.episodes = long(t);
  st.episodes_to_thresh = episodes_to_threshold(run.frac_top, threshold, window);

  // Final success: per-seed mean over the last tenth of episodes.
  std::vector<double> finals;
  std::size_t tail = std::max<std::size_t>(1, t / 10);
  for (const auto& s : run.frac_top) {
    double acc = 0.0;
    for (std::size_t i = t - tail; i < t; ++i) acc += s[i];
    finals.push_back(acc / double(tail));
  }
  double mean = 0.0;
  for (double v : finals) mean += v;
  mean /= double(finals.size());
  double var = 0.0;
  for (double v : finals) var += (v - mean) * (v - mean);
  st.final_success_mean = mean;
  st.final_success_sd =
      finals.size() > 1 ? std::sqrt(var / double(finals.size() - 1)) : 0.0;
  return st;
}

}  // namespace

std::optional<long> episodes_to_threshold(
    const std::vector<std::vector<double>>& per_seed_series, double threshold,
    int window) {
  if (per_seed_series.empty()) return std::nullopt;
  std::size_t t = per_seed_series[0].size();
  for (const auto& s : per_seed_series) t = std::min(t, s.size());
  std::vector<std::vector<double>> smooth;
  smooth.reserve(per_seed_series.size());
  for (const auto& s : per_seed_series) {
    std::vector<double> trunc(s.begin(), s.begin() + long(t));
    smooth.push_back(trailing_mean(trunc, window));
  }
  for (std::size_t e = 0; e < t; ++e) {
    std::vector<double> vals;
    vals.reserve(smooth.size());
    for (const auto& s : smooth) vals.push_back(s[e]);
    if (median_of(std::move(vals)) >= threshold) return long(e) + 1;
  }
  return std::nullopt;
}

ComparisonReport compare_runs(const std::string& baseline_dir,
                              const std::string& candidate_dir,
                              double threshold, int smooth_window) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ConfigError("comparison threshold must be in (0, 1]");
  }
  if (smooth_window < 1) throw ConfigError("smooth window must be >= 1");
  LoadedRun base = load_run_dir(baseline_dir);
  LoadedRun cand = load_run_dir(candidate_dir);
  if (base.manifest.value("env", json()) != cand.manifest.value("env", json())) {
    throw ConfigError("runs use different environment configs; refusing to compare");
  }

  ComparisonReport r;
  r.baseline_dir = baseline_dir;
  r.candidate_dir = candidate_dir;
  r.threshold = threshold;
  r.baseline = stats_for(base, threshold, smooth_window);
  r.candidate = stats_for(cand, threshold, smooth_window);
  r.baseline_reached = r.baseline.episodes_to_thresh.has_value();
  r.candidate_reached = r.candidate.episodes_to_thresh.has_value();
  if (r.baseline_reached && r.candidate_reached) {
    double b = double(*r.baseline.episodes_to_thresh);
    double c = double(*r.candidate.episodes_to_thresh);
    r.time_reduction_pct = 100.0 * (1.0 - c / b);
  }
  r.success_improvement_pts =
      100.0 * (r.candidate.final_success_mean - r.baseline.final_success_mean);
  return r;
}

std::string comparison_to_json(const ComparisonReport& r) {
  auto stats_json = [](const RunStats& s) {
    json j{{"episodes", s.episodes},
           {"seeds", s.seed_count},
           {"final_success_mean", s.final_success_mean},
           {"final_success_sd", s.final_success_sd}};
    if (s.episodes_to_thresh) {
      j["episodes_to_threshold"] = *s.episodes_to_thresh;
    } else {
      j["episodes_to_threshold"] = nullptr;
    }
    return j;
  };
  json j{
      {"baseline", stats_json(r.baseline)},
      {"candidate", stats_json(r.candidate)},
      {"baseline_dir", r.baseline_dir},
      {"candidate_dir", r.candidate_dir},
      {"threshold", r.threshold},
      {"success_improvement_pts", r.success_improvement_pts},
  };
  if (r.time_reduction_pct) {
    j["time_reduction_pct"] = *r.time_reduction_pct;
  } else {
    j["time_reduction_pct"] = nullptr;
  }
  return j.dump(2) + "\n";
}

std::string emit_similarity(const ExperimentConfig& cfg) {
  if (cfg.tasks.empty()) {
    throw ConfigError("config: tasks: need at least one task for similarity");
  }
  std::vector<CompoundReward> rewards;
  rewards.reserve(cfg.tasks.size());
  for (const TaskSpec& t : cfg.tasks) rewards.push_back(t.reward);
  return similarity_csv(similarity_matrix(rewards));
}

}  // namespace kcac
