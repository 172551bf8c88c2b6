#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kcac/error.hpp"
#include "kcac/experiment.hpp"
#include "kcac/sac.hpp"

namespace {

int cmd_run(const std::string& config_path) {
  kcac::ExperimentConfig cfg = kcac::load_config_file(config_path);
  if (cfg.plan.stages.empty()) {
    throw kcac::ConfigError("config: plan: required for 'kcac run'");
  }
  std::cout << "run '" << cfg.name << "': " << cfg.plan.stages.size()
            << " stage(s), " << cfg.seeds.size() << " seed(s)\n";
  for (std::size_t i = 0; i < cfg.plan.stages.size(); ++i) {
    const kcac::Stage& s = cfg.plan.stages[i];
    std::cout << "  stage " << i + 1 << ": task=" << s.task.name
              << " episodes=" << s.episodes << " params="
              << (s.params_preset.empty() ? "custom" : s.params_preset) << "\n";
  }
  kcac::ExperimentResult res = kcac::run_experiment(cfg);
  for (const kcac::SeedRun& r : res.runs) {
    const kcac::EpisodeRow& last = r.record.rows.back();
    std::cout << "  seed " << r.seed << ": " << r.record.rows.size()
              << " episodes, final frac_top=" << last.success.frac_top << "\n";
  }
  std::cout << "wrote " << (res.dir / "metrics.csv").string() << "\n";
  return 0;
}

int cmd_compare(const std::string& base, const std::string& cand,
                double threshold, int smooth, bool as_json) {
  kcac::ComparisonReport r = kcac::compare_runs(base, cand, threshold, smooth);
  if (as_json) {
    std::cout << kcac::comparison_to_json(r);
    return 0;
  }
  auto show = [](const kcac::RunStats& s, const std::string& label) {
    std::cout << label << ": seeds=" << s.seed_count
              << " episodes=" << s.episodes << " episodes_to_threshold=";
    if (s.episodes_to_thresh) {
      std::cout << *s.episodes_to_thresh;
    } else {
      std::cout << "not reached";
    }
    std::cout << " final_success=" << s.final_success_mean << " (sd "
              << s.final_success_sd << ")\n";
  };
  std::cout << "threshold " << r.threshold << "\n";
  show(r.baseline, "baseline  " + r.baseline_dir);
  show(r.candidate, "candidate " + r.candidate_dir);
  if (r.time_reduction_pct) {
    std::printf("training time reduction: %.1f%%\n", *r.time_reduction_pct);
  } else {
    std::cout << "training time reduction: n/a (threshold not reached)\n";
  }
  std::printf("final success improvement: %+.1f points\n",
              r.success_improvement_pts);
  return 0;
}

int cmd_similarity(const std::string& config_path, const std::string& out) {
  kcac::ExperimentConfig cfg = kcac::load_config_file(config_path);
  std::string csv = kcac::emit_similarity(cfg);
  if (out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f) throw kcac::Error("cannot open for writing: " + out);
    f << csv;
  }
  return 0;
}

int cmd_gradcheck(double epsilon, double tolerance) {
  double err = kcac::grad_check(epsilon);
  std::printf("max relative gradient error: %.3e (tolerance %.1e)\n", err,
              tolerance);
  if (err > tolerance) {
    std::cout << "FAIL\n";
    return 3;
  }
  std::cout << "OK\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"curriculum training for two-block stacking"};
  app.require_subcommand(1);

  std::string config_path, base_dir, cand_dir, out_file;
  double threshold = 0.8, epsilon = 1e-5, tolerance = 1e-4;
  int smooth = 1;
  bool as_json = false;

  CLI::App* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "JSON config file")->required();

  CLI::App* compare =
      app.add_subcommand("compare", "compare two completed run directories");
  compare->add_option("baseline", base_dir, "baseline run directory")->required();
  compare->add_option("candidate", cand_dir, "candidate run directory")->required();
  compare->add_option("--threshold", threshold, "success threshold");
  compare->add_option("--smooth", smooth, "trailing-mean window (episodes)");
  compare->add_flag("--json", as_json, "print the report as JSON");

  CLI::App* similarity =
      app.add_subcommand("similarity", "emit the task similarity matrix as CSV");
  similarity->add_option("config", config_path, "JSON config file")->required();
  similarity->add_option("--out", out_file, "write CSV here instead of stdout");

  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "validate analytic gradients against finite differences");
  gradcheck->add_option("--epsilon", epsilon, "finite-difference step");
  gradcheck->add_option("--tol", tolerance, "max relative error accepted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(config_path);
    if (compare->parsed()) {
      return cmd_compare(base_dir, cand_dir, threshold, smooth, as_json);
    }
    if (similarity->parsed()) return cmd_similarity(config_path, out_file);
    if (gradcheck->parsed()) return cmd_gradcheck(epsilon, tolerance);
  } catch (const kcac::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
