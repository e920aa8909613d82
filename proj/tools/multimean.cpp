#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "multimean/bench.hpp"

namespace fs = std::filesystem;

namespace {

int effective_jobs(int jobs) {
  const char* env = std::getenv("MULTIMEAN_JOBS");
  if (env && *env) {
    try {
      jobs = std::stoi(env);
    } catch (const std::exception&) {
      throw multimean::InvalidArgument("MULTIMEAN_JOBS must be an integer");
    }
  }
  if (jobs < 1) throw multimean::InvalidArgument("jobs must be positive");
  return jobs;
}

void print_summary(const multimean::RunResult& res) {
  std::cout << std::left << std::setw(12) << "method" << std::right << std::setw(14)
            << "mean_error" << std::setw(12) << "mean_rel" << std::setw(14)
            << "improve_%" << std::setw(10) << "failures" << "\n";
  for (const multimean::MethodSummary& s : res.summary) {
    std::cout << std::left << std::setw(12) << s.id << std::right << std::setw(14)
              << std::setprecision(5) << s.mean_error << std::setw(12) << s.mean_rel
              << std::setw(14) << s.improvement_pct << std::setw(10) << s.failures
              << "\n";
  }
  for (const auto& [delta, slope] : res.slopes)
    std::cout << "slope(delta=" << delta << ") = " << slope << "\n";
}

void write_outputs(const fs::path& dir, const multimean::ExperimentConfig& cfg,
                   const multimean::RunResult& res) {
  fs::create_directories(dir);
  multimean::write_results_json((dir / "results.json").string(), cfg, res);
  multimean::write_summary_csv((dir / "summary.csv").string(), res);
  multimean::write_plot_csv((dir / "plot.csv").string(), cfg, res);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"convex aggregation benchmarks for many-means estimation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  unsigned long long seed = 0;
  int trials = 0;
  int jobs = 0;
  bool split = false;

  CLI::App* cmd_run = app.add_subcommand("run", "run one experiment config");
  cmd_run->add_option("--config", config_path, "experiment config (json)")->required();
  CLI::Option* opt_seed = cmd_run->add_option("--seed", seed, "override the config seed");
  CLI::Option* opt_trials =
      cmd_run->add_option("--trials", trials, "override the trial count");
  cmd_run->add_option("--out", out_dir, "output directory (default: cwd)");
  CLI::Option* opt_split =
      cmd_run->add_flag("--split", split, "hold out half of each bag for the tests");
  CLI::Option* opt_jobs = cmd_run->add_option("--jobs", jobs, "worker threads");

  CLI::App* cmd_grid = app.add_subcommand("grid", "expand a flat parameter grid");
  cmd_grid->add_option("--config", config_path, "grid config (json)")->required();
  cmd_grid->add_option("--out", out_dir, "output directory (default: cwd)");
  CLI::Option* opt_jobs_grid = cmd_grid->add_option("--jobs", jobs, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    /* help exits 0, genuine parse errors nonzero */
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (cmd_run->parsed()) {
      multimean::ExperimentConfig cfg = multimean::load_config_file(config_path);
      if (opt_seed->count() > 0) cfg.seed = seed;
      if (opt_trials->count() > 0) cfg.trials = trials;
      if (opt_split->count() > 0) cfg.split = true;
      cfg.jobs = effective_jobs(opt_jobs->count() > 0 ? jobs : cfg.jobs);

      const multimean::RunResult res = multimean::run(cfg);
      write_outputs(out_dir, cfg, res);
      print_summary(res);
      if (res.any_failure) {
        std::cerr << "warning: some method evaluations failed (see summary)\n";
        return 3;
      }
      return 0;
    }

    auto cells = multimean::load_grid_file(config_path);
    fs::create_directories(out_dir);
    std::ofstream index(fs::path(out_dir) / "index.csv");
    index << "cell,failures\n";
    bool any_failure = false;
    for (auto& [name, cfg] : cells) {
      if (opt_jobs_grid->count() > 0 || std::getenv("MULTIMEAN_JOBS"))
        cfg.jobs = effective_jobs(opt_jobs_grid->count() > 0 ? jobs : cfg.jobs);
      std::cout << "== " << name << "\n";
      const multimean::RunResult res = multimean::run(cfg);
      write_outputs(fs::path(out_dir) / name, cfg, res);
      print_summary(res);
      int failures = 0;
      for (const multimean::MethodSummary& s : res.summary) failures += s.failures;
      index << name << "," << failures << "\n";
      any_failure = any_failure || res.any_failure;
    }
    return any_failure ? 3 : 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
