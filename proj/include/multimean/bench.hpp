#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "multimean/model.hpp"
#include "multimean/spectral.hpp"

namespace multimean {

enum class Scenario { clustered, imbalanced, excess_risk_vs_dim, equal_means, csv_ingest };

/* one benchmark method: registry id plus numeric parameter overrides */
struct MethodSpec {
  std::string id;
  std::map<std::string, double> params;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::clustered;
  Mode mode = Mode::vector;
  std::optional<KernelSpec> kernel;

  int bags = 50;
  int samples = 50;   // per-bag size where sizes are equal; csv subsample size
  int dim = 2;
  double radius = 1.5;
  int clusters = 5;
  int proxy_size = 1000;  // holdout bag size standing in for the true mean

  int n_min = 10;  // imbalanced size range
  int n_max = 300;
  bool size_jitter = true;

  std::vector<double> deltas{0.0};                  // excess-risk sweep
  std::vector<int> dims{10, 25, 50, 100, 200, 400};

  std::vector<MethodSpec> methods;
  int trials = 1;
  unsigned long long seed = 0;
  bool split = false;
  std::vector<int> targets;  // empty: every bag is estimated in turn
  std::string csv_path;
  int jobs = 1;
};

/* throws InvalidArgument on malformed or inconsistent configs */
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);

/* flat grid: {"base": {...}, "grid": {field: [values...]}} expanded to the
   cartesian product; returns (cell name, config) pairs in row-major order */
std::vector<std::pair<std::string, ExperimentConfig>> load_grid_file(const std::string& path);

struct TrialResult {
  std::string method;
  int bag = 0;
  double error = 0.0;  // squared distance, or its kernel counterpart
  int trial = 0;
  unsigned long long seed = 0;
};

/* one generated problem instance: estimation bags, optional holdout proxy bags,
   and the ground truth needed for scoring */
struct ScenarioData {
  Dataset est;
  std::optional<Dataset> proxy;
  Eigen::MatrixXd true_means;   // d x B, vector mode scoring
  std::vector<double> s2_true;  // per-bag naive risk Tr S_k / N_k
  double r_star = 0.0;          // oracle relative risk, excess-risk design only
};

ScenarioData gen_clustered(const ExperimentConfig& cfg, Rng& rng);
ScenarioData gen_imbalanced(const ExperimentConfig& cfg, Rng& rng);
ScenarioData gen_equal_means(const ExperimentConfig& cfg, Rng& rng);

/* isotropic design: target mean zero, the rest drawn N(0, delta^2 I) */
ScenarioData gen_excess_risk(int bags, int samples, int dim, double delta, Rng& rng);
double excess_r_star(int samples, double delta, int bags);

/* imbalanced sizes: geometric spacing over [n_min, n_max], optional seeded jitter */
std::vector<int> imbalanced_sizes(int bags, int n_min, int n_max, bool jitter, Rng& rng);

struct MethodSummary {
  std::string id;
  double mean_error = 0.0;
  double mean_rel = 0.0;         // mean error over true naive risk, when known
  double improvement_pct = 0.0;  // vs the ne rows of the same run
  std::vector<double> per_bag;   // mean error per evaluated target
  int failures = 0;
};

struct SweepPoint {
  double delta = 0.0;
  int dim = 0;
  double mean_rel = 0.0;
  double excess = 0.0;  // mean_rel - r_star
  double r_star = 0.0;
};

struct RunResult {
  std::vector<TrialResult> trials;  // sorted by (trial, method order, bag)
  std::vector<MethodSummary> summary;
  std::vector<int> targets;         // bag indices the per_bag columns refer to
  std::vector<SweepPoint> sweep;    // excess-risk scenario only
  std::map<double, double> slopes;  // delta -> fitted log-log slope
  bool any_failure = false;
};

RunResult run(const ExperimentConfig& cfg);

/* ordinary least squares of log(excess) on log(dim), one slope per delta;
   non-positive excess points are dropped */
std::map<double, double> slope_report(const std::vector<SweepPoint>& sweep);

void write_results_json(const std::string& path, const ExperimentConfig& cfg,
                        const RunResult& res);
void write_summary_csv(const std::string& path, const RunResult& res);
void write_plot_csv(const std::string& path, const ExperimentConfig& cfg,
                    const RunResult& res);

}  // namespace multimean
