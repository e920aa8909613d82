#include "multimean/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "multimean/methods.hpp"

namespace multimean {

namespace {

using nlohmann::json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::clustered: return "clustered";
    case Scenario::imbalanced: return "imbalanced";
    case Scenario::excess_risk_vs_dim: return "excess_risk_vs_dim";
    case Scenario::equal_means: return "equal_means";
    case Scenario::csv_ingest: return "csv_ingest";
  }
  return "?";
}

Scenario scenario_from(const std::string& name) {
  for (Scenario s : {Scenario::clustered, Scenario::imbalanced,
                     Scenario::excess_risk_vs_dim, Scenario::equal_means,
                     Scenario::csv_ingest})
    if (name == scenario_name(s)) return s;
  throw InvalidArgument("unknown scenario '" + name + "'");
}

void require_positive(int v, const char* what) {
  if (v < 1) throw InvalidArgument(std::string(what) + " must be positive");
}

void validate_methods(const ExperimentConfig& cfg) {
  if (cfg.methods.empty()) throw InvalidArgument("config lists no methods");
  for (const MethodSpec& m : cfg.methods) {
    auto defaults = method_defaults(m.id);  // throws on unknown id
    for (const auto& [key, value] : m.params) {
      (void)value;
      if (!defaults.count(key))
        throw InvalidArgument("method " + m.id + " has no parameter '" + key + "'");
    }
    if ((m.id == "js0" || m.id == "jsgm") && cfg.mode != Mode::vector)
      throw InvalidArgument("method " + m.id + " needs vector-mode data");
  }
}

void validate(const ExperimentConfig& cfg) {
  require_positive(cfg.trials, "trials");
  require_positive(cfg.bags, "bags");
  if (cfg.samples < 2) throw InvalidArgument("samples must be at least 2");
  require_positive(cfg.dim, "dim");
  if (cfg.proxy_size < 2) throw InvalidArgument("proxy_size must be at least 2");
  require_positive(cfg.jobs, "jobs");
  validate_methods(cfg);
  if (cfg.scenario != Scenario::csv_ingest)  // csv bag count is known after loading
    for (int t : cfg.targets)
      if (t < 0 || t >= cfg.bags) throw InvalidArgument("target index out of range");

  switch (cfg.scenario) {
    case Scenario::clustered:
      require_positive(cfg.clusters, "clusters");
      if (cfg.bags % cfg.clusters != 0)
        throw InvalidArgument("bags must divide evenly into clusters");
      if (cfg.dim != 2) throw InvalidArgument("clustered bags are two-dimensional");
      if (cfg.radius < 0.0 || cfg.radius > 3.0)
        throw InvalidArgument("radius must lie in [0,3]");
      break;
    case Scenario::imbalanced:
      if (cfg.dim != 2) throw InvalidArgument("imbalanced bags are two-dimensional");
      if (cfg.n_min < 2) throw InvalidArgument("n_min must be at least 2");
      if (cfg.n_max < cfg.n_min) throw InvalidArgument("n_max must be at least n_min");
      break;
    case Scenario::excess_risk_vs_dim:
      if (cfg.mode != Mode::vector)
        throw InvalidArgument("the excess-risk sweep is a vector-mode design");
      if (cfg.deltas.empty() || cfg.dims.empty())
        throw InvalidArgument("the excess-risk sweep needs deltas and dims");
      for (double d : cfg.deltas)
        if (d < 0.0) throw InvalidArgument("delta must be nonnegative");
      for (int d : cfg.dims) require_positive(d, "dims entry");
      break;
    case Scenario::equal_means:
      if (cfg.mode != Mode::vector)
        throw InvalidArgument("the equal-means design is vector-mode");
      break;
    case Scenario::csv_ingest:
      if (cfg.csv_path.empty()) throw InvalidArgument("csv_ingest needs a csv path");
      break;
  }
  if (cfg.mode == Mode::kernel && !cfg.kernel)
    throw InvalidArgument("kernel mode needs a kernel spec");
  if (cfg.split) {
    const int min_n =
        cfg.scenario == Scenario::imbalanced ? cfg.n_min : cfg.samples;
    if (cfg.scenario != Scenario::csv_ingest && min_n < 4)
      throw InvalidArgument("splitting needs at least four samples per bag");
  }
}

KernelSpec parse_kernel(const json& j) {
  if (!j.is_object()) throw InvalidArgument("kernel spec must be an object");
  const std::string kind = j.value("kind", "gaussian");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "kind" && key != "width")
      throw InvalidArgument("unknown kernel field '" + key + "'");
  }
  if (kind == "linear") return KernelSpec::linear();
  if (kind != "gaussian") throw InvalidArgument("unknown kernel kind '" + kind + "'");
  if (!j.contains("width")) return KernelSpec::gaussian_auto();
  if (j["width"].is_string()) {
    if (j["width"] != "auto") throw InvalidArgument("kernel width must be a number or 'auto'");
    return KernelSpec::gaussian_auto();
  }
  return KernelSpec::gaussian(j["width"].get<double>());
}

MethodSpec parse_method(const json& j) {
  MethodSpec m;
  if (j.is_string()) {
    m.id = j.get<std::string>();
    return m;
  }
  if (!j.is_object() || !j.contains("id"))
    throw InvalidArgument("method entry must be an id string or {id, params}");
  m.id = j["id"].get<std::string>();
  for (const auto& [key, value] : j.items()) {
    if (key == "id") continue;
    if (key != "params") throw InvalidArgument("unknown method field '" + key + "'");
    for (const auto& [pk, pv] : value.items()) m.params[pk] = pv.get<double>();
  }
  return m;
}

ExperimentConfig config_from_json(const json& j) {
  static const std::set<std::string> known = {
      "scenario", "mode",    "kernel", "bags",    "samples",  "dim",
      "radius",   "clusters", "proxy_size", "n_min", "n_max", "size_jitter",
      "deltas",   "dims",    "methods", "trials",  "seed",    "split",
      "targets",  "csv",     "jobs"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.count(key)) throw InvalidArgument("unknown config field '" + key + "'");
  }

  ExperimentConfig cfg;
  if (!j.contains("scenario")) throw InvalidArgument("config needs a scenario");
  cfg.scenario = scenario_from(j["scenario"].get<std::string>());
  const std::string mode = j.value("mode", "vector");
  if (mode == "kernel")
    cfg.mode = Mode::kernel;
  else if (mode == "vector")
    cfg.mode = Mode::vector;
  else
    throw InvalidArgument("mode must be 'vector' or 'kernel'");
  if (j.contains("kernel")) cfg.kernel = parse_kernel(j["kernel"]);
  if (cfg.mode == Mode::kernel && !cfg.kernel) cfg.kernel = KernelSpec::gaussian_auto();

  cfg.bags = j.value("bags", cfg.bags);
  cfg.samples = j.value("samples", cfg.samples);
  cfg.dim = j.value("dim", cfg.dim);
  cfg.radius = j.value("radius", cfg.radius);
  cfg.clusters = j.value("clusters", cfg.clusters);
  cfg.proxy_size = j.value("proxy_size", cfg.proxy_size);
  cfg.n_min = j.value("n_min", cfg.n_min);
  cfg.n_max = j.value("n_max", cfg.n_max);
  cfg.size_jitter = j.value("size_jitter", cfg.size_jitter);
  if (j.contains("deltas")) cfg.deltas = j["deltas"].get<std::vector<double>>();
  if (j.contains("dims")) cfg.dims = j["dims"].get<std::vector<int>>();
  if (!j.contains("methods")) throw InvalidArgument("config lists no methods");
  for (const json& m : j["methods"]) cfg.methods.push_back(parse_method(m));
  cfg.trials = j.value("trials", cfg.trials);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.split = j.value("split", cfg.split);
  if (j.contains("targets")) cfg.targets = j["targets"].get<std::vector<int>>();
  cfg.csv_path = j.value("csv", cfg.csv_path);
  cfg.jobs = j.value("jobs", cfg.jobs);
  validate(cfg);
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["scenario"] = scenario_name(cfg.scenario);
  j["mode"] = cfg.mode == Mode::kernel ? "kernel" : "vector";
  if (cfg.kernel) {
    json k;
    k["kind"] = cfg.kernel->kind == KernelSpec::Kind::linear ? "linear" : "gaussian";
    if (cfg.kernel->width_rule == KernelSpec::WidthRule::avg_feature_std)
      k["width"] = "auto";
    else
      k["width"] = cfg.kernel->width;
    j["kernel"] = k;
  }
  j["bags"] = cfg.bags;
  j["samples"] = cfg.samples;
  j["dim"] = cfg.dim;
  j["radius"] = cfg.radius;
  j["clusters"] = cfg.clusters;
  j["proxy_size"] = cfg.proxy_size;
  j["n_min"] = cfg.n_min;
  j["n_max"] = cfg.n_max;
  j["size_jitter"] = cfg.size_jitter;
  j["deltas"] = cfg.deltas;
  j["dims"] = cfg.dims;
  json methods = json::array();
  for (const MethodSpec& m : cfg.methods) {
    json e;
    e["id"] = m.id;
    if (!m.params.empty()) e["params"] = m.params;
    methods.push_back(e);
  }
  j["methods"] = methods;
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["split"] = cfg.split;
  j["targets"] = cfg.targets;
  if (!cfg.csv_path.empty()) j["csv"] = cfg.csv_path;
  j["jobs"] = cfg.jobs;
  return j;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config parse error: ") + e.what());
  }
  return config_from_json(j);
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::pair<std::string, ExperimentConfig>> load_grid_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config parse error: ") + e.what());
  }
  if (!j.contains("base") || !j.contains("grid"))
    throw InvalidArgument("grid config needs 'base' and 'grid' objects");

  std::vector<std::string> fields;
  std::vector<json> values;
  for (const auto& [key, value] : j["grid"].items()) {
    if (!value.is_array() || value.empty())
      throw InvalidArgument("grid field '" + key + "' must be a nonempty array");
    fields.push_back(key);
    values.push_back(value);
  }

  std::vector<std::pair<std::string, ExperimentConfig>> out;
  std::vector<size_t> at(fields.size(), 0);
  while (true) {
    json cell = j["base"];
    std::string name = "run";
    for (size_t f = 0; f < fields.size(); ++f) {
      cell[fields[f]] = values[f][at[f]];
      std::string v = values[f][at[f]].dump();
      v.erase(std::remove(v.begin(), v.end(), '"'), v.end());
      name += "_" + fields[f] + "=" + v;
    }
    out.emplace_back(name, config_from_json(cell));
    size_t f = fields.size();
    while (f > 0) {
      --f;
      if (++at[f] < values[f].size()) break;
      at[f] = 0;
      if (f == 0) return out;
    }
    if (fields.empty()) return out;
  }
}

std::vector<int> imbalanced_sizes(int bags, int n_min, int n_max, bool jitter, Rng& rng) {
  std::vector<int> sizes(bags);
  std::uniform_real_distribution<double> factor(0.8, 1.2);
  for (int k = 0; k < bags; ++k) {
    double v = bags == 1 ? n_min
                         : n_min * std::pow(static_cast<double>(n_max) / n_min,
                                            static_cast<double>(k) / (bags - 1));
    if (jitter) v *= factor(rng);
    sizes[k] = std::clamp(static_cast<int>(std::lround(v)), n_min, n_max);
  }
  return sizes;
}

namespace {

/* rotated anisotropic 2-D covariance shared by the clustered and imbalanced
   designs: eigenvalues (1, 10), eigenbasis tilted by theta */
Eigen::Matrix2d tilt_root(double theta) {
  Eigen::Matrix2d rot;
  rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  Eigen::Matrix2d root = rot;
  root.col(1) *= std::sqrt(10.0);
  return root;  // root * root^T = R diag(1,10) R^T
}

Eigen::MatrixXd gaussian_rows(int n, int d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = normal(rng);
  return x;
}

Bag tilted_bag(int id, const Eigen::Vector2d& centre, double theta, int n, Rng& rng) {
  Bag b;
  b.id = id;
  b.samples = gaussian_rows(n, 2, rng) * tilt_root(theta).transpose();
  b.samples.rowwise() += centre.transpose();
  return b;
}

ScenarioData tilted_scenario(const ExperimentConfig& cfg,
                             const std::vector<Eigen::Vector2d>& centres,
                             const std::vector<int>& sizes, Rng& rng) {
  std::uniform_real_distribution<double> angle(-M_PI / 4.0, M_PI / 4.0);
  ScenarioData out;
  out.true_means.resize(2, cfg.bags);
  std::vector<Bag> est, proxy;
  for (int k = 0; k < cfg.bags; ++k) {
    const double theta = angle(rng);
    est.push_back(tilted_bag(k, centres[k], theta, sizes[k], rng));
    if (cfg.mode == Mode::kernel)
      proxy.push_back(tilted_bag(k, centres[k], theta, cfg.proxy_size, rng));
    out.true_means.col(k) = centres[k];
  }
  if (cfg.mode == Mode::kernel) {
    out.est = make_kernel_dataset(std::move(est), *cfg.kernel);
    out.proxy = make_kernel_dataset(std::move(proxy), *cfg.kernel);
  } else {
    out.est = make_vector_dataset(std::move(est));
    out.s2_true.resize(cfg.bags);
    for (int k = 0; k < cfg.bags; ++k) out.s2_true[k] = 11.0 / sizes[k];  // Tr = 1 + 10
  }
  return out;
}

}  // namespace

ScenarioData gen_clustered(const ExperimentConfig& cfg, Rng& rng) {
  const int per = cfg.bags / cfg.clusters;
  std::vector<Eigen::Vector2d> centres(cfg.bags);
  for (int k = 0; k < cfg.bags; ++k) {
    const int j = k / per;
    const double phi = 2.0 * M_PI * j / cfg.clusters;
    centres[k] = cfg.radius * Eigen::Vector2d(std::cos(phi), std::sin(phi));
  }
  return tilted_scenario(cfg, centres, std::vector<int>(cfg.bags, cfg.samples), rng);
}

ScenarioData gen_imbalanced(const ExperimentConfig& cfg, Rng& rng) {
  const std::vector<int> sizes =
      imbalanced_sizes(cfg.bags, cfg.n_min, cfg.n_max, cfg.size_jitter, rng);
  return tilted_scenario(cfg, std::vector<Eigen::Vector2d>(cfg.bags, Eigen::Vector2d::Zero()),
                         sizes, rng);
}

ScenarioData gen_equal_means(const ExperimentConfig& cfg, Rng& rng) {
  ScenarioData out;
  out.true_means = Eigen::MatrixXd::Zero(cfg.dim, cfg.bags);
  out.s2_true.assign(cfg.bags, static_cast<double>(cfg.dim) / cfg.samples);
  std::vector<Bag> bags;
  for (int k = 0; k < cfg.bags; ++k) {
    Bag b;
    b.id = k;
    b.samples = gaussian_rows(cfg.samples, cfg.dim, rng);
    bags.push_back(std::move(b));
  }
  out.est = make_vector_dataset(std::move(bags));
  return out;
}

double excess_r_star(int samples, double delta, int bags) {
  const double nd2 = samples * delta * delta;
  return (nd2 + 1.0) / (nd2 + bags);
}

ScenarioData gen_excess_risk(int bags, int samples, int dim, double delta, Rng& rng) {
  ScenarioData out;
  out.true_means = Eigen::MatrixXd::Zero(dim, bags);
  out.s2_true.assign(bags, static_cast<double>(dim) / samples);
  out.r_star = excess_r_star(samples, delta, bags);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Bag> est;
  for (int k = 0; k < bags; ++k) {
    if (k > 0 && delta > 0.0)
      for (int j = 0; j < dim; ++j) out.true_means(j, k) = delta * normal(rng);
    Bag b;
    b.id = k;
    b.samples = gaussian_rows(samples, dim, rng);
    b.samples.rowwise() += out.true_means.col(k).transpose();
    est.push_back(std::move(b));
  }
  out.est = make_vector_dataset(std::move(est));
  return out;
}

namespace {

ScenarioData gen_csv(const ExperimentConfig& cfg, const Dataset& full, Rng& rng) {
  ScenarioData out;
  std::vector<Bag> est, proxy;
  for (int k = 0; k < full.size(); ++k) {
    const Bag& bag = full.bags[k];
    const int take = std::min(cfg.samples, bag.size());  // small bags are capped
    std::vector<int> perm(bag.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Bag sub;
    sub.id = bag.id;
    sub.samples.resize(take, bag.dim());
    for (int i = 0; i < take; ++i) sub.samples.row(i) = bag.samples.row(perm[i]);
    est.push_back(std::move(sub));
    proxy.push_back(bag);
  }
  if (cfg.mode == Mode::kernel) {
    out.est = make_kernel_dataset(std::move(est), *cfg.kernel);
    out.proxy = make_kernel_dataset(std::move(proxy), *cfg.kernel);
    out.est.labels = full.labels;
  } else {
    out.est = make_vector_dataset(std::move(est));
    out.est.labels = full.labels;
    out.true_means.resize(full.dim(), full.size());
    for (int k = 0; k < full.size(); ++k)
      out.true_means.col(k) = naive_mean(full.bags[k]);  // proxy truth
  }
  return out;
}

/* split each bag in two: leading rows drive the selection tests, trailing rows
   carry the estimation */
std::pair<Dataset, Dataset> split_dataset(const Dataset& data) {
  std::vector<Bag> test, est;
  for (const Bag& bag : data.bags) {
    const int n_test = bag.size() / 2;
    if (n_test < 2 || bag.size() - n_test < 2)
      throw InsufficientSamples("bag too small to split");
    Bag t, e;
    t.id = e.id = bag.id;
    t.samples = bag.samples.topRows(n_test);
    e.samples = bag.samples.bottomRows(bag.size() - n_test);
    test.push_back(std::move(t));
    est.push_back(std::move(e));
  }
  if (data.mode == Mode::kernel)
    return {make_kernel_dataset(std::move(test), *data.kernel),
            make_kernel_dataset(std::move(est), *data.kernel)};
  return {make_vector_dataset(std::move(test)), make_vector_dataset(std::move(est))};
}

struct TrialOutput {
  std::vector<TrialResult> rows;
  bool failure = false;
};

/* scoring context shared by every method within one trial */
struct TrialScore {
  const ScenarioData* scen;
  const Dataset* est;
  const DatasetStats* stats;
  std::vector<int> targets;
  KernelSpec spec;                 // resolved, kernel mode only
  Eigen::MatrixXd cross;           // bag l x target slot: <mu_hat_l, proxy mean>
  std::vector<double> proxy_term;  // per target slot

  double eval(const Eigen::VectorXd& w, int slot) const {
    const int k = targets[slot];
    if (scen->proxy) {
      double quad = 0.0;
      const Eigen::MatrixXd& m = stats->mean_ip;
      for (int l = 0; l < est->size(); ++l) {
        if (w[l] == 0.0) continue;
        for (int lp = 0; lp < est->size(); ++lp)
          if (w[lp] != 0.0) quad += w[l] * w[lp] * m(l, lp);
      }
      return quad - 2.0 * w.dot(cross.col(slot)) + proxy_term[slot];
    }
    const Eigen::VectorXd mu = stats->means * w;
    return (mu - scen->true_means.col(k)).squaredNorm();
  }
};

TrialScore make_score(const ScenarioData& scen, const Dataset& est,
                      const DatasetStats& stats, const std::vector<int>& targets) {
  TrialScore sc;
  sc.scen = &scen;
  sc.est = &est;
  sc.stats = &stats;
  sc.targets = targets;
  if (!scen.proxy) return sc;

  sc.spec = resolve_kernel(est);
  const int nb = est.size();
  const int nt = static_cast<int>(targets.size());
  sc.cross.resize(nb, nt);
  sc.proxy_term.resize(nt);
  for (int s = 0; s < nt; ++s) {
    const Bag& y = scen.proxy->bags[targets[s]];
    const int m = y.size();
    for (int l = 0; l < nb; ++l) {
      const double sum = gram_block(est.bags[l].samples, y.samples, sc.spec).sum();
      sc.cross(l, s) = sum / (static_cast<double>(est.bags[l].size()) * m);
    }
    const Eigen::MatrixXd self = gram_block(y.samples, y.samples, sc.spec);
    sc.proxy_term[s] =
        (self.sum() - self.diagonal().sum()) / (static_cast<double>(m) * (m - 1));
  }
  return sc;
}

std::vector<int> resolve_targets(const ExperimentConfig& cfg, int nb) {
  if (!cfg.targets.empty()) return cfg.targets;
  if (cfg.scenario == Scenario::excess_risk_vs_dim) return {0};
  std::vector<int> all(nb);
  std::iota(all.begin(), all.end(), 0);
  return all;
}

bool weights_admissible(const Eigen::VectorXd& w, bool sub_simplex) {
  if (!w.allFinite()) return false;
  for (int l = 0; l < w.size(); ++l)
    if (w[l] < -1e-9) return false;
  const double sum = w.sum();
  return sub_simplex ? sum <= 1.0 + 1e-9 : std::abs(sum - 1.0) <= 1e-9;
}

TrialOutput run_trial(const ExperimentConfig& cfg, int global_t, const Dataset* csv_full) {
  const unsigned long long seed = child_seed(cfg.seed, global_t);
  Rng rng(seed);

  ScenarioData scen;
  switch (cfg.scenario) {
    case Scenario::clustered:
      scen = gen_clustered(cfg, rng);
      break;
    case Scenario::imbalanced:
      scen = gen_imbalanced(cfg, rng);
      break;
    case Scenario::equal_means:
      scen = gen_equal_means(cfg, rng);
      break;
    case Scenario::excess_risk_vs_dim: {
      const int cells = static_cast<int>(cfg.dims.size());
      const int cell = global_t / cfg.trials;
      scen = gen_excess_risk(cfg.bags, cfg.samples, cfg.dims[cell % cells],
                             cfg.deltas[cell / cells], rng);
      break;
    }
    case Scenario::csv_ingest:
      scen = gen_csv(cfg, *csv_full, rng);
      break;
  }

  Dataset est_view, test_view;
  if (cfg.split) {
    auto halves = split_dataset(scen.est);
    test_view = std::move(halves.first);
    est_view = std::move(halves.second);
  }
  const Dataset& est = cfg.split ? est_view : scen.est;
  const Dataset& test = cfg.split ? test_view : scen.est;

  const StatsOptions opts;
  const DatasetStats stats = compute_stats(est, opts, &rng);
  DatasetStats test_stats_storage;
  if (cfg.split) test_stats_storage = compute_stats(test, opts, &rng);
  const DatasetStats& test_stats = cfg.split ? test_stats_storage : stats;

  const std::vector<int> targets = resolve_targets(cfg, est.size());
  const TrialScore score = make_score(scen, est, stats, targets);

  TrialOutput out;
  MethodInput input{est, stats, test_stats, rng};
  for (const MethodSpec& m : cfg.methods) {
    const MethodOutput mo = compute_method_weights(m, input);
    const bool sub = method_sub_simplex(m.id);
    for (int slot = 0; slot < static_cast<int>(targets.size()); ++slot) {
      const int k = targets[slot];
      TrialResult row;
      row.method = m.id;
      row.bag = k;
      row.trial = global_t;
      row.seed = seed;
      if (mo.failed[k] || !weights_admissible(mo.weights.row(k).transpose(), sub)) {
        row.error = kNan;
        out.failure = true;
      } else {
        row.error = score.eval(mo.weights.row(k).transpose(), slot);
        if (!std::isfinite(row.error)) out.failure = true;
      }
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace

std::map<double, double> slope_report(const std::vector<SweepPoint>& sweep) {
  std::map<double, std::vector<std::pair<double, double>>> by_delta;
  for (const SweepPoint& p : sweep)
    if (p.excess > 0.0)
      by_delta[p.delta].emplace_back(std::log(static_cast<double>(p.dim)),
                                     std::log(p.excess));
  std::map<double, double> slopes;
  for (const auto& [delta, pts] : by_delta) {
    if (pts.size() < 2) continue;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : pts) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double n = static_cast<double>(pts.size());
    slopes[delta] = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return slopes;
}

RunResult run(const ExperimentConfig& cfg) {
  validate(cfg);
  Dataset csv_full;
  if (cfg.scenario == Scenario::csv_ingest) {
    csv_full = load_csv_dataset(cfg.csv_path, cfg.mode, cfg.kernel);
    for (int t : cfg.targets)
      if (t < 0 || t >= csv_full.size())
        throw InvalidArgument("target index out of range");
    const int floor = cfg.split ? 4 : 2;
    for (const Bag& b : csv_full.bags)
      if (std::min(cfg.samples, b.size()) < floor)
        throw InvalidArgument("csv bag " + std::to_string(b.id) +
                              " leaves fewer than " + std::to_string(floor) +
                              " estimation samples");
  }

  int trials_total = cfg.trials;
  if (cfg.scenario == Scenario::excess_risk_vs_dim)
    trials_total *= static_cast<int>(cfg.deltas.size() * cfg.dims.size());

  std::vector<TrialOutput> slots(trials_total);
  std::atomic<int> next{0};
  const int jobs = std::max(1, std::min(cfg.jobs, trials_total));
  auto worker = [&] {
    while (true) {
      const int t = next.fetch_add(1);
      if (t >= trials_total) return;
      slots[t] = run_trial(cfg, t, &csv_full);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  RunResult res;
  res.targets = resolve_targets(cfg, cfg.scenario == Scenario::csv_ingest
                                         ? csv_full.size()
                                         : cfg.bags);
  for (TrialOutput& slot : slots) {
    res.any_failure = res.any_failure || slot.failure;
    for (TrialResult& row : slot.rows) res.trials.push_back(std::move(row));
  }

  /* per-method summaries in config order */
  const int nt = static_cast<int>(res.targets.size());
  std::map<int, int> slot_of;
  for (int s = 0; s < nt; ++s) slot_of[res.targets[s]] = s;
  for (const MethodSpec& m : cfg.methods) {
    MethodSummary sum;
    sum.id = m.id;
    sum.per_bag.assign(nt, 0.0);
    std::vector<int> per_bag_n(nt, 0);
    double total = 0.0;
    int n = 0;
    for (const TrialResult& row : res.trials) {
      if (row.method != m.id) continue;
      if (!std::isfinite(row.error)) {
        ++sum.failures;
        continue;
      }
      total += row.error;
      ++n;
      const int s = slot_of.at(row.bag);
      sum.per_bag[s] += row.error;
      ++per_bag_n[s];
    }
    sum.mean_error = n > 0 ? total / n : kNan;
    for (int s = 0; s < nt; ++s)
      sum.per_bag[s] = per_bag_n[s] > 0 ? sum.per_bag[s] / per_bag_n[s] : kNan;
    sum.mean_rel = kNan;
    res.summary.push_back(std::move(sum));
  }

  /* mean relative risk when the design has one common true naive risk and the
     estimator sees the full bags */
  if (cfg.mode == Mode::vector && !cfg.split) {
    double s2 = kNan;
    if (cfg.scenario == Scenario::equal_means)
      s2 = static_cast<double>(cfg.dim) / cfg.samples;
    else if (cfg.scenario == Scenario::clustered)
      s2 = 11.0 / cfg.samples;
    if (std::isfinite(s2))
      for (MethodSummary& sum : res.summary) sum.mean_rel = sum.mean_error / s2;
  }

  /* improvement over the naive rows of the same run */
  double ne_mean = kNan;
  for (const MethodSummary& sum : res.summary)
    if (sum.id == "ne") ne_mean = sum.mean_error;
  for (MethodSummary& sum : res.summary)
    sum.improvement_pct = std::isfinite(ne_mean) && ne_mean != 0.0
                              ? 100.0 * (ne_mean - sum.mean_error) / ne_mean
                              : kNan;

  if (cfg.scenario == Scenario::excess_risk_vs_dim) {
    const std::string& lead = cfg.methods.front().id;
    const int cells_d = static_cast<int>(cfg.dims.size());
    std::vector<std::pair<double, int>> cell_acc(cfg.deltas.size() * cfg.dims.size(),
                                                 {0.0, 0});
    for (const TrialResult& row : res.trials) {
      if (row.method != lead || !std::isfinite(row.error)) continue;
      cell_acc[row.trial / cfg.trials].first += row.error;
      cell_acc[row.trial / cfg.trials].second += 1;
    }
    for (size_t de = 0; de < cfg.deltas.size(); ++de)
      for (size_t di = 0; di < cfg.dims.size(); ++di) {
        const auto& [sum, count] = cell_acc[de * cells_d + di];
        SweepPoint p;
        p.delta = cfg.deltas[de];
        p.dim = cfg.dims[di];
        p.r_star = excess_r_star(cfg.samples, p.delta, cfg.bags);
        const double naive = static_cast<double>(p.dim) / cfg.samples;
        p.mean_rel = count > 0 ? sum / count / naive : kNan;
        p.excess = p.mean_rel - p.r_star;
        res.sweep.push_back(p);
      }
    res.slopes = slope_report(res.sweep);
  }
  return res;
}

void write_results_json(const std::string& path, const ExperimentConfig& cfg,
                        const RunResult& res) {
  json j;
  j["config"] = config_to_json(cfg);
  json summary = json::array();
  for (const MethodSummary& s : res.summary) {
    json e;
    e["method"] = s.id;
    e["mean_error"] = s.mean_error;
    e["mean_rel"] = s.mean_rel;
    e["improvement_pct"] = s.improvement_pct;
    e["failures"] = s.failures;
    e["per_bag"] = s.per_bag;
    summary.push_back(e);
  }
  j["summary"] = summary;
  j["targets"] = res.targets;
  if (!res.sweep.empty()) {
    json sweep = json::array();
    for (const SweepPoint& p : res.sweep) {
      json e;
      e["delta"] = p.delta;
      e["dim"] = p.dim;
      e["mean_rel"] = p.mean_rel;
      e["excess"] = p.excess;
      e["r_star"] = p.r_star;
      sweep.push_back(e);
    }
    j["sweep"] = sweep;
    json slopes = json::object();
    for (const auto& [delta, slope] : res.slopes)
      slopes[std::to_string(delta)] = slope;
    j["slopes"] = slopes;
  }
  json trials = json::array();
  for (const TrialResult& r : res.trials) {
    json e;
    e["trial"] = r.trial;
    e["method"] = r.method;
    e["bag"] = r.bag;
    e["error"] = r.error;  // non-finite values serialize as null
    e["seed"] = r.seed;
    trials.push_back(e);
  }
  j["trials"] = trials;
  j["any_failure"] = res.any_failure;

  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << j.dump(2) << "\n";
}

void write_summary_csv(const std::string& path, const RunResult& res) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << "method,mean_error,mean_rel,improvement_pct,failures";
  for (int k : res.targets) out << ",bag_" << k;
  out << "\n";
  out.precision(12);
  for (const MethodSummary& s : res.summary) {
    out << s.id << "," << s.mean_error << "," << s.mean_rel << ","
        << s.improvement_pct << "," << s.failures;
    for (double v : s.per_bag) out << "," << v;
    out << "\n";
  }
}

void write_plot_csv(const std::string& path, const ExperimentConfig& cfg,
                    const RunResult& res) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  out.precision(12);
  out << "x,y,series\n";
  if (cfg.scenario == Scenario::excess_risk_vs_dim) {
    for (const SweepPoint& p : res.sweep)
      out << p.dim << "," << p.excess << ",delta=" << p.delta << "\n";
    return;
  }
  for (const MethodSummary& s : res.summary)
    for (size_t slot = 0; slot < s.per_bag.size(); ++slot)
      out << res.targets[slot] << "," << s.per_bag[slot] << "," << s.id << "\n";
}

}  // namespace multimean
