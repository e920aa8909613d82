#include "multimean/neighbor.hpp"

#include <cmath>

namespace multimean {

std::vector<int> whittle(const DatasetStats& stats, const Dataset& data, int target,
                         double varsigma) {
  if (target < 0 || target >= data.size()) throw InvalidArgument("target out of range");
  const double own = stats.task[target].z2 / data.bags[target].size();
  if (!std::isfinite(own) || own <= 0.0)
    throw DegenerateSpectrum("target bag has no usable Schatten-2 estimate");
  std::vector<int> keep;
  for (int k = 0; k < data.size(); ++k) {
    if (k == target) {
      keep.push_back(k);
      continue;
    }
    const double ratio = stats.task[k].z2 / data.bags[k].size();
    if (std::isfinite(ratio) && ratio <= varsigma * own) keep.push_back(k);
  }
  return keep;
}

double tau_min_value(double sqrt_dstar_target, double sqrt_dstar_other, double s2_ratio,
                     double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0,1)");
  if (!(sqrt_dstar_target > 0.0) || !(sqrt_dstar_other > 0.0))
    throw DegenerateSpectrum("tau_min needs positive sqrt(d*) proxies");
  return 32.0 * (1.0 / sqrt_dstar_target + s2_ratio / sqrt_dstar_other) *
         std::log(8.0 / alpha);
}

double tau_min_pair(const DatasetStats& stats, int target, int other, double alpha) {
  const TaskStats& t = stats.task[target];
  const TaskStats& o = stats.task[other];
  return tau_min_value(t.dstar_hat, o.dstar_hat, o.s2_hat / t.s2_hat, alpha);
}

double tau_plus(double tau, double tau_min) {
  const double root = std::sqrt(tau) + std::sqrt(tau_min);
  return root * root;
}

double tau_minus(double tau, double tau_min) {
  const double root = std::sqrt(tau) - std::sqrt(tau_min);
  return root > 0.0 ? root * root : 0.0;
}

double tau_tilde(const DatasetStats& stats, int target, int n_candidates, double tau,
                 double alpha, double varsigma) {
  if (n_candidates < 1) throw InvalidArgument("needs at least one candidate");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0,1)");
  const double sqrt_dstar = stats.task[target].dstar_hat;
  if (!std::isfinite(sqrt_dstar) || sqrt_dstar <= 0.0)
    throw DegenerateSpectrum("target bag has no usable sqrt(d*) estimate");
  const double floor = 64.0 * std::log(8.0 * n_candidates / alpha) / sqrt_dstar;
  const double root = std::sqrt(tau) + std::sqrt(6.0 * varsigma * floor);
  return (1.0 + 1.0 / (30.0 * sqrt_dstar)) * root * root;
}

NeighborSet similarity_test(const DatasetStats& stats, const Dataset& data, int target,
                            const TestConfig& cfg) {
  if (target < 0 || target >= data.size()) throw InvalidArgument("target out of range");
  NeighborSet set;
  set.target = target;
  set.in_set.assign(data.size(), 0);

  std::vector<int> candidates;
  double threshold = cfg.tau;
  if (cfg.mode == TestMode::corrected) {
    candidates = whittle(stats, data, target, cfg.varsigma);
    threshold = tau_tilde(stats, target, static_cast<int>(candidates.size()), cfg.tau,
                          cfg.alpha, cfg.varsigma);
  } else {
    for (int k = 0; k < data.size(); ++k) candidates.push_back(k);
  }
  set.threshold = threshold;

  const double s2t = stats.task[target].s2_hat;
  for (int k : candidates) {
    if (k == target) continue;
    const double u = stats.u(target, k);
    if (std::isfinite(u) && u <= threshold * s2t) set.in_set[k] = 1;
  }
  set.in_set[target] = 1;  // the target never tests itself out
  for (int k = 0; k < data.size(); ++k)
    if (set.in_set[k]) set.members.push_back(k);
  return set;
}

}  // namespace multimean
