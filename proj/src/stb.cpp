#include "multimean/stb.hpp"

#include <cmath>

namespace multimean {

WeightVector oracle_weights(const DatasetStats& stats, const NeighborSet& set,
                            double tau, double gamma) {
  const int nb = static_cast<int>(stats.task.size());
  double inv_sum = 0.0;
  for (int k : set.members) {
    const double s2 = stats.task[k].s2_hat;
    if (!(s2 > 0.0)) throw DegenerateCovariance("member risk estimate not positive");
    inv_sum += 1.0 / s2;
  }
  const double s2_pool = 1.0 / inv_sum;
  const double s2_t = stats.task[set.target].s2_hat;
  const double nu = s2_pool / s2_t;
  const double lambda = 1.0 / (1.0 + gamma * tau * (1.0 - nu));

  WeightVector out;
  out.target = set.target;
  out.w = Eigen::VectorXd::Zero(nb);
  for (int k : set.members) out.w[k] = lambda * s2_pool / stats.task[k].s2_hat;
  out.w[set.target] += 1.0 - lambda;
  return out;
}

WeightVector uniform_boost_weights(const NeighborSet& set, int n_bags, double gamma) {
  if (gamma < 0.0 || gamma > 1.0) throw InvalidArgument("boost weight needs gamma in [0,1]");
  WeightVector out;
  out.target = set.target;
  out.w = Eigen::VectorXd::Zero(n_bags);
  const double share = (1.0 - gamma) / set.members.size();
  for (int k : set.members) out.w[k] = share;
  out.w[set.target] += gamma;
  return out;
}

WeightVector orth_weights(const DatasetStats& stats, int target, double gamma,
                          const NeighborSet* restrict) {
  const int nb = static_cast<int>(stats.task.size());
  WeightVector out;
  out.target = target;
  out.w = Eigen::VectorXd::Zero(nb);
  double total = 0.0;
  for (int k = 0; k < nb; ++k) {
    if (restrict && !restrict->in_set[k]) continue;
    const double s2 = stats.task[k].s2_hat;
    const double u = stats.u(target, k);
    if (!(s2 > 0.0) || !std::isfinite(u)) continue;
    const double denom = s2 + gamma * (u > 0.0 ? u : 0.0);
    if (!(denom > 0.0)) continue;
    out.w[k] = 1.0 / denom;
    total += out.w[k];
  }
  if (!(total > 0.0)) throw DegenerateCovariance("no usable bag for inverse-regret weights");
  out.w /= total;
  return out;
}

}  // namespace multimean
