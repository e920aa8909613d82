#include "multimean/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace multimean {

double b_oracle(double tau, double nu) {
  if (tau < 0.0) throw InvalidArgument("separation level must be nonnegative");
  if (nu < 0.0 || nu > 1.0) throw InvalidArgument("relative pooled risk must lie in [0,1]");
  return tau / (1.0 + tau) + nu / ((1.0 + tau) * (1.0 + tau * (1.0 - nu)));
}

namespace {

void check_members(const std::vector<double>& s2, const std::vector<int>& members) {
  if (members.empty()) throw InvalidArgument("member set is empty");
  for (int k : members) {
    if (k < 0 || k >= static_cast<int>(s2.size()))
      throw InvalidArgument("member index out of range");
    if (!(s2[k] > 0.0)) throw InvalidArgument("member risks must be positive");
  }
}

}  // namespace

double pooled_risk(const std::vector<double>& s2, const std::vector<int>& members) {
  check_members(s2, members);
  double inv = 0.0;
  for (int k : members) inv += 1.0 / s2[k];
  return 1.0 / inv;
}

double nu_relative(const std::vector<double>& s2, const std::vector<int>& members,
                   int target) {
  if (std::find(members.begin(), members.end(), target) == members.end())
    throw InvalidArgument("target must belong to the member set");
  // the pooled risk cannot exceed any member's own risk; stop rounding noise
  // from pushing the ratio past 1
  return std::min(1.0, pooled_risk(s2, members) / s2[target]);
}

Eigen::VectorXd ideal_weights(const std::vector<double>& s2, const std::vector<int>& members,
                              int target, double tau, double gamma, int n_bags) {
  const double pool = pooled_risk(s2, members);
  const double nu = nu_relative(s2, members, target);
  const double lambda = 1.0 / (1.0 + gamma * tau * (1.0 - nu));
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n_bags);
  for (int k : members) w[k] = lambda * pool / s2[k];
  w[target] += 1.0 - lambda;
  return w;
}

double risk_proxy(const std::vector<double>& s2, const std::vector<int>& members,
                  int target, double tau, const Eigen::VectorXd& w) {
  check_members(s2, members);
  const double off = 1.0 - w[target];
  double val = tau * s2[target] * off * off;
  for (int k : members) val += w[k] * w[k] * s2[k];
  return val;
}

namespace {

void check_partition(const Partition& part, int n) {
  if (part.groups.size() != part.zeta2.size())
    throw InvalidArgument("separation scales must match the group count");
  std::vector<char> seen(n, 0);
  for (size_t j = 0; j < part.groups.size(); ++j) {
    if (part.groups[j].empty()) throw InvalidArgument("empty group");
    if (part.zeta2[j] < 0.0) throw InvalidArgument("separation scale must be nonnegative");
    for (int k : part.groups[j]) {
      if (k < 0 || k >= n || seen[k]) throw InvalidArgument("groups must partition the bags");
      seen[k] = 1;
    }
  }
  for (int k = 0; k < n; ++k)
    if (!seen[k]) throw InvalidArgument("groups must cover every bag");
}

}  // namespace

double l_star(const Partition& part, const std::vector<double>& s2) {
  const int n = static_cast<int>(s2.size());
  check_partition(part, n);
  double total = 0.0;
  for (size_t j = 0; j < part.groups.size(); ++j) {
    const double pool = pooled_risk(s2, part.groups[j]);
    for (int k : part.groups[j])
      total += b_oracle(part.zeta2[j] / s2[k], std::min(1.0, pool / s2[k]));
  }
  return total / n;
}

LStarBounds l_star_bounds(const Partition& part, const std::vector<double>& s2) {
  const int n = static_cast<int>(s2.size());
  check_partition(part, n);
  LStarBounds out;
  out.exact = l_star(part, s2);

  double tau_star = 0.0;
  double per_group = 0.0;
  for (size_t j = 0; j < part.groups.size(); ++j) {
    const int size = static_cast<int>(part.groups[j].size());
    const double mean_pool = size * pooled_risk(s2, part.groups[j]);  // harmonic mean
    const double tau_bar = part.zeta2[j] / mean_pool;
    const double frac = static_cast<double>(size) / n;
    per_group += frac * (tau_bar + 1.0 / size) / (tau_bar + 1.0);
    tau_star += frac * tau_bar;
  }
  out.per_group = per_group;
  out.global = std::min(
      1.0, tau_star / (1.0 + tau_star) + static_cast<double>(part.groups.size()) / n);
  return out;
}

}  // namespace multimean
