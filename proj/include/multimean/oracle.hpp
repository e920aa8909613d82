#pragma once

#include <vector>

#include "multimean/common.hpp"

namespace multimean {

/* risk ratio of the best convex aggregate in the two-parameter world:
   tau the squared separation over the target risk, nu the pooled-to-target
   risk ratio.  B(0, nu) = nu, B(tau, 0) = tau / (1 + tau), B(tau, 1) = 1. */
double b_oracle(double tau, double nu);

/* s2(U) = harmonic pool of member risks; nu(U) = s2(U) / s2_target */
double pooled_risk(const std::vector<double>& s2, const std::vector<int>& members);
double nu_relative(const std::vector<double>& s2, const std::vector<int>& members,
                   int target);

/* ideal weights for a known neighbor set V (target included):
   w_target = (1 - lambda) + lambda * s2(V) / s2_target, others lambda * s2(V) / s2_k,
   lambda = 1 / (1 + gamma * tau * (1 - nu)) */
Eigen::VectorXd ideal_weights(const std::vector<double>& s2, const std::vector<int>& members,
                              int target, double tau, double gamma, int n_bags);

/* quadratic risk proxy the ideal weights minimize:
   J(w) = tau * s2_1 * (1 - w_1)^2 + sum_{k in V} w_k^2 s2_k; its minimum equals
   s2_1 * B(tau, nu) */
double risk_proxy(const std::vector<double>& s2, const std::vector<int>& members,
                  int target, double tau, const Eigen::VectorXd& w);

/* ground-truth cluster structure: bags partitioned into groups with a common
   mean separation scale zeta_j per group */
struct Partition {
  std::vector<std::vector<int>> groups;
  std::vector<double> zeta2;  // squared separation scale per group
};

/* average oracle risk ratio over all bags given the partition */
double l_star(const Partition& part, const std::vector<double>& s2);

struct LStarBounds {
  double exact = 0.0;
  double per_group = 0.0;  // sum_j (|C_j| / B)(tau_j + 1/|C_j|) / (tau_j + 1)
  double global = 0.0;     // min(1, tau* / (1 + tau*) + J / B)
};

LStarBounds l_star_bounds(const Partition& part, const std::vector<double>& s2);

}  // namespace multimean
