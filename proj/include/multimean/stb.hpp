#pragma once

#include "multimean/neighbor.hpp"

namespace multimean {

struct StbParams {
  double tau = 2.2;
  double gamma = 0.2;
};

/* best convex response when the accepted set V is taken at face value:
   target gets (1 - lambda) extra mass, members share lambda proportionally to
   inverse risk, lambda = 1 / (1 + gamma * tau * (1 - nu)) */
WeightVector oracle_weights(const DatasetStats& stats, const NeighborSet& set,
                            double tau, double gamma);

/* flat boost: target gamma + (1 - gamma)/|V|, members (1 - gamma)/|V| */
WeightVector uniform_boost_weights(const NeighborSet& set, int n_bags, double gamma);

/* inverse-regret rule over all bags: w_l propto 1 / (s2_l + gamma * max(U, 0)) */
WeightVector orth_weights(const DatasetStats& stats, int target, double gamma,
                          const NeighborSet* restrict = nullptr);

}  // namespace multimean
