#pragma once

#include "multimean/spectral.hpp"

namespace multimean {

/* positive-part James-Stein factor toward a fixed center t:
   (1 - var * (d - 2) / ||m - t||^2)_+ clipped to [0, 1]; var = s2_hat / d.
   Needs d >= 3. */
double js_plus_factor(const Eigen::VectorXd& mean, const Eigen::VectorXd& center,
                      double coordinate_var, int dim);

/* shrink each naive mean toward zero (js0) or the grand mean of all naive
   means (jsgm); the result is a weight row per bag */
Eigen::MatrixXd james_stein_weights(const DatasetStats& stats, const Dataset& data,
                                    bool toward_grand_mean);

/* regularized kernel mean shrinkage: lambda from the within-bag Gram sums,
   own weight (1 - lambda / (1 + lambda)), off-bag mass discarded */
struct RkmseResult {
  double lambda = 0.0;
  double own_weight = 1.0;
};
RkmseResult r_kmse(const GramTable& table, int a);
Eigen::MatrixXd r_kmse_weights(const Dataset& data);

/* constant-similarity multi-task averaging: W = (I + (gamma / B) S2 L)^{-1},
   L the Laplacian of the constant graph a * ones, a the mean pairwise squared
   distance between bag means; rows clamped at zero and renormalized */
struct MtaParams {
  double gamma = 1.0;
};
Eigen::MatrixXd mta_const_weights(const DatasetStats& stats, const Dataset& data,
                                  const MtaParams& p);

}  // namespace multimean
