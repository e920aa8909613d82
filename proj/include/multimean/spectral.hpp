#pragma once

#include <optional>
#include <vector>

#include "multimean/kernel.hpp"
#include "multimean/model.hpp"

namespace multimean {

/* unbiased estimate of Tr S / N for one bag: mean squared distance to the bag
   mean, corrected for the mean's own noise.  Needs N >= 2. */
double s2_hat(const Bag& bag);
double s2_hat(const GramTable& table, int a);

/* z1 = N * s2_hat, the unbiased Tr S estimate */
double z1_trace(const Bag& bag);

/* unbiased estimate of (Tr S^2) before the sqrt; may be negative at small N.
   Vector mode runs through the centered Gram trick, kernel mode through the
   exact pair/triple/quadruple decomposition or the subsampler. */
double z2_squared(const Bag& bag);
double z2_squared(const GramTable& table, int a, int exact_cutoff, int reps, Rng& rng);

/* z2 = sqrt(max(z2_squared, 0)); the Schatten-2 plug-in */
double z2_schatten(const Bag& bag);

/* unbiased squared distance between two bag means:
   ||mu_a - mu_b||^2 estimated by ||m_a - m_b||^2 - s2_a - s2_b.
   u_distance(a, a) = -2 * s2_hat_a. */
double u_distance(const Bag& a, const Bag& b);
double u_distance(const GramTable& table, int a, int b);

struct StatsOptions {
  int tr_sigma2_reps = 100;  // subsampler draws in kernel mode
  int exact_cutoff = 30;     // bags at or below this size use the exact estimate
  bool with_de = false;      // also estimate Tr S / opnorm (vector mode)
};

struct DatasetStats {
  std::vector<TaskStats> task;
  Eigen::MatrixXd u;         // pairwise u_distance, B x B
  Eigen::MatrixXd mean_ip;   // <mu_a, mu_b> estimates, B x B
  Eigen::MatrixXd means;     // d x B naive means (vector mode only)
};

DatasetStats compute_stats(const Dataset& data, const StatsOptions& opts = {},
                           Rng* rng = nullptr);

/* median-of-blocks wrapper around a scalar bag statistic: split rows into b
   contiguous blocks (after an optional shuffle), evaluate per block, return the
   lower median */
struct MobConfig {
  int blocks = 1;
  bool shuffle = true;
  unsigned long long seed = 0;
};

double mob_wrap(const Bag& bag, const MobConfig& cfg, double (*stat)(const Bag&));

}  // namespace multimean
