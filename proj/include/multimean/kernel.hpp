#pragma once

#include <map>
#include <utility>

#include "multimean/model.hpp"

namespace multimean {

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/* full kernel block K[i][j] = k(A_i, B_j); used transiently, never stored long term */
Eigen::MatrixXd gram_block(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const KernelSpec& spec);

/* avg_feature_std rule: mean over features of the per-feature std pooled across
   every sample in the dataset; falls back to 1 when the pooled spread is zero */
double resolve_width(const Dataset& data);
KernelSpec resolve_kernel(const Dataset& data);

/* cached kernel sums between bag pairs.  Scalars only: full cross sum, diagonal
   sum, off-diagonal sum.  Vector mode short-circuits through sample sums so no
   N x N block is ever formed. */
class GramTable {
 public:
  GramTable(const Dataset& data, KernelSpec spec);

  double full(int a, int b) const;     // sum_ij k(x_i^a, x_j^b)
  double diag(int a) const;            // sum_i k(x_i^a, x_i^a)
  double offdiag(int a) const;         // full(a,a) - diag(a)
  double offdiag_sq(int a) const;      // sum_{i != j} k(x_i^a, x_j^a)^2
  Eigen::VectorXd diag_vec(int a) const;  // k(x_i^a, x_i^a) per sample
  Eigen::VectorXd row_sums(int a) const;  // within-bag row sums of the Gram block

  /* mean inner products of bag means: full(a,b) / (N_a N_b) */
  double mean_ip(int a, int b) const;

  const KernelSpec& spec() const { return spec_; }
  const Dataset& data() const { return *data_; }

 private:
  const Dataset* data_;
  KernelSpec spec_;
  bool linear_fast_ = false;
  Eigen::MatrixXd sample_sums_;            // d x B column per bag (linear path)
  mutable std::map<std::pair<int, int>, double> full_;
  mutable std::map<int, double> diag_;
  mutable std::map<int, double> offdiag_sq_;
  mutable std::map<int, Eigen::VectorXd> diag_vec_;
  mutable std::map<int, Eigen::VectorXd> row_sums_;

  void materialize_pair(int a, int b) const;
  void materialize_self(int a) const;
};

/* unbiased squared MMD between two bags; U(a,a) = -2 * s2_hat_a by construction */
double mmd2_unbiased(const GramTable& table, int a, int b);

/* exact O(N^2) unbiased estimate of (Tr S^2) for one bag via the within-bag Gram
   block; needs N >= 4 */
double tr_sigma2_exact(const GramTable& table, int a);

/* subsampled estimate: the paired term is exact, the two 3- and 4-index terms
   are averaged over r draws of distinct index tuples; clamped at zero */
double tr_sigma2_subsampled(const GramTable& table, int a, int reps, Rng& rng);

/* squared distance in feature space between the w-aggregate built on estimation
   bags Z and the proxy mean of holdout bag Y_k, up to the constant ||mu_k||^2
   replaced by the unbiased within-Y proxy */
double kernel_error_metric(const Dataset& est, const Dataset& holdout,
                           const WeightVector& w, int k, const KernelSpec& spec);

}  // namespace multimean
