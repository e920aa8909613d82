#pragma once

#include <functional>

#include "multimean/neighbor.hpp"

namespace multimean {

struct QaggParams {
  double c_q = 1.4;
  double c_1 = 1.0;
  double c_2 = 4.0;
  double c_bs = 0.0;     // bounded-sample pressure term, off unless enabled
  double bs_bound = 1.0;  // norm bound M scaling the c_bs term
  double eta0 = 50.0;     // step scale; eta_t = eta0 / (1 + t / B)
  int t_max = 500;
  double stop_tol = 1e-8;  // on ||w_next - w||^2
};

/* everything the objective needs, precomputed once per target */
struct QaggInputs {
  Eigen::MatrixXd lambda_hat;  // B x B, centered mean inner products
  Eigen::VectorXd s2_hat;      // per-bag risk estimates
  Eigen::VectorXd q_hat;       // directional variance toward each bag mean
  Eigen::VectorXd theta;       // z2_l / N_l penalties
  int target = 0;
  int n_target = 0;
};

/* lambda_hat[l][l'] = <m_l - m_k, m_l' - m_k> from unbiased mean inner products;
   q_hat from the estimation samples of the target bag */
QaggInputs build_inputs(const Dataset& data, const DatasetStats& stats, int target);

double objective(const QaggInputs& in, const QaggParams& p, const Eigen::VectorXd& w);
Eigen::VectorXd gradient(const QaggInputs& in, const QaggParams& p,
                         const Eigen::VectorXd& w);

/* exponentiated gradient descent on the simplex; optional restriction to a
   neighbor set (non-members pinned at zero) and an iterate observer */
WeightVector solve_egd(const QaggInputs& in, const QaggParams& p,
                       const NeighborSet* restrict = nullptr,
                       const std::function<void(const Eigen::VectorXd&)>& observer = {});

}  // namespace multimean
