#include "multimean/qagg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace multimean {

namespace {

/* biased witness means m_a(i) = mean_j k(x_i^k, z_j^a) evaluated at the target
   bag's samples; the own-bag column switches to the 1/(N_k - 2) form for
   translation-invariant kernels, which cancels most of the diagonal bias */
Eigen::VectorXd q_hat_kernel(const Dataset& data, const KernelSpec& spec, int k) {
  const Bag& tb = data.bags[k];
  const int nk = tb.size();
  const bool less_biased = spec.translation_invariant() && nk >= 3;
  const double own_denom = less_biased ? nk - 2.0 : static_cast<double>(nk);

  const Eigen::MatrixXd own_block = gram_block(tb.samples, tb.samples, spec);
  const Eigen::VectorXd m_own = own_block.rowwise().sum() / own_denom;
  const double ip_own = own_block.sum() / (nk * own_denom);

  Eigen::VectorXd q = Eigen::VectorXd::Zero(data.size());
  for (int l = 0; l < data.size(); ++l) {
    if (l == k) continue;
    const Eigen::MatrixXd cross = gram_block(tb.samples, data.bags[l].samples, spec);
    const Eigen::VectorXd m_l = cross.rowwise().mean();
    const double ip_l = cross.sum() / (static_cast<double>(nk) * data.bags[l].size());
    const double centered = (m_l - m_own).squaredNorm() / (nk - 1.0);
    const double bias = nk / (nk - 1.0) * (ip_l - ip_own) * (ip_l - ip_own);
    q[l] = std::max(centered - bias, 0.0);
  }
  return q;
}

}  // namespace

QaggInputs build_inputs(const Dataset& data, const DatasetStats& stats, int target) {
  const int nb = data.size();
  if (target < 0 || target >= nb) throw InvalidArgument("target out of range");
  const int nk = data.bags[target].size();
  if (nk < 2) throw InsufficientSamples("aggregation inputs need two target samples");

  QaggInputs in;
  in.target = target;
  in.n_target = nk;
  in.s2_hat.resize(nb);
  in.theta.resize(nb);
  for (int l = 0; l < nb; ++l) {
    in.s2_hat[l] = stats.task[l].s2_hat;
    in.theta[l] = stats.task[l].z2 / data.bags[l].size();
  }

  if (data.mode == Mode::vector) {
    Eigen::MatrixXd diff = stats.means;
    diff.colwise() -= stats.means.col(target);
    in.lambda_hat = diff.transpose() * diff;

    Eigen::MatrixXd centered = data.bags[target].samples;
    centered.rowwise() -= stats.means.col(target).transpose();
    const Eigen::MatrixXd proj = centered * diff;  // N_k x B
    in.q_hat = proj.colwise().squaredNorm().transpose() / (nk - 1.0);
  } else {
    const Eigen::MatrixXd& m = stats.mean_ip;
    in.lambda_hat.resize(nb, nb);
    for (int l = 0; l < nb; ++l)
      for (int lp = 0; lp < nb; ++lp)
        in.lambda_hat(l, lp) = (l == target || lp == target)
                                   ? 0.0
                                   : m(l, lp) - m(l, target) - m(target, lp) +
                                         m(target, target);
    in.q_hat = q_hat_kernel(data, resolve_kernel(data), target);
  }
  return in;
}

double objective(const QaggInputs& in, const QaggParams& p, const Eigen::VectorXd& w) {
  const int nb = static_cast<int>(w.size());
  double val = w.dot(in.lambda_hat * w) + in.s2_hat[in.target] * (2.0 * w[in.target] - 1.0);
  if (p.c_q != 0.0)
    for (int l = 0; l < nb; ++l)
      val += p.c_q * w[l] * std::sqrt(in.q_hat[l] / in.n_target);
  if (p.c_1 != 0.0) val += p.c_1 * w.dot(in.theta);
  if (p.c_2 != 0.0) val += p.c_2 * w.cwiseProduct(w).dot(in.theta);
  if (p.c_bs != 0.0) {
    const double scale = p.c_bs * p.bs_bound / in.n_target;
    for (int l = 0; l < nb; ++l)
      val += scale * w[l] * std::sqrt(std::max(in.lambda_hat(l, l), 0.0));
  }
  return val;
}

Eigen::VectorXd gradient(const QaggInputs& in, const QaggParams& p,
                         const Eigen::VectorXd& w) {
  const int nb = static_cast<int>(w.size());
  Eigen::VectorXd g = 2.0 * (in.lambda_hat * w);
  g[in.target] += 2.0 * in.s2_hat[in.target];
  if (p.c_q != 0.0)
    for (int l = 0; l < nb; ++l) g[l] += p.c_q * std::sqrt(in.q_hat[l] / in.n_target);
  if (p.c_1 != 0.0) g += p.c_1 * in.theta;
  if (p.c_2 != 0.0) g += 2.0 * p.c_2 * in.theta.cwiseProduct(w);
  if (p.c_bs != 0.0) {
    const double scale = p.c_bs * p.bs_bound / in.n_target;
    for (int l = 0; l < nb; ++l)
      g[l] += scale * std::sqrt(std::max(in.lambda_hat(l, l), 0.0));
  }
  return g;
}

WeightVector solve_egd(const QaggInputs& in, const QaggParams& p,
                       const NeighborSet* restrict,
                       const std::function<void(const Eigen::VectorXd&)>& observer) {
  const int nb = static_cast<int>(in.s2_hat.size());
  if (!in.lambda_hat.allFinite())
    throw DegenerateCovariance("mean gram matrix has non-finite entries");
  if (!std::isfinite(in.s2_hat[in.target]))
    throw DegenerateCovariance("target risk estimate not finite");
  if (p.c_q != 0.0 && !in.q_hat.allFinite())
    throw DegenerateSpectrum("directional variance estimate not finite");

  std::vector<int> free;
  for (int l = 0; l < nb; ++l)
    if (!restrict || restrict->in_set[l]) free.push_back(l);
  if ((p.c_1 != 0.0 || p.c_2 != 0.0))
    for (int l : free)
      if (!std::isfinite(in.theta[l]))
        throw DegenerateSpectrum("Schatten-2 penalty not finite for a candidate bag");

  Eigen::VectorXd w = Eigen::VectorXd::Zero(nb);
  for (int l : free) w[l] = 1.0 / free.size();
  if (observer) observer(w);

  /* the gradient carries the data's squared scale and the quadratic term its
     curvature, so the step is taken in curvature units; otherwise one rate
     cannot serve both toy fixtures and d/N in the hundreds */
  double curv = 0.0;
  if (free.size() > 1) {
    Eigen::MatrixXd sub(free.size(), free.size());
    for (size_t a = 0; a < free.size(); ++a)
      for (size_t b = 0; b < free.size(); ++b)
        sub(a, b) = in.lambda_hat(free[a], free[b]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sub, Eigen::EigenvaluesOnly);
    curv = std::max(eig.eigenvalues().maxCoeff(), 0.0);
  }
  const double scale = curv + std::max(in.s2_hat[in.target], 0.0) > 0.0
                           ? curv + std::max(in.s2_hat[in.target], 0.0)
                           : 1.0;

  for (int t = 1; t <= p.t_max; ++t) {
    const Eigen::VectorXd g = gradient(in, p, w);
    const double eta = p.eta0 / (1.0 + static_cast<double>(t) / nb) / scale;
    /* shift exponents so the largest is zero: the common factor cancels in
       the renormalization and exp stays in range */
    double top = -std::numeric_limits<double>::infinity();
    for (int l : free) top = std::max(top, -eta * g[l]);
    Eigen::VectorXd next = Eigen::VectorXd::Zero(nb);
    double sum = 0.0;
    for (int l : free) {
      const double arg = std::clamp(-eta * g[l] - top, -50.0, 50.0);
      next[l] = w[l] * std::exp(arg);
      sum += next[l];
    }
    if (!(sum > 0.0) || !std::isfinite(sum)) break;  // keep the last good iterate
    next /= sum;
    const double step2 = (next - w).squaredNorm();
    w = next;
    if (observer) observer(w);
    if (step2 <= p.stop_tol) break;
  }
  WeightVector out;
  out.w = w;
  out.target = in.target;
  return out;
}

}  // namespace multimean
