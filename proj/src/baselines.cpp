#include "multimean/baselines.hpp"

#include <Eigen/LU>
#include <cmath>

namespace multimean {

double js_plus_factor(const Eigen::VectorXd& mean, const Eigen::VectorXd& center,
                      double coordinate_var, int dim) {
  if (dim < 3) throw InvalidDimension("positive-part shrinkage needs dim >= 3");
  const double dist2 = (mean - center).squaredNorm();
  if (!(dist2 > 0.0)) return 0.0;  // already at the shrinkage target
  const double f = 1.0 - coordinate_var * (dim - 2) / dist2;
  return f > 0.0 ? f : 0.0;
}

Eigen::MatrixXd james_stein_weights(const DatasetStats& stats, const Dataset& data,
                                    bool toward_grand_mean) {
  if (data.mode != Mode::vector)
    throw InvalidArgument("james-stein shrinkage is a vector-mode method");
  const int nb = data.size();
  const int d = data.dim();
  if (d < 3) throw InvalidDimension("positive-part shrinkage needs dim >= 3");

  const Eigen::VectorXd grand = stats.means.rowwise().mean();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(nb, nb);
  for (int k = 0; k < nb; ++k) {
    const Eigen::VectorXd& center = toward_grand_mean ? grand : zero;
    const double f =
        js_plus_factor(stats.means.col(k), center, stats.task[k].s2_hat / d, d);
    w(k, k) = f;
    if (toward_grand_mean) w.row(k).array() += (1.0 - f) / nb;
  }
  return w;
}

RkmseResult r_kmse(const GramTable& table, int a) {
  const int n = table.data().bags[a].size();
  if (n < 2) throw InsufficientSamples("shrinkage tuning needs two samples");
  const double varrho = table.diag(a) / n;
  const double rho = table.full(a, a) / (static_cast<double>(n) * n);
  const double denom = (1.0 / n - 1.0) * varrho + (n - 1.0) * rho;
  RkmseResult out;
  if (denom <= 0.0) {  // degenerate regulariser path, keep the naive mean
    out.lambda = 0.0;
    out.own_weight = 1.0;
    return out;
  }
  out.lambda = (varrho - rho) / denom;
  out.own_weight = 1.0 / (1.0 + out.lambda);
  if (out.own_weight > 1.0) out.own_weight = 1.0;
  if (out.own_weight < 0.0) out.own_weight = 0.0;
  return out;
}

Eigen::MatrixXd r_kmse_weights(const Dataset& data) {
  const KernelSpec spec =
      data.mode == Mode::kernel ? resolve_kernel(data) : KernelSpec::linear();
  GramTable table(data, spec);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(data.size(), data.size());
  for (int k = 0; k < data.size(); ++k) w(k, k) = r_kmse(table, k).own_weight;
  return w;
}

Eigen::MatrixXd mta_const_weights(const DatasetStats& stats, const Dataset& data,
                                  const MtaParams& p) {
  const int nb = data.size();
  if (nb < 2) throw InvalidBag("multi-task averaging needs two bags");

  /* constant similarity: tasks count as alike in proportion to how tightly
     their naive means cluster, so the coupling is 2 over the mean pairwise
     squared distance; plug-in inner products serve both modes */
  double d2 = 0.0;
  for (int k = 0; k < nb; ++k)
    for (int l = 0; l < nb; ++l) {
      if (k == l) continue;
      d2 += stats.mean_ip(k, k) + stats.mean_ip(l, l) - 2.0 * stats.mean_ip(k, l);
    }
  d2 /= static_cast<double>(nb) * (nb - 1);
  if (!(d2 > 0.0)) {
    /* indistinguishable means: the coupling limit pools everything */
    return Eigen::MatrixXd::Constant(nb, nb, 1.0 / nb);
  }
  const double a = 2.0 / d2;

  Eigen::VectorXd s2(nb);
  for (int k = 0; k < nb; ++k) s2[k] = stats.task[k].s2_hat;

  /* Laplacian of the constant-similarity graph a * ones */
  Eigen::MatrixXd lap = -a * Eigen::MatrixXd::Ones(nb, nb);
  lap.diagonal().array() += nb * a;

  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(nb, nb);
  system += (p.gamma / nb) * s2.asDiagonal() * lap;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) throw SolveFailure("similarity system is singular");
  Eigen::MatrixXd w = lu.inverse();

  for (int k = 0; k < nb; ++k) {
    for (int l = 0; l < nb; ++l)
      if (w(k, l) < 0.0) w(k, l) = 0.0;
    const double sum = w.row(k).sum();
    if (!(sum > 0.0)) throw SolveFailure("similarity inverse left an empty weight row");
    w.row(k) /= sum;
  }
  return w;
}

}  // namespace multimean
