#include "multimean/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

namespace multimean {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

/* centered sample matrix; subtracting the bag mean first keeps every moment
   estimate invariant under translation of the raw data */
Eigen::MatrixXd centered(const Bag& bag) {
  Eigen::MatrixXd c = bag.samples;
  c.rowwise() -= bag.samples.colwise().mean();
  return c;
}

}  // namespace

double s2_hat(const Bag& bag) {
  const int n = bag.size();
  if (n < 2) throw InsufficientSamples("s2 estimate needs two samples");
  return centered(bag).squaredNorm() / (static_cast<double>(n) * (n - 1));
}

double s2_hat(const GramTable& table, int a) {
  const int n = table.data().bags[a].size();
  if (n < 2) throw InsufficientSamples("s2 estimate needs two samples");
  return (table.diag(a) - table.full(a, a) / n) / (static_cast<double>(n) * (n - 1));
}

double z1_trace(const Bag& bag) { return bag.size() * s2_hat(bag); }

/* unbiased Tr S^2 from the centered Gram matrix G = C C^T:
   Tr Shat^2 = ||G||_F^2 / (N-1)^2,  sum_i ||c_i||^4 = sum_i G_ii^2,
   Tr Shat = Tr G / (N-1); the three are recombined with the finite-sample
   coefficients that cancel the plug-in bias exactly */
double z2_squared(const Bag& bag) {
  const int n = bag.size();
  if (n < 4) throw InsufficientSamples("Tr S^2 estimate needs four samples");
  const Eigen::MatrixXd c = centered(bag);
  const double nn = n;
  double frob2;  // ||C C^T||_F^2 via the smaller Gram side
  if (c.cols() < c.rows())
    frob2 = (c.transpose() * c).squaredNorm();
  else
    frob2 = (c * c.transpose()).squaredNorm();
  const double tr_hat = c.squaredNorm() / (nn - 1);
  const double tr2_hat = frob2 / ((nn - 1) * (nn - 1));
  const double quart = c.rowwise().squaredNorm().squaredNorm();
  return (nn - 1) * (nn - 1) / (nn * (nn - 3)) * tr2_hat -
         quart / ((nn - 2) * (nn - 3)) +
         (nn - 1) / (nn * (nn - 2) * (nn - 3)) * tr_hat * tr_hat;
}

double z2_squared(const GramTable& table, int a, int exact_cutoff, int reps, Rng& rng) {
  const int n = table.data().bags[a].size();
  if (n <= exact_cutoff) return tr_sigma2_exact(table, a);
  return tr_sigma2_subsampled(table, a, reps, rng);
}

double z2_schatten(const Bag& bag) {
  const double v = z2_squared(bag);
  return std::sqrt(v > 0.0 ? v : 0.0);
}

double u_distance(const Bag& a, const Bag& b) {
  const Eigen::VectorXd diff = naive_mean(a) - naive_mean(b);
  return diff.squaredNorm() - s2_hat(a) - s2_hat(b);
}

double u_distance(const GramTable& table, int a, int b) {
  return mmd2_unbiased(table, a, b);
}

DatasetStats compute_stats(const Dataset& data, const StatsOptions& opts, Rng* rng) {
  const int nb = data.size();
  DatasetStats out;
  out.task.resize(nb);
  out.u.resize(nb, nb);
  out.mean_ip.resize(nb, nb);

  Rng fallback(0x9e3779b97f4a7c15ull);
  Rng& gen = rng ? *rng : fallback;

  if (data.mode == Mode::vector) {
    out.means.resize(data.dim(), nb);
    for (int k = 0; k < nb; ++k) out.means.col(k) = naive_mean(data.bags[k]);
    out.mean_ip = out.means.transpose() * out.means;

    for (int k = 0; k < nb; ++k) {
      TaskStats& t = out.task[k];
      const Bag& bag = data.bags[k];
      t.s2_hat = s2_hat(bag);
      t.z1 = bag.size() * t.s2_hat;
      double z2sq = kNan;
      if (bag.size() >= 4) z2sq = z2_squared(bag);
      t.z2 = std::isnan(z2sq) ? kNan : std::sqrt(z2sq > 0.0 ? z2sq : 0.0);
      t.dstar_hat = (t.z2 > 0.0) ? bag.size() * t.s2_hat / t.z2 : kNan;
      if (opts.with_de && bag.size() >= 2) {
        const Eigen::MatrixXd c = centered(bag);
        const Eigen::MatrixXd cov = c.transpose() * c / (bag.size() - 1.0);
        const double tr = cov.trace();
        if (tr > 0.0) {
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
          const double op = eig.eigenvalues().maxCoeff();
          if (op > 0.0) t.de_hat = tr / op;
        }
      }
    }

    for (int a = 0; a < nb; ++a)
      for (int b = 0; b < nb; ++b) {
        if (a == b) {
          out.u(a, a) = -2.0 * out.task[a].s2_hat;
          continue;
        }
        const double dist2 =
            out.mean_ip(a, a) + out.mean_ip(b, b) - 2.0 * out.mean_ip(a, b);
        out.u(a, b) = dist2 - out.task[a].s2_hat - out.task[b].s2_hat;
      }
    return out;
  }

  GramTable table(data, resolve_kernel(data));
  for (int k = 0; k < nb; ++k) {
    TaskStats& t = out.task[k];
    const int n = data.bags[k].size();
    t.s2_hat = s2_hat(table, k);
    t.z1 = n * t.s2_hat;
    double z2sq = kNan;
    if (n >= 4)
      z2sq = z2_squared(table, k, opts.exact_cutoff, opts.tr_sigma2_reps, gen);
    t.z2 = std::isnan(z2sq) ? kNan : std::sqrt(z2sq > 0.0 ? z2sq : 0.0);
    t.dstar_hat = (t.z2 > 0.0) ? n * t.s2_hat / t.z2 : kNan;
  }
  for (int a = 0; a < nb; ++a)
    for (int b = 0; b < nb; ++b) {
      out.mean_ip(a, b) = table.mean_ip(a, b);
      out.u(a, b) = (a == b) ? -2.0 * out.task[a].s2_hat : mmd2_unbiased(table, a, b);
    }
  return out;
}

double mob_wrap(const Bag& bag, const MobConfig& cfg, double (*stat)(const Bag&)) {
  const int n = bag.size();
  if (cfg.blocks < 1) throw InvalidArgument("block count must be positive");
  if (cfg.blocks > n) throw BlockTooSmall("more blocks than samples");
  if (cfg.blocks == 1 && !cfg.shuffle) return stat(bag);

  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  if (cfg.shuffle) {
    Rng rng(cfg.seed);
    std::shuffle(perm.begin(), perm.end(), rng);
  }

  const int base = n / cfg.blocks;
  const int extra = n % cfg.blocks;  // leading blocks take one more row
  std::vector<double> values;
  values.reserve(cfg.blocks);
  int at = 0;
  for (int j = 0; j < cfg.blocks; ++j) {
    const int size = base + (j < extra ? 1 : 0);
    Bag block;
    block.id = bag.id;
    block.samples.resize(size, bag.dim());
    for (int i = 0; i < size; ++i) block.samples.row(i) = bag.samples.row(perm[at + i]);
    at += size;
    values.push_back(stat(block));
  }
  std::sort(values.begin(), values.end());
  return values[(cfg.blocks - 1) / 2];  // lower median
}

}  // namespace multimean
