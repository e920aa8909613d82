#include "multimean/kernel.hpp"

#include <cmath>

namespace multimean {

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw DimensionMismatch("kernel arguments differ in dim");
  if (spec.kind == KernelSpec::Kind::linear) return x.dot(y);
  const double d2 = (x - y).squaredNorm();
  return std::exp(-d2 / (2.0 * spec.width * spec.width));
}

Eigen::MatrixXd gram_block(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const KernelSpec& spec) {
  if (a.cols() != b.cols()) throw DimensionMismatch("gram block dims differ");
  if (spec.kind == KernelSpec::Kind::linear) return a * b.transpose();
  Eigen::MatrixXd d2 = -2.0 * (a * b.transpose());
  d2.colwise() += a.rowwise().squaredNorm();
  d2.rowwise() += b.rowwise().squaredNorm().transpose();
  d2 = d2.cwiseMax(0.0);  // GEMM round-off can dip below zero
  return (-d2 / (2.0 * spec.width * spec.width)).array().exp();
}

double resolve_width(const Dataset& data) {
  int total = 0;
  for (const Bag& b : data.bags) total += b.size();
  if (total < 2) return 1.0;
  const int d = data.dim();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(d);
  for (const Bag& b : data.bags) {
    sum += b.samples.colwise().sum().transpose();
    sumsq += b.samples.array().square().colwise().sum().transpose().matrix();
  }
  const Eigen::VectorXd mean = sum / total;
  const Eigen::VectorXd var =
      (sumsq - total * mean.cwiseProduct(mean)).cwiseMax(0.0) / (total - 1);
  const double width = var.cwiseSqrt().mean();
  return width > 0.0 ? width : 1.0;
}

KernelSpec resolve_kernel(const Dataset& data) {
  if (!data.kernel) throw InvalidArgument("dataset carries no kernel");
  KernelSpec spec = *data.kernel;
  if (spec.width_rule == KernelSpec::WidthRule::avg_feature_std) {
    spec.width = resolve_width(data);
    spec.width_rule = KernelSpec::WidthRule::fixed;
  }
  return spec;
}

GramTable::GramTable(const Dataset& data, KernelSpec spec) : data_(&data), spec_(spec) {
  if (spec_.width_rule == KernelSpec::WidthRule::avg_feature_std) {
    spec_.width = resolve_width(data);
    spec_.width_rule = KernelSpec::WidthRule::fixed;
  }
  if (spec_.kind == KernelSpec::Kind::linear) {
    linear_fast_ = true;
    sample_sums_.resize(data.dim(), data.size());
    for (int k = 0; k < data.size(); ++k)
      sample_sums_.col(k) = data.bags[k].samples.colwise().sum().transpose();
  }
}

void GramTable::materialize_pair(int a, int b) const {
  const Eigen::MatrixXd block =
      gram_block(data_->bags[a].samples, data_->bags[b].samples, spec_);
  full_[{a, b}] = block.sum();
}

void GramTable::materialize_self(int a) const {
  const Eigen::MatrixXd block =
      gram_block(data_->bags[a].samples, data_->bags[a].samples, spec_);
  full_[{a, a}] = block.sum();
  diag_[a] = block.diagonal().sum();
  offdiag_sq_[a] = block.squaredNorm() - block.diagonal().squaredNorm();
  diag_vec_[a] = block.diagonal();
  row_sums_[a] = block.rowwise().sum();
}

double GramTable::full(int a, int b) const {
  if (linear_fast_) return sample_sums_.col(a).dot(sample_sums_.col(b));
  if (a > b) std::swap(a, b);
  auto it = full_.find({a, b});
  if (it != full_.end()) return it->second;
  if (a == b)
    materialize_self(a);
  else
    materialize_pair(a, b);
  return full_.at({a, b});
}

double GramTable::diag(int a) const {
  if (linear_fast_) {
    auto it = diag_.find(a);
    if (it != diag_.end()) return it->second;
    return diag_[a] = data_->bags[a].samples.squaredNorm();
  }
  auto it = diag_.find(a);
  if (it != diag_.end()) return it->second;
  materialize_self(a);
  return diag_.at(a);
}

double GramTable::offdiag(int a) const { return full(a, a) - diag(a); }

double GramTable::offdiag_sq(int a) const {
  auto it = offdiag_sq_.find(a);
  if (it != offdiag_sq_.end()) return it->second;
  if (!linear_fast_) {
    materialize_self(a);
    return offdiag_sq_.at(a);
  }
  /* ||K||_F^2 = ||X X^T||_F^2 = ||X^T X||_F^2; take the smaller Gram side */
  const Eigen::MatrixXd& x = data_->bags[a].samples;
  double frob2;
  if (x.cols() < x.rows())
    frob2 = (x.transpose() * x).squaredNorm();
  else
    frob2 = (x * x.transpose()).squaredNorm();
  const double diag2 = x.rowwise().squaredNorm().squaredNorm();
  return offdiag_sq_[a] = frob2 - diag2;
}

Eigen::VectorXd GramTable::diag_vec(int a) const {
  auto it = diag_vec_.find(a);
  if (it != diag_vec_.end()) return it->second;
  if (!linear_fast_) {
    materialize_self(a);
    return diag_vec_.at(a);
  }
  return diag_vec_[a] = data_->bags[a].samples.rowwise().squaredNorm();
}

Eigen::VectorXd GramTable::row_sums(int a) const {
  auto it = row_sums_.find(a);
  if (it != row_sums_.end()) return it->second;
  if (!linear_fast_) {
    materialize_self(a);
    return row_sums_.at(a);
  }
  return row_sums_[a] = data_->bags[a].samples * sample_sums_.col(a);
}

double GramTable::mean_ip(int a, int b) const {
  return full(a, b) /
         (static_cast<double>(data_->bags[a].size()) * data_->bags[b].size());
}

double mmd2_unbiased(const GramTable& table, int a, int b) {
  const int na = table.data().bags[a].size();
  const int nb = table.data().bags[b].size();
  if (na < 2 || nb < 2) throw InsufficientSamples("mmd2 needs two samples per bag");
  return table.offdiag(a) / (static_cast<double>(na) * (na - 1)) +
         table.offdiag(b) / (static_cast<double>(nb) * (nb - 1)) -
         2.0 * table.full(a, b) / (static_cast<double>(na) * nb);
}

/* unbiased Tr S^2 from within-bag kernel sums alone.  The three index classes
   (shared pair, one shared index, all distinct) are isolated by inclusion and
   exclusion over row sums, so the cost stays at one N x N block. */
double tr_sigma2_exact(const GramTable& table, int a) {
  const int n = table.data().bags[a].size();
  if (n < 4) throw InsufficientSamples("exact Tr S^2 estimate needs four samples");
  const double nn = n;
  const Eigen::VectorXd r = table.row_sums(a);
  const Eigen::VectorXd d = table.diag_vec(a);
  const double fo = table.offdiag_sq(a);     // sum over i != j of K_ij^2
  const double s2 = table.offdiag(a);        // sum over i != j of K_ij
  const double term1 = fo;
  const double term2 = (r - d).squaredNorm() - fo;
  const double term3 = s2 * s2 - 4.0 * term2 - 2.0 * fo;
  return term1 / (nn * (nn - 1)) - 2.0 * term2 / (nn * (nn - 1) * (nn - 2)) +
         term3 / (nn * (nn - 1) * (nn - 2) * (nn - 3));
}

double tr_sigma2_subsampled(const GramTable& table, int a, int reps, Rng& rng) {
  const int n = table.data().bags[a].size();
  if (n < 4) throw InsufficientSamples("Tr S^2 subsampler needs four samples");
  if (reps < 1) throw InvalidArgument("subsampler needs at least one draw");
  const Eigen::MatrixXd& x = table.data().bags[a].samples;
  const KernelSpec& spec = table.spec();
  const double nn = n;
  const double t1 = table.offdiag_sq(a);

  auto kv = [&](int i, int j) {
    return kernel_eval(spec, x.row(i).transpose(), x.row(j).transpose());
  };
  std::uniform_int_distribution<int> pick(0, n - 1);
  auto draw_distinct = [&](int* idx, int count) {
    for (int c = 0; c < count; ++c) {
      int v;
      bool fresh;
      do {
        v = pick(rng);
        fresh = true;
        for (int p = 0; p < c; ++p)
          if (idx[p] == v) fresh = false;
      } while (!fresh);
      idx[c] = v;
    }
  };

  double t2 = 0.0, t3 = 0.0;
  int idx[4];
  for (int rep = 0; rep < reps; ++rep) {
    draw_distinct(idx, 4);
    t2 += kv(idx[0], idx[1]) * kv(idx[0], idx[2]);
    t3 += kv(idx[0], idx[1]) * kv(idx[2], idx[3]);
  }
  const double est = t1 / (nn * (nn - 1)) - 2.0 * t2 / reps + t3 / reps;
  return est > 0.0 ? est : 0.0;
}

double kernel_error_metric(const Dataset& est, const Dataset& holdout,
                           const WeightVector& w, int k, const KernelSpec& spec) {
  const int nb = est.size();
  if (w.w.size() != nb) throw DimensionMismatch("weight length does not match bag count");
  if (k < 0 || k >= holdout.size()) throw InvalidArgument("holdout bag index out of range");
  const int m = holdout.bags[k].size();
  if (m < 2) throw InsufficientSamples("holdout proxy needs two samples");

  GramTable table(est, spec);
  double quad = 0.0;
  for (int l = 0; l < nb; ++l) {
    if (w.w[l] == 0.0) continue;
    for (int lp = 0; lp < nb; ++lp) {
      if (w.w[lp] == 0.0) continue;
      quad += w.w[l] * w.w[lp] * table.mean_ip(l, lp);
    }
  }

  double cross = 0.0;
  for (int l = 0; l < nb; ++l) {
    if (w.w[l] == 0.0) continue;
    const double sum =
        gram_block(est.bags[l].samples, holdout.bags[k].samples, spec).sum();
    cross += w.w[l] * sum / (static_cast<double>(est.bags[l].size()) * m);
  }

  const Eigen::MatrixXd self =
      gram_block(holdout.bags[k].samples, holdout.bags[k].samples, spec);
  const double proxy =
      (self.sum() - self.diagonal().sum()) / (static_cast<double>(m) * (m - 1));
  return quad - 2.0 * cross + proxy;
}

}  // namespace multimean
