#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "multimean/common.hpp"
#include "multimean/kernel_spec.hpp"

namespace multimean {

enum class Mode { vector, kernel };

/* one task: N_k samples as rows; immutable after construction */
struct Bag {
  int id = 0;
  Eigen::MatrixXd samples;  // N_k x d

  int size() const { return static_cast<int>(samples.rows()); }
  int dim() const { return static_cast<int>(samples.cols()); }
};

struct Dataset {
  Mode mode = Mode::vector;
  std::optional<KernelSpec> kernel;  // set iff mode == kernel
  std::vector<Bag> bags;
  std::vector<std::string> labels;  // csv bag ids; empty for synthetic data

  int size() const { return static_cast<int>(bags.size()); }
  int dim() const { return bags.empty() ? 0 : bags.front().dim(); }
};

/* validate shapes and id uniqueness once; bags are treated as frozen afterwards */
Dataset make_vector_dataset(std::vector<Bag> bags);
Dataset make_kernel_dataset(std::vector<Bag> bags, KernelSpec kernel);

/* a point on the (B-1)-simplex attached to the task it estimates */
struct WeightVector {
  Eigen::VectorXd w;
  int target = 0;
};

/* per-bag scalar estimates; z2 is the (clamped) Schatten-2 estimate sqrt(Tr S^2),
   dstar_hat = N * s2_hat / z2 estimates sqrt(d*) */
struct TaskStats {
  double s2_hat = 0.0;
  double z1 = 0.0;
  double z2 = 0.0;
  double dstar_hat = 0.0;
  std::optional<double> de_hat;  // vector mode only, on request
};

Eigen::VectorXd naive_mean(const Bag& bag);

/* vector mode: sum_k w_k * naive_mean_k */
Eigen::VectorXd aggregate(const Dataset& data, const WeightVector& w);

/* kernel mode view: per-sample coefficients w_k / N_k, flattened in bag order */
Eigen::VectorXd aggregate_coefficients(const Dataset& data, const WeightVector& w);

/* ((Tr S)^2 / Tr S^2, Tr S / opnorm) for a symmetric PSD matrix */
std::pair<double, double> effective_dims(const Eigen::MatrixXd& covariance);

/* CSV with header; first column bag_id (string), remaining columns numeric.
   Rows are grouped by bag_id in order of first appearance. */
Dataset load_csv_dataset(const std::string& path, Mode mode = Mode::vector,
                         std::optional<KernelSpec> kernel = std::nullopt);

}  // namespace multimean
