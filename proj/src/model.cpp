#include "multimean/model.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace multimean {

namespace {

void validate_bags(const std::vector<Bag>& bags) {
  if (bags.empty()) throw InvalidBag("dataset needs at least one bag");
  const int d = bags.front().dim();
  if (d < 1) throw InvalidDimension("bags need at least one feature");
  std::set<int> ids;
  for (const Bag& b : bags) {
    if (b.size() < 1) throw InsufficientSamples("empty bag " + std::to_string(b.id));
    if (b.dim() != d)
      throw DimensionMismatch("bag " + std::to_string(b.id) + " has dim " +
                              std::to_string(b.dim()) + ", expected " + std::to_string(d));
    if (!ids.insert(b.id).second)
      throw InvalidBag("duplicate bag id " + std::to_string(b.id));
  }
}

}  // namespace

Dataset make_vector_dataset(std::vector<Bag> bags) {
  validate_bags(bags);
  Dataset data;
  data.mode = Mode::vector;
  data.bags = std::move(bags);
  return data;
}

Dataset make_kernel_dataset(std::vector<Bag> bags, KernelSpec kernel) {
  validate_bags(bags);
  Dataset data;
  data.mode = Mode::kernel;
  data.kernel = kernel;
  data.bags = std::move(bags);
  return data;
}

Eigen::VectorXd naive_mean(const Bag& bag) {
  if (bag.size() < 1) throw InsufficientSamples("naive mean of an empty bag");
  return bag.samples.colwise().mean().transpose();
}

Eigen::VectorXd aggregate(const Dataset& data, const WeightVector& w) {
  if (data.mode != Mode::vector)
    throw InvalidArgument("aggregate needs vector mode; use aggregate_coefficients");
  if (w.w.size() != data.size())
    throw DimensionMismatch("weight length does not match bag count");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(data.dim());
  for (int k = 0; k < data.size(); ++k)
    if (w.w[k] != 0.0) out += w.w[k] * naive_mean(data.bags[k]);
  return out;
}

Eigen::VectorXd aggregate_coefficients(const Dataset& data, const WeightVector& w) {
  if (w.w.size() != data.size())
    throw DimensionMismatch("weight length does not match bag count");
  int total = 0;
  for (const Bag& b : data.bags) total += b.size();
  Eigen::VectorXd coef(total);
  int at = 0;
  for (int k = 0; k < data.size(); ++k) {
    const int n = data.bags[k].size();
    coef.segment(at, n).setConstant(w.w[k] / n);
    at += n;
  }
  return coef;
}

std::pair<double, double> effective_dims(const Eigen::MatrixXd& covariance) {
  if (covariance.rows() != covariance.cols())
    throw DimensionMismatch("covariance must be square");
  const double tr = covariance.trace();
  if (!(tr > 0.0)) throw DegenerateCovariance("covariance trace must be positive");
  const double tr2 = covariance.squaredNorm();  // Tr S^2 for symmetric S
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance, Eigen::EigenvaluesOnly);
  const double op = eig.eigenvalues().maxCoeff();
  if (!(op > 0.0)) throw DegenerateCovariance("covariance operator norm must be positive");
  return {tr * tr / tr2, tr / op};
}

Dataset load_csv_dataset(const std::string& path, Mode mode,
                         std::optional<KernelSpec> kernel) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("empty csv " + path);

  std::vector<std::string> order;                       // bag ids by first appearance
  std::map<std::string, std::vector<double>> rows_flat;  // id -> row-major values
  std::map<std::string, int> row_count;
  int d = -1;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    if (!std::getline(ss, cell, ',')) continue;
    const std::string id = cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) {
      size_t used = 0;
      double v;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw InvalidArgument(path + ":" + std::to_string(line_no) + ": bad number '" +
                              cell + "'");
      }
      if (used != cell.size())
        throw InvalidArgument(path + ":" + std::to_string(line_no) + ": bad number '" +
                              cell + "'");
      vals.push_back(v);
    }
    if (d < 0) d = static_cast<int>(vals.size());
    if (static_cast<int>(vals.size()) != d)
      throw InvalidArgument(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(d) + " features, got " +
                            std::to_string(vals.size()));
    if (rows_flat.find(id) == rows_flat.end()) order.push_back(id);
    auto& flat = rows_flat[id];
    flat.insert(flat.end(), vals.begin(), vals.end());
    row_count[id] += 1;
  }
  if (order.empty()) throw InvalidArgument("no data rows in " + path);

  std::vector<Bag> bags;
  bags.reserve(order.size());
  for (int k = 0; k < static_cast<int>(order.size()); ++k) {
    const auto& flat = rows_flat[order[k]];
    const int n = row_count[order[k]];
    Bag b;
    b.id = k;
    b.samples = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                               Eigen::RowMajor>>(flat.data(), n, d);
    bags.push_back(std::move(b));
  }

  Dataset data = (mode == Mode::kernel)
                     ? make_kernel_dataset(std::move(bags),
                                           kernel ? *kernel : KernelSpec::gaussian_auto())
                     : make_vector_dataset(std::move(bags));
  data.labels = order;
  return data;
}

}  // namespace multimean
