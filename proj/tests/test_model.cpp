#include <cstdio>
#include <fstream>
#include <random>

#include "doctest.h"
#include "multimean/model.hpp"

using namespace multimean;

namespace {

Bag bag_of(int id, std::initializer_list<std::initializer_list<double>> rows) {
  Bag b;
  b.id = id;
  const int n = static_cast<int>(rows.size());
  const int d = static_cast<int>(rows.begin()->size());
  b.samples.resize(n, d);
  int i = 0;
  for (const auto& r : rows) {
    int j = 0;
    for (double v : r) b.samples(i, j++) = v;
    ++i;
  }
  return b;
}

struct TempCsv {
  std::string path;
  explicit TempCsv(const std::string& body) {
    path = "test_model_tmp_" + std::to_string(std::random_device{}()) + ".csv";
    std::ofstream out(path);
    out << body;
  }
  ~TempCsv() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("splitmix64 matches the reference stream") {
  // first three outputs of the reference generator seeded with 0
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFull);
  CHECK(splitmix64(0x9e3779b97f4a7c15ull) == 0x6E789E6AA1B965F4ull);
  CHECK(splitmix64(1) == 0x910A2DEC89025CC1ull);
  CHECK(child_seed(0, 0) == 0xE220A8397B1DCDAFull);
  CHECK(child_seed(7, 3) != child_seed(7, 4));
  CHECK((child_seed(7, 3) ^ splitmix64(3)) == 7ull);
}

TEST_CASE("on_simplex accepts simplex points and rejects the rest") {
  Eigen::VectorXd w(3);
  w << 0.2, 0.3, 0.5;
  CHECK(on_simplex(w));
  w << 0.2, 0.3, 0.6;
  CHECK_FALSE(on_simplex(w));
  w << -0.1, 0.5, 0.6;
  CHECK_FALSE(on_simplex(w));
  w << 1.0, 0.0, 0.0;
  CHECK(on_simplex(w));
}

TEST_CASE("naive_mean averages rows") {
  Bag b = bag_of(0, {{1.0, 2.0}, {3.0, 4.0}});
  Eigen::VectorXd m = naive_mean(b);
  REQUIRE(m.size() == 2);
  CHECK(m[0] == doctest::Approx(2.0));
  CHECK(m[1] == doctest::Approx(3.0));
}

TEST_CASE("make_vector_dataset validates shape and ids") {
  CHECK_THROWS_AS(make_vector_dataset({}), InvalidBag);

  std::vector<Bag> dup = {bag_of(1, {{1.0}}), bag_of(1, {{2.0}})};
  CHECK_THROWS_AS(make_vector_dataset(dup), InvalidBag);

  std::vector<Bag> ragged = {bag_of(0, {{1.0}}), bag_of(1, {{1.0, 2.0}})};
  CHECK_THROWS_AS(make_vector_dataset(ragged), DimensionMismatch);

  Bag empty;
  empty.id = 0;
  empty.samples.resize(0, 2);
  std::vector<Bag> has_empty = {bag_of(1, {{1.0, 2.0}})};
  has_empty.push_back(empty);
  CHECK_THROWS_AS(make_vector_dataset(has_empty), InsufficientSamples);

  Dataset ok = make_vector_dataset({bag_of(0, {{1.0, 2.0}}), bag_of(1, {{3.0, 4.0}})});
  CHECK(ok.size() == 2);
  CHECK(ok.dim() == 2);
  CHECK(ok.mode == Mode::vector);
  CHECK_FALSE(ok.kernel.has_value());
}

TEST_CASE("aggregate forms the weighted mean of naive means") {
  Dataset data = make_vector_dataset(
      {bag_of(0, {{1.0, 2.0}, {3.0, 4.0}}), bag_of(1, {{0.0, 1.0}})});
  WeightVector w;
  w.target = 0;
  w.w.resize(2);
  w.w << 0.5, 0.5;
  Eigen::VectorXd est = aggregate(data, w);
  CHECK(est[0] == doctest::Approx(1.0));  // (2 + 0) / 2
  CHECK(est[1] == doctest::Approx(2.0));  // (3 + 1) / 2

  WeightVector bad;
  bad.w.resize(3);
  bad.w.setConstant(1.0 / 3);
  CHECK_THROWS_AS(aggregate(data, bad), DimensionMismatch);

  Dataset kd = make_kernel_dataset({bag_of(0, {{1.0}})}, KernelSpec::linear());
  WeightVector one;
  one.w.resize(1);
  one.w << 1.0;
  CHECK_THROWS_AS(aggregate(kd, one), InvalidArgument);
}

TEST_CASE("aggregate_coefficients spreads each weight uniformly over its bag") {
  Dataset data = make_vector_dataset(
      {bag_of(0, {{1.0, 0.0}, {3.0, 0.0}}), bag_of(1, {{0.0, 1.0}, {0.0, 2.0}, {0.0, 3.0}})});
  WeightVector w;
  w.w.resize(2);
  w.w << 0.4, 0.6;
  Eigen::VectorXd coef = aggregate_coefficients(data, w);
  REQUIRE(coef.size() == 5);
  CHECK(coef[0] == doctest::Approx(0.2));
  CHECK(coef[1] == doctest::Approx(0.2));
  CHECK(coef[2] == doctest::Approx(0.2));
  CHECK(coef[3] == doctest::Approx(0.2));
  CHECK(coef[4] == doctest::Approx(0.2));

  // the flattened view reproduces the vector aggregate
  Eigen::MatrixXd stacked(5, 2);
  stacked << data.bags[0].samples, data.bags[1].samples;
  Eigen::VectorXd via_coef = stacked.transpose() * coef;
  Eigen::VectorXd direct = aggregate(data, w);
  CHECK((via_coef - direct).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("effective_dims on closed-form spectra") {
  Eigen::MatrixXd s = Eigen::Vector3d(1.0, 1.0, 2.0).asDiagonal();
  auto [dstar, de] = effective_dims(s);
  CHECK(dstar == doctest::Approx(8.0 / 3.0).epsilon(1e-12));
  CHECK(de == doctest::Approx(2.0).epsilon(1e-12));

  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(7, 7);
  auto [ds_id, de_id] = effective_dims(id);
  CHECK(ds_id == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(de_id == doctest::Approx(7.0).epsilon(1e-12));

  CHECK_THROWS_AS(effective_dims(Eigen::MatrixXd::Zero(3, 3)), DegenerateCovariance);
  CHECK_THROWS_AS(effective_dims(Eigen::MatrixXd::Zero(2, 3)), DimensionMismatch);
}

TEST_CASE("effective dimension chain holds for random covariances") {
  Rng rng(42);
  std::normal_distribution<double> gauss;
  for (int rep = 0; rep < 50; ++rep) {
    const int d = 2 + static_cast<int>(rng() % 8);
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) a(i, j) = gauss(rng);
    Eigen::MatrixXd s = a * a.transpose();  // PSD, a.s. full rank
    auto [dstar, de] = effective_dims(s);
    CHECK(1.0 <= std::sqrt(dstar) + 1e-12);
    CHECK(std::sqrt(dstar) <= de + 1e-12);
    CHECK(de <= dstar + 1e-12);
    CHECK(dstar <= d + 1e-12);
  }
}

TEST_CASE("csv loader groups rows by first appearance") {
  TempCsv csv(
      "bag,x,y\n"
      "a,1,2\n"
      "b,5,6\n"
      "a,3,4\n");
  Dataset data = load_csv_dataset(csv.path);
  REQUIRE(data.size() == 2);
  CHECK(data.labels[0] == "a");
  CHECK(data.labels[1] == "b");
  CHECK(data.bags[0].size() == 2);
  CHECK(data.bags[1].size() == 1);
  CHECK(data.bags[0].samples(0, 0) == doctest::Approx(1.0));
  CHECK(data.bags[0].samples(1, 1) == doctest::Approx(4.0));
  CHECK(data.bags[1].samples(0, 0) == doctest::Approx(5.0));
  CHECK(data.mode == Mode::vector);
}

TEST_CASE("csv loader rejects bad input") {
  CHECK_THROWS_AS(load_csv_dataset("does_not_exist_anywhere.csv"), InvalidArgument);

  TempCsv ragged(
      "bag,x,y\n"
      "a,1,2\n"
      "a,3\n");
  CHECK_THROWS_AS(load_csv_dataset(ragged.path), InvalidArgument);

  TempCsv bad_num(
      "bag,x\n"
      "a,oops\n");
  CHECK_THROWS_AS(load_csv_dataset(bad_num.path), InvalidArgument);

  TempCsv header_only("bag,x\n");
  CHECK_THROWS_AS(load_csv_dataset(header_only.path), InvalidArgument);
}

TEST_CASE("csv loader can build a kernel dataset") {
  TempCsv csv(
      "bag,x\n"
      "u,1\n"
      "u,2\n"
      "v,3\n");
  Dataset data = load_csv_dataset(csv.path, Mode::kernel, KernelSpec::gaussian(2.0));
  CHECK(data.mode == Mode::kernel);
  REQUIRE(data.kernel.has_value());
  CHECK(data.kernel->kind == KernelSpec::Kind::gaussian_rbf);
  CHECK(data.kernel->width == doctest::Approx(2.0));
}
