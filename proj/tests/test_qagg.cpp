#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "multimean/qagg.hpp"

using namespace multimean;

namespace {

Bag gauss_bag(int id, int n, int d, Rng& rng, double shift = 0.0) {
  std::normal_distribution<double> gauss;
  Bag b;
  b.id = id;
  b.samples.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) b.samples(i, j) = gauss(rng) + shift;
  return b;
}

QaggInputs tiny_inputs() {
  QaggInputs in;
  in.lambda_hat.setZero(2, 2);
  in.lambda_hat(1, 1) = 16.0;
  in.s2_hat.resize(2);
  in.s2_hat << 1.0, 1.0;
  in.q_hat.resize(2);
  in.q_hat << 0.0, 32.0;
  in.theta.resize(2);
  in.theta << 0.5, 0.25;
  in.target = 0;
  in.n_target = 2;
  return in;
}

}  // namespace

TEST_CASE("build_inputs assembles the centered quadratic form") {
  Bag t;
  t.id = 0;
  t.samples.resize(2, 1);
  t.samples << 0.0, 2.0;  // mean 1, centered (-1, 1)
  Bag o;
  o.id = 1;
  o.samples.resize(2, 1);
  o.samples << 5.0, 5.0;  // mean 5
  Dataset data = make_vector_dataset({t, o});
  DatasetStats stats = compute_stats(data);
  QaggInputs in = build_inputs(data, stats, 0);

  CHECK(in.n_target == 2);
  CHECK(in.lambda_hat(0, 0) == doctest::Approx(0.0));
  CHECK(in.lambda_hat(0, 1) == doctest::Approx(0.0));
  CHECK(in.lambda_hat(1, 0) == doctest::Approx(0.0));
  CHECK(in.lambda_hat(1, 1) == doctest::Approx(16.0).epsilon(1e-12));
  CHECK(in.q_hat[0] == doctest::Approx(0.0));
  CHECK(in.q_hat[1] == doctest::Approx(32.0).epsilon(1e-12));
  CHECK(in.s2_hat[0] == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(build_inputs(data, stats, 5), InvalidArgument);
}

TEST_CASE("vector and linear-kernel inputs coincide") {
  Rng rng(29);
  std::vector<Bag> bags = {gauss_bag(0, 6, 3, rng), gauss_bag(1, 8, 3, rng, 1.0),
                           gauss_bag(2, 5, 3, rng, -0.5)};
  Dataset vec = make_vector_dataset(bags);
  Dataset ker = make_kernel_dataset(bags, KernelSpec::linear());
  DatasetStats vs = compute_stats(vec);
  DatasetStats ks = compute_stats(ker);
  for (int target = 0; target < 3; ++target) {
    QaggInputs a = build_inputs(vec, vs, target);
    QaggInputs b = build_inputs(ker, ks, target);
    CHECK((a.lambda_hat - b.lambda_hat).norm() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK((a.q_hat - b.q_hat).norm() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK((a.s2_hat - b.s2_hat).norm() == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("kernel q_hat stays finite and vanishes at the target") {
  Rng rng(31);
  std::vector<Bag> bags = {gauss_bag(0, 5, 2, rng), gauss_bag(1, 6, 2, rng, 2.0)};
  Dataset ker = make_kernel_dataset(bags, KernelSpec::gaussian(1.0));
  DatasetStats ks = compute_stats(ker);
  QaggInputs in = build_inputs(ker, ks, 0);
  CHECK(in.q_hat[0] == doctest::Approx(0.0));
  CHECK(in.q_hat[1] >= 0.0);
  CHECK(std::isfinite(in.q_hat[1]));
}

TEST_CASE("objective closed form on a hand fixture") {
  QaggInputs in = tiny_inputs();
  QaggParams p;
  p.c_q = 1.0;
  p.c_1 = 1.0;
  p.c_2 = 2.0;
  p.c_bs = 0.0;
  Eigen::VectorXd w(2);
  w << 0.5, 0.5;
  CHECK(objective(in, p, w) == doctest::Approx(6.75).epsilon(1e-12));
  Eigen::VectorXd g = gradient(in, p, w);
  CHECK(g[0] == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(20.75).epsilon(1e-12));

  p.c_bs = 3.0;
  p.bs_bound = 2.0;
  CHECK(objective(in, p, w) == doctest::Approx(12.75).epsilon(1e-12));
  Eigen::VectorXd gb = gradient(in, p, w);
  CHECK(gb[0] == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(gb[1] == doctest::Approx(32.75).epsilon(1e-12));
}

TEST_CASE("gradient matches central finite differences") {
  Rng rng(37);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.1, 2.0);
  for (int rep = 0; rep < 5; ++rep) {
    const int nb = 4;
    Eigen::MatrixXd a(nb, nb);
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j) a(i, j) = gauss(rng);
    QaggInputs in;
    in.lambda_hat = a * a.transpose();
    in.target = rep % nb;
    in.lambda_hat.row(in.target).setZero();
    in.lambda_hat.col(in.target).setZero();
    in.n_target = 7;
    in.s2_hat = Eigen::VectorXd::NullaryExpr(nb, [&] { return unif(rng); });
    in.q_hat = Eigen::VectorXd::NullaryExpr(nb, [&] { return unif(rng); });
    in.q_hat[in.target] = 0.0;
    in.theta = Eigen::VectorXd::NullaryExpr(nb, [&] { return unif(rng); });
    QaggParams p;
    p.c_q = 1.3;
    p.c_1 = 0.8;
    p.c_2 = 2.5;
    p.c_bs = 0.6;
    p.bs_bound = 1.7;

    Eigen::VectorXd w = Eigen::VectorXd::NullaryExpr(nb, [&] { return unif(rng); });
    w /= w.sum();
    Eigen::VectorXd g = gradient(in, p, w);
    const double h = 1e-6;
    for (int l = 0; l < nb; ++l) {
      Eigen::VectorXd up = w, dn = w;
      up[l] += h;
      dn[l] -= h;
      const double fd = (objective(in, p, up) - objective(in, p, dn)) / (2.0 * h);
      CHECK(g[l] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("solve_egd lands on the interior optimum of a smooth problem") {
  QaggInputs in;
  in.lambda_hat.setZero(2, 2);
  in.lambda_hat(1, 1) = 1.0;
  in.s2_hat.resize(2);
  in.s2_hat << 0.1, 0.1;
  in.q_hat = Eigen::VectorXd::Zero(2);
  in.theta = Eigen::VectorXd::Zero(2);
  in.target = 0;
  in.n_target = 10;
  QaggParams p;
  p.c_q = 0.0;
  p.c_1 = 0.0;
  p.c_2 = 0.0;
  p.eta0 = 1.0;
  p.t_max = 2000;
  p.stop_tol = 1e-14;
  WeightVector w = solve_egd(in, p);
  // minimize (1 - w0)^2 + 0.1 (2 w0 - 1): w0 = 0.9
  CHECK(on_simplex(w.w));
  CHECK(w.w[0] == doctest::Approx(0.9).epsilon(0.03));

  // no simplex grid point does meaningfully better than the solver output
  const double got = objective(in, p, w.w);
  double best = got;
  for (int i = 0; i <= 1000; ++i) {
    Eigen::VectorXd probe(2);
    probe << i / 1000.0, 1.0 - i / 1000.0;
    best = std::min(best, objective(in, p, probe));
  }
  CHECK(got <= best + 1e-3);
}

TEST_CASE("solve_egd respects a restriction set and reports iterates") {
  QaggInputs in;
  in.lambda_hat = Eigen::MatrixXd::Identity(3, 3) * 0.5;
  in.lambda_hat.row(1).setZero();
  in.lambda_hat.col(1).setZero();
  in.s2_hat = Eigen::VectorXd::Constant(3, 0.2);
  in.q_hat = Eigen::VectorXd::Zero(3);
  in.theta = Eigen::VectorXd::Constant(3, 0.1);
  in.target = 1;
  in.n_target = 5;
  QaggParams p;
  p.eta0 = 1.0;

  NeighborSet keep;
  keep.target = 1;
  keep.members = {1, 2};
  keep.in_set = {0, 1, 1};

  int calls = 0;
  Eigen::VectorXd first;
  WeightVector w = solve_egd(in, p, &keep, [&](const Eigen::VectorXd& it) {
    if (calls == 0) first = it;
    ++calls;
  });
  CHECK(calls >= 2);
  CHECK(first[0] == doctest::Approx(0.0));
  CHECK(first[1] == doctest::Approx(0.5));
  CHECK(first[2] == doctest::Approx(0.5));
  CHECK(w.w[0] == doctest::Approx(0.0));
  CHECK(on_simplex(w.w));
}

TEST_CASE("solve_egd validates its inputs by active term") {
  QaggInputs in = tiny_inputs();
  in.theta[1] = std::nan("");
  QaggParams p;
  p.c_1 = 1.0;
  CHECK_THROWS_AS(solve_egd(in, p), DegenerateSpectrum);

  p.c_1 = 0.0;
  p.c_2 = 0.0;
  WeightVector w = solve_egd(in, p);  // theta unused, nan tolerated
  CHECK(on_simplex(w.w));

  QaggInputs bad = tiny_inputs();
  bad.lambda_hat(0, 1) = std::nan("");
  CHECK_THROWS_AS(solve_egd(bad, QaggParams{}), DegenerateCovariance);

  QaggInputs badq = tiny_inputs();
  badq.q_hat[1] = std::nan("");
  QaggParams pq;
  pq.c_q = 1.0;
  CHECK_THROWS_AS(solve_egd(badq, pq), DegenerateSpectrum);
  pq.c_q = 0.0;
  pq.c_1 = 0.0;
  pq.c_2 = 0.0;
  CHECK(on_simplex(solve_egd(badq, pq).w));
}
