#include <cmath>

#include "doctest.h"
#include "multimean/stb.hpp"

using namespace multimean;

namespace {

DatasetStats stats_with(const std::vector<double>& s2) {
  DatasetStats stats;
  const int nb = static_cast<int>(s2.size());
  stats.task.resize(nb);
  for (int k = 0; k < nb; ++k) {
    stats.task[k].s2_hat = s2[k];
    stats.task[k].z2 = 1.0;
    stats.task[k].dstar_hat = 5.0;
  }
  stats.u.setZero(nb, nb);
  for (int k = 0; k < nb; ++k) stats.u(k, k) = -2.0 * s2[k];
  stats.mean_ip.setZero(nb, nb);
  return stats;
}

NeighborSet set_of(int target, std::vector<int> members, int n_bags) {
  NeighborSet s;
  s.target = target;
  s.members = std::move(members);
  s.in_set.assign(n_bags, 0);
  for (int k : s.members) s.in_set[k] = 1;
  return s;
}

}  // namespace

TEST_CASE("oracle_weights closed form on two equal-risk bags") {
  DatasetStats stats = stats_with({1.0, 1.0});
  NeighborSet set = set_of(0, {0, 1}, 2);
  // pool 0.5, nu 0.5, lambda = 1 / (1 + 2 * 0.5) = 0.5
  WeightVector w = oracle_weights(stats, set, 2.0, 1.0);
  CHECK(w.target == 0);
  CHECK(w.w[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(w.w[1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(on_simplex(w.w));
}

TEST_CASE("oracle_weights reduces to pooling when gamma is zero") {
  DatasetStats stats = stats_with({1.0, 2.0});
  NeighborSet set = set_of(0, {0, 1}, 2);
  WeightVector w = oracle_weights(stats, set, 2.2, 0.0);
  // lambda = 1: inverse-risk shares 2/3 and 1/3
  CHECK(w.w[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(w.w[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("oracle_weights on a singleton set is the naive estimator") {
  DatasetStats stats = stats_with({3.0, 1.0});
  NeighborSet set = set_of(0, {0}, 2);
  WeightVector w = oracle_weights(stats, set, 5.0, 0.7);
  CHECK(w.w[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w.w[1] == doctest::Approx(0.0));
}

TEST_CASE("oracle_weights stays on the simplex for uneven risks") {
  DatasetStats stats = stats_with({0.5, 1.0, 4.0, 2.0});
  NeighborSet set = set_of(0, {0, 1, 2, 3}, 4);
  for (double tau : {0.0, 1.0, 7.5})
    for (double gamma : {0.0, 0.3, 1.0}) {
      WeightVector w = oracle_weights(stats, set, tau, gamma);
      CHECK(on_simplex(w.w));
      CHECK(w.w[0] >= w.w[1]);  // target never gets less than an equal-risk member
    }
  DatasetStats bad = stats_with({1.0, 0.0});
  CHECK_THROWS_AS(oracle_weights(bad, set_of(0, {0, 1}, 2), 2.0, 1.0),
                  DegenerateCovariance);
}

TEST_CASE("uniform_boost_weights splits mass as promised") {
  NeighborSet set = set_of(0, {0, 2}, 4);
  WeightVector w = uniform_boost_weights(set, 4, 0.2);
  CHECK(w.w[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(w.w[1] == doctest::Approx(0.0));
  CHECK(w.w[2] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(on_simplex(w.w));

  WeightVector solo = uniform_boost_weights(set_of(1, {1}, 3), 3, 0.5);
  CHECK(solo.w[1] == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(uniform_boost_weights(set, 4, -0.1), InvalidArgument);
  CHECK_THROWS_AS(uniform_boost_weights(set, 4, 1.5), InvalidArgument);
}

TEST_CASE("orth_weights inverts regret") {
  DatasetStats stats = stats_with({1.0, 2.0});
  stats.u(0, 1) = 3.0;
  WeightVector w = orth_weights(stats, 0, 1.0);
  // raw 1 / 1 and 1 / (2 + 3)
  CHECK(w.w[0] == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  CHECK(w.w[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(on_simplex(w.w));
}

TEST_CASE("orth_weights clamps negative regret and skips unusable bags") {
  DatasetStats stats = stats_with({1.0, 1.0, 1.0});
  stats.u(0, 1) = -5.0;  // clamped to zero: bag 1 looks as good as the target
  stats.u(0, 2) = std::nan("");
  WeightVector w = orth_weights(stats, 0, 2.0);
  CHECK(w.w[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w.w[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w.w[2] == doctest::Approx(0.0));
}

TEST_CASE("orth_weights honours a restriction set") {
  DatasetStats stats = stats_with({1.0, 1.0, 1.0});
  stats.u(0, 1) = 1.0;
  stats.u(0, 2) = 1.0;
  NeighborSet keep = set_of(0, {0, 2}, 3);
  WeightVector w = orth_weights(stats, 0, 1.0, &keep);
  CHECK(w.w[1] == doctest::Approx(0.0));
  CHECK(w.w[0] + w.w[2] == doctest::Approx(1.0).epsilon(1e-12));

  DatasetStats dead = stats_with({0.0, 0.0});
  CHECK_THROWS_AS(orth_weights(dead, 0, 1.0), DegenerateCovariance);
}
