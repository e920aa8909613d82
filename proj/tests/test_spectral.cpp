#include <cmath>
#include <random>

#include "doctest.h"
#include "multimean/spectral.hpp"

using namespace multimean;

namespace {

Bag alt_bag() {
  // {-1, 1, -1, 1} in one dimension; every moment below is exact by hand
  Bag b;
  b.id = 0;
  b.samples.resize(4, 1);
  b.samples << -1.0, 1.0, -1.0, 1.0;
  return b;
}

Bag gauss_bag(int id, int n, int d, Rng& rng, double shift = 0.0) {
  std::normal_distribution<double> gauss;
  Bag b;
  b.id = id;
  b.samples.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) b.samples(i, j) = gauss(rng) + shift;
  return b;
}

}  // namespace

TEST_CASE("s2_hat and z1 on the alternating fixture") {
  Bag b = alt_bag();
  CHECK(s2_hat(b) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(z1_trace(b) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));

  Bag tiny;
  tiny.id = 0;
  tiny.samples.resize(1, 1);
  tiny.samples << 5.0;
  CHECK_THROWS_AS(s2_hat(tiny), InsufficientSamples);
}

TEST_CASE("z2_squared on the alternating fixture is 8/3") {
  Bag b = alt_bag();
  CHECK(z2_squared(b) == doctest::Approx(8.0 / 3.0).epsilon(1e-13));
  CHECK(z2_schatten(b) == doctest::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-13));

  Bag three;
  three.id = 0;
  three.samples.resize(3, 1);
  three.samples << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(z2_squared(three), InsufficientSamples);
}

TEST_CASE("moment estimates are translation invariant") {
  Rng rng(11);
  Bag b = gauss_bag(0, 12, 3, rng);
  Bag shifted = b;
  shifted.samples.array() += 37.5;
  CHECK(s2_hat(shifted) == doctest::Approx(s2_hat(b)).epsilon(1e-10));
  CHECK(z2_squared(shifted) == doctest::Approx(z2_squared(b)).epsilon(1e-9));
}

TEST_CASE("z2_squared agrees across the tall and wide Gram paths") {
  Rng rng(19);
  Bag tall = gauss_bag(0, 20, 3, rng);   // uses C^T C
  CHECK(std::isfinite(z2_squared(tall)));
  Bag wide = gauss_bag(1, 6, 40, rng);   // uses C C^T
  CHECK(std::isfinite(z2_squared(wide)));
  // zero features leave the row Gram unchanged but flip the evaluation branch
  Bag sq = gauss_bag(2, 9, 8, rng);  // tall: goes through C^T C
  const double direct = z2_squared(sq);
  Bag padded = sq;
  padded.samples.conservativeResize(9, 10);
  padded.samples.col(8).setZero();
  padded.samples.col(9).setZero();  // now wide: goes through C C^T
  CHECK(z2_squared(padded) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("u_distance removes the own-noise of both means") {
  Bag a;
  a.id = 0;
  a.samples.resize(2, 1);
  a.samples << 0.0, 2.0;  // mean 1, s2 = 1
  Bag b;
  b.id = 1;
  b.samples.resize(2, 1);
  b.samples << 4.0, 4.0;  // mean 4, s2 = 0
  CHECK(u_distance(a, b) == doctest::Approx(8.0).epsilon(1e-14));  // 9 - 1 - 0
  CHECK(u_distance(a, a) == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(u_distance(b, b) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("compute_stats is coherent with the per-bag functions") {
  Rng rng(101);
  std::vector<Bag> bags = {gauss_bag(0, 10, 4, rng), gauss_bag(1, 7, 4, rng, 2.0),
                           gauss_bag(2, 5, 4, rng, -1.0)};
  Dataset data = make_vector_dataset(bags);
  DatasetStats stats = compute_stats(data);

  REQUIRE(static_cast<int>(stats.task.size()) == 3);
  REQUIRE(stats.means.cols() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(stats.task[k].s2_hat == doctest::Approx(s2_hat(bags[k])).epsilon(1e-12));
    CHECK(stats.task[k].z1 == doctest::Approx(z1_trace(bags[k])).epsilon(1e-12));
    CHECK((stats.means.col(k) - naive_mean(bags[k])).norm() ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK(stats.u(k, k) == doctest::Approx(-2.0 * stats.task[k].s2_hat).epsilon(1e-12));
    CHECK(stats.task[k].dstar_hat ==
          doctest::Approx(bags[k].size() * stats.task[k].s2_hat / stats.task[k].z2)
              .epsilon(1e-12));
  }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      if (a == b) continue;
      CHECK(stats.u(a, b) ==
            doctest::Approx(u_distance(bags[a], bags[b])).epsilon(1e-10));
      CHECK(stats.mean_ip(a, b) ==
            doctest::Approx(naive_mean(bags[a]).dot(naive_mean(bags[b]))).epsilon(1e-10));
    }
}

TEST_CASE("compute_stats marks z2 unavailable below four samples") {
  Rng rng(5);
  std::vector<Bag> bags = {gauss_bag(0, 3, 2, rng), gauss_bag(1, 6, 2, rng)};
  DatasetStats stats = compute_stats(make_vector_dataset(bags));
  CHECK(std::isnan(stats.task[0].z2));
  CHECK(std::isnan(stats.task[0].dstar_hat));
  CHECK(std::isfinite(stats.task[1].z2));
}

TEST_CASE("compute_stats can attach the operator-norm dimension") {
  Rng rng(7);
  std::vector<Bag> bags = {gauss_bag(0, 40, 3, rng)};
  StatsOptions opts;
  opts.with_de = true;
  DatasetStats stats = compute_stats(make_vector_dataset(bags), opts);
  REQUIRE(stats.task[0].de_hat.has_value());
  CHECK(*stats.task[0].de_hat > 1.0);
  CHECK(*stats.task[0].de_hat <= 3.0 + 1e-9);
}

TEST_CASE("mob_wrap splits, evaluates, and takes the lower median") {
  Bag b;
  b.id = 0;
  b.samples.resize(6, 1);
  b.samples << 0.0, 0.0, 2.0, 2.0, 4.0, 4.0;

  auto first_entry = [](const Bag& block) { return block.samples(0, 0); };

  MobConfig three;
  three.blocks = 3;
  three.shuffle = false;
  CHECK(mob_wrap(b, three, first_entry) == doctest::Approx(2.0));

  MobConfig two;
  two.blocks = 2;
  two.shuffle = false;
  CHECK(mob_wrap(b, two, first_entry) == doctest::Approx(0.0));  // lower of {0, 2}

  MobConfig one;
  one.blocks = 1;
  one.shuffle = false;
  CHECK(mob_wrap(b, one, &s2_hat) == doctest::Approx(s2_hat(b)).epsilon(1e-14));

  MobConfig demand;
  demand.blocks = 7;
  CHECK_THROWS_AS(mob_wrap(b, demand, &s2_hat), BlockTooSmall);

  MobConfig seeded;
  seeded.blocks = 3;
  seeded.shuffle = true;
  seeded.seed = 99;
  const double r1 = mob_wrap(b, seeded, first_entry);
  const double r2 = mob_wrap(b, seeded, first_entry);
  CHECK(r1 == r2);
}

TEST_CASE("blocked s2 keeps the right scale") {
  // each block still estimates Tr S / N_block; with equal blocks the median
  // stays near blocks * s2 of the full bag
  Rng rng(303);
  Bag b = gauss_bag(0, 400, 2, rng);
  MobConfig cfg;
  cfg.blocks = 4;
  cfg.shuffle = true;
  cfg.seed = 1;
  const double blocked = mob_wrap(b, cfg, &s2_hat);
  const double full = s2_hat(b);
  CHECK(blocked == doctest::Approx(4.0 * full).epsilon(0.5));
}
