#pragma once

#include <vector>

#include "multimean/spectral.hpp"

namespace multimean {

enum class TestMode {
  raw_tau,      // threshold U <= tau * s2_target directly
  corrected,    // inflate tau to tau_tilde before thresholding
};

struct TestConfig {
  double tau = 2.2;
  double alpha = 0.05;
  double varsigma = 1.0;  // whittle slack on z2/N ratios
  TestMode mode = TestMode::raw_tau;
};

/* candidate pool: bags whose z2/N is within a factor varsigma of the target's */
std::vector<int> whittle(const DatasetStats& stats, const Dataset& data, int target,
                         double varsigma);

/* detectability floor for the pairwise test at level alpha; the first form
   takes sqrt(d*) proxies and the risk ratio directly, the second plugs in the
   estimated statistics */
double tau_min_value(double sqrt_dstar_target, double sqrt_dstar_other, double s2_ratio,
                     double alpha);
double tau_min_pair(const DatasetStats& stats, int target, int other, double alpha);

/* separation levels the test provably resolves: above tau_plus it fires,
   below tau_minus it stays quiet */
double tau_plus(double tau, double tau_min);
double tau_minus(double tau, double tau_min);

/* corrected threshold: multiplicity-adjusted floor folded into tau, so the
   accepted set stays honest across B simultaneous tests */
double tau_tilde(const DatasetStats& stats, int target, int n_candidates, double tau,
                 double alpha, double varsigma);

struct NeighborSet {
  int target = 0;
  std::vector<int> members;       // always contains target
  double threshold = 0.0;         // effective tau actually used
  std::vector<char> in_set;       // size B indicator
};

/* test-then-select: accept bag k when U(target, k) <= threshold * s2_target */
NeighborSet similarity_test(const DatasetStats& stats, const Dataset& data, int target,
                            const TestConfig& cfg);

}  // namespace multimean
