#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace multimean {

/* error taxonomy shared by all modules */
struct InvalidBag : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct InsufficientSamples : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct BlockTooSmall : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DegenerateCovariance : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DegenerateSpectrum : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidDimension : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct SolveFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

/* stable 64-bit mixer; used to derive independent child seeds so that results
   do not depend on the platform's std::hash */
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t t) {
  return seed ^ splitmix64(t);
}

inline bool on_simplex(const Eigen::VectorXd& w, double tol = 1e-9) {
  if (w.size() == 0) return false;
  if ((w.array() < 0.0).any()) return false;
  return std::abs(w.sum() - 1.0) <= tol;
}

}  // namespace multimean
