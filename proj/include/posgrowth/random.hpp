#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

namespace posgrowth {

/// splitmix64 finaliser; used to derive independent per-trial seeds from a
/// base seed so that results do not depend on evaluation order.
constexpr std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Uniform point on the open simplex (normalised exponential spacings).
inline Eigen::VectorXd random_simplex_point(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v(i) = -std::log(uniform(rng, 1e-12, 1.0));
  }
  return v / v.sum();
}

/// Positive vector with log-uniform coordinates in [e^-3, e^3].
inline Eigen::VectorXd random_cone_point(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = std::exp(uniform(rng, -3.0, 3.0));
  return v;
}

}  // namespace posgrowth
