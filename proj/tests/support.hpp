#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "posgrowth/matrices.hpp"
#include "posgrowth/random.hpp"
#include "posgrowth/spectral_derivatives.hpp"

namespace testing {

using posgrowth::ControlSet;
using posgrowth::Rng;
using posgrowth::uniform;

// Scaling-and-squaring Taylor exponential, independent of the library path.
inline Eigen::MatrixXd expm_oracle(const Eigen::MatrixXd& a) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  while (norm / std::ldexp(1.0, squarings) > 0.125) ++squarings;
  const Eigen::MatrixXd b = a / std::ldexp(1.0, squarings);
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sum = term;
  for (int k = 1; k <= 20; ++k) {
    term = (term * b / static_cast<double>(k)).eval();
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = (sum * sum).eval();
  return sum;
}

// Largest real part among the eigenvalues, from a plain dense solve.
inline double dominant_real_part(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  return es.eigenvalues().real().maxCoeff();
}

// Spectral radius of a positive matrix, dense solve.
inline double spectral_radius(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Brute force over all proper index partitions I | J: irreducible iff every
// partition has some i in I, j in J with m(i, j) > 0.
inline bool irreducible_by_partitions(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    bool linked = false;
    for (int i = 0; i < n && !linked; ++i) {
      if (!(mask >> i & 1u)) continue;
      for (int j = 0; j < n; ++j) {
        if (!(mask >> j & 1u) && m(i, j) > 0.0) {
          linked = true;
          break;
        }
      }
    }
    if (!linked) return false;
  }
  return true;
}

// Off-diagonal entries in (0.05, 1), diagonal in (-2, 1).
inline Eigen::MatrixXd random_positive_metzler(Rng& rng, int n) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = i == j ? uniform(rng, -2.0, 1.0) : uniform(rng, 0.05, 1.0);
  }
  return m;
}

// Segment on [0, 2] whose off-diagonal entries change sign along F, so that
// lambda(alpha) need not be convex; G compensates to keep both ends Metzler.
inline ControlSet random_segment(Rng& rng, int n) {
  Eigen::MatrixXd G(n, n);
  Eigen::MatrixXd F(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        G(i, j) = uniform(rng, -2.0, 0.0);
        F(i, j) = uniform(rng, -1.0, 1.0);
      } else {
        F(i, j) = uniform(rng, -1.0, 1.0);
        G(i, j) = 2.0 * std::abs(F(i, j)) + uniform(rng, 0.05, 1.0);
      }
    }
  }
  return ControlSet::segment(G, F, 0.0, 2.0);
}

// Random segment with a strict interior maximiser: F is shifted by a
// multiple of the identity so that lambda'(1) = 0, and draws are rejected
// until lambda''(1) < 0 and the global maximiser is interior.
inline ControlSet random_interior_segment(Rng& rng, int n) {
  for (;;) {
    const ControlSet raw = random_segment(rng, n);
    const posgrowth::Segment& s = raw.as_segment();
    const double slope = posgrowth::perron_derivative(raw, 1.0);
    const Eigen::MatrixXd F = s.F - slope * Eigen::MatrixXd::Identity(n, n);
    ControlSet cs = ControlSet::segment(s.G, F, 0.0, 2.0);
    if (posgrowth::perron_second_derivative(cs, 1.0) > -1e-2) continue;
    const posgrowth::AlphaStar star = posgrowth::find_alpha_star(cs);
    if (star.boundary || std::abs(star.alpha - 1.0) > 1e-6) continue;
    return cs;
  }
}

inline Eigen::VectorXd normalized(const Eigen::VectorXd& v) { return v / v.sum(); }

}  // namespace testing
