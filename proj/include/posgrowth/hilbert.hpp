#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "posgrowth/errors.hpp"
#include "posgrowth/matrices.hpp"

namespace posgrowth {

/// Coordinates below this are treated as lying on the cone boundary, where
/// the projective metric is singular.
inline constexpr double kConeFloor = 1e-300;

/// Point of the open positive orthant.
class ConeVector {
 public:
  explicit ConeVector(Eigen::VectorXd coords);

  const Eigen::VectorXd& coords() const noexcept { return coords_; }
  Eigen::Index size() const noexcept { return coords_.size(); }

 private:
  Eigen::VectorXd coords_;
};

namespace detail {

template <typename DerivedX, typename DerivedY>
void require_same_size(const Eigen::MatrixBase<DerivedX>& x,
                       const Eigen::MatrixBase<DerivedY>& y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "vectors differ in dimension");
  }
}

template <typename Derived>
void require_interior(const Eigen::MatrixBase<Derived>& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x(i) >= kConeFloor) || !std::isfinite(x(i))) {
      throw Error(ErrorCode::Domain, "vector is not in the open positive cone");
    }
  }
}

}  // namespace detail

/// d(x, y) = log max_{i,j} (x_i y_j) / (x_j y_i), computed as
/// log max(x/y) - log min(x/y).
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar hilbert_distance(const Eigen::MatrixBase<DerivedX>& x,
                                           const Eigen::MatrixBase<DerivedY>& y) {
  detail::require_same_size(x, y);
  detail::require_interior(x);
  detail::require_interior(y);
  using std::log;
  const auto logratio = (x.array().log() - y.array().log()).eval();
  return logratio.maxCoeff() - logratio.minCoeff();
}

inline double hilbert_distance(const ConeVector& x, const ConeVector& y) {
  return hilbert_distance(x.coords(), y.coords());
}

/// ||h||_x = max_i h_i / x_i - min_j h_j / x_j.
template <typename DerivedH, typename DerivedX>
typename DerivedH::Scalar finsler_seminorm(const Eigen::MatrixBase<DerivedH>& h,
                                           const Eigen::MatrixBase<DerivedX>& x) {
  detail::require_same_size(h, x);
  detail::require_interior(x);
  const auto ratio = (h.array() / x.array()).eval();
  return ratio.maxCoeff() - ratio.minCoeff();
}

inline double finsler_seminorm(const Eigen::VectorXd& h, const ConeVector& x) {
  return finsler_seminorm(h, x.coords());
}

/// inf_a <q, |m - a id| x> / <q, x> at a single point x of the closed cone
/// (x != 0). The objective is convex piecewise linear in a with breakpoints
/// at the diagonal entries, minimised at their q_j x_j weighted median.
double payoff_lipschitz_local(const Eigen::VectorXd& q, const Eigen::MatrixXd& m,
                              const Eigen::VectorXd& x);

/// Sampled estimate of sup_{x in S} payoff_lipschitz_local(q, m, x) over
/// `samples` uniform simplex points plus the n simplex vertices. This is a
/// lower estimate of the true supremum.
double payoff_lipschitz_bound(const ConeVector& q, const MetzlerMatrix& m, int samples,
                              std::uint64_t seed = 0x5eedULL);

/// min over vertices and i != j of 2 sqrt(m_ij m_ji); empty when some vertex
/// has a zero off-diagonal entry. For a segment each off-diagonal entry is
/// affine in alpha, so its minimum over [a, A] sits at an endpoint.
std::optional<double> contraction_rate_bound(const ControlSet& cs);

struct ContractionReport {
  double mu = 0.0;
  double t = 0.0;
  int trials = 0;
  int passes = 0;
  /// max over trials of d(Rx, Ry) / (exp(-mu t) d(x, y)); 0 when every pair
  /// was proportional.
  double worst_ratio = 0.0;

  std::string to_json() const;
};

/// Random trials of d(R(t,M)x, R(t,M)y) <= exp(-mu t) d(x,y) + 1e-8 with
/// random bang-bang signals. Trial k uses a generator seeded from (seed, k).
/// Throws MissingRate when contraction_rate_bound() is empty.
ContractionReport verify_contraction(const ControlSet& cs, double t, int trials,
                                     std::uint64_t seed = 0x5eedULL);

}  // namespace posgrowth
