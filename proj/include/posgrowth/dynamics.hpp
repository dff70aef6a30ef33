#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

#include "posgrowth/matrices.hpp"
#include "posgrowth/random.hpp"

namespace posgrowth {

/// Point of the probability simplex S = {y >= 0, <1, y> = 1}. Components in
/// (-1e-15, 0) are clamped to zero and the coordinates are renormalised on
/// construction; anything more negative is a Domain error.
class SimplexPoint {
 public:
  explicit SimplexPoint(Eigen::VectorXd coords);

  const Eigen::VectorXd& coords() const noexcept { return coords_; }
  Eigen::Index size() const noexcept { return coords_.size(); }
  double operator[](Eigen::Index i) const { return coords_(i); }

 private:
  Eigen::VectorXd coords_;
};

struct ControlPiece {
  double duration = 0.0;
  Control control;
};

/// Piecewise-constant control realisation.
struct ControlSignal {
  std::vector<ControlPiece> pieces;

  double duration() const;
  double min_piece() const;
  static ControlSignal constant(Control c, double duration);
};

/// Recorded path. For projected runs `logmass` accumulates the payoff
/// integral, i.e. log <1, x(t)> - log <1, x(0)>; for ambient runs it is
/// log <1, x(t)>.
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<double> logmass;

  std::size_t size() const noexcept { return times.size(); }
  double horizon() const { return times.empty() ? 0.0 : times.back() - times.front(); }
};

/// l(y, m) = <1, m y>.
template <typename DerivedY, typename DerivedM>
typename DerivedY::Scalar payoff_of(const Eigen::MatrixBase<DerivedY>& y,
                                    const Eigen::MatrixBase<DerivedM>& m) {
  return (m * y).sum();
}

/// b(y, m) = m y - l(y, m) y; tangent to S.
template <typename DerivedY, typename DerivedM>
Eigen::Matrix<typename DerivedY::Scalar, Eigen::Dynamic, 1> field_of(
    const Eigen::MatrixBase<DerivedY>& y, const Eigen::MatrixBase<DerivedM>& m) {
  const Eigen::Matrix<typename DerivedY::Scalar, Eigen::Dynamic, 1> my = m * y;
  return my - my.sum() * y;
}

double payoff(const SimplexPoint& y, const MetzlerMatrix& m);
Eigen::VectorXd field(const SimplexPoint& y, const MetzlerMatrix& m);

/// RK4 integration of x' = m(t) x with steps aligned to piece boundaries.
/// Throws StepTooLarge (dt above the shortest piece) and NonPositiveState.
Trajectory integrate_ambient(const Eigen::VectorXd& x0, const ControlSet& cs,
                             const ControlSignal& sig, double dt);

/// RK4 integration of y' = b(y, m(t)), renormalised onto S after every step.
Trajectory integrate_projected(const SimplexPoint& y0, const ControlSet& cs,
                               const ControlSignal& sig, double dt);

/// (1/T) int_0^T l(y(s), M(s)) ds along the projected trajectory. A signal
/// shorter than the horizon is repeated periodically.
double growth_rate(const SimplexPoint& y0, const ControlSet& cs, const ControlSignal& sig,
                   double horizon, double dt);

/// Bang-bang signal over `duration` with exponentially distributed piece
/// lengths of the given mean and uniformly drawn vertices. Pieces are at
/// least min_piece long (default 1e-3 mean_piece).
ControlSignal random_bang_bang(Rng& rng, const ControlSet& cs, double duration,
                               double mean_piece, double min_piece = 0.0);

/// Repeats (or truncates) `sig` to cover exactly `duration`.
ControlSignal periodic_extension(const ControlSignal& sig, double duration);

/// CSV with header t,y1,...,yn,logmass; every `stride`-th row plus the last.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, int stride = 1);

/// l1 distance.
inline double l1_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().sum();
}

}  // namespace posgrowth
