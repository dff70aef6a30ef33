#include "posgrowth/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "posgrowth/ode.hpp"

namespace posgrowth {

namespace {

constexpr double kClamp = 1e-15;

void require_dim(Eigen::Index got, Eigen::Index want) {
  if (got != want) {
    std::ostringstream os;
    os << "dimension " << got << " does not match control set dimension " << want;
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
}

int steps_for(double duration, double dt) {
  return std::max(1, static_cast<int>(std::ceil(duration / dt - 1e-9)));
}

void check_signal(const ControlSignal& sig, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::StepTooLarge, "time step must be positive and finite");
  }
  for (const auto& p : sig.pieces) {
    if (!(p.duration > 0.0) || !std::isfinite(p.duration)) {
      throw Error(ErrorCode::OutOfRange, "control pieces need positive finite durations");
    }
  }
  if (!sig.pieces.empty() && dt > sig.min_piece() * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "dt = " << dt << " exceeds the shortest control piece " << sig.min_piece();
    throw Error(ErrorCode::StepTooLarge, os.str());
  }
}

// Renormalises onto S; throws on components that went genuinely negative.
void renormalise(Eigen::VectorXd& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) < 0.0) {
      if (y(i) > -kClamp) {
        y(i) = 0.0;
      } else {
        throw Error(ErrorCode::NonPositiveState,
                    "projected state left the simplex; reduce dt");
      }
    }
  }
  y /= y.sum();
}

// Drives y' = b(y, m(t)) through `sig`, calling visit(t, y, payoff-integral)
// after every step.
template <typename Visit>
void run_projected(Eigen::VectorXd y, const ControlSet& cs, const ControlSignal& sig,
                   double dt, Visit&& visit) {
  double t = 0.0;
  double integral = 0.0;
  for (const auto& piece : sig.pieces) {
    const Eigen::MatrixXd m = cs.matrix(piece.control);
    const int steps = steps_for(piece.duration, dt);
    const double h = piece.duration / steps;
    auto f = [&m](const Eigen::VectorXd& z) { return field_of(z, m); };
    for (int s = 0; s < steps; ++s) {
      const double l0 = payoff_of(y, m);
      y = rk4_step(f, y, h);
      renormalise(y);
      integral += 0.5 * h * (l0 + payoff_of(y, m));
      t += h;
      visit(t, y, integral);
    }
  }
}

}  // namespace

SimplexPoint::SimplexPoint(Eigen::VectorXd coords) : coords_(std::move(coords)) {
  if (coords_.size() < 1) throw Error(ErrorCode::Domain, "empty simplex point");
  for (Eigen::Index i = 0; i < coords_.size(); ++i) {
    if (!std::isfinite(coords_(i)) || coords_(i) <= -kClamp) {
      throw Error(ErrorCode::Domain, "simplex point has a negative or non-finite coordinate");
    }
    if (coords_(i) < 0.0) coords_(i) = 0.0;
  }
  const double s = coords_.sum();
  if (!(s > 0.0)) throw Error(ErrorCode::Domain, "simplex point has zero mass");
  coords_ /= s;
}

double ControlSignal::duration() const {
  double d = 0.0;
  for (const auto& p : pieces) d += p.duration;
  return d;
}

double ControlSignal::min_piece() const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& p : pieces) d = std::min(d, p.duration);
  return d;
}

ControlSignal ControlSignal::constant(Control c, double duration) {
  return ControlSignal{{ControlPiece{duration, c}}};
}

double payoff(const SimplexPoint& y, const MetzlerMatrix& m) {
  require_dim(y.size(), m.dim());
  return payoff_of(y.coords(), m.entries());
}

Eigen::VectorXd field(const SimplexPoint& y, const MetzlerMatrix& m) {
  require_dim(y.size(), m.dim());
  return field_of(y.coords(), m.entries());
}

Trajectory integrate_ambient(const Eigen::VectorXd& x0, const ControlSet& cs,
                             const ControlSignal& sig, double dt) {
  require_dim(x0.size(), cs.dim());
  check_signal(sig, dt);
  if (!(x0.array() > 0.0).all()) {
    throw Error(ErrorCode::Domain, "initial state must be componentwise positive");
  }
  Trajectory traj;
  Eigen::VectorXd x = x0;
  double t = 0.0;
  traj.times.push_back(t);
  traj.states.push_back(x);
  traj.logmass.push_back(std::log(x.sum()));
  for (const auto& piece : sig.pieces) {
    const int steps = steps_for(piece.duration, dt);
    const double h = piece.duration / steps;
    const Eigen::MatrixXd prop = rk4_linear_propagator(cs.matrix(piece.control), h);
    for (int s = 0; s < steps; ++s) {
      x = prop * x;
      if (!(x.array() > 0.0).all() || !x.allFinite()) {
        throw Error(ErrorCode::NonPositiveState,
                    "ambient state lost positivity; reduce dt");
      }
      t += h;
      traj.times.push_back(t);
      traj.states.push_back(x);
      traj.logmass.push_back(std::log(x.sum()));
    }
  }
  return traj;
}

Trajectory integrate_projected(const SimplexPoint& y0, const ControlSet& cs,
                               const ControlSignal& sig, double dt) {
  require_dim(y0.size(), cs.dim());
  check_signal(sig, dt);
  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(y0.coords());
  traj.logmass.push_back(0.0);
  run_projected(y0.coords(), cs, sig, dt,
                [&](double t, const Eigen::VectorXd& y, double integral) {
                  traj.times.push_back(t);
                  traj.states.push_back(y);
                  traj.logmass.push_back(integral);
                });
  return traj;
}

ControlSignal periodic_extension(const ControlSignal& sig, double duration) {
  if (sig.pieces.empty() || !(sig.duration() > 0.0)) {
    throw Error(ErrorCode::OutOfRange, "cannot extend an empty signal");
  }
  ControlSignal out;
  double remaining = duration;
  while (remaining > 1e-12 * duration) {
    for (const auto& p : sig.pieces) {
      if (remaining <= 1e-12 * duration) break;
      const double d = std::min(p.duration, remaining);
      out.pieces.push_back({d, p.control});
      remaining -= d;
    }
  }
  return out;
}

double growth_rate(const SimplexPoint& y0, const ControlSet& cs, const ControlSignal& sig,
                   double horizon, double dt) {
  require_dim(y0.size(), cs.dim());
  check_signal(sig, dt);
  if (!(horizon >= 1.0)) {
    throw Error(ErrorCode::OutOfRange, "growth_rate needs horizon >= 1");
  }
  const ControlSignal full = periodic_extension(sig, horizon);
  double total = 0.0;
  double end = 0.0;
  run_projected(y0.coords(), cs, full, dt, [&](double t, const Eigen::VectorXd&, double integral) {
    total = integral;
    end = t;
  });
  return total / end;
}

ControlSignal random_bang_bang(Rng& rng, const ControlSet& cs, double duration,
                               double mean_piece, double min_piece) {
  ControlSignal sig;
  std::exponential_distribution<double> length(1.0 / mean_piece);
  std::uniform_int_distribution<std::size_t> pick(0, cs.vertex_count() - 1);
  double remaining = duration;
  const double shortest = min_piece > 0.0 ? min_piece : 1e-3 * mean_piece;
  while (remaining > 0.0) {
    double d = std::max(length(rng), shortest);
    if (remaining - d < shortest) d = remaining;
    sig.pieces.push_back({d, VertexIndex{pick(rng)}});
    remaining -= d;
  }
  return sig;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, int stride) {
  stride = std::max(stride, 1);
  const Eigen::Index n = traj.states.empty() ? 0 : traj.states.front().size();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",y" << i + 1;
  os << ",logmass\n";
  os << std::setprecision(17);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (k % static_cast<std::size_t>(stride) != 0 && k + 1 != traj.size()) continue;
    os << traj.times[k];
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << traj.states[k](i);
    os << ',' << traj.logmass[k] << '\n';
  }
}

}  // namespace posgrowth
