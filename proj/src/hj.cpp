#include "posgrowth/hj.hpp"

#include "json.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "posgrowth/ode.hpp"
#include "posgrowth/spectral_derivatives.hpp"

namespace posgrowth {

namespace {

// Euler foot renormalised onto S.
Eigen::VectorXd clamp_to_simplex(Eigen::VectorXd y) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) < 0.0) y(i) = 0.0;
  }
  return y / y.sum();
}

}  // namespace

// ---------------------------------------------------------------------------
// SimplexGrid

SimplexGrid::SimplexGrid(int n, int resolution) : n_(n), N_(resolution) {
  if (n != 2 && n != 3) {
    throw Error(ErrorCode::DimensionMismatch, "the grid solver supports n = 2 and n = 3 only");
  }
  if (resolution < 2) throw Error(ErrorCode::OutOfRange, "grid resolution must be >= 2");
  if (n == 2) {
    for (int k = 0; k <= N_; ++k) {
      Eigen::VectorXd y(2);
      y << 1.0 - static_cast<double>(k) / N_, static_cast<double>(k) / N_;
      nodes_.push_back(y);
    }
  } else {
    for (int i = 0; i <= N_; ++i) {
      for (int j = 0; j <= N_ - i; ++j) {
        Eigen::VectorXd y(3);
        y << static_cast<double>(i) / N_, static_cast<double>(j) / N_,
            static_cast<double>(N_ - i - j) / N_;
        nodes_.push_back(y);
      }
    }
  }
  const Eigen::VectorXd centre = Eigen::VectorXd::Constant(n_, 1.0 / n_);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const double d = l1_distance(nodes_[k], centre);
    if (d < best - 1e-15) {
      best = d;
      anchor_ = k;
    }
  }
}

std::size_t SimplexGrid::index(int i, int j) const {
  // Rows i' < i hold N - i' + 1 nodes each.
  const long offset = static_cast<long>(i) * (N_ + 1) - static_cast<long>(i) * (i - 1) / 2;
  return static_cast<std::size_t>(offset + j);
}

SimplexGrid::Stencil SimplexGrid::locate(const Eigen::VectorXd& y) const {
  Stencil st;
  if (n_ == 2) {
    const double s = std::clamp(y(1), 0.0, 1.0) * N_;
    const int k = std::clamp(static_cast<int>(std::floor(s)), 0, N_ - 1);
    const double f = std::clamp(s - k, 0.0, 1.0);
    st.count = 2;
    st.nodes = {static_cast<std::size_t>(k), static_cast<std::size_t>(k + 1), 0};
    st.weights = {1.0 - f, f, 0.0};
    return st;
  }
  const double s1 = std::clamp(y(0), 0.0, 1.0) * N_;
  const double s2 = std::clamp(y(1), 0.0, 1.0) * N_;
  const int i = std::clamp(static_cast<int>(std::floor(s1)), 0, N_ - 1);
  const int j = std::clamp(static_cast<int>(std::floor(s2)), 0, N_ - 1 - i);
  double f1 = std::clamp(s1 - i, 0.0, 1.0);
  double f2 = std::clamp(s2 - j, 0.0, 1.0);
  const bool upper_exists = i + j + 2 <= N_;
  st.count = 3;
  if (f1 + f2 <= 1.0 || !upper_exists) {
    if (f1 + f2 > 1.0) {
      const double scale = 1.0 / (f1 + f2);
      f1 *= scale;
      f2 *= scale;
    }
    st.nodes = {index(i, j), index(i + 1, j), index(i, j + 1)};
    st.weights = {1.0 - f1 - f2, f1, f2};
  } else {
    st.nodes = {index(i + 1, j), index(i, j + 1), index(i + 1, j + 1)};
    st.weights = {1.0 - f2, 1.0 - f1, f1 + f2 - 1.0};
  }
  return st;
}

double SimplexGrid::interpolate(const Eigen::VectorXd& values, const Eigen::VectorXd& y) const {
  const Stencil st = locate(y);
  double v = 0.0;
  for (int k = 0; k < st.count; ++k) v += st.weights[k] * values(static_cast<Eigen::Index>(st.nodes[k]));
  return v;
}

double cfl_step(const ControlSet& cs, const SimplexGrid& grid) {
  if (cs.dim() != grid.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "grid and control set differ in dimension");
  }
  double speed = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (const auto& m : cs.vertex_matrices()) {
      speed = std::max(speed, field_of(grid.node(k), m.entries()).cwiseAbs().sum());
    }
  }
  return speed > 0.0 ? grid.spacing() / speed : grid.spacing();
}

// ---------------------------------------------------------------------------
// SemiLagrangianOperator

SemiLagrangianOperator::SemiLagrangianOperator(const ControlSet& cs, const SimplexGrid& grid,
                                               double dt, double discount)
    : grid_(&grid), controls_(cs.vertex_count()), dt_(dt), discount_(discount) {
  if (cs.dim() != grid.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "grid and control set differ in dimension");
  }
  moves_.resize(grid.size() * controls_);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Eigen::VectorXd& y = grid.node(k);
    for (std::size_t c = 0; c < controls_; ++c) {
      const Eigen::MatrixXd& m = cs.vertex_matrices()[c].entries();
      Move& mv = moves_[k * controls_ + c];
      mv.reward = dt * payoff_of(y, m);
      mv.stencil = grid.locate(clamp_to_simplex(y + dt * field_of(y, m)));
    }
  }
}

Eigen::VectorXd SemiLagrangianOperator::apply(const Eigen::VectorXd& w,
                                              std::vector<int>* argmax) const {
  const std::size_t n = size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  if (argmax) argmax->assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    double best = -std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (std::size_t c = 0; c < controls_; ++c) {
      const Move& mv = move(k, static_cast<int>(c));
      double cont = 0.0;
      for (int s = 0; s < mv.stencil.count; ++s) {
        cont += mv.stencil.weights[s] * w(static_cast<Eigen::Index>(mv.stencil.nodes[s]));
      }
      const double v = mv.reward + discount_ * cont;
      if (v > best) {
        best = v;
        best_c = static_cast<int>(c);
      }
    }
    out(static_cast<Eigen::Index>(k)) = best;
    if (argmax) (*argmax)[k] = best_c;
  }
  return out;
}

bool SemiLagrangianOperator::evaluate(const std::vector<int>& policy, Eigen::VectorXd& w,
                                      double& gain) const {
  const auto n = static_cast<Eigen::Index>(size());
  const bool average = discount_ == 1.0;
  const auto anchor = static_cast<Eigen::Index>(grid_->anchor());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * 5);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Move& mv = move(static_cast<std::size_t>(k), policy[static_cast<std::size_t>(k)]);
    rhs(k) = mv.reward;
    if (!average || k != anchor) triplets.emplace_back(k, k, 1.0);
    for (int s = 0; s < mv.stencil.count; ++s) {
      const auto q = static_cast<Eigen::Index>(mv.stencil.nodes[s]);
      if (average && q == anchor) continue;
      triplets.emplace_back(k, q, -discount_ * mv.stencil.weights[s]);
    }
    // The anchor column carries the gain in the average-reward system.
    if (average) triplets.emplace_back(k, anchor, 1.0);
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(triplets.begin(), triplets.end());
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) return false;
  Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) return false;
  if (average) {
    gain = x(anchor);
    x(anchor) = 0.0;
  } else {
    gain = 0.0;
  }
  w = std::move(x);
  return true;
}

// ---------------------------------------------------------------------------
// Solvers

int HJSolution::feedback_at(const Eigen::VectorXd& y) const {
  int best_c = 0;
  double best = -std::numeric_limits<double>::infinity();
  const auto& verts = control_set.vertex_matrices();
  for (std::size_t c = 0; c < verts.size(); ++c) {
    const Eigen::MatrixXd& m = verts[c].entries();
    const double v = dt * payoff_of(y, m) +
                     grid.interpolate(u, clamp_to_simplex(y + dt * field_of(y, m)));
    if (v > best) {
      best = v;
      best_c = static_cast<int>(c);
    }
  }
  return best_c;
}

namespace {

double resolve_dt(const ControlSet& cs, const SimplexGrid& grid, double dt) {
  const double cfl = cfl_step(cs, grid);
  if (dt <= 0.0) return cfl;
  if (dt > cfl * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "dt = " << dt << " exceeds the CFL bound " << cfl;
    throw Error(ErrorCode::CFLViolation, os.str());
  }
  return dt;
}

// Policy evaluation is attempted every kEvalEvery sweeps and whenever the
// greedy policy changed.
constexpr long kEvalEvery = 50;

}  // namespace

HJSolution solve_ergodic(const ControlSet& cs, const SimplexGrid& grid, double dt, double tol,
                         long max_iter) {
  dt = resolve_dt(cs, grid, dt);
  const SemiLagrangianOperator op(cs, grid, dt);
  const auto anchor = static_cast<Eigen::Index>(grid.anchor());

  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  std::vector<int> policy;
  std::vector<int> last_policy;
  double shift = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  long iter = 0;
  bool evaluation_ok = true;
  while (iter < max_iter) {
    Eigen::VectorXd next = op.apply(w, &policy);
    shift = next(anchor);
    next.array() -= shift;
    residual = (next - w).cwiseAbs().maxCoeff();
    w = std::move(next);
    ++iter;
    if (residual <= tol) break;
    if (evaluation_ok && (policy != last_policy || iter % kEvalEvery == 0)) {
      Eigen::VectorXd evaluated;
      double gain = 0.0;
      evaluation_ok = op.evaluate(policy, evaluated, gain);
      // Multichain policies give singular systems. A valid evaluation satisfies
      // T w >= w + gain everywhere, since the policy itself attains equality.
      if (evaluation_ok) {
        const double scale = 1.0 + w.cwiseAbs().maxCoeff();
        const double size = evaluated.cwiseAbs().maxCoeff();
        const double slack = (op.apply(evaluated) - evaluated).minCoeff() - gain;
        if (size <= 1e3 * scale && slack >= -1e-9 * scale) w = std::move(evaluated);
      }
      last_policy = policy;
    }
  }
  if (!(residual <= tol)) throw NoConvergence(iter, residual);

  HJSolution sol{grid, cs, dt, w, shift / dt, {}, iter, residual};
  op.apply(w, &sol.feedback);
  return sol;
}

double solve_discounted(const ControlSet& cs, const SimplexGrid& grid, double dt, double eps,
                        double tol, long max_iter) {
  if (!(eps > 0.0)) throw Error(ErrorCode::OutOfRange, "discount rate must be positive");
  dt = resolve_dt(cs, grid, dt);
  const double beta = std::exp(-eps * dt);
  const SemiLagrangianOperator op(cs, grid, dt, beta);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  std::vector<int> policy;
  std::vector<int> last_policy;
  double residual = std::numeric_limits<double>::infinity();
  long iter = 0;
  bool evaluation_ok = true;
  while (iter < max_iter) {
    Eigen::VectorXd next = op.apply(w, &policy);
    residual = (next - w).cwiseAbs().maxCoeff();
    w = std::move(next);
    ++iter;
    if (residual <= tol * (1.0 + w.cwiseAbs().maxCoeff())) break;
    if (evaluation_ok && (policy != last_policy || iter % kEvalEvery == 0)) {
      Eigen::VectorXd evaluated;
      double gain = 0.0;
      evaluation_ok = op.evaluate(policy, evaluated, gain);
      if (evaluation_ok) w = std::move(evaluated);
      last_policy = policy;
    }
  }
  if (!(residual <= tol * (1.0 + w.cwiseAbs().maxCoeff()))) throw NoConvergence(iter, residual);
  // (1 - beta) / dt = eps up to O(eps^2 dt); it makes constant payoffs exact.
  return (1.0 - beta) / dt * w(static_cast<Eigen::Index>(grid.anchor()));
}

Trajectory feedback_trajectory(const HJSolution& sol, const SimplexPoint& y0, double horizon,
                               double dt) {
  if (y0.size() != sol.grid.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "initial point and solution differ in dimension");
  }
  if (!(dt > 0.0) || !(horizon > 0.0)) {
    throw Error(ErrorCode::StepTooLarge, "feedback integration needs positive dt and horizon");
  }
  const long steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
  const double h = horizon / static_cast<double>(steps);
  const auto& verts = sol.control_set.vertex_matrices();

  Trajectory traj;
  traj.times.reserve(static_cast<std::size_t>(steps) + 1);
  traj.states.reserve(static_cast<std::size_t>(steps) + 1);
  traj.logmass.reserve(static_cast<std::size_t>(steps) + 1);
  Eigen::VectorXd y = y0.coords();
  double integral = 0.0;
  traj.times.push_back(0.0);
  traj.states.push_back(y);
  traj.logmass.push_back(0.0);
  for (long s = 1; s <= steps; ++s) {
    const Eigen::MatrixXd& m = verts[static_cast<std::size_t>(sol.feedback_at(y))].entries();
    const double l0 = payoff_of(y, m);
    y = rk4_step([&m](const Eigen::VectorXd& z) { return field_of(z, m); }, y, h);
    y = SimplexPoint(y).coords();
    integral += 0.5 * h * (l0 + payoff_of(y, m));
    traj.times.push_back(static_cast<double>(s) * h);
    traj.states.push_back(y);
    traj.logmass.push_back(integral);
  }
  return traj;
}

const char* to_string(Attractor::Kind k) {
  switch (k) {
    case Attractor::Kind::FixedPoint: return "FixedPoint";
    case Attractor::Kind::LimitCycle: return "LimitCycle";
    case Attractor::Kind::Undetermined: return "Undetermined";
  }
  return "Undetermined";
}

Attractor classify_attractor(const Trajectory& traj, double transient, double tol_fix,
                             double tol_cycle) {
  Attractor out;
  if (traj.size() < 2 || traj.horizon() < 2.0 * transient) return out;
  const double t0 = traj.times.front() + transient;
  const double t_end = traj.times.back();
  std::size_t start = 0;
  while (start < traj.size() && traj.times[start] < t0) ++start;
  if (start + 1 >= traj.size()) return out;

  // Fixed point: every window of length transient/4 moves at most tol_fix.
  const double window = transient / 4.0;
  double max_disp = 0.0;
  for (std::size_t i = start, j = start; i < traj.size(); ++i) {
    if (traj.times[i] + window > t_end) break;
    while (j < traj.size() && traj.times[j] < traj.times[i] + window) ++j;
    if (j >= traj.size()) break;
    max_disp = std::max(max_disp, l1_distance(traj.states[j], traj.states[i]));
  }
  if (max_disp <= tol_fix) {
    out.kind = Attractor::Kind::FixedPoint;
    out.point = traj.states.back();
    return out;
  }

  // Limit cycle: returns to the post-transient reference state.
  const Eigen::VectorXd& ref = traj.states[start];
  std::vector<double> returns{traj.times[start]};
  bool away = false;
  bool near = false;
  double best_d = 0.0;
  double best_t = 0.0;
  double path = 0.0;
  for (std::size_t k = start + 1; k < traj.size(); ++k) {
    path += l1_distance(traj.states[k], traj.states[k - 1]);
    const double d = l1_distance(traj.states[k], ref);
    if (!away) {
      if (d > 4.0 * tol_cycle) away = true;
      continue;
    }
    if (d <= tol_cycle) {
      if (!near || d < best_d) {
        best_d = d;
        best_t = traj.times[k];
      }
      near = true;
    } else if (near) {
      returns.push_back(best_t);
      near = false;
      away = d > 4.0 * tol_cycle;
    }
  }
  const double speed = path / (t_end - traj.times[start]);
  if (returns.size() >= 4 && speed > tol_fix / transient) {
    std::vector<double> gaps;
    for (std::size_t k = 1; k < returns.size(); ++k) gaps.push_back(returns[k] - returns[k - 1]);
    double mean = 0.0;
    for (double g : gaps) mean += g;
    mean /= static_cast<double>(gaps.size());
    double var = 0.0;
    for (double g : gaps) var += (g - mean) * (g - mean);
    var /= static_cast<double>(gaps.size());
    const double cv = std::sqrt(var) / mean;
    out.recurrences = static_cast<int>(gaps.size());
    out.period_cv = cv;
    if (cv <= 0.05) {
      out.kind = Attractor::Kind::LimitCycle;
      out.period = mean;
    }
  }
  return out;
}

Slack lambda_vs_constant(const HJSolution& sol, const ControlSet& cs) {
  Slack s;
  if (cs.is_segment()) {
    s.best_constant = find_alpha_star(cs).lambda;
  } else {
    s.best_constant = -std::numeric_limits<double>::infinity();
    for (const auto& m : cs.vertex_matrices()) {
      s.best_constant = std::max(s.best_constant, perron_value(m));
    }
  }
  s.slack = sol.lambda - s.best_constant;
  const SimplexGrid coarse(sol.grid.dim(), std::max(2, sol.grid.resolution() / 2));
  const double dt = std::min(2.0 * sol.dt, cfl_step(cs, coarse));
  const HJSolution coarse_sol = solve_ergodic(cs, coarse, dt, std::max(sol.residual, 1e-9));
  s.grid_error = std::abs(sol.lambda - coarse_sol.lambda);
  s.strict = s.slack > 3.0 * s.grid_error;
  return s;
}

std::string solution_header_json(const HJSolution& sol) {
  nlohmann::json j{{"n", sol.grid.dim()},
                   {"N", sol.grid.resolution()},
                   {"lambda", sol.lambda},
                   {"iterations", sol.iterations},
                   {"residual", sol.residual}};
  return j.dump();
}

void write_solution_csv(std::ostream& os, const HJSolution& sol) {
  const int n = sol.grid.dim();
  for (int i = 0; i < n; ++i) os << 'y' << i + 1 << ',';
  os << "u,feedback_vertex\n" << std::setprecision(17);
  for (std::size_t k = 0; k < sol.grid.size(); ++k) {
    for (int i = 0; i < n; ++i) os << sol.grid.node(k)(i) << ',';
    os << sol.u(static_cast<Eigen::Index>(k)) << ',' << sol.feedback[k] << '\n';
  }
}

}  // namespace posgrowth
