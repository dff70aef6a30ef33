#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "posgrowth/dynamics.hpp"
#include "posgrowth/matrices.hpp"

namespace posgrowth {

/// Uniform grid of the simplex for n in {2, 3}. For n = 2 node k is
/// (1 - k/N, k/N); for n = 3 nodes are (i, j, N - i - j) / N ordered
/// lexicographically in (i, j), and cells are the two triangles of each
/// lattice square.
class SimplexGrid {
 public:
  SimplexGrid(int n, int resolution);

  int dim() const noexcept { return n_; }
  int resolution() const noexcept { return N_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  double spacing() const noexcept { return 1.0 / N_; }
  const Eigen::VectorXd& node(std::size_t k) const { return nodes_[k]; }

  /// Node closest (l1) to the barycentre.
  std::size_t anchor() const noexcept { return anchor_; }

  /// Piecewise-linear interpolation stencil of the cell containing y.
  struct Stencil {
    std::array<std::size_t, 3> nodes{};
    std::array<double, 3> weights{};
    int count = 0;
  };
  Stencil locate(const Eigen::VectorXd& y) const;

  double interpolate(const Eigen::VectorXd& values, const Eigen::VectorXd& y) const;

 private:
  std::size_t index(int i, int j) const;

  int n_;
  int N_;
  std::vector<Eigen::VectorXd> nodes_;
  std::size_t anchor_ = 0;
};

/// Largest time step with ||dt b(y, m)||_1 <= h over all nodes and vertices.
double cfl_step(const ControlSet& cs, const SimplexGrid& grid);

/// One step of the semi-Lagrangian dynamic programming operator
///   (T w)(y) = max_m [ dt l(y, m) + discount * Interp(w, clamp(y + dt b(y, m))) ]
/// with the maximum over the vertices of the control set (lowest index wins
/// ties). Feet and stencils are precomputed.
class SemiLagrangianOperator {
 public:
  SemiLagrangianOperator(const ControlSet& cs, const SimplexGrid& grid, double dt,
                         double discount = 1.0);

  Eigen::VectorXd apply(const Eigen::VectorXd& w, std::vector<int>* argmax = nullptr) const;

  /// Policy evaluation for a fixed feedback. Average reward (discount 1):
  /// solves w = r + P w - g with w(anchor) = 0 and returns w, g in `gain`.
  /// Discounted: solves w = r + discount P w. Returns false when the sparse
  /// factorisation fails.
  bool evaluate(const std::vector<int>& policy, Eigen::VectorXd& w, double& gain) const;

  std::size_t size() const noexcept { return grid_->size(); }
  std::size_t controls() const noexcept { return controls_; }
  double dt() const noexcept { return dt_; }

 private:
  struct Move {
    double reward = 0.0;
    SimplexGrid::Stencil stencil;
  };
  const Move& move(std::size_t node, int control) const {
    return moves_[node * controls_ + static_cast<std::size_t>(control)];
  }

  const SimplexGrid* grid_;
  std::size_t controls_;
  double dt_;
  double discount_;
  std::vector<Move> moves_;
};

struct HJSolution {
  SimplexGrid grid;
  ControlSet control_set;
  double dt = 0.0;
  Eigen::VectorXd u;          // anchored at grid.anchor()
  double lambda = 0.0;
  std::vector<int> feedback;  // vertex index per node
  long iterations = 0;
  double residual = 0.0;

  /// Vertex selected by the one-step lookahead argmax at an arbitrary point,
  /// using the interpolated eigenfunction on the containing cell.
  int feedback_at(const Eigen::VectorXd& y) const;
};

/// Relative value iteration for -lambda + H(Du, y) = 0. Sweeps are
/// interleaved with policy-evaluation steps; the exit test is always a plain
/// sweep whose sup-norm change of the anchored iterate is <= tol.
/// dt <= 0 selects cfl_step(). Throws CFLViolation, NoConvergence.
HJSolution solve_ergodic(const ControlSet& cs, const SimplexGrid& grid, double dt,
                         double tol = 1e-9, long max_iter = 200000);

/// Discounted cross-check: returns eps * V_eps(anchor) where V_eps solves the
/// scheme with per-step discount exp(-eps dt).
double solve_discounted(const ControlSet& cs, const SimplexGrid& grid, double dt, double eps,
                        double tol = 1e-10, long max_iter = 200000);

/// Closed-loop y' = b(y, m*(y)), control re-evaluated every step and held
/// within it. logmass holds the running payoff integral.
Trajectory feedback_trajectory(const HJSolution& sol, const SimplexPoint& y0, double horizon,
                               double dt);

struct Attractor {
  enum class Kind { FixedPoint, LimitCycle, Undetermined };
  Kind kind = Kind::Undetermined;
  Eigen::VectorXd point;  // FixedPoint: terminal state
  double period = 0.0;    // LimitCycle: mean recurrence time
  double period_cv = 0.0;
  int recurrences = 0;
};

const char* to_string(Attractor::Kind k);

/// Post-transient classification, distances in l1 (see README for the
/// precise rules).
Attractor classify_attractor(const Trajectory& traj, double transient, double tol_fix,
                             double tol_cycle);

struct Slack {
  double slack = 0.0;       // lambda - max_m lambda(m)
  double grid_error = 0.0;  // |lambda(N) - lambda(N/2)|
  double best_constant = 0.0;
  bool strict = false;      // slack > 3 grid_error
};

/// Compares the solver's lambda with the best constant control (segment:
/// find_alpha_star; vertices: max vertex Perron value). Re-solves on N/2.
Slack lambda_vs_constant(const HJSolution& sol, const ControlSet& cs);

/// JSON header {n, N, lambda, iterations, residual}.
std::string solution_header_json(const HJSolution& sol);

/// CSV `y1,...,yn,u,feedback_vertex`, one row per node.
void write_solution_csv(std::ostream& os, const HJSolution& sol);

}  // namespace posgrowth
