#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "posgrowth/dynamics.hpp"
#include "posgrowth/matrices.hpp"

namespace posgrowth {

/// Region between the two extremal constant-control trajectories of a
/// segment: from z_a under control A, and from z_A under control a.
struct ErgodicBoundary {
  int n = 0;
  Trajectory curve_from_low;
  Trajectory curve_from_high;
  /// n = 3: closed polyline (last point joins the first); n = 2: the two
  /// interval endpoints {z_a, z_A}.
  std::vector<Eigen::VectorXd> polyline;
  bool pruned = false;
  double delta = 0.0;  // min coordinate along both curves
};

/// Integrates both curves with RK4 step dt. Throws HorizonTooShort when a
/// curve ends farther than 1e-6 (l1) from its target Perron point.
ErgodicBoundary trace_boundary(const ControlSet& cs, double horizon, double dt);

/// Points within kBoundaryTol (l1) of the boundary count as inside.
inline constexpr double kBoundaryTol = 1e-6;

bool contains(const ErgodicBoundary& b, const SimplexPoint& y);

/// l1 distance to the set (0 inside).
double distance_to_set(const ErgodicBoundary& b, const Eigen::VectorXd& y);

struct InvarianceReport {
  int trials = 0;
  int inside_pass = 0;
  int attract_pass = 0;
  double delta_boundary = 0.0;
  bool pruned = false;
  std::string to_json() const;
};

/// Invariance: random starts inside, random bang-bang signals, the path must
/// stay within 1e-3 of the set. Attraction: random starts outside, terminal
/// distance below 1e-2 at `horizon`.
InvarianceReport invariance_check(const ErgodicBoundary& b, const ControlSet& cs, int trials,
                                  double horizon, std::uint64_t seed = 0x5eed, double dt = 0.01);

/// CSV `y1,...,yn`, one polyline vertex per row.
void write_boundary_csv(std::ostream& os, const ErgodicBoundary& b);

}  // namespace posgrowth
