#pragma once

#include <Eigen/Dense>

namespace posgrowth {

/// One classical fourth-order Runge-Kutta step for an autonomous field f.
template <typename State, typename Field>
State rk4_step(const Field& f, const State& x, double h) {
  const State k1 = f(x);
  const State k2 = f((x + 0.5 * h * k1).eval());
  const State k3 = f((x + 0.5 * h * k2).eval());
  const State k4 = f((x + h * k3).eval());
  return (x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).eval();
}

/// For x' = m x the RK4 step is multiplication by the degree-4 Taylor
/// polynomial of exp(h m).
inline Eigen::MatrixXd rk4_linear_propagator(const Eigen::MatrixXd& m, double h) {
  const Eigen::Index n = m.rows();
  const Eigen::MatrixXd hm = h * m;
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sum = term;
  for (int k = 1; k <= 4; ++k) {
    term = (term * hm / static_cast<double>(k)).eval();
    sum += term;
  }
  return sum;
}

}  // namespace posgrowth
