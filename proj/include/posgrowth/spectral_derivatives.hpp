#pragma once

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "posgrowth/matrices.hpp"

namespace posgrowth {

// Second-order optimality quantities for a segment {G + alpha F} around a
// constant control alpha. All sums run over the non-Perron modes i >= 2 and
// are evaluated in complex arithmetic with the biorthonormal eigen-data of
// spectral(); the real part is returned once the imaginary residue has been
// checked (<= 1e-9, DefectiveSpectrum otherwise).

/// d lambda / d alpha = phi1 F e1.
double perron_derivative(const ControlSet& cs, double alpha);

struct AlphaStar {
  double alpha = 0.0;
  double lambda = 0.0;
  /// Maximiser sits at a or A.
  bool boundary = false;
};

/// Global maximiser of lambda(alpha) on [a, A]: 200-point grid, golden
/// section on the bracketing cells down to 1e-10, then a Newton polish on the
/// analytic derivative for interior maximisers.
AlphaStar find_alpha_star(const ControlSet& cs);

/// 2 sum (phi1 F e_i)(phi_i F e1) / (lambda1 - lambda_i).
double perron_second_derivative(const ControlSet& cs, double alpha);

/// Second derivative of the Floquet exponent along cos(omega t):
/// sum (lambda1 - lambda_i) / (omega^2 + (lambda1 - lambda_i)^2) (phi_i F e1)(phi1 F e_i).
double floquet_second_derivative_cos(const ControlSet& cs, double alpha, double omega);

/// Same quantity for an arbitrary T-periodic direction gamma given by
/// uniform cyclic samples gamma(jT/N), j = 0..N-1 (N >= 512):
/// 2 sum <gamma_i^2>_T (phi1 F e_i)(phi_i F e1) / (lambda1 - lambda_i), with
/// gamma_i the periodic solution of gamma_i' / (lambda1 - lambda_i) + gamma_i = gamma.
double floquet_second_derivative_general(const ControlSet& cs, double alpha,
                                         std::span<const double> gamma, double period);

/// Periodic response of the relaxation ODE y' = k (gamma - y) for complex
/// rate k with Re k > 0, gamma piecewise linear between the cyclic samples.
/// Exact integration against the Green's function, closed over periods by
/// the geometric series 1 / (1 - exp(-kT)).
Eigen::VectorXcd periodic_relaxation(std::span<const double> gamma, double period,
                                     std::complex<double> rate);

/// sum (lambda1 - lambda_i)(phi_i F e1)(phi1 F e_i); positive means some
/// fast periodic perturbation beats the constant control.
double high_frequency_criterion(const ControlSet& cs, double alpha);

/// phi1 F (G + alpha F - lambda1 I) F e1 (generalized Legendre quantity).
double legendre_value(const ControlSet& cs, double alpha);

/// Independent oracle: log(rho(Phi(T))) / T for Phi' = (G + alpha(t) F) Phi,
/// Phi(0) = I, RK4 with dt <= T/1000 (StepTooLarge otherwise).
double floquet_exponent_monodromy(const ControlSet& cs,
                                  const std::function<double(double)>& alpha,
                                  double period, double dt);

/// Sampled variant: alpha is interpolated linearly between cyclic samples and
/// the step count is a multiple of the sample count.
double floquet_exponent_monodromy(const ControlSet& cs, std::span<const double> alpha,
                                  double period, double dt);

struct CriteriaReport {
  double alpha_star = 0.0;
  double lambda_star = 0.0;
  bool interior = false;
  double perron_second = 0.0;
  double high_freq = 0.0;
  double legendre = 0.0;
  double identity_residual = 0.0;
  std::map<double, double> floquet_second_at;

  std::string to_json() const;
};

/// find_alpha_star followed by every criterion at the maximiser.
CriteriaReport build_report(const ControlSet& cs, const std::vector<double>& omegas);

/// CSV `omega,d2lambdaF`.
void write_omega_sweep_csv(std::ostream& os, const CriteriaReport& report);

}  // namespace posgrowth
