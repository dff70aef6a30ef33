#include "posgrowth/spectral_derivatives.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace posgrowth {

namespace {

using cd = std::complex<double>;

constexpr double kImagTolerance = 1e-9;
constexpr int kGridPoints = 200;

const Segment& segment_of(const ControlSet& cs) { return cs.as_segment(); }

MetzlerMatrix matrix_at(const Segment& s, double alpha) {
  return validate_metzler(s.G + alpha * s.F);
}

// Per-mode coupling coefficients around the Perron mode.
struct Modes {
  SpectralData data;
  Eigen::VectorXcd rate;    // k_i = lambda1 - lambda_i, i >= 1 (0-based)
  Eigen::VectorXcd out_in;  // (phi1 F e_i)(phi_i F e1)
};

Modes modes(const Segment& s, double alpha) {
  Modes m{spectral(matrix_at(s, alpha)), {}, {}};
  const Eigen::Index n = m.data.eigenvalues.size();
  const Eigen::MatrixXcd F = s.F.cast<cd>();
  const Eigen::VectorXcd Fe1 = F * m.data.right.col(0);
  const Eigen::RowVectorXcd phi1F = m.data.left.row(0) * F;
  m.rate.resize(n - 1);
  m.out_in.resize(n - 1);
  for (Eigen::Index i = 1; i < n; ++i) {
    m.rate(i - 1) = m.data.eigenvalues(0) - m.data.eigenvalues(i);
    const cd a = (phi1F * m.data.right.col(i))(0);
    const cd b = (m.data.left.row(i) * Fe1)(0);
    m.out_in(i - 1) = a * b;
  }
  return m;
}

double checked_real(cd value, const char* what) {
  const double scale = std::max(1.0, std::abs(value.real()));
  if (!(std::abs(value.imag()) <= kImagTolerance * scale)) {
    std::ostringstream os;
    os << what << ": imaginary residue " << value.imag() << " exceeds tolerance";
    throw Error(ErrorCode::DefectiveSpectrum, os.str());
  }
  return value.real();
}

double golden_max(const Segment& s, double lo, double hi) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto f = [&](double x) { return perron_value(matrix_at(s, x)); };
  double c = hi - invphi * (hi - lo);
  double d = lo + invphi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  while (hi - lo > 1e-10) {
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - invphi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + invphi * (hi - lo);
      fd = f(d);
    }
  }
  return 0.5 * (lo + hi);
}

Eigen::MatrixXd monodromy_rk4(const Segment& s, const std::function<double(double)>& alpha,
                              double period, int steps, double& log_scale) {
  const Eigen::Index n = s.G.rows();
  const double h = period / steps;
  auto gen = [&](double t) { return (s.G + alpha(t) * s.F).eval(); };
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
  log_scale = 0.0;
  for (int k = 0; k < steps; ++k) {
    const double t = k * h;
    const Eigen::MatrixXd m0 = gen(t);
    const Eigen::MatrixXd mh = gen(t + 0.5 * h);
    const Eigen::MatrixXd m1 = gen(t + h);
    const Eigen::MatrixXd k1 = m0 * phi;
    const Eigen::MatrixXd k2 = mh * (phi + 0.5 * h * k1);
    const Eigen::MatrixXd k3 = mh * (phi + 0.5 * h * k2);
    const Eigen::MatrixXd k4 = m1 * (phi + h * k3);
    phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double norm = phi.cwiseAbs().maxCoeff();
    phi /= norm;
    log_scale += std::log(norm);
  }
  return phi;
}

double log_spectral_radius(const Eigen::MatrixXd& phi) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(phi, false);
  return std::log(solver.eigenvalues().cwiseAbs().maxCoeff());
}

}  // namespace

double perron_derivative(const ControlSet& cs, double alpha) {
  const Segment& s = segment_of(cs);
  const PerronPair p = perron(matrix_at(s, alpha));
  return p.left.dot(s.F * p.right);
}

AlphaStar find_alpha_star(const ControlSet& cs) {
  const Segment& s = segment_of(cs);
  if (s.a == s.A) {
    return {s.a, perron_value(matrix_at(s, s.a)), true};
  }
  std::vector<double> grid(kGridPoints);
  std::vector<double> values(kGridPoints);
  int best = 0;
  for (int k = 0; k < kGridPoints; ++k) {
    grid[k] = s.a + (s.A - s.a) * k / (kGridPoints - 1);
    values[k] = perron_value(matrix_at(s, grid[k]));
    if (values[k] > values[best]) best = k;
  }
  const double lo = grid[std::max(best - 1, 0)];
  const double hi = grid[std::min(best + 1, kGridPoints - 1)];
  double alpha = golden_max(s, lo, hi);
  double lambda = perron_value(matrix_at(s, alpha));

  // Endpoints beat any interior candidate that does not strictly improve.
  for (double end : {s.a, s.A}) {
    const double v = perron_value(matrix_at(s, end));
    if (v >= lambda && std::abs(alpha - end) <= 1e-8 * (1.0 + std::abs(end))) {
      return {end, v, true};
    }
  }

  for (int it = 0; it < 8; ++it) {
    const double d1 = perron_derivative(cs, alpha);
    double d2 = 0.0;
    try {
      d2 = perron_second_derivative(cs, alpha);
    } catch (const Error&) {
      break;
    }
    if (!(d2 < 0.0)) break;
    const double next = alpha - d1 / d2;
    if (!(next > lo && next < hi)) break;
    const double v = perron_value(matrix_at(s, next));
    if (v < lambda - 1e-15 * (1.0 + std::abs(lambda))) break;
    const double moved = std::abs(next - alpha);
    alpha = next;
    lambda = std::max(lambda, v);
    if (moved <= 1e-15 * (1.0 + std::abs(alpha))) break;
  }
  return {alpha, lambda, false};
}

double perron_second_derivative(const ControlSet& cs, double alpha) {
  const Modes m = modes(segment_of(cs), alpha);
  cd sum = 0.0;
  for (Eigen::Index i = 0; i < m.rate.size(); ++i) sum += m.out_in(i) / m.rate(i);
  return checked_real(2.0 * sum, "perron_second_derivative");
}

double floquet_second_derivative_cos(const ControlSet& cs, double alpha, double omega) {
  if (!(omega > 0.0)) throw Error(ErrorCode::OutOfRange, "omega must be positive");
  const Modes m = modes(segment_of(cs), alpha);
  cd sum = 0.0;
  for (Eigen::Index i = 0; i < m.rate.size(); ++i) {
    const cd k = m.rate(i);
    sum += k / (omega * omega + k * k) * m.out_in(i);
  }
  return checked_real(sum, "floquet_second_derivative_cos");
}

Eigen::VectorXcd periodic_relaxation(std::span<const double> gamma, double period, cd rate) {
  const auto n = static_cast<Eigen::Index>(gamma.size());
  const double h = period / static_cast<double>(n);
  const cd z = rate * h;
  const cd decay = std::exp(-z);
  cd one_minus_over_z;  // (1 - e^{-z}) / z
  if (std::abs(z) < 1e-4) {
    one_minus_over_z = 1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0 + z * z * z * z / 120.0;
  } else {
    one_minus_over_z = (1.0 - decay) / z;
  }
  const cd wa = one_minus_over_z - decay;
  const cd wb = 1.0 - one_minus_over_z;
  auto g = [&](Eigen::Index j) { return gamma[static_cast<std::size_t>(j % n)]; };

  cd y = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) y = decay * y + wa * g(j) + wb * g(j + 1);
  y /= (1.0 - std::exp(-rate * period));

  Eigen::VectorXcd out(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out(j) = y;
    y = decay * y + wa * g(j) + wb * g(j + 1);
  }
  return out;
}

double floquet_second_derivative_general(const ControlSet& cs, double alpha,
                                         std::span<const double> gamma, double period) {
  if (gamma.size() < 512) {
    throw Error(ErrorCode::OutOfRange, "need at least 512 samples of gamma per period");
  }
  if (!(period > 0.0)) throw Error(ErrorCode::OutOfRange, "period must be positive");
  const Modes m = modes(segment_of(cs), alpha);
  cd sum = 0.0;
  for (Eigen::Index i = 0; i < m.rate.size(); ++i) {
    const Eigen::VectorXcd gi = periodic_relaxation(gamma, period, m.rate(i));
    const cd mean_sq = gi.array().square().mean();
    sum += mean_sq * m.out_in(i) / m.rate(i);
  }
  return checked_real(2.0 * sum, "floquet_second_derivative_general");
}

double high_frequency_criterion(const ControlSet& cs, double alpha) {
  const Modes m = modes(segment_of(cs), alpha);
  cd sum = 0.0;
  for (Eigen::Index i = 0; i < m.rate.size(); ++i) sum += m.rate(i) * m.out_in(i);
  return checked_real(sum, "high_frequency_criterion");
}

double legendre_value(const ControlSet& cs, double alpha) {
  const Segment& s = segment_of(cs);
  const MetzlerMatrix m = matrix_at(s, alpha);
  const PerronPair p = perron(m);
  const Eigen::Index n = s.G.rows();
  const Eigen::MatrixXd shifted =
      s.G + alpha * s.F - p.lambda * Eigen::MatrixXd::Identity(n, n);
  return p.left.dot(s.F * (shifted * (s.F * p.right)));
}

double floquet_exponent_monodromy(const ControlSet& cs,
                                  const std::function<double(double)>& alpha,
                                  double period, double dt) {
  if (!(period > 0.0)) throw Error(ErrorCode::OutOfRange, "period must be positive");
  if (!(dt > 0.0) || dt > period / 1000.0 * (1.0 + 1e-12)) {
    throw Error(ErrorCode::StepTooLarge, "monodromy integration needs dt <= T/1000");
  }
  const int steps = static_cast<int>(std::ceil(period / dt - 1e-9));
  double log_scale = 0.0;
  const Eigen::MatrixXd phi = monodromy_rk4(segment_of(cs), alpha, period, steps, log_scale);
  return (log_scale + log_spectral_radius(phi)) / period;
}

double floquet_exponent_monodromy(const ControlSet& cs, std::span<const double> alpha,
                                  double period, double dt) {
  if (alpha.empty()) throw Error(ErrorCode::OutOfRange, "no samples");
  if (!(period > 0.0)) throw Error(ErrorCode::OutOfRange, "period must be positive");
  if (!(dt > 0.0) || dt > period / 1000.0 * (1.0 + 1e-12)) {
    throw Error(ErrorCode::StepTooLarge, "monodromy integration needs dt <= T/1000");
  }
  const auto n = static_cast<long>(alpha.size());
  const long per_sample = std::max(1L, static_cast<long>(std::ceil(period / (dt * n) - 1e-9)));
  const long steps = per_sample * n;
  const double h = period / static_cast<double>(n);
  auto interp = [&](double t) {
    double u = t / h;
    long j = static_cast<long>(std::floor(u));
    double frac = u - static_cast<double>(j);
    j %= n;
    if (j < 0) j += n;
    return (1.0 - frac) * alpha[static_cast<std::size_t>(j)] +
           frac * alpha[static_cast<std::size_t>((j + 1) % n)];
  };
  double log_scale = 0.0;
  const Eigen::MatrixXd phi =
      monodromy_rk4(segment_of(cs), interp, period, static_cast<int>(steps), log_scale);
  return (log_scale + log_spectral_radius(phi)) / period;
}

std::string CriteriaReport::to_json() const {
  nlohmann::json sweep = nlohmann::json::array();
  for (const auto& [omega, value] : floquet_second_at) {
    sweep.push_back({{"omega", omega}, {"d2lambdaF", value}});
  }
  nlohmann::json j{{"alphaStar", alpha_star},
                   {"lambdaStar", lambda_star},
                   {"interior", interior},
                   {"perronSecond", perron_second},
                   {"highFreq", high_freq},
                   {"legendre", legendre},
                   {"identityResidual", identity_residual},
                   {"floquetSecondAt", sweep}};
  return j.dump(2);
}

CriteriaReport build_report(const ControlSet& cs, const std::vector<double>& omegas) {
  const AlphaStar star = find_alpha_star(cs);
  CriteriaReport r;
  r.alpha_star = star.alpha;
  r.lambda_star = star.lambda;
  r.interior = !star.boundary;
  r.perron_second = perron_second_derivative(cs, star.alpha);
  r.high_freq = high_frequency_criterion(cs, star.alpha);
  r.legendre = legendre_value(cs, star.alpha);
  r.identity_residual = std::abs(r.legendre + r.high_freq);
  for (double w : omegas) {
    r.floquet_second_at[w] = floquet_second_derivative_cos(cs, star.alpha, w);
  }
  return r;
}

void write_omega_sweep_csv(std::ostream& os, const CriteriaReport& report) {
  os << "omega,d2lambdaF\n" << std::setprecision(17);
  for (const auto& [omega, value] : report.floquet_second_at) {
    os << omega << ',' << value << '\n';
  }
}

}  // namespace posgrowth
