#include "doctest.h"

#include <cmath>
#include <sstream>

#include "posgrowth/dynamics.hpp"
#include "posgrowth/models.hpp"
#include "support.hpp"

using namespace posgrowth;

namespace {

Eigen::MatrixXd dim2(double alpha) {
  Eigen::MatrixXd m(2, 2);
  m << 0.0, 1.0 - alpha, alpha, 0.0;
  return m;
}

ControlSet single(const Eigen::MatrixXd& m) { return ControlSet::vertices({validate_metzler(m)}); }

// Zero column sums: <1, m x> = 0, so the mass is conserved.
Eigen::MatrixXd conservative() {
  Eigen::MatrixXd m(3, 3);
  m << -1.0, 0.5, 0.2,
       0.4, -0.5, 0.3,
       0.6, 0.0, -0.5;
  return m;
}

Eigen::VectorXd perron_point(const Eigen::MatrixXd& m) { return perron(validate_metzler(m)).right; }

ControlSignal two_piece(double t1, double t2) {
  return {{{t1, VertexIndex{0}}, {t2, VertexIndex{1}}}};
}

}  // namespace

TEST_CASE("payoff") {
  for (double theta : {0.0, 0.25, 0.5, 0.9}) {
    for (double alpha : {0.2, 0.5, 0.8}) {
      const SimplexPoint y(Eigen::Vector2d(1.0 - theta, theta));
      const double expected = alpha * (1.0 - theta) + (1.0 - alpha) * theta;
      CHECK(payoff(y, validate_metzler(dim2(alpha))) == doctest::Approx(expected).epsilon(1e-15));
    }
  }
  CHECK(payoff(SimplexPoint(Eigen::Vector2d(0.5, 0.5)), validate_metzler(dim2(0.5))) == 0.5);

  Rng rng(1);
  for (int k = 0; k < 200; ++k) {
    const int n = 2 + k % 4;
    const Eigen::MatrixXd m = testing::random_positive_metzler(rng, n);
    const MetzlerMatrix mm = validate_metzler(m);
    const SimplexPoint z(perron_point(m));
    CHECK(payoff(z, mm) == doctest::Approx(perron_value(mm)).epsilon(1e-12));
    const SimplexPoint y(random_simplex_point(rng, n));
    double naive = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) naive += m(i, j) * y[j];
    }
    CHECK(payoff(y, mm) == doctest::Approx(naive).epsilon(1e-14));
  }
  CHECK_THROWS_AS(payoff(SimplexPoint(Eigen::Vector3d(0.2, 0.3, 0.5)), validate_metzler(dim2(0.5))), Error);
}

TEST_CASE("field") {
  for (double theta : {0.1, 0.5, 0.7}) {
    for (double alpha : {0.2, 0.5, 0.8}) {
      const SimplexPoint y(Eigen::Vector2d(1.0 - theta, theta));
      const Eigen::VectorXd b = field(y, validate_metzler(dim2(alpha)));
      const double expected = alpha * (1.0 - theta) * (1.0 - theta) - (1.0 - alpha) * theta * theta;
      CHECK(b(1) == doctest::Approx(expected).epsilon(1e-14));
    }
  }
  Rng rng(2);
  for (int k = 0; k < 500; ++k) {
    const int n = 2 + k % 4;
    const Eigen::MatrixXd m = testing::random_positive_metzler(rng, n);
    const MetzlerMatrix mm = validate_metzler(m);
    CHECK(field(SimplexPoint(perron_point(m)), mm).cwiseAbs().maxCoeff() <= 1e-13);
    const Eigen::VectorXd b = field(SimplexPoint(random_simplex_point(rng, n)), mm);
    CHECK(std::abs(b.sum()) <= 1e-14 * (1.0 + inf_norm(m)));
  }
}

TEST_CASE("tangency on grid points at every preset vertex") {
  for (const auto& name : preset_names()) {
    const Preset p = preset(name);
    const int n = static_cast<int>(p.control_set.dim());
    const int N = 40;
    for (int i = 0; i <= N; ++i) {
      for (int j = 0; j <= (n == 3 ? N - i : 0); ++j) {
        Eigen::VectorXd y(n);
        if (n == 2) y << 1.0 - double(i) / N, double(i) / N;
        else y << double(i) / N, double(j) / N, double(N - i - j) / N;
        for (const auto& m : p.control_set.vertex_matrices()) {
          CHECK(std::abs(field(SimplexPoint(y), m).sum()) <= 1e-14);
        }
      }
    }
  }
}

TEST_CASE("ambient integration against a matrix exponential") {
  Rng rng(3);
  for (int k = 0; k < 30; ++k) {
    const int n = 2 + k % 4;
    const Eigen::MatrixXd m = testing::random_positive_metzler(rng, n);
    const Eigen::VectorXd x0 = random_cone_point(rng, n);
    const Trajectory t = integrate_ambient(x0, single(m), ControlSignal::constant(VertexIndex{0}, 1.0), 1e-3);
    const Eigen::VectorXd exact = testing::expm_oracle(m) * x0;
    CHECK((t.states.back() - exact).norm() <= 1e-8 * exact.norm());
    CHECK(t.logmass.back() == doctest::Approx(std::log(exact.sum())).epsilon(1e-9));
    CHECK(t.times.back() == doctest::Approx(1.0).epsilon(1e-14));
    for (std::size_t s = 1; s < t.size(); ++s) CHECK(t.times[s] > t.times[s - 1]);
  }
}

TEST_CASE("ambient integration: conserved mass and the symmetric 2D matrix") {
  const Eigen::MatrixXd c = conservative();
  const Eigen::VectorXd x0 = 2.0 * perron_point(c);
  const Trajectory t = integrate_ambient(x0, single(c), ControlSignal::constant(VertexIndex{0}, 5.0), 1e-2);
  CHECK((t.states.back() - x0).cwiseAbs().maxCoeff() <= 1e-12);

  const Eigen::VectorXd h = Eigen::Vector2d(0.5, 0.5);
  const Trajectory u = integrate_ambient(h, single(dim2(0.5)), ControlSignal::constant(VertexIndex{0}, 3.0), 1e-3);
  for (std::size_t s = 0; s < u.size(); s += 100) {
    CHECK((u.states[s] - std::exp(u.times[s] / 2.0) * h).cwiseAbs().maxCoeff() <= 1e-12 * std::exp(1.5));
  }
}

TEST_CASE("integration errors") {
  const ControlSet cs = preset("dim2").control_set;
  try {
    integrate_ambient(Eigen::Vector2d(1.0, 1.0), cs, two_piece(0.5, 0.01), 0.05);
    FAIL("expected StepTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StepTooLarge);
  }
  // The RK4 propagator of this matrix has a negative entry at dt = 0.2.
  Eigen::MatrixXd stiff(2, 2);
  stiff << -10.0, 1.0, 1e-6, -20.0;
  try {
    integrate_ambient(Eigen::Vector2d(1e-3, 1.0), single(stiff), ControlSignal::constant(VertexIndex{0}, 1.0), 0.2);
    FAIL("expected NonPositiveState");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositiveState);
  }
  CHECK_THROWS_AS(integrate_ambient(Eigen::Vector2d(1.0, 0.0), cs, two_piece(1.0, 1.0), 0.1), Error);
  CHECK_THROWS_AS(integrate_projected(SimplexPoint(Eigen::Vector2d(0.5, 0.5)), cs,
                                      ControlSignal::constant(0.1, 1.0), 0.01),
                  Error);
}

TEST_CASE("projected integration") {
  Rng rng(4);
  const Eigen::MatrixXd m = testing::random_positive_metzler(rng, 3);
  const Eigen::VectorXd z = perron_point(m);
  const Trajectory still = integrate_projected(SimplexPoint(z), single(m), ControlSignal::constant(VertexIndex{0}, 10.0), 1e-2);
  for (const auto& y : still.states) CHECK((y - z).cwiseAbs().maxCoeff() <= 1e-12);

  // Projection of the ambient flow under random bang-bang signals.
  for (int k = 0; k < 20; ++k) {
    const int n = 2 + k % 3;
    const ControlSet cs = ControlSet::vertices({validate_metzler(testing::random_positive_metzler(rng, n)),
                                                validate_metzler(testing::random_positive_metzler(rng, n))});
    const ControlSignal sig = random_bang_bang(rng, cs, 10.0, 1.0, 1e-3);
    const Eigen::VectorXd y0 = random_simplex_point(rng, n);
    const Trajectory a = integrate_ambient(y0, cs, sig, 1e-3);
    const Trajectory p = integrate_projected(SimplexPoint(y0), cs, sig, 1e-3);
    REQUIRE(a.size() == p.size());
    const Eigen::VectorXd proj = a.states.back() / a.states.back().sum();
    CHECK((proj - p.states.back()).cwiseAbs().maxCoeff() <= 1e-7);
    CHECK(p.logmass.back() == doctest::Approx(a.logmass.back() - std::log(y0.sum())).epsilon(1e-6));
    for (const auto& y : p.states) {
      CHECK(std::abs(y.sum() - 1.0) <= 1e-12);
      CHECK(y.minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("2D family converges monotonically to its Perron point") {
  const ControlSet cs = preset("dim2").control_set;
  for (double alpha : {0.2, 0.35, 0.5, 0.8}) {
    const double target = std::sqrt(alpha) / (std::sqrt(alpha) + std::sqrt(1.0 - alpha));
    for (double theta0 : {0.01, 0.5, 0.99}) {
      const Trajectory t = integrate_projected(SimplexPoint(Eigen::Vector2d(1.0 - theta0, theta0)), cs,
                                               ControlSignal::constant(alpha, 40.0), 1e-2);
      const double sign = theta0 < target ? 1.0 : -1.0;
      for (std::size_t s = 1; s < t.size(); ++s) {
        CHECK(sign * (t.states[s](1) - t.states[s - 1](1)) >= -1e-15);
      }
      CHECK(t.states.back()(1) == doctest::Approx(target).epsilon(1e-8));
    }
  }
}

TEST_CASE("growth rate under constant control") {
  Rng rng(5);
  for (int k = 0; k < 10; ++k) {
    const int n = 2 + k % 4;
    const Eigen::MatrixXd m = testing::random_positive_metzler(rng, n);
    const MetzlerMatrix mm = validate_metzler(m);
    const SpectralData s = spectral(mm);
    const double horizon = 200.0 / s.spectral_gap();
    const ControlSignal sig = ControlSignal::constant(VertexIndex{0}, horizon);
    const double from_z = growth_rate(SimplexPoint(s.perron.right), single(m), sig, horizon, 1e-2);
    CHECK(std::abs(from_z - s.perron.lambda) <= 1e-6);
    // From other starts the offset is log<phi1, y0>/T, the transient of the projected flow.
    const Eigen::VectorXd y0 = random_simplex_point(rng, n);
    const double from_y = growth_rate(SimplexPoint(y0), single(m), sig, horizon, 1e-2);
    const double transient = std::abs(std::log(s.perron.left.dot(y0))) / horizon;
    CHECK(std::abs(from_y - s.perron.lambda) <= transient + 1e-6);
  }
  const Eigen::MatrixXd c = conservative();
  CHECK(std::abs(growth_rate(SimplexPoint(Eigen::Vector3d(0.2, 0.3, 0.5)), single(c),
                             ControlSignal::constant(VertexIndex{0}, 10.0), 10.0, 1e-2)) <= 1e-14);
  try {
    growth_rate(SimplexPoint(Eigen::Vector3d(0.2, 0.3, 0.5)), single(c), ControlSignal::constant(VertexIndex{0}, 1.0), 0.5, 1e-2);
    FAIL("expected OutOfRange");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfRange);
  }
}

TEST_CASE("growth rate of a periodic signal equals the Floquet exponent") {
  Rng rng(6);
  for (int k = 0; k < 5; ++k) {
    const int n = 3;
    const Eigen::MatrixXd m0 = testing::random_positive_metzler(rng, n);
    const Eigen::MatrixXd m1 = testing::random_positive_metzler(rng, n);
    const ControlSet cs = ControlSet::vertices({validate_metzler(m0), validate_metzler(m1)});
    const double t0 = 0.7;
    const double t1 = 1.3;
    const Eigen::MatrixXd phi = testing::expm_oracle(t1 * m1) * testing::expm_oracle(t0 * m0);
    const double exponent = std::log(testing::spectral_radius(phi)) / (t0 + t1);
    // Start on the Floquet eigenvector so that no transient enters.
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
    for (int it = 0; it < 200; ++it) v = testing::normalized(phi * v);
    const double horizon = 100.0 * (t0 + t1);
    const double rate = growth_rate(SimplexPoint(v), cs, two_piece(t0, t1), horizon, 1e-3);
    CHECK(std::abs(rate - exponent) <= 1e-6);
  }
}

TEST_CASE("positivity is preserved for small steps") {
  Rng rng(7);
  for (int k = 0; k < 1000; ++k) {
    const int n = 2 + k % 4;
    Eigen::MatrixXd m = testing::random_positive_metzler(rng, n);
    m.diagonal() *= uniform(rng, 1.0, 20.0);
    const ControlSet cs = single(m);
    const double dt = 0.1 / m.diagonal().cwiseAbs().maxCoeff();
    const Eigen::VectorXd x0 = random_cone_point(rng, n);
    const Trajectory t = integrate_ambient(x0, cs, ControlSignal::constant(VertexIndex{0}, 50.0 * dt), dt);
    for (const auto& x : t.states) CHECK(x.minCoeff() > 0.0);
  }
}

TEST_CASE("growth exponent does not depend on the homogeneous initial function") {
  const Preset p = preset("pmca");
  const Eigen::Vector3d q(1.0, 2.0, 3.0);
  Rng rng(8);
  for (int k = 0; k < 10; ++k) {
    const ControlSignal sig = random_bang_bang(rng, p.control_set, 200.0, 2.0, 1e-2);
    const Eigen::VectorXd x0 = random_cone_point(rng, 3);
    const Trajectory t = integrate_ambient(x0, p.control_set, sig, 1e-2);
    const double horizon = t.horizon();
    const double e1 = std::log(t.states.back().sum() / x0.sum()) / horizon;
    const double eq = std::log(q.dot(t.states.back()) / q.dot(x0)) / horizon;
    CHECK(std::abs(e1 - eq) <= 2.0 / horizon);
  }
}

TEST_CASE("step halving shows fourth order convergence") {
  Rng rng(9);
  const Eigen::MatrixXd m = testing::random_positive_metzler(rng, 3);
  const ControlSet cs = single(m);
  const SimplexPoint y0(Eigen::Vector3d(0.7, 0.2, 0.1));
  const ControlSignal sig = ControlSignal::constant(VertexIndex{0}, 2.0);
  const Eigen::VectorXd y1 = integrate_projected(y0, cs, sig, 0.2).states.back();
  const Eigen::VectorXd y2 = integrate_projected(y0, cs, sig, 0.1).states.back();
  const Eigen::VectorXd y3 = integrate_projected(y0, cs, sig, 0.05).states.back();
  const double order = std::log2((y1 - y2).cwiseAbs().maxCoeff() / (y2 - y3).cwiseAbs().maxCoeff());
  CHECK(order >= 3.5);
}

TEST_CASE("random bang-bang signals and periodic extension") {
  const ControlSet cs = preset("pmca").control_set;
  Rng rng(10);
  const ControlSignal sig = random_bang_bang(rng, cs, 50.0, 1.0, 0.01);
  CHECK(sig.duration() == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(sig.min_piece() >= 0.01 - 1e-15);
  const ControlSignal ext = periodic_extension(two_piece(0.5, 1.0), 4.0);
  CHECK(ext.duration() == doctest::Approx(4.0).epsilon(1e-14));
  REQUIRE(ext.pieces.size() == 6);
  CHECK(std::get<VertexIndex>(ext.pieces[2].control) == VertexIndex{0});
}

TEST_CASE("trajectory CSV") {
  const ControlSet cs = preset("pmca").control_set;
  const Trajectory t = integrate_projected(SimplexPoint(Eigen::Vector3d(0.3, 0.3, 0.4)), cs,
                                           ControlSignal::constant(5.0, 1.0), 0.1);
  std::ostringstream os;
  write_trajectory_csv(os, t, 3);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,y1,y2,y3,logmass");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 5);  // steps 0, 3, 6, 9 and the last
}
