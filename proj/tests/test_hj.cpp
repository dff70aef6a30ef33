#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "posgrowth/hj.hpp"
#include "posgrowth/models.hpp"
#include "posgrowth/spectral_derivatives.hpp"
#include "support.hpp"

using namespace posgrowth;

namespace {

const HJSolution& pmca_solution() {
  static const HJSolution sol = solve_ergodic(preset("pmca").control_set, SimplexGrid(3, 200), 0.0);
  return sol;
}

const HJSolution& limit_cycle_solution() {
  static const HJSolution sol = solve_ergodic(preset("limit-cycle").control_set, SimplexGrid(3, 200), 0.0);
  return sol;
}

double lambda_at(const ControlSet& cs, int N) { return solve_ergodic(cs, SimplexGrid(static_cast<int>(cs.dim()), N), 0.0).lambda; }

double growth_of(const Trajectory& t) { return t.logmass.back() / t.horizon(); }

}  // namespace

TEST_CASE("simplex grid") {
  const SimplexGrid g2(2, 10);
  CHECK(g2.size() == 11);
  CHECK(g2.node(3)(1) == doctest::Approx(0.3));
  const SimplexGrid g3(3, 10);
  CHECK(g3.size() == 66);
  CHECK(l1_distance(g3.node(g3.anchor()), Eigen::Vector3d::Constant(1.0 / 3.0)) <= 2.0 / 10.0);
  for (std::size_t k = 0; k < g3.size(); ++k) {
    CHECK(g3.node(k).sum() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g3.node(k).minCoeff() >= 0.0);
  }
  CHECK_THROWS_AS(SimplexGrid(4, 10), Error);
  CHECK_THROWS_AS(SimplexGrid(3, 0), Error);

  Rng rng(21);
  for (int n : {2, 3}) {
    const SimplexGrid g(n, 17);
    Eigen::VectorXd c(n);
    for (int i = 0; i < n; ++i) c(i) = uniform(rng, -2.0, 2.0);
    Eigen::VectorXd values(static_cast<Eigen::Index>(g.size()));
    for (std::size_t k = 0; k < g.size(); ++k) values(static_cast<Eigen::Index>(k)) = c.dot(g.node(k));
    for (int trial = 0; trial < 500; ++trial) {
      const Eigen::VectorXd y = random_simplex_point(rng, n);
      CHECK(std::abs(g.interpolate(values, y) - c.dot(y)) <= 1e-12);
      const SimplexGrid::Stencil s = g.locate(y);
      Eigen::VectorXd rebuilt = Eigen::VectorXd::Zero(n);
      double total = 0.0;
      for (int k = 0; k < s.count; ++k) {
        CHECK(s.weights[k] >= -1e-12);
        total += s.weights[k];
        rebuilt += s.weights[k] * g.node(s.nodes[k]);
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      CHECK((rebuilt - y).cwiseAbs().maxCoeff() <= 1e-12);
    }
    for (std::size_t k = 0; k < g.size(); ++k) {
      CHECK(g.interpolate(values, g.node(k)) == doctest::Approx(values(static_cast<Eigen::Index>(k))));
    }
  }
}

TEST_CASE("CFL step") {
  const ControlSet cs = preset("pmca").control_set;
  const SimplexGrid g(3, 50);
  const double dt = cfl_step(cs, g);
  CHECK(dt > 0.0);
  double worst = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    for (const auto& m : vertices(cs)) worst = std::max(worst, field(SimplexPoint(g.node(k)), m).cwiseAbs().sum());
  }
  CHECK(dt * worst <= g.spacing() * (1.0 + 1e-12));
  try {
    solve_ergodic(cs, g, 1.5 * g.spacing() / worst);
    FAIL("expected CFLViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CFLViolation);
  }
}

TEST_CASE("scheme is monotone and additively homogeneous") {
  Rng rng(22);
  for (const auto& name : preset_names()) {
    const ControlSet cs = preset(name).control_set;
    const SimplexGrid g(static_cast<int>(cs.dim()), 40);
    const SemiLagrangianOperator op(cs, g, cfl_step(cs, g));
    const auto size = static_cast<Eigen::Index>(g.size());
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd w(size), bump(size);
      for (Eigen::Index k = 0; k < size; ++k) {
        w(k) = uniform(rng, -1.0, 1.0);
        bump(k) = uniform(rng, 0.0, 1.0);
      }
      const Eigen::VectorXd tw = op.apply(w);
      CHECK((op.apply(w + bump) - tw).minCoeff() >= -1e-12);
      const double c = uniform(rng, -5.0, 5.0);
      CHECK((op.apply((w.array() + c).matrix()) - tw).array().abs().maxCoeff() - 0.0 <=
            std::abs(c) + 1e-12);
      CHECK(((op.apply((w.array() + c).matrix()) - tw).array() - c).abs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("2D critical value") {
  const HJSolution sol = solve_ergodic(preset("dim2").control_set, SimplexGrid(2, 2000), 0.0);
  CHECK(std::abs(sol.lambda - 0.5) <= 1e-3);
  CHECK(sol.residual <= 1e-9);
  for (int f : sol.feedback) CHECK((f == 0 || f == 1));
}

TEST_CASE("single matrix: Perron value and log-linear eigenfunction") {
  Rng rng(23);
  for (int n : {2, 3}) {
    const MetzlerMatrix m = validate_metzler(testing::random_positive_metzler(rng, n));
    const ControlSet cs = ControlSet::vertices({m});
    const SimplexGrid g(n, n == 2 ? 400 : 200);
    const HJSolution sol = solve_ergodic(cs, g, 0.0);
    const PerronPair p = perron(m);
    CHECK(std::abs(sol.lambda - p.lambda) <= 1e-3 * (1.0 + std::abs(p.lambda)));
    const double base = std::log(p.left.dot(g.node(g.anchor())));
    double err = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      err = std::max(err, std::abs(sol.u(static_cast<Eigen::Index>(k)) - (std::log(p.left.dot(g.node(k))) - base)));
    }
    CHECK(err <= 5e-3);

    Rng start(31);
    const Trajectory t = feedback_trajectory(sol, SimplexPoint(random_simplex_point(start, n)), 200.0, 0.01);
    CHECK(l1_distance(t.states.back(), p.right) <= 1e-6);
  }
}

TEST_CASE("PMCA: solver value and fixed-point feedback") {
  const ControlSet cs = preset("pmca").control_set;
  const AlphaStar star = find_alpha_star(cs);
  const HJSolution& sol = pmca_solution();
  CHECK(std::abs(sol.lambda - star.lambda) <= 2e-3);
  const Eigen::VectorXd z = perron(cs.at(star.alpha)).right;

  Rng rng(24);
  for (int k = 0; k < 3; ++k) {
    const Trajectory t = feedback_trajectory(sol, SimplexPoint(random_simplex_point(rng, 3)), 500.0, 0.01);
    CHECK(l1_distance(t.states.back(), z) <= 1e-3);
    const Attractor a = classify_attractor(t, 250.0, 1e-3, 1e-2);
    CHECK(a.kind == Attractor::Kind::FixedPoint);
    CHECK(l1_distance(a.point, z) <= 1e-3);
  }

  const Slack s = lambda_vs_constant(sol, cs);
  CHECK(std::abs(s.slack) <= 1e-3);
  CHECK(s.best_constant == doctest::Approx(star.lambda));
  CHECK(s.grid_error < 1e-4);
}

TEST_CASE("limit-cycle: recurrent feedback trajectory") {
  const ControlSet cs = preset("limit-cycle").control_set;
  const HJSolution& sol = limit_cycle_solution();
  Rng rng(25);
  const Trajectory t = feedback_trajectory(sol, SimplexPoint(random_simplex_point(rng, 3)), 500.0, 0.01);
  const Attractor a = classify_attractor(t, 250.0, 1e-3, 1e-2);
  CHECK(a.kind == Attractor::Kind::LimitCycle);
  CHECK(a.period > 0.0);
  CHECK(a.period_cv <= 0.05);

  // Perron points of the extreme controls and of the best constant control.
  const Segment& seg = cs.as_segment();
  const std::vector<Eigen::VectorXd> perron_points{perron(cs.at(seg.a)).right, perron(cs.at(seg.A)).right,
                                                   perron(cs.at(find_alpha_star(cs).alpha)).right};
  double closest = 1e300;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t.times[k] < 250.0) continue;
    for (const auto& z : perron_points) closest = std::min(closest, l1_distance(t.states[k], z));
  }
  INFO("closest approach ", closest);
  CHECK(closest > 1e-2);
}

TEST_CASE("attractor classification on synthetic paths") {
  Trajectory circle;
  const Eigen::Vector3d c = Eigen::Vector3d::Constant(1.0 / 3.0);
  const Eigen::Vector3d e1(1.0, -1.0, 0.0), e2(1.0, 1.0, -2.0);
  for (int k = 0; k <= 40000; ++k) {
    const double t = 0.01 * k;
    circle.times.push_back(t);
    circle.states.push_back(c + 0.1 * std::cos(t) * e1 / 2.0 + 0.1 * std::sin(t) * e2 / 6.0);
    circle.logmass.push_back(0.0);
  }
  const Attractor a = classify_attractor(circle, 100.0, 1e-3, 1e-2);
  CHECK(a.kind == Attractor::Kind::LimitCycle);
  CHECK(a.period == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-3));
  CHECK(classify_attractor(circle, 300.0, 1e-3, 1e-2).kind == Attractor::Kind::Undetermined);

  const ControlSet cs = preset("pmca").control_set;
  const Trajectory fixed = integrate_projected(SimplexPoint(Eigen::Vector3d(0.2, 0.3, 0.5)), cs,
                                               ControlSignal::constant(Control{2.0}, 600.0), 0.05);
  const Attractor f = classify_attractor(fixed, 200.0, 1e-3, 1e-2);
  CHECK(f.kind == Attractor::Kind::FixedPoint);
  CHECK(l1_distance(f.point, perron(cs.at(2.0)).right) <= 1e-6);

  // Irregular wandering: neither settles nor recurs periodically.
  Trajectory drift;
  for (int k = 0; k <= 20000; ++k) {
    const double t = 0.01 * k;
    drift.times.push_back(t);
    drift.states.push_back(c + 0.1 * std::cos(t * t / 20.0) * e1 / 2.0 + 0.05 * (t / 200.0) * e2 / 6.0);
    drift.logmass.push_back(0.0);
  }
  CHECK(classify_attractor(drift, 50.0, 1e-3, 1e-2).kind == Attractor::Kind::Undetermined);
  CHECK(std::string(to_string(Attractor::Kind::LimitCycle)) == "LimitCycle");
}

TEST_CASE("slack against the best constant control") {
  const HJSolution d2 = solve_ergodic(preset("dim2").control_set, SimplexGrid(2, 400), 0.0);
  const Slack s = lambda_vs_constant(d2, preset("dim2").control_set);
  CHECK(s.best_constant == doctest::Approx(0.5));
  CHECK(std::abs(s.slack) <= 3.0 * s.grid_error + 1e-12);
  CHECK_FALSE(s.strict);

  for (const auto& name : preset_names()) {
    const ControlSet cs = preset(name).control_set;
    const HJSolution sol = solve_ergodic(cs, SimplexGrid(static_cast<int>(cs.dim()), 100), 0.0);
    const Slack r = lambda_vs_constant(sol, cs);
    double best_vertex = -1e300;
    for (const auto& m : vertices(cs)) best_vertex = std::max(best_vertex, perron_value(m));
    CHECK(sol.lambda + 3.0 * r.grid_error >= best_vertex);
    CHECK(r.slack == doctest::Approx(sol.lambda - r.best_constant));
  }

  const Slack lc = lambda_vs_constant(limit_cycle_solution(), preset("limit-cycle").control_set);
  CHECK(lc.slack > 0.0);
}

TEST_CASE("grid convergence") {
  for (const char* name : {"dim2", "limit-cycle"}) {
    const ControlSet cs = preset(name).control_set;
    std::vector<double> lam;
    for (int N : {50, 100, 200, 400}) lam.push_back(lambda_at(cs, N));
    const double d1 = std::abs(lam[0] - lam[1]);
    const double d2 = std::abs(lam[1] - lam[2]);
    const double d3 = std::abs(lam[2] - lam[3]);
    INFO(name, " differences ", d1, " ", d2, " ", d3);
    CHECK(d1 / d2 >= 1.5);
    CHECK(d2 / d3 >= 1.5);
  }
  // PMCA: the optimum sits on grid nodes, so errors are tiny rather than asymptotic.
  const ControlSet pm = preset("pmca").control_set;
  const double star = find_alpha_star(pm).lambda;
  for (int N : {50, 100, 200}) CHECK(std::abs(lambda_at(pm, N) - star) <= 1e-4);
}

TEST_CASE("feedback consistency and initial-condition independence") {
  const HJSolution d2 = solve_ergodic(preset("dim2").control_set, SimplexGrid(2, 400), 0.0);
  for (const HJSolution* sol : {&d2, &pmca_solution(), &limit_cycle_solution()}) {
    Rng rng(26);
    std::vector<double> rates;
    for (int k = 0; k < 10; ++k) {
      const Trajectory t =
          feedback_trajectory(*sol, SimplexPoint(random_simplex_point(rng, sol->grid.dim())), 500.0, 0.01);
      rates.push_back(growth_of(t));
    }
    CHECK(std::abs(rates.front() - sol->lambda) <= 5e-3);
    const auto [lo, hi] = std::minmax_element(rates.begin(), rates.end());
    CHECK(*hi - *lo <= 1e-2);
  }
}

TEST_CASE("discounted cross-check") {
  for (const auto& name : preset_names()) {
    const ControlSet cs = preset(name).control_set;
    const SimplexGrid g(static_cast<int>(cs.dim()), 50);
    const HJSolution sol = solve_ergodic(cs, g, 0.0);
    const double v = solve_discounted(cs, g, 0.0, 1e-3);
    INFO(name);
    CHECK(std::abs(v - sol.lambda) <= 5e-3);
  }
  CHECK_THROWS_AS(solve_discounted(preset("dim2").control_set, SimplexGrid(2, 10), 0.0, 0.0), Error);
}

TEST_CASE("solution output and failure modes") {
  const HJSolution sol = solve_ergodic(preset("pmca").control_set, SimplexGrid(3, 20), 0.0);
  const auto j = nlohmann::json::parse(solution_header_json(sol));
  CHECK(j.at("n").get<int>() == 3);
  CHECK(j.at("N").get<int>() == 20);
  CHECK(j.at("lambda").get<double>() == sol.lambda);
  CHECK(j.contains("iterations"));
  CHECK(j.contains("residual"));
  std::ostringstream os;
  write_solution_csv(os, sol);
  const std::string csv = os.str();
  CHECK(csv.rfind("y1,y2,y3,u,feedback_vertex\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(sol.grid.size()) + 1);

  try {
    solve_ergodic(preset("pmca").control_set, SimplexGrid(3, 20), 0.0, 1e-9, 2);
    FAIL("expected NoConvergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoConvergence);
  }
  CHECK_THROWS_AS(feedback_trajectory(sol, SimplexPoint(Eigen::Vector2d(0.5, 0.5)), 1.0, 0.01), Error);
}
