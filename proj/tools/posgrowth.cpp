// posgrowth: command-line front end.

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "posgrowth/ergodic_set.hpp"
#include "posgrowth/hilbert.hpp"
#include "posgrowth/hj.hpp"
#include "posgrowth/model_file.hpp"
#include "posgrowth/models.hpp"
#include "posgrowth/spectral_derivatives.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace posgrowth;

namespace {

struct Options {
  std::string preset_name;
  std::string model_path;
  std::vector<std::string> params;
  int grid = 200;
  double dt = 0.0;
  double tol = 1e-9;
  long max_iter = 200000;
  double horizon = 0.0;
  std::vector<double> omegas{0.1, 1.0, 10.0};
  std::uint64_t seed = 0x5eed;
  std::string out = "out";
  // command specific
  int points = 101;
  int trials = 0;
  double check_horizon = 200.0;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  int vertex = -1;
  double mean_piece = 1.0;
};

struct Model {
  std::string name;
  ControlSet cs;
};

Model load_model(const Options& o) {
  if (!o.model_path.empty() && !o.preset_name.empty()) {
    throw Error(ErrorCode::InvalidModel, "give either --preset or --model, not both");
  }
  if (!o.model_path.empty()) {
    if (!o.params.empty()) throw Error(ErrorCode::InvalidOverride, "--param applies to presets only");
    return {o.model_path, read_model_file(o.model_path)};
  }
  if (o.preset_name.empty()) throw Error(ErrorCode::InvalidModel, "no model: use --preset or --model");
  std::map<std::string, double> overrides;
  for (const auto& kv : o.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidOverride, "expected key=value, got " + kv);
    try {
      std::size_t used = 0;
      const std::string value = kv.substr(eq + 1);
      overrides[kv.substr(0, eq)] = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::InvalidOverride, "not a number in " + kv);
    }
  }
  Preset p = preset(o.preset_name, overrides);
  return {p.name, std::move(p.control_set)};
}

void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    body(os);
    if (!os) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_json(const Options& o, const std::string& name, const json& j) {
  write_atomic(fs::path(o.out) / name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

double default_horizon(const Options& o, double fallback) { return o.horizon > 0.0 ? o.horizon : fallback; }

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// ---------------------------------------------------------------------------

int cmd_perron(const Options& o) {
  const Model m = load_model(o);
  json j{{"model", m.name}, {"n", m.cs.dim()}};
  json verts = json::array();
  for (const auto& v : m.cs.vertex_matrices()) {
    const PerronPair p = perron(v);
    verts.push_back({{"lambda", p.lambda}, {"right", vector_json(p.right)}, {"left", vector_json(p.left)}});
  }
  j["vertices"] = verts;
  std::string line = "vertices:";
  for (const auto& v : verts) line += " " + fmt(v["lambda"].get<double>());
  if (m.cs.is_segment()) {
    const AlphaStar s = find_alpha_star(m.cs);
    j["alphaStar"] = s.alpha;
    j["lambdaStar"] = s.lambda;
    j["boundary"] = s.boundary;
    line += " alphaStar=" + fmt(s.alpha) + " lambdaStar=" + fmt(s.lambda);
  }
  write_json(o, "summary.json", j);
  std::cout << "perron " << m.name << " " << line << '\n';
  return 0;
}

int cmd_sweep(const Options& o) {
  const Model m = load_model(o);
  const Segment& s = m.cs.as_segment();
  const int points = s.a == s.A ? 1 : std::max(o.points, 2);
  std::vector<double> alpha(static_cast<std::size_t>(points));
  std::vector<double> lambda(alpha.size());
  std::vector<double> slope(alpha.size());
  std::size_t best = 0;
  for (int k = 0; k < points; ++k) {
    const auto i = static_cast<std::size_t>(k);
    alpha[i] = points == 1 ? s.a : s.a + (s.A - s.a) * k / (points - 1);
    if (k == points - 1) alpha[i] = s.A;
    lambda[i] = perron_value(m.cs.at(alpha[i]));
    slope[i] = perron_derivative(m.cs, alpha[i]);
    if (lambda[i] > lambda[best]) best = i;
  }
  write_atomic(fs::path(o.out) / "lambda_sweep.csv", [&](std::ostream& os) {
    os << "alpha,lambda,dlambda\n" << std::setprecision(17);
    for (std::size_t i = 0; i < alpha.size(); ++i) os << alpha[i] << ',' << lambda[i] << ',' << slope[i] << '\n';
  });
  write_json(o, "summary.json",
             {{"model", m.name}, {"points", points}, {"gridArgmax", alpha[best]}, {"gridMax", lambda[best]}});
  std::cout << "sweep " << m.name << " points=" << points << " max lambda=" << fmt(lambda[best])
            << " at alpha=" << fmt(alpha[best]) << '\n';
  return 0;
}

int cmd_growth(const Options& o) {
  const Model m = load_model(o);
  const SimplexGrid grid(static_cast<int>(m.cs.dim()), o.grid);
  const HJSolution sol = solve_ergodic(m.cs, grid, o.dt, o.tol, o.max_iter);
  const Slack slack = lambda_vs_constant(sol, m.cs);

  Rng rng(o.seed);
  const SimplexPoint y0(random_simplex_point(rng, grid.dim()));
  const double horizon = default_horizon(o, 500.0);
  const double tdt = std::min(0.01, sol.dt);
  const Trajectory traj = feedback_trajectory(sol, y0, horizon, tdt);
  const Attractor att = classify_attractor(traj, horizon / 2.0, 1e-3, 1e-2);
  const double average = traj.logmass.back() / traj.horizon();

  write_atomic(fs::path(o.out) / "hj_solution.csv", [&](std::ostream& os) { write_solution_csv(os, sol); });
  write_atomic(fs::path(o.out) / "trajectory.csv",
               [&](std::ostream& os) { write_trajectory_csv(os, traj, 10); });
  json j{{"model", m.name},
         {"solver", json::parse(solution_header_json(sol))},
         {"dt", sol.dt},
         {"lambda", sol.lambda},
         {"bestConstant", slack.best_constant},
         {"slack", slack.slack},
         {"gridError", slack.grid_error},
         {"strict", slack.strict},
         {"y0", vector_json(y0.coords())},
         {"feedbackAverage", average},
         {"attractor", to_string(att.kind)}};
  if (att.kind == Attractor::Kind::FixedPoint) j["point"] = vector_json(att.point);
  if (att.kind == Attractor::Kind::LimitCycle) j["period"] = att.period;
  write_json(o, "summary.json", j);
  std::cout << "growth " << m.name << " N=" << o.grid << " lambda=" << fmt(sol.lambda)
            << " bestConstant=" << fmt(slack.best_constant) << " slack=" << fmt(slack.slack)
            << " gridError=" << fmt(slack.grid_error) << " attractor=" << to_string(att.kind) << '\n';
  return 0;
}

int cmd_trajectory(const Options& o) {
  const Model m = load_model(o);
  const double horizon = default_horizon(o, 100.0);
  const double dt = o.dt > 0.0 ? o.dt : 0.01;
  Rng rng(o.seed);
  const SimplexPoint y0(random_simplex_point(rng, static_cast<Eigen::Index>(m.cs.dim())));
  ControlSignal sig;
  std::string control;
  if (!std::isnan(o.alpha)) {
    sig = ControlSignal::constant(o.alpha, horizon);
    control = "alpha=" + fmt(o.alpha);
  } else if (o.vertex >= 0) {
    sig = ControlSignal::constant(VertexIndex{static_cast<std::size_t>(o.vertex)}, horizon);
    control = "vertex=" + std::to_string(o.vertex);
  } else {
    sig = random_bang_bang(rng, m.cs, horizon, o.mean_piece, dt);
    control = "bang-bang";
  }
  const Trajectory traj = integrate_projected(y0, m.cs, sig, dt);
  const double rate = traj.logmass.back() / traj.horizon();
  write_atomic(fs::path(o.out) / "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, traj); });
  write_json(o, "summary.json",
             {{"model", m.name},
              {"control", control},
              {"horizon", horizon},
              {"dt", dt},
              {"y0", vector_json(y0.coords())},
              {"final", vector_json(traj.states.back())},
              {"growthRate", rate}});
  std::cout << "trajectory " << m.name << " " << control << " growthRate=" << fmt(rate) << '\n';
  return 0;
}

int cmd_criteria(const Options& o) {
  const Model m = load_model(o);
  const CriteriaReport r = build_report(m.cs, o.omegas);
  const json j = json::parse(r.to_json());
  write_json(o, "criteria.json", j);
  write_atomic(fs::path(o.out) / "omega_sweep.csv", [&](std::ostream& os) { write_omega_sweep_csv(os, r); });
  write_json(o, "summary.json", {{"model", m.name}, {"criteria", j}});
  std::cout << "criteria " << m.name << " alphaStar=" << fmt(r.alpha_star) << " highFreq=" << fmt(r.high_freq)
            << " (" << (r.high_freq > 0 ? "positive" : "nonpositive") << ") legendre=" << fmt(r.legendre)
            << " identityResidual=" << fmt(r.identity_residual) << '\n';
  return 0;
}

int cmd_ergodic_set(const Options& o) {
  const Model m = load_model(o);
  const double horizon = default_horizon(o, 2000.0);
  const double dt = o.dt > 0.0 ? o.dt : 0.01;
  const ErgodicBoundary b = trace_boundary(m.cs, horizon, dt);
  const int trials = o.trials > 0 ? o.trials : 200;
  const InvarianceReport r = invariance_check(b, m.cs, trials, o.check_horizon, o.seed, dt);
  write_atomic(fs::path(o.out) / "ergodic_boundary.csv", [&](std::ostream& os) { write_boundary_csv(os, b); });
  json j = json::parse(r.to_json());
  j["model"] = m.name;
  j["polylinePoints"] = b.polyline.size();
  write_json(o, "summary.json", j);
  std::cout << "ergodic-set " << m.name << " inside=" << r.inside_pass << "/" << trials
            << " attract=" << r.attract_pass << "/" << trials << " delta=" << fmt(b.delta)
            << (b.pruned ? " pruned" : "") << '\n';
  return 0;
}

int cmd_contraction(const Options& o) {
  const Model m = load_model(o);
  const double t = default_horizon(o, 1.0);
  const int trials = o.trials > 0 ? o.trials : 1000;
  const ContractionReport r = verify_contraction(m.cs, t, trials, o.seed);
  json j = json::parse(r.to_json());
  j["model"] = m.name;
  write_json(o, "summary.json", j);
  std::cout << "contraction " << m.name << " mu=" << fmt(r.mu) << " t=" << fmt(t) << " passes=" << r.passes
            << "/" << r.trials << '\n';
  return 0;
}

int error_exit(const std::string& code, const std::string& message, int status) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << '\n';
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Growth rates of switched positive linear systems"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    auto* preset_opt = sub->add_option("--preset", o.preset_name, "Built-in model (dim2, pmca, limit-cycle)");
    auto* model_opt = sub->add_option("--model", o.model_path, "JSON model file");
    preset_opt->excludes(model_opt);
    sub->add_option("--param", o.params, "Preset override key=value (repeatable)");
    sub->add_option("--grid", o.grid, "Grid resolution N")->check(CLI::Range(2, 100000));
    sub->add_option("--dt", o.dt, "Time step (0: command default)")->check(CLI::NonNegativeNumber);
    sub->add_option("--tol", o.tol, "Solver tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--horizon", o.horizon, "Time horizon (0: command default)")->check(CLI::NonNegativeNumber);
    sub->add_option("--omega", o.omegas, "Floquet frequencies")->delimiter(',');
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_option("--out", o.out, "Output directory");
  };

  std::map<std::string, std::function<int()>> run;
  auto add = [&](const std::string& name, const std::string& help, std::function<int()> fn) {
    CLI::App* sub = app.add_subcommand(name, help);
    common(sub);
    run[name] = std::move(fn);
    return sub;
  };
  add("perron", "Perron pairs of the vertices and the constant-control optimum", [&] { return cmd_perron(o); });
  add("sweep", "lambda(alpha) and its derivative on a uniform grid", [&] { return cmd_sweep(o); })
      ->add_option("--points", o.points, "Number of alpha values")
      ->check(CLI::PositiveNumber);
  add("growth", "Ergodic HJ solve, slack against constant controls, feedback trajectory",
      [&] { return cmd_growth(o); })
      ->add_option("--max-iter", o.max_iter, "Value-iteration sweep limit")
      ->check(CLI::PositiveNumber);
  CLI::App* traj = add("trajectory", "Projected trajectory under a constant or random control",
                       [&] { return cmd_trajectory(o); });
  traj->add_option("--alpha", o.alpha, "Constant segment control");
  traj->add_option("--vertex", o.vertex, "Constant vertex control");
  traj->add_option("--mean-piece", o.mean_piece, "Mean piece length of random signals")
      ->check(CLI::PositiveNumber);
  add("criteria", "Second-order optimality criteria at the constant optimum", [&] { return cmd_criteria(o); });
  CLI::App* ergo = add("ergodic-set", "Ergodic set boundary with invariance and attraction checks",
                       [&] { return cmd_ergodic_set(o); });
  ergo->add_option("--trials", o.trials, "Trials per check")->check(CLI::PositiveNumber);
  ergo->add_option("--check-horizon", o.check_horizon, "Horizon of each trial")->check(CLI::PositiveNumber);
  add("contraction", "Hilbert-metric contraction check", [&] { return cmd_contraction(o); })
      ->add_option("--trials", o.trials, "Random pairs")
      ->check(CLI::PositiveNumber);

  CLI::App* pre = app.add_subcommand("preset", "List or export built-in models");
  pre->require_subcommand(1);
  pre->add_subcommand("list", "Preset names")->callback([] {
    for (const auto& n : preset_names()) std::cout << n << '\n';
  });
  std::string export_name;
  CLI::App* exp = pre->add_subcommand("export", "Print a preset as a JSON model file");
  exp->add_option("name", export_name, "Preset name")->required();
  exp->add_option("--param", o.params, "Override key=value (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return error_exit("InvalidArguments", e.what(), 2);
  }

  try {
    if (exp->parsed()) {
      o.preset_name = export_name;
      std::cout << model_to_json(load_model(o).cs) << '\n';
      return 0;
    }
    if (pre->parsed()) return 0;
    for (const auto& [name, fn] : run) {
      if (app.got_subcommand(name)) return fn();
    }
    return error_exit("InvalidArguments", "no command", 2);
  } catch (const NoConvergence& e) {
    return error_exit(to_string(e.code()), e.what(), 3);
  } catch (const Error& e) {
    return error_exit(to_string(e.code()), e.what(), 2);
  } catch (const std::exception& e) {
    return error_exit("IOError", e.what(), 2);
  }
}
