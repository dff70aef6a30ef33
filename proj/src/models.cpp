#include "posgrowth/models.hpp"

#include <sstream>

namespace posgrowth {

namespace {

using Params = std::map<std::string, double>;

Params merge(Params defaults, const Params& overrides, const std::string& name) {
  for (const auto& [key, value] : overrides) {
    auto it = defaults.find(key);
    if (it == defaults.end()) {
      std::ostringstream os;
      os << "preset '" << name << "' has no parameter '" << key << "'";
      throw Error(ErrorCode::InvalidOverride, os.str());
    }
    it->second = value;
  }
  return defaults;
}

// Rewraps validation failures of overridden parameters.
template <typename Build>
ControlSet build_checked(const std::string& name, Build&& build) {
  try {
    return build();
  } catch (const Error& e) {
    std::ostringstream os;
    os << "preset '" << name << "' rejected the overrides: " << e.what();
    throw Error(ErrorCode::InvalidOverride, os.str());
  }
}

Preset make_dim2(const Params& overrides) {
  Params p = merge({{"a", 0.2}}, overrides, "dim2");
  const double a = p.at("a");
  if (!(a > 0.0 && a < 0.5)) {
    throw Error(ErrorCode::InvalidOverride, "dim2 needs 0 < a < 1/2");
  }
  Eigen::MatrixXd G(2, 2);
  Eigen::MatrixXd F(2, 2);
  G << 0.0, 1.0, 0.0, 0.0;
  F << 0.0, -1.0, 1.0, 0.0;
  ControlSet cs = build_checked("dim2", [&] { return ControlSet::segment(G, F, a, 1.0 - a); });
  return {"dim2", std::move(cs), p,
          "M(alpha) = [[0, 1-alpha], [alpha, 0]], alpha in [a, 1-a]; "
          "lambda(alpha) = sqrt(alpha (1 - alpha))"};
}

Preset make_pmca(const Params& overrides) {
  Params p = merge({{"tau1", 0.02}, {"tau2", 1.0}, {"beta", 0.04}, {"a", 2.0}, {"A", 8.0}},
                   overrides, "pmca");
  ControlSet cs = build_checked("pmca", [&] {
    return ControlSet::segment(pmca_growth(p.at("tau1"), p.at("tau2")),
                               pmca_fragmentation(p.at("beta"), p.at("beta")), p.at("a"),
                               p.at("A"));
  });
  return {"pmca", std::move(cs), p,
          "G: polymerisation (tau1, tau2); F: fragmentation with beta2 = beta3 = beta; "
          "defaults tau1=2e-2, tau2=1, beta=4e-2, [a, A] = [2, 8]"};
}

Preset make_limit_cycle(const Params& overrides) {
  Params p = merge({{"a", 0.05}, {"A", 1.0}}, overrides, "limit-cycle");
  Eigen::MatrixXd G(3, 3);
  Eigen::MatrixXd F(3, 3);
  G << 0.0, 0.245, 0.007,
       0.0, 0.0, 0.141,
       0.0, 0.0, 0.0;
  F << -0.245, 0.0, 0.0,
       0.272, -0.499, 0.0,
       0.645, 0.026, -0.035;
  ControlSet cs =
      build_checked("limit-cycle", [&] { return ControlSet::segment(G, F, p.at("a"), p.at("A")); });
  return {"limit-cycle", std::move(cs), p,
          "3x3 segment with an optimal limit cycle; default range [0.05, 1] "
          "(G alone is reducible, so a > 0)"};
}

}  // namespace

std::vector<std::string> preset_names() { return {"dim2", "pmca", "limit-cycle"}; }

Preset preset(const std::string& name, const std::map<std::string, double>& overrides) {
  if (name == "dim2") return make_dim2(overrides);
  if (name == "pmca") return make_pmca(overrides);
  if (name == "limit-cycle") return make_limit_cycle(overrides);
  throw Error(ErrorCode::UnknownPreset, "unknown preset '" + name + "'");
}

Eigen::MatrixXd pmca_growth(double tau1, double tau2) {
  Eigen::MatrixXd G(3, 3);
  G << -tau1, 0.0, 0.0,
       tau1, -tau2, 0.0,
       0.0, tau2, 0.0;
  return G;
}

Eigen::MatrixXd pmca_fragmentation(double beta2, double beta3) {
  Eigen::MatrixXd F(3, 3);
  F << 0.0, 2.0 * beta2, beta3,
       0.0, -beta2, beta3,
       0.0, 0.0, -beta3;
  return F;
}

PmcaRegime classify_pmca(double tau1, double tau2) {
  if (!(tau1 > 0.0) || !(tau2 > 0.0)) {
    throw Error(ErrorCode::OutOfRange, "PMCA rates must be positive");
  }
  return tau2 > 2.0 * tau1 ? PmcaRegime::InteriorMax : PmcaRegime::Monotone;
}

const char* to_string(PmcaRegime r) {
  return r == PmcaRegime::InteriorMax ? "InteriorMax" : "Monotone";
}

ConservationReport pmca_conservation_check(const Eigen::MatrixXd& G, const Eigen::MatrixXd& F) {
  if (G.rows() != 3 || G.cols() != 3 || F.rows() != 3 || F.cols() != 3) {
    throw Error(ErrorCode::DimensionMismatch, "PMCA matrices are 3x3");
  }
  const Eigen::Vector3d q(1.0, 2.0, 3.0);
  ConservationReport r;
  r.growth_residual = G.colwise().sum().cwiseAbs().maxCoeff();
  r.fragmentation_residual = (q.transpose() * F).cwiseAbs().maxCoeff();
  if (r.growth_residual > 1e-14 || r.fragmentation_residual > 1e-14) {
    std::ostringstream os;
    os << "conservation violated: |1^T G| = " << r.growth_residual
       << ", |q^T F| = " << r.fragmentation_residual;
    throw Error(ErrorCode::ConservationViolated, os.str());
  }
  return r;
}

ConservationReport pmca_conservation_check(const Preset& p) {
  if (p.name != "pmca") throw Error(ErrorCode::WrongVariant, "not a pmca preset");
  const Segment& s = p.control_set.as_segment();
  return pmca_conservation_check(s.G, s.F);
}

}  // namespace posgrowth
