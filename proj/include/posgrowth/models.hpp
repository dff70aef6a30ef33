#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

#include "posgrowth/matrices.hpp"

namespace posgrowth {

/// Built-in example families.
///   dim2         {[[0, 1-alpha], [alpha, 0]] : alpha in [a, 1-a]}          (a)
///   pmca         three-compartment polymerisation / fragmentation model  (tau1, tau2, beta, a, A)
///   limit-cycle  3x3 segment whose optimal control is periodic           (a, A)
struct Preset {
  std::string name;
  ControlSet control_set;
  std::map<std::string, double> parameters;
  std::string notes;
};

std::vector<std::string> preset_names();

/// Throws UnknownPreset, InvalidOverride (unknown key or a value that breaks
/// the preset's validation).
Preset preset(const std::string& name, const std::map<std::string, double>& overrides = {});

/// Growth matrix G and fragmentation matrix F of the PMCA model.
Eigen::MatrixXd pmca_growth(double tau1, double tau2);
Eigen::MatrixXd pmca_fragmentation(double beta2, double beta3);

enum class PmcaRegime { Monotone, InteriorMax };

/// lambda(alpha) of the PMCA segment has an interior maximum on (0, inf)
/// iff tau2 > 2 tau1.
PmcaRegime classify_pmca(double tau1, double tau2);
const char* to_string(PmcaRegime r);

struct ConservationReport {
  double growth_residual = 0.0;         // ||1^T G||_inf
  double fragmentation_residual = 0.0;  // ||q^T F||_inf, q = (1, 2, 3)
};

/// Throws ConservationViolated when either residual exceeds 1e-14.
ConservationReport pmca_conservation_check(const Eigen::MatrixXd& G, const Eigen::MatrixXd& F);
ConservationReport pmca_conservation_check(const Preset& p);

}  // namespace posgrowth
