#include "posgrowth/errors.hpp"

#include <sstream>

namespace posgrowth {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NegativeOffDiagonal: return "NegativeOffDiagonal";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NotIrreducible: return "NotIrreducible";
    case ErrorCode::DefectiveSpectrum: return "DefectiveSpectrum";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::WrongVariant: return "WrongVariant";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::Domain: return "Domain";
    case ErrorCode::MissingRate: return "MissingRate";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::NonPositiveState: return "NonPositiveState";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::CFLViolation: return "CFLViolation";
    case ErrorCode::HorizonTooShort: return "HorizonTooShort";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::InvalidOverride: return "InvalidOverride";
    case ErrorCode::ConservationViolated: return "ConservationViolated";
    case ErrorCode::InvalidModel: return "InvalidModel";
  }
  return "Unknown";
}

namespace {

std::string negative_message(int row, int col, double value) {
  std::ostringstream os;
  os << "negative off-diagonal entry m(" << row << "," << col << ") = " << value;
  return os.str();
}

std::string no_convergence_message(long iterations, double residual) {
  std::ostringstream os;
  os << "no convergence after " << iterations << " iterations (residual "
     << residual << ")";
  return os.str();
}

}  // namespace

NegativeOffDiagonal::NegativeOffDiagonal(int row, int col, double value)
    : Error(ErrorCode::NegativeOffDiagonal, negative_message(row, col, value)),
      row_(row),
      col_(col),
      value_(value) {}

NoConvergence::NoConvergence(long iterations, double residual)
    : Error(ErrorCode::NoConvergence,
            no_convergence_message(iterations, residual)),
      iterations_(iterations),
      residual_(residual) {}

}  // namespace posgrowth
