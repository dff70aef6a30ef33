#pragma once

#include <stdexcept>
#include <string>

namespace posgrowth {

enum class ErrorCode {
  NegativeOffDiagonal,
  NonFinite,
  NotIrreducible,
  DefectiveSpectrum,
  OutOfRange,
  WrongVariant,
  DimensionMismatch,
  Domain,
  MissingRate,
  StepTooLarge,
  NonPositiveState,
  NoConvergence,
  CFLViolation,
  HorizonTooShort,
  UnknownPreset,
  InvalidOverride,
  ConservationViolated,
  InvalidModel,
};

const char* to_string(ErrorCode code);

/// Base exception for every library failure. `code()` is stable and is what
/// the command line front end reports in its machine readable diagnostics.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class NegativeOffDiagonal : public Error {
 public:
  // Indices are 1-based, as printed.
  NegativeOffDiagonal(int row, int col, double value);

  int row() const noexcept { return row_; }
  int col() const noexcept { return col_; }
  double value() const noexcept { return value_; }

 private:
  int row_;
  int col_;
  double value_;
};

class NoConvergence : public Error {
 public:
  NoConvergence(long iterations, double residual);

  long iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  long iterations_;
  double residual_;
};

}  // namespace posgrowth
