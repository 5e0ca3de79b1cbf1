#pragma once

#include <stdexcept>
#include <string>

namespace csm {

enum class ErrorCode {
  MissingColumn,
  DuplicateId,
  NonBinaryTreatment,
  NonFiniteValue,
  NoTreatedUnits,
  NoControlUnits,
  ConstantNonBinaryColumn,
  DimensionMismatch,
  EmptyControlPool,
  EmptySubset,
  AllZeroWeights,
  NoMultiUnitClusters,
  SolverFailure,
  InsufficientControls,
  SizeLimitExceeded,
  LengthMismatch,
  InvalidArgument,
  IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

  // Solver defects map to a distinct process exit code; everything else is
  // input/validation.
  bool is_solver_defect() const { return code_ == ErrorCode::SolverFailure; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace csm
