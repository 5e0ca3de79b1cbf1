#include "csm/error.hpp"

namespace csm {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::NonBinaryTreatment: return "NonBinaryTreatment";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::NoTreatedUnits: return "NoTreatedUnits";
    case ErrorCode::NoControlUnits: return "NoControlUnits";
    case ErrorCode::ConstantNonBinaryColumn: return "ConstantNonBinaryColumn";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyControlPool: return "EmptyControlPool";
    case ErrorCode::EmptySubset: return "EmptySubset";
    case ErrorCode::AllZeroWeights: return "AllZeroWeights";
    case ErrorCode::NoMultiUnitClusters: return "NoMultiUnitClusters";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::InsufficientControls: return "InsufficientControls";
    case ErrorCode::SizeLimitExceeded: return "SizeLimitExceeded";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace csm
