#include "centraprune/errors.hpp"

namespace centraprune {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedHeader: return "MalformedHeader";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kUnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kInvalidThreshold: return "InvalidThreshold";
    case ErrorCode::kEmptyGraph: return "EmptyGraph";
    case ErrorCode::kNotConverged: return "NotConverged";
    case ErrorCode::kInvalidRatio: return "InvalidRatio";
    case ErrorCode::kPlanMismatch: return "PlanMismatch";
    case ErrorCode::kUnknownLayer: return "UnknownLayer";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kEmptyReport: return "EmptyReport";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidFlags: return "InvalidFlags";
  }
  return "Unknown";
}

bool is_runtime_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotConverged:
    case ErrorCode::kNonFiniteLoss:
    case ErrorCode::kIoFailure:
      return true;
    default:
      return false;
  }
}

}  // namespace centraprune
