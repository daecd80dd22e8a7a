#pragma once

#include <stdexcept>
#include <string>

namespace centraprune {

// Stable error codes. The CLI serializes these names verbatim into
// {"error": <name>, "detail": <text>} on stderr, so renaming one is a
// breaking change to the machine interface.
enum class ErrorCode {
  kMalformedHeader,
  kShapeMismatch,
  kUnsupportedDtype,
  kIoFailure,
  kMissingFile,
  kDimensionMismatch,
  kNonFiniteInput,
  kInvalidThreshold,
  kEmptyGraph,
  kNotConverged,
  kInvalidRatio,
  kPlanMismatch,
  kUnknownLayer,
  kNonFiniteLoss,
  kEmptyDataset,
  kEmptyReport,
  kInvalidArgument,
  kInvalidFlags,
};

const char* to_string(ErrorCode code);

// Runtime errors (failures of the computation itself) exit with code 2;
// everything else is a validation error and exits with code 1.
bool is_runtime_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        detail_(std::move(detail)) {}

  ErrorCode code() const { return code_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace centraprune
