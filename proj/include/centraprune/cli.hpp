#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace centraprune::cli {

// Runs one invocation. Returns 0 on success, 1 on validation errors, 2 on
// runtime errors (NotConverged, NonFiniteLoss, IoFailure). Failures print a
// single JSON object {"error": code, "detail": text} to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

}  // namespace centraprune::cli
