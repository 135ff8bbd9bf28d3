#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smoothdiff {

enum class ErrorCode {
  kInvalidDimension,
  kDegenerateInput,
  kConfig,
  kTimestep,
  kInvalidSigma,
  kShape,
  kInsufficientFrames,
  kFormat,
  kSpec,
  kDiverged,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Every failure in the library is reported through this exception type; the
// code lets callers (and tests) distinguish contract violations.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace smoothdiff
