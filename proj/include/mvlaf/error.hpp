#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mvlaf {

enum class ErrorCode {
  kInvalidArgument,
  kCoincidentCenters,
  kInvalidCamera,
  kSingularFrame,
  kDegenerateConstraint,
  kNonPositiveScale,
  kInvalidPairIndex,
  kDuplicatePair,
  kInsufficientConstraints,
  kNumericalFailure,
  kDegenerateConfiguration,
  kVisibilityFailure,
  kSchema,
};

std::string_view ToString(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ToString(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Non-fatal conditions recorded alongside a result.
enum class DiagnosticCode {
  kRankDeficiency,
  kSmallSpectralGap,
  kDroppedDegenerateConstraint,
};

std::string_view ToString(DiagnosticCode code);

struct Diagnostic {
  DiagnosticCode code;
  std::string message;
};

}  // namespace mvlaf
