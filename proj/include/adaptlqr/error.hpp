#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adaptlqr {

enum class ErrorKind {
  DimensionMismatch,
  NotSquare,
  Singular,
  SingularR,
  NotPositiveDefinite,
  InvalidArgument,
  NonConvergence,
  NotStabilizable,
  NotDetectable,
  RejectionLimitExceeded,
  IndexOutOfRange,
  InfeasiblePoint,
  AllStartsInfeasible,
  EstimateInfeasible,
  WrongFamily,
  UnstableClosedLoop,
  NumericOverflow,
  InvalidParams,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace adaptlqr
